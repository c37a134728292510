//! Dense linear-algebra and integral kernels.
//!
//! Everything here works on small dense `f64` matrices (dimension well below
//! 50). Integrals of matrix exponentials are evaluated with Van Loan's
//! block-triangular exponential trick so that every integral reduces to one
//! call of [`matrix_exp`].

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Hurwitz margin: the largest real eigenvalue part must not exceed this.
pub const HURWITZ_TOL: f64 = -1e-12;

pub fn check_finite(m: &Mat, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn check_square(m: &Mat, what: &str) -> Result<()> {
    if m.nrows() == m.ncols() && m.nrows() > 0 {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what} must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `‖M − Mᵀ‖_max ≤ 1e-12·(1 + ‖M‖_max)`.
pub fn is_symmetric(m: &Mat) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let tol = 1e-12 * (1.0 + max_abs(m));
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn min_eigenvalue(m: &Mat) -> f64 {
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

pub fn max_eigenvalue(m: &Mat) -> f64 {
    SymmetricEigen::new(symmetrize(m)).eigenvalues.max()
}

/// Largest real part among the eigenvalues of a general square matrix.
pub fn max_real_eigenvalue(a: &Mat) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn ensure_hurwitz(a: &Mat) -> Result<()> {
    check_finite(a, "A")?;
    let max_real = max_real_eigenvalue(a);
    if max_real <= HURWITZ_TOL {
        Ok(())
    } else {
        Err(Error::NotHurwitz { max_real })
    }
}

/// `e^{M t}` by scaling and squaring around a Padé approximant.
pub fn matrix_exp(m: &Mat, t: f64) -> Result<Mat> {
    check_square(m, "matrix_exp argument")?;
    check_finite(m, "matrix_exp argument")?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "matrix_exp needs finite t >= 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(Mat::identity(m.nrows(), m.ncols()));
    }
    let e = (m * t).exp();
    check_finite(&e, "matrix_exp result")?;
    Ok(e)
}

/// `∫₀ᵗ e^{Aλ} B Bᵀ e^{Aᵀλ} dλ`.
pub fn gramian_integral(a: &Mat, b: &Mat, t: f64) -> Result<Mat> {
    check_square(a, "A")?;
    if b.nrows() != a.nrows() {
        return Err(Error::Dimension("B must have as many rows as A".into()));
    }
    check_finite(b, "B")?;
    gramian_of(a, &(b * b.transpose()), t)
}

/// `∫₀ᵗ e^{Aᵀs} e^{As} ds`, the interval weight that turns a sampled error
/// into its integrated continuous-time squared error.
pub fn weighted_gram_integral(a: &Mat, t: f64) -> Result<Mat> {
    check_square(a, "A")?;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "weighted_gram_integral needs t > 0, got {t}"
        )));
    }
    let n = a.nrows();
    gramian_of(&a.transpose(), &Mat::identity(n, n), t)
}

/// `∫₀ᵗ e^{Aλ} Q e^{Aᵀλ} dλ` from the exponential of `[[-A, Q], [0, Aᵀ]]`.
fn gramian_of(a: &Mat, q: &Mat, t: f64) -> Result<Mat> {
    let n = a.nrows();
    if t == 0.0 {
        return Ok(Mat::zeros(n, n));
    }
    let mut m = Mat::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(-a));
    m.view_mut((0, n), (n, n)).copy_from(q);
    m.view_mut((n, n), (n, n)).copy_from(&a.transpose());
    let e = matrix_exp(&m, t)?;
    let f12 = e.view((0, n), (n, n)).into_owned();
    let f22 = e.view((n, n), (n, n)).into_owned();
    Ok(symmetrize(&(f22.transpose() * f12)))
}

/// `∫₀ᵗ ∫₀ˢ e^{Aλ} B Bᵀ e^{Aᵀλ} dλ ds` from one 3×3 block exponential of
/// `[[-A, I, 0], [0, -A, BBᵀ], [0, 0, Aᵀ]]`.
pub fn double_gramian_integral(a: &Mat, b: &Mat, t: f64) -> Result<Mat> {
    check_square(a, "A")?;
    check_finite(b, "B")?;
    let n = a.nrows();
    if t == 0.0 {
        return Ok(Mat::zeros(n, n));
    }
    let mut m = Mat::zeros(3 * n, 3 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(-a));
    m.view_mut((0, n), (n, n)).fill_with_identity();
    m.view_mut((n, n), (n, n)).copy_from(&(-a));
    m.view_mut((n, 2 * n), (n, n)).copy_from(&(b * b.transpose()));
    m.view_mut((2 * n, 2 * n), (n, n)).copy_from(&a.transpose());
    let e = matrix_exp(&m, t)?;
    let f13 = e.view((0, 2 * n), (n, n)).into_owned();
    let f33 = e.view((2 * n, 2 * n), (n, n)).into_owned();
    Ok(symmetrize(&(f33.transpose() * f13)))
}

/// Solves `A X + X Aᵀ + Q = 0` for Hurwitz `A`.
pub fn lyapunov_solve(a: &Mat, q: &Mat) -> Result<Mat> {
    check_square(a, "A")?;
    if q.shape() != a.shape() {
        return Err(Error::Dimension("Q must match A".into()));
    }
    check_finite(q, "Q")?;
    ensure_hurwitz(a)?;
    let n = a.nrows();
    let eye = Mat::identity(n, n);
    // vec(AX + XAᵀ) = (I ⊗ A + A ⊗ I) vec(X), column-major vec.
    let op = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = -nalgebra::DVector::from_column_slice(q.as_slice());
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or(Error::Singular("Lyapunov operator"))?;
    let x = Mat::from_column_slice(n, n, sol.as_slice());
    Ok(symmetrize(&x))
}

/// Symmetric square root of a PSD matrix. Eigenvalues in
/// `[-1e-8·‖M‖, 0)` are treated as zero.
pub fn psd_sqrt(m: &Mat) -> Result<Mat> {
    check_square(m, "psd_sqrt argument")?;
    check_finite(m, "psd_sqrt argument")?;
    let eig = SymmetricEigen::new(symmetrize(m));
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let min_eig = eig.eigenvalues.min();
    if min_eig < -1e-8 * scale {
        return Err(Error::NotPsd {
            what: "psd_sqrt argument",
            min_eig,
        });
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(symmetrize(&(v * Mat::from_diagonal(&roots) * v.transpose())))
}

/// Fixed-step integration output. `states[i]` is the state at `times[i]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Mat>,
}

impl Trajectory {
    pub fn last(&self) -> &Mat {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Classical RK4 on a symmetric matrix ODE `Ẋ = f(t, X)`, recording every
/// step. See [`integrate_ode_with`] for long runs.
pub fn integrate_ode<F>(f: F, x0: &Mat, horizon: f64, step: f64) -> Result<Trajectory>
where
    F: FnMut(f64, &Mat) -> Mat,
{
    let mut times = vec![0.0];
    let mut states = vec![symmetrize(x0)];
    integrate_ode_with(f, x0, horizon, step, |t, x| {
        times.push(t);
        states.push(x.clone());
    })?;
    Ok(Trajectory { times, states })
}

/// RK4 with an observer called after every step (not for the initial
/// state). The last step is shortened to land exactly on `horizon`.
/// Returns the final state.
pub fn integrate_ode_with<F, O>(
    mut f: F,
    x0: &Mat,
    horizon: f64,
    step: f64,
    mut observe: O,
) -> Result<Mat>
where
    F: FnMut(f64, &Mat) -> Mat,
    O: FnMut(f64, &Mat),
{
    if !(step > 0.0) || !(horizon >= step) {
        return Err(Error::InvalidArgument(format!(
            "integrate_ode needs step > 0 and horizon >= step (step {step}, horizon {horizon})"
        )));
    }
    check_finite(x0, "ODE initial state")?;
    let n_steps = (horizon / step).ceil() as usize;
    let mut x = symmetrize(x0);
    let mut t = 0.0;
    for i in 0..n_steps {
        let t_next = if i + 1 == n_steps {
            horizon
        } else {
            (i + 1) as f64 * step
        };
        let h = t_next - t;
        x = rk4_step(&mut f, t, &x, h);
        t = t_next;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { t });
        }
        observe(t, &x);
    }
    Ok(x)
}

pub(crate) fn rk4_step<F>(f: &mut F, t: f64, x: &Mat, h: f64) -> Mat
where
    F: FnMut(f64, &Mat) -> Mat,
{
    let k1 = f(t, x);
    let k2 = f(t + 0.5 * h, &(x + &k1 * (0.5 * h)));
    let k3 = f(t + 0.5 * h, &(x + &k2 * (0.5 * h)));
    let k4 = f(t + h, &(x + &k3 * h));
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    symmetrize(&next)
}
