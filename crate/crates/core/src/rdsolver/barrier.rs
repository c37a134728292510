//! Log-barrier interior-point engine for small dense LMI problems.
//!
//! Minimizes either a linear objective `c·z` or `-log det G(z)` subject to
//! affine matrix inequalities `F_i(z) ⪰ 0`. Each constraint contributes
//! `-log det F_i(z)` to the barrier; the centering problem
//! `t·f0(z) + Σ -log det F_i(z)` is solved by damped Newton steps.

use nalgebra::{Cholesky, DVector, Dyn};

use crate::error::{Error, Result};
use crate::matkernel::Mat;

pub type Vector = DVector<f64>;

/// Matrix-valued affine map `F(z) = base + Σ_j z_j F_j`. Only non-zero
/// coefficient matrices are stored.
#[derive(Debug, Clone)]
pub struct AffineMatrix {
    base: Mat,
    coeffs: Vec<(usize, Mat)>,
}

impl AffineMatrix {
    /// Builds the map from its constant part and a linear part evaluated on
    /// unit vectors.
    pub fn from_linear<F>(nvars: usize, base: Mat, linear: F) -> Self
    where
        F: Fn(&Vector) -> Mat,
    {
        let mut coeffs = Vec::new();
        let mut e = Vector::zeros(nvars);
        for j in 0..nvars {
            e[j] = 1.0;
            let c = linear(&e);
            e[j] = 0.0;
            assert_eq!(c.shape(), base.shape(), "affine map shape mismatch");
            if c.iter().any(|v| *v != 0.0) {
                coeffs.push((j, c));
            }
        }
        Self { base, coeffs }
    }

    pub fn size(&self) -> usize {
        self.base.nrows()
    }

    pub fn eval(&self, z: &Vector) -> Mat {
        let mut m = self.base.clone();
        for (j, c) in &self.coeffs {
            if z[*j] != 0.0 {
                m += c * z[*j];
            }
        }
        m
    }

    /// Adds `s·I` with `s` a new trailing variable at index `slack`.
    fn with_slack(&self, slack: usize) -> Self {
        let n = self.size();
        let mut coeffs = self.coeffs.clone();
        coeffs.push((slack, Mat::identity(n, n)));
        Self {
            base: self.base.clone(),
            coeffs,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Objective {
    Linear(Vector),
    /// `-log det G(z)`; `G(z) ≻ 0` is part of the domain.
    NegLogDet(AffineMatrix),
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub nvars: usize,
    pub objective: Objective,
    pub constraints: Vec<AffineMatrix>,
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub t0: f64,
    pub growth: f64,
    pub newton_tol: f64,
    pub gap_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            t0: 1.0,
            growth: 10.0,
            newton_tol: 1e-9,
            gap_tol: 1e-7,
            max_outer: 200,
            max_inner: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverStats {
    pub outer_iterations: usize,
    pub newton_steps: usize,
    /// Duality gap bound `θ/t` at the returned point, in objective units.
    pub gap: f64,
    /// Larger of the scaled stationarity residual (Newton decrement over `t`)
    /// and the relative complementarity gap.
    pub kkt_residual: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub z: Vector,
    pub objective: f64,
    pub stats: SolverStats,
}

/// Cholesky factors of every matrix in the domain, or `None` outside it.
struct Factored {
    chols: Vec<Cholesky<f64, Dyn>>,
    obj_chol: Option<Cholesky<f64, Dyn>>,
}

impl Problem {
    fn barrier_degree(&self) -> f64 {
        self.constraints.iter().map(|c| c.size()).sum::<usize>() as f64
    }

    fn factor(&self, z: &Vector) -> Option<Factored> {
        let mut chols = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            chols.push(Cholesky::new(c.eval(z))?);
        }
        let obj_chol = match &self.objective {
            Objective::Linear(_) => None,
            Objective::NegLogDet(g) => Some(Cholesky::new(g.eval(z))?),
        };
        Some(Factored { chols, obj_chol })
    }

    pub fn objective_value(&self, z: &Vector) -> Option<f64> {
        match &self.objective {
            Objective::Linear(c) => Some(c.dot(z)),
            Objective::NegLogDet(g) => Cholesky::new(g.eval(z)).map(|ch| -log_det(&ch)),
        }
    }

    /// `t·f0(z) + Σ -log det F_i(z)`, or `None` outside the domain.
    fn merit(&self, z: &Vector, t: f64) -> Option<f64> {
        let f = self.factor(z)?;
        let mut v = match &self.objective {
            Objective::Linear(c) => t * c.dot(z),
            Objective::NegLogDet(_) => -t * log_det(f.obj_chol.as_ref().unwrap()),
        };
        for ch in &f.chols {
            v -= log_det(ch);
        }
        Some(v)
    }

    /// Gradient and Hessian of the merit function at a domain point.
    fn derivatives(&self, f: &Factored, t: f64) -> (Vector, Mat) {
        let m = self.nvars;
        let mut g = Vector::zeros(m);
        let mut h = Mat::zeros(m, m);
        match &self.objective {
            Objective::Linear(c) => g += c * t,
            Objective::NegLogDet(gmap) => {
                accumulate_logdet(gmap, f.obj_chol.as_ref().unwrap(), t, &mut g, &mut h)
            }
        }
        for (lmi, ch) in self.constraints.iter().zip(&f.chols) {
            accumulate_logdet(lmi, ch, 1.0, &mut g, &mut h);
        }
        (g, h)
    }
}

fn log_det(ch: &Cholesky<f64, Dyn>) -> f64 {
    ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0
}

/// Adds `w·∇(-log det F)` and `w·∇²(-log det F)` for `F = L Lᵀ`.
fn accumulate_logdet(
    lmi: &AffineMatrix,
    ch: &Cholesky<f64, Dyn>,
    w: f64,
    g: &mut Vector,
    h: &mut Mat,
) {
    let l = ch.l();
    // S_j = L⁻¹ F_j L⁻ᵀ; grad_j = -tr S_j, hess_jl = <S_j, S_l>.
    let scaled: Vec<(usize, Mat)> = lmi
        .coeffs
        .iter()
        .map(|(j, fj)| {
            let t = l.solve_lower_triangular(fj).expect("Cholesky factor is invertible");
            let s = l
                .solve_lower_triangular(&t.transpose())
                .expect("Cholesky factor is invertible");
            (*j, s)
        })
        .collect();
    for (a, (ja, sa)) in scaled.iter().enumerate() {
        g[*ja] -= w * sa.trace();
        for (jb, sb) in &scaled[a..] {
            let v = w * sa.dot(sb);
            h[(*ja, *jb)] += v;
            if ja != jb {
                h[(*jb, *ja)] += v;
            }
        }
    }
}

/// Solves `H Δ = -g` with Jacobi diagonal scaling.
fn newton_direction(g: &Vector, h: &Mat) -> Result<Vector> {
    let m = g.len();
    let d = Vector::from_iterator(
        m,
        h.diagonal()
            .iter()
            .map(|v| if *v > 0.0 { 1.0 / v.sqrt() } else { 1.0 }),
    );
    let mut hs = h.clone();
    for i in 0..m {
        for j in 0..m {
            hs[(i, j)] *= d[i] * d[j];
        }
    }
    let rhs = -g.component_mul(&d);
    let y = match Cholesky::new(hs.clone()) {
        Some(ch) => ch.solve(&rhs),
        None => hs.lu().solve(&rhs).ok_or(Error::Singular("barrier Hessian"))?,
    };
    Ok(y.component_mul(&d))
}

enum Centering {
    Done { decrement_sq: f64 },
    Stopped,
}

/// Damped Newton centering at barrier weight `t`. `stop` is checked after
/// every step and ends the whole solve early when it returns true.
fn center<S>(
    p: &Problem,
    z: &mut Vector,
    t: f64,
    s: &Settings,
    steps: &mut usize,
    stop: &mut S,
) -> Result<Centering>
where
    S: FnMut(&Vector) -> bool,
{
    let mut last_dec = f64::INFINITY;
    for _ in 0..s.max_inner {
        let f = p
            .factor(z)
            .ok_or_else(|| Error::InvalidArgument("barrier iterate left the domain".into()))?;
        let (g, h) = p.derivatives(&f, t);
        let dz = newton_direction(&g, &h)?;
        let slope = g.dot(&dz);
        let dec_sq = -slope;
        last_dec = dec_sq.max(0.0);
        if dec_sq / 2.0 <= s.newton_tol {
            return Ok(Centering::Done { decrement_sq: last_dec });
        }
        let phi0 = p.merit(z, t).expect("current iterate is in the domain");
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-16 {
            let cand = &*z + &dz * alpha;
            if let Some(phi) = p.merit(&cand, t) {
                if phi <= phi0 + 0.25 * alpha * slope {
                    *z = cand;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        *steps += 1;
        if !accepted {
            // no further progress at working precision
            break;
        }
        if stop(z) {
            return Ok(Centering::Stopped);
        }
    }
    Ok(Centering::Done { decrement_sq: last_dec })
}

/// Runs the barrier method from a strictly feasible `z0`.
pub fn solve(p: &Problem, z0: &Vector, s: &Settings) -> Result<Solution> {
    solve_until(p, z0, s, |_| false)
}

fn solve_until<S>(p: &Problem, z0: &Vector, s: &Settings, mut stop: S) -> Result<Solution>
where
    S: FnMut(&Vector) -> bool,
{
    if p.factor(z0).is_none() {
        return Err(Error::InvalidArgument(
            "barrier start point is not strictly feasible".into(),
        ));
    }
    let theta = p.barrier_degree();
    let mut z = z0.clone();
    let mut t = s.t0;
    let mut steps = 0;
    let mut gap = theta / t;
    for outer in 1..=s.max_outer {
        let dec_sq = match center(p, &mut z, t, s, &mut steps, &mut stop)? {
            Centering::Stopped => {
                let objective = p.objective_value(&z).unwrap();
                return Ok(Solution {
                    z,
                    objective,
                    stats: SolverStats {
                        outer_iterations: outer,
                        newton_steps: steps,
                        gap: f64::NAN,
                        kkt_residual: f64::NAN,
                    },
                });
            }
            Centering::Done { decrement_sq } => decrement_sq,
        };
        let objective = p.objective_value(&z).unwrap();
        gap = theta / t;
        let rel_gap = gap / (1.0 + objective.abs());
        if rel_gap <= s.gap_tol {
            let stationarity = dec_sq.sqrt() / t;
            return Ok(Solution {
                z,
                objective,
                stats: SolverStats {
                    outer_iterations: outer,
                    newton_steps: steps,
                    gap,
                    kkt_residual: stationarity.max(rel_gap),
                },
            });
        }
        t *= s.growth;
    }
    Err(Error::NonConvergence {
        iterations: s.max_outer,
        gap,
    })
}

/// Finds a strictly feasible point by minimizing a common slack `s` with
/// `F_i(z) + s·I ⪰ 0` (and `G(z) + s·I ⪰ 0` for a log-det objective),
/// starting from any `z0`.
pub fn phase_one(p: &Problem, z0: &Vector, settings: &Settings) -> Result<Vector> {
    if p.factor(z0).is_some() {
        return Ok(z0.clone());
    }
    let m = p.nvars;
    let slack = m;
    let mut constraints: Vec<AffineMatrix> =
        p.constraints.iter().map(|c| c.with_slack(slack)).collect();
    let mut min_eig = f64::INFINITY;
    for c in &p.constraints {
        min_eig = min_eig.min(crate::matkernel::min_eigenvalue(&c.eval(z0)));
    }
    if let Objective::NegLogDet(g) = &p.objective {
        constraints.push(g.with_slack(slack));
        min_eig = min_eig.min(crate::matkernel::min_eigenvalue(&g.eval(z0)));
    }
    let s0 = (-min_eig).max(0.0) + 1.0;
    // keep the slack bounded below so the auxiliary problem has a minimizer
    constraints.push(AffineMatrix {
        base: Mat::from_element(1, 1, s0),
        coeffs: vec![(slack, Mat::from_element(1, 1, 1.0))],
    });
    let mut c = Vector::zeros(m + 1);
    c[slack] = 1.0;
    let aux = Problem {
        nvars: m + 1,
        objective: Objective::Linear(c),
        constraints,
    };
    let mut start = Vector::zeros(m + 1);
    start.rows_mut(0, m).copy_from(z0);
    start[slack] = s0;
    let margin = 1e-9 * (1.0 + s0);
    let sol = solve_until(&aux, &start, settings, |z| z[slack] < -margin)?;
    let z = sol.z.rows(0, m).into_owned();
    if sol.z[slack] < 0.0 && p.factor(&z).is_some() {
        Ok(z)
    } else {
        Err(Error::Infeasible(format!(
            "no strictly feasible point (best slack {:e})",
            sol.z[slack]
        )))
    }
}

/// Layout of symmetric matrix blocks inside the variable vector. Each block
/// uses the upper-triangle coordinates `(i, j), i ≤ j`.
#[derive(Debug, Clone, Copy)]
pub struct SymBlock {
    pub n: usize,
    pub offset: usize,
}

impl SymBlock {
    pub fn len(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn end(&self) -> usize {
        self.offset + self.len()
    }

    pub fn unpack(&self, z: &Vector) -> Mat {
        let n = self.n;
        let mut m = Mat::zeros(n, n);
        let mut k = self.offset;
        for i in 0..n {
            for j in i..n {
                m[(i, j)] = z[k];
                m[(j, i)] = z[k];
                k += 1;
            }
        }
        m
    }

    pub fn pack(&self, m: &Mat, z: &mut Vector) {
        let n = self.n;
        let mut k = self.offset;
        for i in 0..n {
            for j in i..n {
                z[k] = 0.5 * (m[(i, j)] + m[(j, i)]);
                k += 1;
            }
        }
    }

    /// Coefficients of `tr(W·M)` for symmetric `W`.
    pub fn trace_weights(&self, w: &Mat, c: &mut Vector) {
        let n = self.n;
        let mut k = self.offset;
        for i in 0..n {
            for j in i..n {
                c[k] = if i == j { w[(i, i)] } else { w[(i, j)] + w[(j, i)] };
                k += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(v: f64) -> Mat {
        Mat::from_element(1, 1, v)
    }

    /// min x  s.t. x ≥ 2, x ≤ 5.
    #[test]
    fn linear_box() {
        let lo = AffineMatrix::from_linear(1, scalar(-2.0), |z| scalar(z[0]));
        let hi = AffineMatrix::from_linear(1, scalar(5.0), |z| scalar(-z[0]));
        let p = Problem {
            nvars: 1,
            objective: Objective::Linear(Vector::from_element(1, 1.0)),
            constraints: vec![lo, hi],
        };
        let sol = solve(&p, &Vector::from_element(1, 3.0), &Settings::default()).unwrap();
        assert_relative_eq!(sol.z[0], 2.0, epsilon = 1e-6);
        assert!(sol.stats.gap <= 1e-7 * 3.0);
    }

    /// max log det [[x, 0],[0, y]] s.t. x + y ≤ 2 → x = y = 1.
    #[test]
    fn maxdet_simplex() {
        let g = AffineMatrix::from_linear(2, Mat::zeros(2, 2), |z| {
            Mat::from_row_slice(2, 2, &[z[0], 0.0, 0.0, z[1]])
        });
        let budget = AffineMatrix::from_linear(2, scalar(2.0), |z| scalar(-z[0] - z[1]));
        let p = Problem {
            nvars: 2,
            objective: Objective::NegLogDet(g),
            constraints: vec![budget],
        };
        let sol = solve(&p, &Vector::from_vec(vec![0.3, 0.5]), &Settings::default()).unwrap();
        assert_relative_eq!(sol.z[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(sol.z[1], 1.0, epsilon = 1e-6);
        assert!(sol.objective.abs() < 1e-6);
    }

    /// min t s.t. [[t, 1],[1, x]] ⪰ 0, x ≤ 4  → t = 1/4.
    #[test]
    fn schur_lmi() {
        let blk = AffineMatrix::from_linear(
            2,
            Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            |z| Mat::from_row_slice(2, 2, &[z[0], 0.0, 0.0, z[1]]),
        );
        let cap = AffineMatrix::from_linear(2, scalar(4.0), |z| scalar(-z[1]));
        let p = Problem {
            nvars: 2,
            objective: Objective::Linear(Vector::from_vec(vec![1.0, 0.0])),
            constraints: vec![blk, cap],
        };
        let z0 = phase_one(&p, &Vector::zeros(2), &Settings::default()).unwrap();
        let sol = solve(&p, &z0, &Settings::default()).unwrap();
        assert_relative_eq!(sol.objective, 0.25, epsilon = 1e-6);
        assert!(sol.stats.kkt_residual < 1e-6);
    }

    #[test]
    fn phase_one_detects_infeasible() {
        let lo = AffineMatrix::from_linear(1, scalar(-3.0), |z| scalar(z[0]));
        let hi = AffineMatrix::from_linear(1, scalar(1.0), |z| scalar(-z[0]));
        let p = Problem {
            nvars: 1,
            objective: Objective::Linear(Vector::from_element(1, 1.0)),
            constraints: vec![lo, hi],
        };
        assert!(matches!(
            phase_one(&p, &Vector::zeros(1), &Settings::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn sym_block_round_trip() {
        let b = SymBlock { n: 3, offset: 2 };
        assert_eq!(b.len(), 6);
        let m = Mat::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let mut z = Vector::zeros(8);
        b.pack(&m, &mut z);
        assert_eq!(b.unpack(&z), m);
        let mut c = Vector::zeros(8);
        b.trace_weights(&Mat::identity(3, 3), &mut c);
        assert_relative_eq!(c.dot(&z), m.trace());
    }
}
