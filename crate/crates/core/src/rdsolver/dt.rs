use std::f64::consts::LN_2;

use nalgebra::DVector;

use super::barrier::{self, AffineMatrix, Objective, Problem, Settings, SolverStats, SymBlock, Vector};
use super::ct::inverse;
use crate::discretize::DiscretizedModel;
use crate::error::{Error, Result};
use crate::matkernel::{check_square, is_symmetric, min_eigenvalue, symmetrize, Mat};

/// Optimizer of the sampled rate-distortion program.
#[derive(Debug, Clone)]
pub struct DtRateSolution {
    /// Rate in bits per sample, clamped at zero.
    pub value: f64,
    /// Optimal posterior error covariance `P*`.
    pub posterior_cov: Mat,
    /// Prediction covariance `A_τ P* A_τᵀ + B_τ B_τᵀ`.
    pub prediction_cov: Mat,
    /// The program's auxiliary matrix variable at the optimum,
    /// `(P*⁻¹ + A_τᵀ (B_τB_τᵀ)⁻¹ A_τ)⁻¹`.
    pub aux: Mat,
    pub feasible: bool,
    /// True when the budget admits the stationary covariance and the
    /// zero-rate solution was returned without solving.
    pub trivial: bool,
    pub stats: Option<SolverStats>,
}

/// Solves `P = β (A P Aᵀ + W)` for `β |λ(A)|² < 1`.
pub(crate) fn stein_solve(a: &Mat, w: &Mat, beta: f64) -> Result<Mat> {
    let n = a.nrows();
    let op = Mat::identity(n * n, n * n) - a.kronecker(a) * beta;
    let rhs = DVector::from_column_slice(w.as_slice()) * beta;
    let sol = op.lu().solve(&rhs).ok_or(Error::Singular("Stein operator"))?;
    Ok(symmetrize(&Mat::from_column_slice(n, n, sol.as_slice())))
}

/// Minimizes `-½ log₂(det Π / det B_τB_τᵀ)` over `P, Π` subject to
/// `tr(Q P) ≤ d_d`, `P ⪯ A_τ P A_τᵀ + B_τB_τᵀ` and
/// `[[P − Π, P A_τᵀ], [A_τ P, A_τ P A_τᵀ + B_τB_τᵀ]] ⪰ 0`.
pub fn solve_dt_rate(dmodel: &DiscretizedModel, d_d: f64, q: &Mat) -> Result<DtRateSolution> {
    solve(dmodel, d_d, q, 0.0)
}

/// As [`solve_dt_rate`] with the tightened constraint
/// `P + ε I ⪯ A_τ P A_τᵀ + B_τB_τᵀ`.
pub fn solve_dt_rate_perturbed(
    dmodel: &DiscretizedModel,
    d_d: f64,
    q: &Mat,
    eps: f64,
) -> Result<DtRateSolution> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "perturbation must be positive, got {eps}"
        )));
    }
    solve(dmodel, d_d, q, eps)
}

fn solve(dmodel: &DiscretizedModel, d_d: f64, q: &Mat, eps: f64) -> Result<DtRateSolution> {
    if !(d_d > 0.0) || !d_d.is_finite() {
        return Err(Error::Infeasible(format!(
            "per-sample distortion budget must be positive, got {d_d}"
        )));
    }
    let n = dmodel.dim();
    check_square(q, "Q")?;
    if q.nrows() != n || !is_symmetric(q) || min_eigenvalue(q) <= 0.0 {
        return Err(Error::InvalidArgument(
            "Q must be symmetric positive definite with the model's dimension".into(),
        ));
    }
    let at = &dmodel.transition;
    let w = &dmodel.noise_cov;
    let ln_det_w = log_det(w)?;

    if eps == 0.0 {
        let stationary = stein_solve(at, w, 1.0)?;
        if (q * &stationary).trace() <= d_d {
            let aux = aux_at(&stationary, at, w)?;
            return Ok(DtRateSolution {
                value: 0.0,
                posterior_cov: stationary.clone(),
                prediction_cov: stationary,
                aux,
                feasible: true,
                trivial: true,
                stats: None,
            });
        }
    }

    let pb = SymBlock { n, offset: 0 };
    let vb = SymBlock { n, offset: pb.end() };
    let nvars = vb.end();

    let budget = AffineMatrix::from_linear(nvars, Mat::from_element(1, 1, d_d), |z| {
        Mat::from_element(1, 1, -(q * pb.unpack(z)).trace())
    });
    let growth = AffineMatrix::from_linear(nvars, w - Mat::identity(n, n) * eps, |z| {
        let p = pb.unpack(z);
        at * &p * at.transpose() - p
    });
    let mut joint_base = Mat::zeros(2 * n, 2 * n);
    joint_base.view_mut((n, n), (n, n)).copy_from(w);
    let joint = AffineMatrix::from_linear(nvars, joint_base, |z| {
        let p = pb.unpack(z);
        let v = vb.unpack(z);
        let pa = &p * at.transpose();
        let mut m = Mat::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&(&p - v));
        m.view_mut((0, n), (n, n)).copy_from(&pa);
        m.view_mut((n, 0), (n, n)).copy_from(&pa.transpose());
        m.view_mut((n, n), (n, n)).copy_from(&(at * &p * at.transpose()));
        m
    });
    let objective = AffineMatrix::from_linear(nvars, Mat::zeros(n, n), |z| vb.unpack(z));
    let problem = Problem {
        nvars,
        objective: Objective::NegLogDet(objective),
        constraints: vec![budget, growth, joint],
    };

    let seed = stein_solve(at, w, 0.5)?;
    let alpha = (0.99 * d_d / (q * &seed).trace()).min(1.0);
    let p0 = seed * alpha;
    let v0 = aux_at(&p0, at, w)? * 0.5;
    let mut z0 = Vector::zeros(nvars);
    pb.pack(&p0, &mut z0);
    vb.pack(&v0, &mut z0);

    let settings = Settings::default();
    let start = barrier::phase_one(&problem, &z0, &settings)?;
    let sol = barrier::solve(&problem, &start, &settings)?;
    let posterior_cov = pb.unpack(&sol.z);
    let aux = vb.unpack(&sol.z);
    let prediction_cov = symmetrize(&(at * &posterior_cov * at.transpose() + w));
    let value = ((sol.objective + ln_det_w) / (2.0 * LN_2)).max(0.0);
    Ok(DtRateSolution {
        value,
        posterior_cov,
        prediction_cov,
        aux,
        feasible: true,
        trivial: false,
        stats: Some(sol.stats),
    })
}

/// `P − P A_τᵀ (A_τ P A_τᵀ + W)⁻¹ A_τ P`.
fn aux_at(p: &Mat, at: &Mat, w: &Mat) -> Result<Mat> {
    let pred = at * p * at.transpose() + w;
    let pa = p * at.transpose();
    Ok(symmetrize(&(p - &pa * inverse(&pred)? * pa.transpose())))
}

pub(crate) fn log_det(m: &Mat) -> Result<f64> {
    let ch = nalgebra::Cholesky::new(symmetrize(m)).ok_or(Error::NotPsd {
        what: "log-det argument",
        min_eig: min_eigenvalue(m),
    })?;
    Ok(2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}
