use std::f64::consts::LN_2;

use super::barrier::{self, AffineMatrix, Objective, Problem, Settings, SolverStats, SymBlock, Vector};
use crate::discretize::StateSpaceModel;
use crate::error::{Error, Result};
use crate::matkernel::{symmetrize, Mat};

/// Optimizer of the continuous-time information-distortion program.
#[derive(Debug, Clone)]
pub struct CtInfoSolution {
    /// Information rate in bits per second, clamped at zero.
    pub value: f64,
    /// Same quantity before clamping.
    pub unclamped_value: f64,
    /// Optimal steady-state error covariance `X*`.
    pub error_cov: Mat,
    /// Optimal `Y* ⪰ Bᵀ X*⁻¹ B`.
    pub info_weight: Mat,
    /// `2·tr(A)`.
    pub trace_term: f64,
    pub feasible: bool,
    /// True when the budget is at or above the stationary trace and the
    /// analytic zero-rate solution was returned.
    pub trivial: bool,
    pub stats: Option<SolverStats>,
}

fn value_bits(trace_term: f64, info_trace: f64) -> f64 {
    (trace_term + info_trace) / (2.0 * LN_2)
}

/// Minimizes `(2 tr A + tr Y)/(2 ln 2)` over `X, Y` subject to
/// `A X + X Aᵀ + B Bᵀ ⪰ 0`, `[[Y, Bᵀ], [B, X]] ⪰ 0` and `tr X ≤ d`.
pub fn solve_ct_info(model: &StateSpaceModel, d: f64) -> Result<CtInfoSolution> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Infeasible(format!(
            "distortion budget must be positive and finite, got {d}"
        )));
    }
    let a = model.drift();
    let b = model.diffusion();
    let trace_term = 2.0 * a.trace();
    let stationary = model.stationary_cov()?;

    if d >= stationary.trace() {
        let info_weight = symmetrize(&(b.transpose() * inverse(&stationary)? * b));
        let unclamped_value = value_bits(trace_term, info_weight.trace());
        return Ok(CtInfoSolution {
            value: 0.0,
            unclamped_value,
            error_cov: stationary,
            info_weight,
            trace_term,
            feasible: true,
            trivial: true,
            stats: None,
        });
    }

    let n = model.dim();
    let xb = SymBlock { n, offset: 0 };
    let yb = SymBlock { n, offset: xb.end() };
    let nvars = yb.end();
    let bb = model.noise_intensity();

    let lyap = AffineMatrix::from_linear(nvars, bb.clone(), |z| {
        let x = xb.unpack(z);
        a * &x + &x * a.transpose()
    });
    let mut schur_base = Mat::zeros(2 * n, 2 * n);
    schur_base.view_mut((0, n), (n, n)).copy_from(&b.transpose());
    schur_base.view_mut((n, 0), (n, n)).copy_from(b);
    let schur = AffineMatrix::from_linear(nvars, schur_base, |z| {
        let mut m = Mat::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&yb.unpack(z));
        m.view_mut((n, n), (n, n)).copy_from(&xb.unpack(z));
        m
    });
    let budget = AffineMatrix::from_linear(nvars, Mat::from_element(1, 1, d), |z| {
        Mat::from_element(1, 1, -xb.unpack(z).trace())
    });
    let mut c = Vector::zeros(nvars);
    yb.trace_weights(&Mat::identity(n, n), &mut c);
    let problem = Problem {
        nvars,
        objective: Objective::Linear(c),
        constraints: vec![lyap, schur, budget],
    };

    let alpha = 0.99 * d / stationary.trace();
    let x0 = &stationary * alpha;
    let y0 = symmetrize(&(b.transpose() * inverse(&x0)? * b)) + Mat::identity(n, n);
    let mut z0 = Vector::zeros(nvars);
    xb.pack(&x0, &mut z0);
    yb.pack(&y0, &mut z0);

    let settings = Settings::default();
    let start = barrier::phase_one(&problem, &z0, &settings)?;
    let sol = barrier::solve(&problem, &start, &settings)?;
    let error_cov = xb.unpack(&sol.z);
    let info_weight = yb.unpack(&sol.z);
    let unclamped_value = value_bits(trace_term, info_weight.trace());
    Ok(CtInfoSolution {
        value: unclamped_value.max(0.0),
        unclamped_value,
        error_cov,
        info_weight,
        trace_term,
        feasible: true,
        trivial: false,
        stats: Some(sol.stats),
    })
}

pub(crate) fn inverse(m: &Mat) -> Result<Mat> {
    m.clone()
        .try_inverse()
        .map(|v| symmetrize(&v))
        .ok_or(Error::Singular("covariance"))
}
