//! Continuous-time minimum-information Kalman-Bucy policies: the
//! time-invariant sensor built from the SDP optimizer, the Riccati flow
//! under a given gain, and the periodic policy that tracks a sampled
//! solution.

use std::f64::consts::LN_2;

use crate::discretize::{ct_to_dt_distortion, DiscretizedModel, StateSpaceModel};
use crate::error::{Error, Result};
use crate::matkernel::{
    check_finite, gramian_integral, integrate_ode_with, is_symmetric, matrix_exp, max_abs,
    min_eigenvalue, psd_sqrt, symmetrize, Mat,
};
use crate::rdsolver::{solve_ct_info, solve_dt_rate_perturbed};

/// Time-invariant sensor gain `C` whose Riccati fixed point is `target_cov`.
#[derive(Debug, Clone)]
pub struct SensorDesign {
    pub gain: Mat,
    pub target_cov: Mat,
}

impl SensorDesign {
    /// `Cᵀ C`.
    pub fn gain_sq(&self) -> Mat {
        symmetrize(&(self.gain.transpose() * &self.gain))
    }
}

/// `X⁻¹ (A X + X Aᵀ + B Bᵀ) X⁻¹`, the `CᵀC` that makes `X` stationary.
pub fn stationary_gain_sq(model: &StateSpaceModel, x: &Mat) -> Result<Mat> {
    let min_eig = min_eigenvalue(x);
    if min_eig < 1e-10 {
        return Err(Error::Singular("target covariance"));
    }
    let inv = x.clone().try_inverse().ok_or(Error::Singular("target covariance"))?;
    let a = model.drift();
    let rhs = a * x + x * a.transpose() + model.noise_intensity();
    Ok(symmetrize(&(&inv * rhs * &inv)))
}

/// Symmetric-root sensor attaining the continuous-time optimum at budget `d`.
pub fn design_ti_sensor(model: &StateSpaceModel, d: f64) -> Result<SensorDesign> {
    let sol = solve_ct_info(model, d)?;
    let n = model.dim();
    if sol.trivial {
        return Ok(SensorDesign {
            gain: Mat::zeros(n, n),
            target_cov: sol.error_cov,
        });
    }
    let gain = psd_sqrt(&stationary_gain_sq(model, &sol.error_cov)?)?;
    Ok(SensorDesign {
        gain,
        target_cov: sol.error_cov,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct RiccatiOptions {
    /// Integration step; derived from the dynamics when absent.
    pub step: Option<f64>,
    /// Keep every `record_stride`-th grid state.
    pub record_stride: usize,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        Self {
            step: None,
            record_stride: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RiccatiTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Mat>,
    pub final_cov: Mat,
    /// `(1/T) ∫ tr(C X Cᵀ) dt / (2 ln 2)`, bits per second.
    pub mi_rate: f64,
    /// `(1/T) ∫ tr X dt`.
    pub mse_rate: f64,
    /// `∫ tr(C X Cᵀ) dt` in nats.
    pub info_integral: f64,
    /// `∫ tr(Bᵀ X⁻¹ B) dt`.
    pub info_weight_integral: f64,
    /// Smallest eigenvalue seen on the grid.
    pub min_eigenvalue: f64,
}

/// Composite Simpson accumulator over a uniform grid with an even number
/// of intervals.
struct Simpson {
    h: f64,
    n: usize,
    sum: f64,
}

impl Simpson {
    fn new(h: f64, n: usize, first: f64) -> Self {
        debug_assert!(n.is_multiple_of(2));
        Self { h, n, sum: first }
    }

    fn add(&mut self, i: usize, v: f64) {
        let w = if i == self.n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        self.sum += w * v;
    }

    fn value(&self) -> f64 {
        self.sum * self.h / 3.0
    }
}

/// Uniform grid with an even number of intervals and step at most `max_step`.
fn even_grid(horizon: f64, max_step: f64) -> (usize, f64) {
    let mut n = (horizon / max_step).ceil().max(2.0) as usize;
    if n % 2 == 1 {
        n += 1;
    }
    (n, horizon / n as f64)
}

fn spectral_radius(m: &Mat) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Integrates `Ẋ = A X + X Aᵀ + B Bᵀ − X CᵀC X` under a constant sensor.
pub fn run_riccati(
    model: &StateSpaceModel,
    sensor: &SensorDesign,
    x0: &Mat,
    horizon: f64,
) -> Result<RiccatiTrajectory> {
    run_riccati_with(model, &sensor.gain_sq(), x0, horizon, RiccatiOptions::default())
}

pub fn run_riccati_with(
    model: &StateSpaceModel,
    gain_sq: &Mat,
    x0: &Mat,
    horizon: f64,
    opts: RiccatiOptions,
) -> Result<RiccatiTrajectory> {
    check_finite(x0, "X0")?;
    if x0.shape() != model.drift().shape() || !is_symmetric(x0) || min_eigenvalue(x0) <= 0.0 {
        return Err(Error::InvalidArgument(
            "initial covariance must be symmetric positive definite".into(),
        ));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let a = model.drift();
    let bb = model.noise_intensity();
    let max_step = match opts.step {
        Some(h) if h > 0.0 => h,
        Some(h) => {
            return Err(Error::InvalidArgument(format!("step must be positive, got {h}")))
        }
        None => {
            // fastest linearized rate: drift, and the observation term
            // `dX -> dX G X + X G dX` with X bounded by X0 plus the open-loop
            // stationary covariance
            let bound = x0 + model.stationary_cov()?;
            let rate = spectral_radius(a)
                .max(2.0 * spectral_radius(&(gain_sq * bound)))
                .max(1e-6);
            (0.05 / rate).min(horizon / 10.0)
        }
    };
    let (n, h) = even_grid(horizon, max_step);
    let stride = opts.record_stride.max(1);

    let binv = |x: &Mat| -> f64 {
        match x.clone().try_inverse() {
            Some(inv) => (&inv * &bb).trace(),
            None => f64::INFINITY,
        }
    };
    let mut info = Simpson::new(h, n, (gain_sq * x0).trace());
    let mut mse = Simpson::new(h, n, x0.trace());
    let mut weight = Simpson::new(h, n, binv(x0));
    let mut min_eig = min_eigenvalue(x0);
    let mut times = vec![0.0];
    let mut states = vec![symmetrize(x0)];
    let mut idx = 0usize;

    let final_cov = integrate_ode_with(
        |_, x| a * x + x * a.transpose() + &bb - x * gain_sq * x,
        x0,
        horizon,
        h,
        |t, x| {
            idx += 1;
            info.add(idx, (gain_sq * x).trace());
            mse.add(idx, x.trace());
            weight.add(idx, binv(x));
            min_eig = min_eig.min(min_eigenvalue(x));
            if idx.is_multiple_of(stride) || idx == n {
                times.push(t);
                states.push(x.clone());
            }
        },
    )?;
    let info_integral = info.value();
    Ok(RiccatiTrajectory {
        times,
        states,
        final_cov,
        mi_rate: info_integral / (2.0 * LN_2 * horizon),
        mse_rate: mse.value() / horizon,
        info_integral,
        info_weight_integral: weight.value(),
        min_eigenvalue: min_eig,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodStats {
    /// `(1/τ) ∫ tr X dt` over the period.
    pub mse: f64,
    /// `(1/τ) ∫ tr(G X) dt / (2 ln 2)` over the period, bits per second.
    pub mi_rate: f64,
    /// `‖X_τ − P*‖_max` at the end of the period.
    pub end_error: f64,
}

#[derive(Debug, Clone)]
pub struct PeriodicReport {
    pub dc: f64,
    pub tau: f64,
    pub delta: f64,
    pub eps: f64,
    /// Perturbed program value in bits per sample.
    pub rate_per_sample: f64,
    /// `rate_per_sample / τ`.
    pub rate_target: f64,
    pub posterior_cov: Mat,
    pub periods: Vec<PeriodStats>,
    /// Smallest eigenvalue of `G_t` over the observed segment grid.
    pub min_gain_eigenvalue: f64,
}

/// Builds the τ-periodic policy that stays silent on `[0, τ−Δ)` and then
/// drives the covariance linearly back to the perturbed program's `P*`,
/// integrates the Riccati flow over `periods` periods from `X0 = P*`, and
/// reports per-period information and error rates.
pub fn periodic_policy_check(
    model: &StateSpaceModel,
    dmodel: &DiscretizedModel,
    dc: f64,
    eps: f64,
    delta: f64,
    periods: usize,
) -> Result<PeriodicReport> {
    let tau = dmodel.tau;
    if !(delta > 0.0 && delta < tau) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0, tau), got {delta}"
        )));
    }
    let budget = ct_to_dt_distortion(dmodel, dc);
    if !budget.feasible {
        return Err(Error::Infeasible(format!(
            "distortion {dc} is at or below the critical value for tau = {tau}"
        )));
    }
    let sol = solve_dt_rate_perturbed(dmodel, budget.value, &dmodel.error_weight, eps)?;
    let p_star = sol.posterior_cov.clone();
    let a = model.drift();
    let b = model.diffusion();
    let bb = model.noise_intensity();

    let silent = tau - delta;
    let e = matrix_exp(a, silent)?;
    let x_silent_end = symmetrize(&(&e * &p_star * e.transpose() + gramian_integral(a, b, silent)?));
    let slope = (&p_star - &x_silent_end) / delta;
    let gain_at = |s: f64| -> Result<Mat> {
        // s is the time since the observed segment started
        let f = &x_silent_end + &slope * s;
        let finv = f.clone().try_inverse().ok_or(Error::Singular("linear covariance path"))?;
        let inner = &slope - a * &f - &f * a.transpose() - &bb;
        Ok(symmetrize(&(-(&finv * inner * &finv))))
    };

    let (n1, h1) = even_grid(silent, tau / 1000.0);
    let (n2, h2) = even_grid(delta, delta / 1000.0);
    let mut min_gain_eig = f64::INFINITY;
    for i in 0..=n2 {
        let g = gain_at(i as f64 * h2)?;
        let m = min_eigenvalue(&g);
        min_gain_eig = min_gain_eig.min(m);
        if m < -1e-9 * (1.0 + max_abs(&g)) {
            return Err(Error::NotPsd {
                what: "periodic policy gain (delta too large)",
                min_eig: m,
            });
        }
    }

    let mut stats = Vec::with_capacity(periods);
    let mut x = p_star.clone();
    for _ in 0..periods {
        let mut mse1 = Simpson::new(h1, n1, x.trace());
        let mut i1 = 0;
        let x_mid = integrate_ode_with(
            |_, x| a * x + x * a.transpose() + &bb,
            &x,
            silent,
            h1,
            |_, x| {
                i1 += 1;
                mse1.add(i1, x.trace());
            },
        )?;
        let g0 = gain_at(0.0)?;
        let mut mse2 = Simpson::new(h2, n2, x_mid.trace());
        let mut info2 = Simpson::new(h2, n2, (&g0 * &x_mid).trace());
        let mut i2 = 0;
        let mut gain_err = None;
        let x_end = integrate_ode_with(
            |s, x| match gain_at(s) {
                Ok(g) => a * x + x * a.transpose() + &bb - x * g * x,
                Err(err) => {
                    gain_err.get_or_insert(err);
                    x * f64::NAN
                }
            },
            &x_mid,
            delta,
            h2,
            |s, x| {
                i2 += 1;
                mse2.add(i2, x.trace());
                if let Ok(g) = gain_at(s) {
                    info2.add(i2, (g * x).trace());
                }
            },
        );
        if let Some(err) = gain_err {
            return Err(err);
        }
        let x_end = x_end?;
        stats.push(PeriodStats {
            mse: (mse1.value() + mse2.value()) / tau,
            mi_rate: info2.value() / (2.0 * LN_2 * tau),
            end_error: max_abs(&(&x_end - &p_star)),
        });
        x = x_end;
    }

    Ok(PeriodicReport {
        dc,
        tau,
        delta,
        eps,
        rate_per_sample: sol.value,
        rate_target: sol.value / tau,
        posterior_cov: p_star,
        periods: stats,
        min_gain_eigenvalue: min_gain_eig,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::discretize;
    use crate::rdsolver::scalar_ct_info;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn scalar_model() -> StateSpaceModel {
        StateSpaceModel::scalar(-0.1, 1.0).unwrap()
    }

    #[test]
    fn scalar_sensor() {
        let s = design_ti_sensor(&scalar_model(), 1.0).unwrap();
        assert_relative_eq!(s.target_cov[(0, 0)], 1.0, epsilon = 1e-6);
        assert_relative_eq!(s.gain_sq()[(0, 0)], 0.8, epsilon = 1e-5);
        let rhs = stationary_gain_sq(&scalar_model(), &s.target_cov).unwrap();
        assert!(max_abs(&(s.gain_sq() - rhs)) <= 1e-8);
    }

    #[test]
    fn trivial_budget_gives_zero_sensor() {
        let s = design_ti_sensor(&scalar_model(), 6.0).unwrap();
        assert_eq!(s.gain, Mat::zeros(1, 1));
    }

    #[test]
    fn diagonal_sensor_is_diagonal() {
        let a = Mat::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        let m = StateSpaceModel::new(a, Mat::identity(2, 2), Mat::identity(2, 2)).unwrap();
        let s = design_ti_sensor(&m, 0.4).unwrap();
        assert!(s.gain[(0, 1)].abs() < 1e-6);
        let x = &s.target_cov;
        for (i, ai) in [-1.0, -2.0].into_iter().enumerate() {
            let want = (2.0 * ai * x[(i, i)] + 1.0) / (x[(i, i)] * x[(i, i)]);
            assert_relative_eq!(s.gain[(i, i)].powi(2), want, max_relative = 1e-6);
        }
    }

    #[test]
    fn unobserved_flow_matches_closed_form() {
        let a = Mat::from_row_slice(2, 2, &[-0.5, 1.0, -0.3, -0.8]);
        let b = Mat::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 0.7]);
        let m = StateSpaceModel::new(a.clone(), b.clone(), Mat::identity(2, 2)).unwrap();
        let x0 = Mat::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let run = run_riccati_with(&m, &Mat::zeros(2, 2), &x0, 4.0, RiccatiOptions::default()).unwrap();
        let e = matrix_exp(&a, 4.0).unwrap();
        let want = &e * &x0 * e.transpose() + gramian_integral(&a, &b, 4.0).unwrap();
        assert!(max_abs(&(&run.final_cov - want)) < 1e-6);
        assert_eq!(run.mi_rate, 0.0);
    }

    #[test]
    fn sensor_flow_converges() {
        let m = scalar_model();
        let s = design_ti_sensor(&m, 1.0).unwrap();
        let x0 = Mat::from_element(1, 1, 3.0);
        let run = run_riccati(&m, &s, &x0, 500.0).unwrap();
        assert!(max_abs(&(&run.final_cov - &s.target_cov)) < 1e-4);
        let ic = scalar_ct_info(-0.1, 1.0, 1.0);
        assert!((run.mi_rate - ic).abs() / ic < 0.01);
        assert!(run.mse_rate <= 1.01);
        assert!(run.min_eigenvalue > 0.0);
    }

    /// ∫tr(GX) = aT − ln(det X_T / det X_0) + ∫tr(BᵀX⁻¹B).
    #[test]
    fn information_accounting_identity() {
        let a = Mat::from_row_slice(2, 2, &[-0.5, 1.0, -0.3, -0.8]);
        let b = Mat::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 0.7]);
        let m = StateSpaceModel::new(a.clone(), b, Mat::identity(2, 2)).unwrap();
        let s = design_ti_sensor(&m, 0.5 * m.stationary_cov().unwrap().trace()).unwrap();
        let x0 = Mat::from_row_slice(2, 2, &[1.5, -0.2, -0.2, 0.4]);
        let horizon = 10.0;
        let run = run_riccati(&m, &s, &x0, horizon).unwrap();
        let rhs = 2.0 * a.trace() * horizon - (run.final_cov.determinant() / x0.determinant()).ln()
            + run.info_weight_integral;
        assert_relative_eq!(run.info_integral, rhs, max_relative = 1e-6);
    }

    #[test]
    fn periodic_policy_scalar() {
        let m = scalar_model();
        let d = discretize(&m, 1.0).unwrap();
        let rep = periodic_policy_check(&m, &d, 1.0, 1e-3, 1e-3, 2).unwrap();
        assert!(rep.min_gain_eigenvalue > 0.0);
        for p in &rep.periods {
            assert!((p.mse - 1.0).abs() < 0.02, "mse {}", p.mse);
            assert!((p.mi_rate - rep.rate_target).abs() / rep.rate_target < 0.05);
            assert!(p.end_error < 1e-6, "end error {}", p.end_error);
        }
        // the time-invariant policy needs no more information
        assert!(scalar_ct_info(-0.1, 1.0, 1.0) <= rep.periods[0].mi_rate);
    }

    #[test]
    fn periodic_policy_rejects_bad_delta() {
        let m = scalar_model();
        let d = discretize(&m, 1.0).unwrap();
        assert!(periodic_policy_check(&m, &d, 1.0, 1e-3, 1.5, 1).is_err());
        assert!(periodic_policy_check(&m, &d, 1.0, 1e-3, 0.0, 1).is_err());
        assert!(matches!(
            periodic_policy_check(&m, &d, 0.4, 1e-3, 1e-3, 1),
            Err(Error::Infeasible(_))
        ));
    }
}
