//! Operational lower bounds on the bitrate of event-based tracking.

use std::f64::consts::LN_2;

use crate::discretize::{
    critical_distortion, ct_to_dt_distortion, discretize, stationary_trace, StateSpaceModel,
};
use crate::error::{Error, Result};
use crate::rdsolver::{scalar_ct_info, scalar_dt_rate, solve_ct_info, solve_dt_rate, CtInfoSolution};

/// `θ(x) = x + (1+x) log₂(1+x) − x log₂ x`, with `θ(0) = 0`.
pub fn theta(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "theta is defined on x >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(x + ((1.0 + x) * x.ln_1p() - x * x.ln()) / LN_2)
}

/// Inverse of [`theta`] by bisection on `[0, y]`, run until the bracket
/// cannot shrink further.
pub fn theta_inv(y: f64) -> Result<f64> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "theta_inv needs a finite y >= 0, got {y}"
        )));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0_f64, y);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if theta(mid)? < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BoundFlags {
    /// `Dc·τ ≤ b̄`: no sampled scheme reaches the target, the DT bound is
    /// infinite.
    pub dt_infeasible: bool,
    /// `Dc` at or above the stationary trace: zero rate suffices.
    pub trivial_distortion: bool,
}

impl BoundFlags {
    pub fn labels(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.dt_infeasible {
            v.push("dt_infeasible");
        }
        if self.trivial_distortion {
            v.push("trivial_distortion");
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub tau: f64,
    pub dc: f64,
    /// `θ⁻¹(τ I^c)/τ`, bits per second.
    pub rate_lb_ct: f64,
    /// `θ⁻¹(R)/τ`, bits per second; absent when not evaluated or infeasible.
    pub rate_lb_dt: Option<f64>,
    /// `I^c(Dc)`, bits per second.
    pub info_ct: f64,
    /// `R(D_d, Q̄, τ)`, bits per sample.
    pub rate_dt_per_sample: Option<f64>,
    pub critical_dc: f64,
    pub flags: BoundFlags,
}

/// Bound evaluator for one `(model, Dc)` pair. The continuous-time program
/// is solved once at construction and reused for every `τ`.
#[derive(Debug, Clone)]
pub struct BoundEvaluator {
    model: StateSpaceModel,
    dc: f64,
    stationary_trace: f64,
    ct: CtInfoSolution,
}

impl BoundEvaluator {
    pub fn new(model: &StateSpaceModel, dc: f64) -> Result<Self> {
        if !(dc > 0.0) {
            return Err(Error::Infeasible(format!(
                "distortion target must be positive, got {dc}"
            )));
        }
        let ct = solve_ct_info(model, dc)?;
        Ok(Self {
            model: model.clone(),
            dc,
            stationary_trace: stationary_trace(model)?,
            ct,
        })
    }

    pub fn ct_solution(&self) -> &CtInfoSolution {
        &self.ct
    }

    pub fn info_ct(&self) -> f64 {
        self.ct.value
    }

    fn check_tau(tau: f64) -> Result<()> {
        if tau > 0.0 && tau.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "sampling interval must be positive, got {tau}"
            )))
        }
    }

    pub fn ct_bound(&self, tau: f64) -> Result<f64> {
        Self::check_tau(tau)?;
        Ok(theta_inv(tau * self.ct.value)? / tau)
    }

    /// Report with only the continuous-time bound filled in.
    pub fn ct_report(&self, tau: f64) -> Result<BoundReport> {
        let dmodel = discretize(&self.model, tau)?;
        let budget = ct_to_dt_distortion(&dmodel, self.dc);
        Ok(BoundReport {
            tau,
            dc: self.dc,
            rate_lb_ct: self.ct_bound(tau)?,
            rate_lb_dt: None,
            info_ct: self.ct.value,
            rate_dt_per_sample: None,
            critical_dc: critical_distortion(&dmodel),
            flags: BoundFlags {
                dt_infeasible: !budget.feasible,
                trivial_distortion: self.dc >= self.stationary_trace,
            },
        })
    }

    /// Report with both bounds.
    pub fn report(&self, tau: f64) -> Result<BoundReport> {
        let mut rep = self.ct_report(tau)?;
        if rep.flags.dt_infeasible {
            return Ok(rep);
        }
        let dmodel = discretize(&self.model, tau)?;
        let budget = ct_to_dt_distortion(&dmodel, self.dc);
        let rate = solve_dt_rate(&dmodel, budget.value, &dmodel.error_weight)?.value;
        rep.rate_dt_per_sample = Some(rate);
        rep.rate_lb_dt = Some(theta_inv(rate)? / tau);
        Ok(rep)
    }
}

/// `θ⁻¹(τ I^c(Dc))/τ` and supporting quantities.
pub fn ct_lower_bound(model: &StateSpaceModel, dc: f64, tau: f64) -> Result<BoundReport> {
    BoundEvaluator::new(model, dc)?.ct_report(tau)
}

/// Both bounds at one `(Dc, τ)`; the DT bound is absent and flagged when
/// `Dc` is at or below the critical distortion.
pub fn dt_lower_bound(model: &StateSpaceModel, dc: f64, tau: f64) -> Result<BoundReport> {
    BoundEvaluator::new(model, dc)?.report(tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuityRow {
    pub tau: f64,
    /// `R/τ`, bits per second.
    pub rate_per_time: Option<f64>,
    pub info_ct: f64,
    /// `θ⁻¹(R)/τ`, bits per second.
    pub dt_bound: Option<f64>,
    pub infeasible: bool,
}

/// Small-`τ` behaviour of the sampled bound for a scalar model, from the
/// closed forms.
pub fn vacuity_profile(model: &StateSpaceModel, dc: f64, taus: &[f64]) -> Result<Vec<VacuityRow>> {
    if model.dim() != 1 {
        return Err(Error::Dimension(format!(
            "vacuity profile needs a scalar model, got dimension {}",
            model.dim()
        )));
    }
    let info_ct = scalar_ct_info(model.drift()[(0, 0)], model.diffusion()[(0, 0)], dc);
    taus.iter()
        .map(|&tau| {
            let dmodel = discretize(model, tau)?;
            let budget = ct_to_dt_distortion(&dmodel, dc);
            if !budget.feasible {
                return Ok(VacuityRow {
                    tau,
                    rate_per_time: None,
                    info_ct,
                    dt_bound: None,
                    infeasible: true,
                });
            }
            let rate = scalar_dt_rate(&dmodel, budget.value)?;
            Ok(VacuityRow {
                tau,
                rate_per_time: Some(rate / tau),
                info_ct,
                dt_bound: Some(theta_inv(rate)? / tau),
                infeasible: false,
            })
        })
        .collect()
}
