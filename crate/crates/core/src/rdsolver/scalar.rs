use std::f64::consts::LOG2_E;

use crate::discretize::DiscretizedModel;
use crate::error::{Error, Result};

/// `log₂e · max{0, a + b²/(2d)}` bits per second.
pub fn scalar_ct_info(a: f64, b: f64, d: f64) -> f64 {
    LOG2_E * (a + b * b / (2.0 * d)).max(0.0)
}

/// `max{0, ½ log₂(a_τ² + b_τ² q̄ / d_d)}` bits per sample.
pub fn scalar_dt_rate_raw(a_tau: f64, b_tau_sq: f64, q_bar: f64, d_d: f64) -> f64 {
    (0.5 * (a_tau * a_tau + b_tau_sq * q_bar / d_d).log2()).max(0.0)
}

pub fn scalar_dt_rate(dmodel: &DiscretizedModel, d_d: f64) -> Result<f64> {
    if dmodel.dim() != 1 {
        return Err(Error::Dimension(format!(
            "scalar closed form needs a 1-D model, got dimension {}",
            dmodel.dim()
        )));
    }
    if !(d_d > 0.0) {
        return Err(Error::Infeasible(format!(
            "per-sample distortion budget must be positive, got {d_d}"
        )));
    }
    Ok(scalar_dt_rate_raw(
        dmodel.transition[(0, 0)],
        dmodel.noise_cov[(0, 0)],
        dmodel.error_weight[(0, 0)],
        d_d,
    ))
}
