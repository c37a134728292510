//! Sampled models and conversion between continuous and per-sample
//! distortion budgets.

use crate::error::{Error, Result};
use crate::matkernel::{
    check_finite, check_square, double_gramian_integral, ensure_hurwitz, gramian_integral,
    lyapunov_solve, matrix_exp, min_eigenvalue, psd_sqrt, weighted_gram_integral, Mat,
};

/// Continuous-time Gauss-Markov source `dx = A x dt + B dW`, `x(0) ~ N(0, Σ₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    drift: Mat,
    diffusion: Mat,
    initial_cov: Mat,
}

impl StateSpaceModel {
    pub fn new(drift: Mat, diffusion: Mat, initial_cov: Mat) -> Result<Self> {
        check_square(&drift, "A")?;
        check_square(&diffusion, "B")?;
        check_square(&initial_cov, "Sigma0")?;
        let n = drift.nrows();
        if diffusion.nrows() != n || initial_cov.nrows() != n {
            return Err(Error::Dimension(format!(
                "A is {n}x{n} but B is {}x{} and Sigma0 is {}x{}",
                diffusion.nrows(),
                diffusion.ncols(),
                initial_cov.nrows(),
                initial_cov.ncols()
            )));
        }
        check_finite(&drift, "A")?;
        check_finite(&diffusion, "B")?;
        check_finite(&initial_cov, "Sigma0")?;
        ensure_hurwitz(&drift)?;
        let bb = &diffusion * diffusion.transpose();
        let min_bb = min_eigenvalue(&bb);
        if min_bb <= 1e-10 {
            return Err(Error::NotPsd {
                what: "B Bᵀ (must be positive definite)",
                min_eig: min_bb,
            });
        }
        if !crate::matkernel::is_symmetric(&initial_cov) {
            return Err(Error::InvalidArgument("Sigma0 must be symmetric".into()));
        }
        let min_s0 = min_eigenvalue(&initial_cov);
        if min_s0 <= 0.0 {
            return Err(Error::NotPsd {
                what: "Sigma0 (must be positive definite)",
                min_eig: min_s0,
            });
        }
        Ok(Self {
            drift,
            diffusion,
            initial_cov,
        })
    }

    /// Scalar model `dx = a x dt + b dW` with unit initial variance.
    pub fn scalar(a: f64, b: f64) -> Result<Self> {
        Self::new(
            Mat::from_element(1, 1, a),
            Mat::from_element(1, 1, b),
            Mat::from_element(1, 1, 1.0),
        )
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn drift(&self) -> &Mat {
        &self.drift
    }

    pub fn diffusion(&self) -> &Mat {
        &self.diffusion
    }

    pub fn initial_cov(&self) -> &Mat {
        &self.initial_cov
    }

    /// `B Bᵀ`.
    pub fn noise_intensity(&self) -> Mat {
        &self.diffusion * self.diffusion.transpose()
    }

    /// Stationary covariance, the solution of `A X + X Aᵀ + B Bᵀ = 0`.
    pub fn stationary_cov(&self) -> Result<Mat> {
        lyapunov_solve(&self.drift, &self.noise_intensity())
    }
}

/// Trace of the stationary covariance. Distortion targets at or above this
/// are met without communicating at all.
pub fn stationary_trace(model: &StateSpaceModel) -> Result<f64> {
    Ok(model.stationary_cov()?.trace())
}

/// The source sampled every `tau` seconds:
/// `x(k+1) = A_τ x(k) + B_τ w(k)` with `w(k) ~ N(0, I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedModel {
    pub tau: f64,
    /// `A_τ = e^{Aτ}`.
    pub transition: Mat,
    /// Symmetric root `B_τ` of `noise_cov`.
    pub noise_factor: Mat,
    /// `B_τ B_τᵀ = ∫₀^τ e^{As} B Bᵀ e^{Aᵀs} ds`.
    pub noise_cov: Mat,
    /// `Q̄ = ∫₀^τ e^{Aᵀs} e^{As} ds`, the weight mapping a sample error to
    /// its integrated squared error over the following interval.
    pub error_weight: Mat,
    /// `b̄`, integrated squared error over one interval from noise injected
    /// after the sample.
    pub intersample_mse: f64,
}

impl DiscretizedModel {
    pub fn dim(&self) -> usize {
        self.transition.nrows()
    }
}

pub fn discretize(model: &StateSpaceModel, tau: f64) -> Result<DiscretizedModel> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sampling interval must be positive and finite, got {tau}"
        )));
    }
    let a = model.drift();
    let b = model.diffusion();
    let transition = matrix_exp(a, tau)?;
    let noise_cov = gramian_integral(a, b, tau)?;
    let noise_factor = psd_sqrt(&noise_cov)?;
    let error_weight = weighted_gram_integral(a, tau)?;
    let intersample_mse = double_gramian_integral(a, b, tau)?.trace();
    Ok(DiscretizedModel {
        tau,
        transition,
        noise_factor,
        noise_cov,
        error_weight,
        intersample_mse,
    })
}

/// Per-sample distortion budget `D_d = Dc·τ − b̄` together with its
/// feasibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBudget {
    pub value: f64,
    pub feasible: bool,
}

pub fn ct_to_dt_distortion(dmodel: &DiscretizedModel, dc: f64) -> SampleBudget {
    let value = dc * dmodel.tau - dmodel.intersample_mse;
    SampleBudget {
        value,
        feasible: value > 0.0,
    }
}

/// Smallest continuous-time distortion reachable with sampling interval
/// `τ`, even with perfect samples: `b̄ / τ`.
pub fn critical_distortion(dmodel: &DiscretizedModel) -> f64 {
    dmodel.intersample_mse / dmodel.tau
}

/// `tr(Q̄ Σ) + b̄`: integrated squared error over one interval when the
/// sample error has covariance `Σ`.
pub fn interval_mse(dmodel: &DiscretizedModel, err_cov: &Mat) -> f64 {
    (&dmodel.error_weight * err_cov).trace() + dmodel.intersample_mse
}
