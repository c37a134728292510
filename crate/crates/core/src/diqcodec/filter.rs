use nalgebra::DVector;

use crate::discretize::DiscretizedModel;
use crate::error::{Error, Result};
use crate::matkernel::{symmetrize, Mat};

/// Sampled-model Kalman filter for `y = C x + v`, `cov(v) = I/12`. Both
/// ends run identical copies so estimates agree bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanFilter {
    transition: Mat,
    noise_cov: Mat,
    sensor: Mat,
    meas_cov: Mat,
    prior_mean: DVector<f64>,
    prior_cov: Mat,
    post_mean: DVector<f64>,
    post_cov: Mat,
}

impl KalmanFilter {
    pub fn new(dmodel: &DiscretizedModel, sensor: &Mat, initial_cov: &Mat) -> Result<Self> {
        let n = dmodel.dim();
        if sensor.ncols() != n || initial_cov.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "sensor is {}×{} and initial covariance {}×{} for a {n}-state model",
                sensor.nrows(),
                sensor.ncols(),
                initial_cov.nrows(),
                initial_cov.ncols()
            )));
        }
        let m = sensor.nrows();
        Ok(Self {
            transition: dmodel.transition.clone(),
            noise_cov: dmodel.noise_cov.clone(),
            sensor: sensor.clone(),
            meas_cov: Mat::identity(m, m) / 12.0,
            prior_mean: DVector::zeros(n),
            prior_cov: initial_cov.clone(),
            post_mean: DVector::zeros(n),
            post_cov: initial_cov.clone(),
        })
    }

    pub fn sensor(&self) -> &Mat {
        &self.sensor
    }

    pub fn prior_mean(&self) -> &DVector<f64> {
        &self.prior_mean
    }

    pub fn prior_cov(&self) -> &Mat {
        &self.prior_cov
    }

    pub fn post_mean(&self) -> &DVector<f64> {
        &self.post_mean
    }

    pub fn post_cov(&self) -> &Mat {
        &self.post_cov
    }

    /// Measurement update with the innovation `y − C x̂_prior`, covariance
    /// in Joseph form.
    pub fn update(&mut self, innovation: &DVector<f64>) -> Result<()> {
        let c = &self.sensor;
        let s = c * &self.prior_cov * c.transpose() + &self.meas_cov;
        let chol = s
            .cholesky()
            .ok_or(Error::Singular("innovation covariance"))?;
        // K = Π Cᵀ S⁻¹
        let gain = chol.solve(&(c * &self.prior_cov)).transpose();
        self.post_mean = &self.prior_mean + &gain * innovation;
        let n = self.prior_cov.nrows();
        let i_kc = Mat::identity(n, n) - &gain * c;
        self.post_cov = symmetrize(
            &(&i_kc * &self.prior_cov * i_kc.transpose() + &gain * &self.meas_cov * gain.transpose()),
        );
        Ok(())
    }

    /// Skips the measurement: posterior equals prior.
    pub fn skip(&mut self) {
        self.post_mean = self.prior_mean.clone();
        self.post_cov = self.prior_cov.clone();
    }

    pub fn predict(&mut self) {
        let a = &self.transition;
        self.prior_mean = a * &self.post_mean;
        self.prior_cov = symmetrize(&(a * &self.post_cov * a.transpose() + &self.noise_cov));
    }
}
