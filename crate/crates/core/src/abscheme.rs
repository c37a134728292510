//! Scalar threshold encoder: one bit whenever the sampled tracking error
//! reaches the threshold, silence otherwise.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::discretize::{discretize, DiscretizedModel, StateSpaceModel};
use crate::error::{Error, Result};
use crate::rng::{mix64, stream_rng, STREAM_PROCESS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbConfig {
    pub drift: f64,
    pub diffusion: f64,
    pub threshold: f64,
    pub tau: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl AbConfig {
    fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.horizon >= 100.0 * self.tau) {
            return Err(Error::InvalidArgument(format!(
                "horizon {} is shorter than 100 sampling intervals",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Stream identifier derived from the parameters, so a given cell draws
    /// the same noise whatever grid it belongs to.
    fn stream(&self) -> u64 {
        mix64(STREAM_PROCESS ^ mix64(self.threshold.to_bits()) ^ mix64(self.tau.to_bits()).rotate_left(17))
    }
}

/// Empirical `(rate, distortion)` point with batch-means standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalPoint {
    /// Bits per second.
    pub rate: f64,
    /// Time-averaged continuous-time squared error.
    pub mse: f64,
    pub n_events: u64,
    pub n_steps: u64,
    pub bits: u64,
    pub rate_se: f64,
    pub mse_se: f64,
}

/// `A_τ x + B_τ w`.
pub fn sample_sde_step(x: f64, dmodel: &DiscretizedModel, noise: f64) -> f64 {
    dmodel.transition[(0, 0)] * x + dmodel.noise_factor[(0, 0)] * noise
}

/// Outcome of one encoder decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbStep {
    /// `+1` or `-1` when the error reached the threshold.
    pub event: Option<i8>,
    /// Decoder estimate of `x(k)` after the packet.
    pub posterior: f64,
    /// `x̂(k+1)`, the posterior propagated one interval.
    pub next_prior: f64,
}

pub fn ab_step(x: f64, prior: f64, threshold: f64, a_tau: f64) -> AbStep {
    let err = x - prior;
    let (event, posterior) = if err >= threshold {
        (Some(1), prior + threshold)
    } else if err <= -threshold {
        (Some(-1), prior - threshold)
    } else {
        (None, prior)
    };
    AbStep {
        event,
        posterior,
        next_prior: a_tau * posterior,
    }
}

const BATCHES: u64 = 50;

pub fn run_ab(cfg: &AbConfig) -> Result<EmpiricalPoint> {
    cfg.validate()?;
    let model = StateSpaceModel::scalar(cfg.drift, cfg.diffusion)?;
    let dmodel = discretize(&model, cfg.tau)?;
    let a_tau = dmodel.transition[(0, 0)];
    let b_tau = dmodel.noise_factor[(0, 0)];
    let q_bar = dmodel.error_weight[(0, 0)];
    let b_bar = dmodel.intersample_mse;

    let n_steps = (cfg.horizon / cfg.tau).round() as u64;
    let batches = BATCHES.min(n_steps);
    let per_batch = n_steps / batches;
    let mut rng = stream_rng(cfg.seed, cfg.stream());

    let (mut x, mut prior) = (0.0_f64, 0.0_f64);
    let mut n_events = 0u64;
    let mut sq_total = 0.0;
    let mut batch_rates = Vec::with_capacity(batches as usize);
    let mut batch_mses = Vec::with_capacity(batches as usize);
    let (mut b_events, mut b_sq, mut b_len) = (0u64, 0.0_f64, 0u64);
    for k in 0..n_steps {
        let step = ab_step(x, prior, cfg.threshold, a_tau);
        let e = x - step.posterior;
        // interval_mse with a 1×1 error covariance e²
        let sq = q_bar * e * e + b_bar;
        if step.event.is_some() {
            n_events += 1;
            b_events += 1;
        }
        sq_total += sq;
        b_sq += sq;
        b_len += 1;
        let batch_idx = k / per_batch;
        if b_len == per_batch && batch_idx < batches {
            let span = b_len as f64 * cfg.tau;
            batch_rates.push(b_events as f64 / span);
            batch_mses.push(b_sq / span);
            b_events = 0;
            b_sq = 0.0;
            b_len = 0;
        }
        prior = step.next_prior;
        let w: f64 = StandardNormal.sample(&mut rng);
        x = a_tau * x + b_tau * w;
    }
    let horizon = n_steps as f64 * cfg.tau;
    Ok(EmpiricalPoint {
        rate: n_events as f64 / horizon,
        mse: sq_total / horizon,
        n_events,
        n_steps,
        bits: n_events,
        rate_se: standard_error(&batch_rates),
        mse_se: standard_error(&batch_mses),
    })
}

/// Standard error of the mean of batch means.
pub fn standard_error(batches: &[f64]) -> f64 {
    let n = batches.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = batches.iter().sum::<f64>() / n as f64;
    let var = batches.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbSweepPoint {
    pub threshold: f64,
    pub tau: f64,
    pub seed: u64,
    pub point: EmpiricalPoint,
}

/// One run per `(d, τ)` cell with horizon `10000·d²`, in parallel. Output is
/// ordered by `(τ, d)`.
pub fn ab_sweep(
    drift: f64,
    diffusion: f64,
    thresholds: &[f64],
    taus: &[f64],
    seed: u64,
) -> Result<Vec<AbSweepPoint>> {
    if thresholds.is_empty() || taus.is_empty() {
        return Err(Error::InvalidArgument("sweep grids must be non-empty".into()));
    }
    let cells: Vec<(f64, f64)> = taus
        .iter()
        .flat_map(|&tau| thresholds.iter().map(move |&d| (tau, d)))
        .collect();
    let mut out = cells
        .par_iter()
        .map(|&(tau, d)| {
            let cfg = AbConfig {
                drift,
                diffusion,
                threshold: d,
                tau,
                horizon: 10_000.0 * d * d,
                seed,
            };
            run_ab(&cfg).map(|point| AbSweepPoint {
                threshold: d,
                tau,
                seed,
                point,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| {
        a.tau
            .total_cmp(&b.tau)
            .then(a.threshold.total_cmp(&b.threshold))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::theta_inv;
    use crate::discretize::stationary_trace;
    use crate::rdsolver::scalar_ct_info;
    use approx::assert_relative_eq;

    fn cfg(d: f64, tau: f64, horizon: f64) -> AbConfig {
        AbConfig {
            drift: -0.1,
            diffusion: 1.0,
            threshold: d,
            tau,
            horizon,
            seed: 11,
        }
    }

    #[test]
    fn noiseless_step() {
        let m = StateSpaceModel::scalar(-0.1, 1.0).unwrap();
        let d = discretize(&m, 1.0).unwrap();
        assert_relative_eq!(sample_sde_step(1.0, &d, 0.0), 0.904837, epsilon = 1e-6);
    }

    #[test]
    fn scalar_interval_cost_matches_interval_mse() {
        let m = StateSpaceModel::scalar(-0.1, 1.0).unwrap();
        let d = discretize(&m, 0.3).unwrap();
        let e = 0.7;
        let direct = d.error_weight[(0, 0)] * e * e + d.intersample_mse;
        let via = crate::discretize::interval_mse(&d, &crate::matkernel::Mat::from_element(1, 1, e * e));
        assert_relative_eq!(direct, via, epsilon = 1e-15);
    }

    #[test]
    fn step_variance() {
        let m = StateSpaceModel::scalar(-0.1, 1.0).unwrap();
        let d = discretize(&m, 0.5).unwrap();
        let mut rng = stream_rng(3, STREAM_PROCESS);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_sde_step(0.0, &d, StandardNormal.sample(&mut rng)))
            .collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let var_se = (xs.iter().map(|x| (x * x - var).powi(2)).sum::<f64>() / n as f64 / n as f64).sqrt();
        assert!((var - d.noise_cov[(0, 0)]).abs() < 3.0 * var_se);
    }

    #[test]
    fn long_run_variance_is_stationary() {
        let m = StateSpaceModel::scalar(-0.1, 1.0).unwrap();
        let d = discretize(&m, 1.0).unwrap();
        let mut rng = stream_rng(5, STREAM_PROCESS);
        let (n, batches) = (400_000usize, 40usize);
        let mut x = 0.0;
        let mut sums = vec![0.0; batches];
        for k in 0..n {
            x = sample_sde_step(x, &d, StandardNormal.sample(&mut rng));
            sums[k / (n / batches)] += x * x / (n / batches) as f64;
        }
        let mean = sums.iter().sum::<f64>() / batches as f64;
        let se = standard_error(&sums);
        assert!((mean - 5.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    /// Hand-stepped ten-step replay of the threshold rule with d = 1.
    #[test]
    fn replay_matches_rule() {
        let a = 0.5;
        let xs = [0.0, 1.2, 0.9, -0.4, -1.6, -0.2, 3.0, 2.9, 0.0, -1.0];
        // (event, posterior) computed by hand
        let want: [(Option<i8>, f64); 10] = [
            (None, 0.0),
            (Some(1), 1.0),
            (None, 0.5),
            (None, 0.25),
            (Some(-1), -0.875),
            (None, -0.4375),
            (Some(1), 0.78125),
            (Some(1), 1.390625),
            (None, 0.6953125),
            (Some(-1), -0.65234375),
        ];
        let mut prior = 0.0;
        for (x, (ev, post)) in xs.iter().zip(want) {
            let s = ab_step(*x, prior, 1.0, a);
            assert_eq!(s.event, ev, "x = {x}, prior = {prior}");
            assert_relative_eq!(s.posterior, post, epsilon = 1e-15);
            prior = s.next_prior;
        }
        // boundary: an error of exactly d triggers
        assert_eq!(ab_step(1.0, 0.0, 1.0, a).event, Some(1));
        assert_eq!(ab_step(-1.0, 0.0, 1.0, a).event, Some(-1));
    }

    #[test]
    fn huge_threshold_is_silent() {
        let p = run_ab(&cfg(1e6, 0.1, 200_000.0)).unwrap();
        assert_eq!(p.n_events, 0);
        let st = 5.0;
        assert!((p.mse - st).abs() < 3.0 * p.mse_se, "mse {} se {}", p.mse, p.mse_se);
        let m = StateSpaceModel::scalar(-0.1, 1.0).unwrap();
        assert_relative_eq!(stationary_trace(&m).unwrap(), st, epsilon = 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = run_ab(&cfg(1.0, 1e-2, 1_000.0)).unwrap();
        let b = run_ab(&cfg(1.0, 1e-2, 1_000.0)).unwrap();
        assert_eq!(a, b);
        let mut other = cfg(1.0, 1e-2, 1_000.0);
        other.seed = 12;
        assert_ne!(run_ab(&other).unwrap(), a);
    }

    #[test]
    fn dominates_ct_bound() {
        let tau = 1e-3;
        let p = run_ab(&cfg(1.0, tau, 10_000.0)).unwrap();
        let bound = theta_inv(tau * scalar_ct_info(-0.1, 1.0, p.mse)).unwrap() / tau;
        assert!(p.rate + 3.0 * p.rate_se >= bound, "rate {} bound {}", p.rate, bound);
    }

    #[test]
    fn threshold_monotone() {
        let lo = run_ab(&cfg(0.75, 1e-2, 10_000.0 * 0.75 * 0.75)).unwrap();
        let hi = run_ab(&cfg(1.5, 1e-2, 10_000.0 * 1.5 * 1.5)).unwrap();
        assert!(lo.rate - 3.0 * lo.rate_se > hi.rate + 3.0 * hi.rate_se);
        assert!(lo.mse + 3.0 * lo.mse_se < hi.mse - 3.0 * hi.mse_se);
    }

    #[test]
    fn config_validation() {
        assert!(run_ab(&cfg(0.0, 0.1, 100.0)).is_err());
        assert!(run_ab(&cfg(1.0, 0.1, 5.0)).is_err());
        assert!(ab_sweep(-0.1, 1.0, &[], &[0.1], 1).is_err());
    }
}
