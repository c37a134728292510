use std::io::Write;

use nalgebra::{DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use super::coding::{
    elias_omega, elias_omega_decode, nonsingular_codeword, nonsingular_rank, restore, truncate,
    uniform_quantize, unwrap, wrap, Packet,
};
use super::filter::KalmanFilter;
use super::pmf::{Symbol, SymbolModel};
use crate::abscheme::{standard_error, EmpiricalPoint};
use crate::discretize::{ct_to_dt_distortion, discretize, DiscretizedModel, StateSpaceModel};
use crate::error::{Error, Result};
use crate::matkernel::{max_abs, symmetrize, Mat};
use crate::rdsolver::{solve_dt_rate, DtRateSolution};
use crate::rng::{stream_rng, UniformBlocks, STREAM_DITHER, STREAM_INITIAL, STREAM_PROCESS};

pub const DEFAULT_CUTOFF: u32 = 15;
pub const DEFAULT_PRECISION_BITS: u32 = 32;

#[derive(Debug, Clone)]
pub struct QuantizerDesign {
    /// Symmetric `C_τ` with `C_τᵀC_τ = (P*⁻¹ − Π*⁻¹)/12`.
    pub sensor: Mat,
    pub solution: DtRateSolution,
}

/// Chooses the measurement matrix whose steady-state Kalman filter with
/// noise covariance `I/12` has posterior covariance `P*`.
pub fn design_quantizer_sensor(dmodel: &DiscretizedModel, d_d: f64, q: &Mat) -> Result<QuantizerDesign> {
    let solution = solve_dt_rate(dmodel, d_d, q)?;
    if !solution.feasible {
        return Err(Error::Infeasible(format!(
            "per-sample budget {d_d} admits no rate-distortion solution"
        )));
    }
    let n = dmodel.dim();
    if solution.trivial {
        return Ok(QuantizerDesign {
            sensor: Mat::zeros(n, n),
            solution,
        });
    }
    let p_inv = spd_inverse(&solution.posterior_cov, "posterior covariance")?;
    let pi_inv = spd_inverse(&solution.prediction_cov, "prediction covariance")?;
    let info = symmetrize(&((&p_inv - &pi_inv) / 12.0));
    let eig = SymmetricEigen::new(info);
    let min_eig = eig.eigenvalues.min();
    let tol = 1e-9 * max_abs(&p_inv).max(1.0);
    if min_eig < -tol {
        return Err(Error::NotPsd {
            what: "P*⁻¹ − Π*⁻¹",
            min_eig,
        });
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let sensor = symmetrize(&(v * Mat::from_diagonal(&roots) * v.transpose()));
    Ok(QuantizerDesign { sensor, solution })
}

fn spd_inverse(m: &Mat, what: &'static str) -> Result<Mat> {
    m.clone()
        .cholesky()
        .map(|c| symmetrize(&c.inverse()))
        .ok_or(Error::Singular(what))
}

#[derive(Debug, Clone)]
pub struct CodecConfig {
    pub dmodel: DiscretizedModel,
    pub sensor: Mat,
    /// Prior covariance of `x(0)`, which both filters start from.
    pub initial_cov: Mat,
    pub cutoffs: Vec<u32>,
    pub precision_bits: u32,
    pub seed: u64,
}

impl CodecConfig {
    pub fn new(dmodel: DiscretizedModel, sensor: Mat, initial_cov: Mat, seed: u64) -> Self {
        let n = dmodel.dim();
        Self {
            dmodel,
            sensor,
            initial_cov,
            cutoffs: vec![DEFAULT_CUTOFF; n],
            precision_bits: DEFAULT_PRECISION_BITS,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.dmodel.dim();
        if self.sensor.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "sensor must be {n}×{n}, got {}×{}",
                self.sensor.nrows(),
                self.sensor.ncols()
            )));
        }
        if self.cutoffs.len() != n {
            return Err(Error::Dimension(format!(
                "{} cutoffs for a {n}-dimensional measurement",
                self.cutoffs.len()
            )));
        }
        Ok(())
    }
}

/// Shared by encoder and decoder.
#[derive(Debug, Clone)]
struct Endpoint {
    filter: KalmanFilter,
    pmf: SymbolModel,
    dither: UniformBlocks,
    cutoffs: Vec<u32>,
    k: u64,
}

impl Endpoint {
    fn new(cfg: &CodecConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            filter: KalmanFilter::new(&cfg.dmodel, &cfg.sensor, &cfg.initial_cov)?,
            pmf: SymbolModel::new(&cfg.cutoffs, cfg.precision_bits)?,
            dither: UniformBlocks::new(cfg.seed, STREAM_DITHER, cfg.cutoffs.len()),
            cutoffs: cfg.cutoffs.clone(),
            k: 0,
        })
    }

    /// `m = q − d`, the measurement innovation the filter consumes.
    fn innovation(q: &[i64], dither: &[f64]) -> DVector<f64> {
        DVector::from_iterator(q.len(), q.iter().zip(dither).map(|(&qi, &di)| qi as f64 - di))
    }
}

/// Everything the encoder produced for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedStep {
    pub k: u64,
    pub packet: Packet,
    pub quantized: Vec<i64>,
    pub symbol: Symbol,
    pub rank: u64,
    /// Bits at the head of the packet that resend the previous sample's
    /// escaped symbols.
    pub escape_bits: usize,
    pub truncated: bool,
    /// What the decoder will report for this sample.
    pub estimate: DVector<f64>,
    /// `m(k) − C_τ(x(k) − x̂(k|k−1))`.
    pub measurement_noise: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct Encoder {
    ep: Endpoint,
    pending: Vec<u64>,
}

impl Encoder {
    pub fn new(cfg: &CodecConfig) -> Result<Self> {
        Ok(Self {
            ep: Endpoint::new(cfg)?,
            pending: Vec::new(),
        })
    }

    pub fn symbol_model(&self) -> &SymbolModel {
        &self.ep.pmf
    }

    pub fn filter(&self) -> &KalmanFilter {
        &self.ep.filter
    }

    pub fn encode_step(&mut self, x: &DVector<f64>) -> Result<EncodedStep> {
        let ep = &mut self.ep;
        let dither = ep.dither.block(ep.k);
        let centered = ep.filter_sensor_error(x)?;
        let shifted: Vec<f64> = centered.iter().zip(&dither).map(|(u, d)| u + d).collect();
        let quantized = uniform_quantize(&shifted)?;
        let (symbol, escaped) = truncate(&wrap(&quantized), &ep.cutoffs);

        let mut packet = Packet::new();
        for &s in &self.pending {
            packet.extend(&elias_omega(s)?);
        }
        let escape_bits = packet.len();
        let rank = ep.pmf.rank(&symbol)?;
        packet.extend(&nonsingular_codeword(rank)?);
        ep.pmf.update(&symbol)?;

        let innovation = Endpoint::innovation(&quantized, &dither);
        let measurement_noise = &innovation - &centered;
        ep.filter.update(&innovation)?;
        let truncated = !escaped.is_empty();
        let estimate = if truncated {
            ep.filter.prior_mean().clone()
        } else {
            ep.filter.post_mean().clone()
        };
        ep.filter.predict();

        let k = ep.k;
        ep.k += 1;
        self.pending = escaped;
        Ok(EncodedStep {
            k,
            packet,
            quantized,
            symbol,
            rank,
            escape_bits,
            truncated,
            estimate,
            measurement_noise,
        })
    }
}

impl Endpoint {
    fn filter_sensor_error(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.cutoffs.len() {
            return Err(Error::Dimension(format!(
                "state of length {} for a {}-dimensional codec",
                x.len(),
                self.cutoffs.len()
            )));
        }
        Ok(self.filter.sensor() * (x - self.filter.prior_mean()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedStep {
    /// `x̂_post(k)`.
    pub estimate: DVector<f64>,
    /// Quantizer outputs that became known with this packet, by sample index.
    pub recovered: Vec<(u64, Vec<i64>)>,
}

#[derive(Debug, Clone)]
struct PendingSymbol {
    k: u64,
    symbol: Symbol,
    dither: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Decoder {
    ep: Endpoint,
    pending: Option<PendingSymbol>,
}

impl Decoder {
    pub fn new(cfg: &CodecConfig) -> Result<Self> {
        Ok(Self {
            ep: Endpoint::new(cfg)?,
            pending: None,
        })
    }

    pub fn symbol_model(&self) -> &SymbolModel {
        &self.ep.pmf
    }

    pub fn filter(&self) -> &KalmanFilter {
        &self.ep.filter
    }

    pub fn decode_step(&mut self, packet: &Packet) -> Result<DecodedStep> {
        let ep = &mut self.ep;
        let bits = packet.bits();
        let mut cursor = 0;
        let mut recovered = Vec::new();
        if let Some(prev) = self.pending.take() {
            let zeros = prev.symbol.iter().filter(|&&v| v == 0).count();
            let mut escaped = Vec::with_capacity(zeros);
            for _ in 0..zeros {
                let (s, next) = elias_omega_decode(bits, cursor)?;
                escaped.push(s);
                cursor = next;
            }
            let q = unwrap(&restore(&prev.symbol, &escaped)?)?;
            ep.filter.update(&Endpoint::innovation(&q, &prev.dither))?;
            ep.filter.predict();
            recovered.push((prev.k, q));
        }

        let rank = nonsingular_rank(&bits[cursor..])?;
        let symbol = ep.pmf.symbol(rank)?;
        ep.pmf.update(&symbol)?;
        let dither = ep.dither.block(ep.k);
        let estimate = if symbol.contains(&0) {
            let est = ep.filter.prior_mean().clone();
            self.pending = Some(PendingSymbol {
                k: ep.k,
                symbol,
                dither,
            });
            est
        } else {
            let wide: Vec<u64> = symbol.iter().map(|&v| v as u64).collect();
            let q = unwrap(&wide)?;
            ep.filter.update(&Endpoint::innovation(&q, &dither))?;
            let est = ep.filter.post_mean().clone();
            ep.filter.predict();
            recovered.push((ep.k, q));
            est
        };
        ep.k += 1;
        Ok(DecodedStep { estimate, recovered })
    }
}

/// Knobs for [`run_codec`].
#[derive(Debug, Clone, PartialEq)]
pub struct CodecOptions {
    pub steps: u64,
    /// One cutoff per state component; `None` uses the default for every one.
    pub cutoffs: Option<Vec<u32>>,
    pub precision_bits: u32,
    pub seed: u64,
    pub keep_trace: bool,
    pub keep_diagnostics: bool,
}

impl Default for CodecOptions {
    fn default() -> Self {
        Self {
            steps: 10_000,
            cutoffs: None,
            precision_bits: DEFAULT_PRECISION_BITS,
            seed: 0,
            keep_trace: false,
            keep_diagnostics: false,
        }
    }
}

/// One line of the trace dump.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: u64,
    pub symbol: Symbol,
    pub rank: u64,
    pub packet: Packet,
    /// Leading packet bits spent on the previous sample's escapes.
    pub escape_bits: usize,
    pub truncated: bool,
}

/// Per-step samples for the quantizer statistics checks.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub states: Vec<DVector<f64>>,
    pub measurement_noise: Vec<DVector<f64>>,
    /// `x(k) − x̂(k|k)` from the encoder filter, before any truncation fallback.
    pub filter_errors: Vec<DVector<f64>>,
}

#[derive(Debug, Clone)]
pub struct CodecRun {
    pub point: EmpiricalPoint,
    pub tau: f64,
    pub dc: f64,
    pub budget: f64,
    pub design: QuantizerDesign,
    pub truncations: u64,
    pub escape_bits: u64,
    /// Samples whose quantizer output the decoder reproduced exactly.
    pub recovered: u64,
    pub trace: Vec<TraceRecord>,
    pub diagnostics: Option<Diagnostics>,
}

const BATCHES: usize = 50;

/// Paired encoder/decoder simulation of the sampled source. Fails if the
/// two ends ever disagree or a quantizer output is lost.
pub fn run_codec(model: &StateSpaceModel, dc: f64, tau: f64, opts: &CodecOptions) -> Result<CodecRun> {
    if opts.steps == 0 {
        return Err(Error::InvalidArgument("at least one step required".into()));
    }
    let dmodel = discretize(model, tau)?;
    let budget = ct_to_dt_distortion(&dmodel, dc);
    if !budget.feasible {
        return Err(Error::Infeasible(format!(
            "distortion {dc} is below the sampling floor {} at tau = {tau}",
            dmodel.intersample_mse / tau
        )));
    }
    let design = design_quantizer_sensor(&dmodel, budget.value, &dmodel.error_weight)?;
    let mut cfg = CodecConfig::new(dmodel.clone(), design.sensor.clone(), model.initial_cov().clone(), opts.seed);
    cfg.precision_bits = opts.precision_bits;
    if let Some(c) = &opts.cutoffs {
        cfg.cutoffs = c.clone();
    }
    let mut enc = Encoder::new(&cfg)?;
    let mut dec = Decoder::new(&cfg)?;

    let n = model.dim();
    let mut rng = stream_rng(opts.seed, STREAM_PROCESS);
    let mut init_rng = stream_rng(opts.seed, STREAM_INITIAL);
    let init_factor = model
        .initial_cov()
        .clone()
        .cholesky()
        .ok_or(Error::Singular("initial covariance"))?
        .l();
    let mut x = &init_factor * DVector::from_fn(n, |_, _| StandardNormal.sample(&mut init_rng));

    let mut sent: Vec<Vec<i64>> = Vec::with_capacity(opts.steps as usize);
    let mut step_bits = Vec::with_capacity(opts.steps as usize);
    let mut step_cost = Vec::with_capacity(opts.steps as usize);
    let (mut events, mut truncations, mut escape_bits, mut recovered) = (0u64, 0u64, 0u64, 0u64);
    let mut trace = Vec::new();
    let mut diag = opts.keep_diagnostics.then(Diagnostics::default);

    for k in 0..opts.steps {
        let e = enc.encode_step(&x)?;
        let d = dec.decode_step(&e.packet)?;
        if d.estimate != e.estimate || dec.symbol_model() != enc.symbol_model() {
            return Err(Error::Codec(format!("encoder and decoder diverged at step {k}")));
        }
        sent.push(e.quantized.clone());
        for (j, q) in &d.recovered {
            if sent.get(*j as usize) != Some(q) {
                return Err(Error::Codec(format!("quantizer output {j} decoded incorrectly")));
            }
            recovered += 1;
        }
        let err = &x - &d.estimate;
        step_cost.push((err.transpose() * &dmodel.error_weight * &err)[(0, 0)] + dmodel.intersample_mse);
        step_bits.push(e.packet.len() as f64);
        events += (!e.packet.is_empty()) as u64;
        truncations += e.truncated as u64;
        escape_bits += e.escape_bits as u64;
        if let Some(diag) = diag.as_mut() {
            diag.states.push(x.clone());
            diag.measurement_noise.push(e.measurement_noise.clone());
            diag.filter_errors.push(&x - enc.filter().post_mean());
        }
        if opts.keep_trace {
            trace.push(TraceRecord {
                k,
                symbol: e.symbol.clone(),
                rank: e.rank,
                packet: e.packet.clone(),
                escape_bits: e.escape_bits,
                truncated: e.truncated,
            });
        }
        let w = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        x = &dmodel.transition * x + &dmodel.noise_factor * w;
    }

    let horizon = opts.steps as f64 * tau;
    let bits: f64 = step_bits.iter().sum();
    let cost: f64 = step_cost.iter().sum();
    let batch = (opts.steps as usize / BATCHES).max(1);
    let batch_rate: Vec<f64> = step_bits.chunks_exact(batch).map(|c| c.iter().sum::<f64>() / (batch as f64 * tau)).collect();
    let batch_mse: Vec<f64> = step_cost.chunks_exact(batch).map(|c| c.iter().sum::<f64>() / (batch as f64 * tau)).collect();
    Ok(CodecRun {
        point: EmpiricalPoint {
            rate: bits / horizon,
            mse: cost / horizon,
            n_events: events,
            n_steps: opts.steps,
            bits: bits as u64,
            rate_se: standard_error(&batch_rate),
            mse_se: standard_error(&batch_mse),
        },
        tau,
        dc,
        budget: budget.value,
        design,
        truncations,
        escape_bits,
        recovered,
        trace,
        diagnostics: diag,
    })
}

/// Newline-delimited records `k symbol rank bits truncated`, symbol
/// components joined by commas, `-` for an empty packet.
pub fn write_trace<W: Write>(out: &mut W, records: &[TraceRecord]) -> Result<()> {
    writeln!(out, "# k symbol rank bits truncated")?;
    for r in records {
        let sym: Vec<String> = r.symbol.iter().map(u32::to_string).collect();
        writeln!(out, "{} {} {} {} {}", r.k, sym.join(","), r.rank, r.packet, r.truncated as u8)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{discretize, StateSpaceModel};
    use approx::assert_relative_eq;

    fn phugoid() -> StateSpaceModel {
        StateSpaceModel::new(
            Mat::from_row_slice(2, 2, &[-0.00717744, -9.81, 0.000785932, 0.0]),
            Mat::from_row_slice(2, 2, &[0.3, 0.0, 0.0, 0.003]),
            Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-4]),
        )
        .unwrap()
    }

    #[test]
    fn scalar_sensor_matches_riccati_fixed_point() {
        let m = StateSpaceModel::scalar(-0.1, 1.0).unwrap();
        let d = discretize(&m, 1.0).unwrap();
        let budget = ct_to_dt_distortion(&d, 1.0).value;
        let design = design_quantizer_sensor(&d, budget, &d.error_weight).unwrap();
        // active budget: P = D_d / Q̄, Π = A_τ² P + B_τ²
        let (a, w, q) = (d.transition[(0, 0)], d.noise_cov[(0, 0)], d.error_weight[(0, 0)]);
        let p = budget / q;
        let pi = a * a * p + w;
        assert_relative_eq!(design.solution.posterior_cov[(0, 0)], p, max_relative = 1e-6);
        let c2 = (1.0 / p - 1.0 / pi) / 12.0;
        assert_relative_eq!(design.sensor[(0, 0)].powi(2), c2, max_relative = 1e-5);
        let s = &design.sensor;
        let want = (spd_inverse(&design.solution.posterior_cov, "P").unwrap()
            - spd_inverse(&design.solution.prediction_cov, "Π").unwrap())
            / 12.0;
        assert!(max_abs(&(s.transpose() * s - want)) < 1e-8);
    }

    #[test]
    fn zero_rate_sensor_is_zero() {
        let m = StateSpaceModel::scalar(-0.1, 1.0).unwrap();
        let d = discretize(&m, 1.0).unwrap();
        let budget = ct_to_dt_distortion(&d, 5.0).value;
        let design = design_quantizer_sensor(&d, budget, &d.error_weight).unwrap();
        assert_eq!(max_abs(&design.sensor), 0.0);
    }

    #[test]
    fn filter_converges_to_design_covariance() {
        let m = phugoid();
        for &(tau, dc) in &[(1.0, 40.0), (0.5, 10.0), (2.0, 100.0)] {
            let d = discretize(&m, tau).unwrap();
            let budget = ct_to_dt_distortion(&d, dc);
            assert!(budget.feasible);
            let design = design_quantizer_sensor(&d, budget.value, &d.error_weight).unwrap();
            let mut f = KalmanFilter::new(&d, &design.sensor, m.initial_cov()).unwrap();
            let zero = DVector::zeros(2);
            for _ in 0..10_000 {
                f.update(&zero).unwrap();
                f.predict();
            }
            let p = &design.solution.posterior_cov;
            assert!(max_abs(&(f.post_cov() - p)) < 1e-6 * max_abs(p).max(1.0), "tau {tau}");
            assert!(max_abs(&(f.prior_cov() - &design.solution.prediction_cov)) < 1e-6 * max_abs(p).max(1.0));
        }
    }

    fn unit_codec(cutoff: u32) -> CodecConfig {
        let m = StateSpaceModel::scalar(-0.1, 1.0).unwrap();
        let d = discretize(&m, 1.0).unwrap();
        let mut cfg = CodecConfig::new(d, Mat::identity(1, 1), Mat::identity(1, 1), 9);
        cfg.cutoffs = vec![cutoff];
        cfg
    }

    /// Truncation at step 1: the decoder falls back to its prediction, then
    /// recovers the escaped symbol from the head of the next packet.
    #[test]
    fn truncation_replay() {
        let cfg = unit_codec(2);
        let mut enc = Encoder::new(&cfg).unwrap();
        let mut dec = Decoder::new(&cfg).unwrap();
        let a = cfg.dmodel.transition[(0, 0)];

        // x = 0 with a zero prior: q = round(dither) = 0, symbol 1 of {0, 1, 2}
        let e0 = enc.encode_step(&DVector::from_element(1, 0.0)).unwrap();
        assert_eq!((e0.quantized[0], e0.symbol[0], e0.rank), (0, 1, 2));
        assert_eq!(e0.packet.to_string(), "0");
        let d0 = dec.decode_step(&e0.packet).unwrap();
        assert_eq!(d0.estimate, e0.estimate);
        assert_eq!(d0.recovered, vec![(0, vec![0])]);

        let e1 = enc.encode_step(&DVector::from_element(1, 5.0)).unwrap();
        assert!(e1.truncated);
        assert_eq!(e1.symbol, vec![0]);
        assert_eq!(e1.escape_bits, 0);
        let d1 = dec.decode_step(&e1.packet).unwrap();
        assert!(d1.recovered.is_empty());
        assert_eq!(d1.estimate[0], a * d0.estimate[0]);
        assert_eq!(d1.estimate, e1.estimate);

        let e2 = enc.encode_step(&DVector::from_element(1, 4.0)).unwrap();
        let s1 = wrap(&e1.quantized)[0];
        let omega = elias_omega(s1).unwrap();
        assert_eq!(e2.escape_bits, omega.len());
        assert_eq!(&e2.packet.bits()[..omega.len()], omega.bits());
        let d2 = dec.decode_step(&e2.packet).unwrap();
        assert_eq!(d2.recovered[0], (1, e1.quantized.clone()));
        assert_eq!(d2.estimate, e2.estimate);
        assert_eq!(dec.filter(), enc.filter());
        assert_eq!(dec.symbol_model(), enc.symbol_model());
    }

    #[test]
    fn malformed_escape_is_rejected() {
        let cfg = unit_codec(2);
        let mut enc = Encoder::new(&cfg).unwrap();
        let mut dec = Decoder::new(&cfg).unwrap();
        let e = enc.encode_step(&DVector::from_element(1, 50.0)).unwrap();
        assert!(e.truncated);
        dec.decode_step(&e.packet).unwrap();
        assert!(matches!(dec.decode_step(&"1".parse().unwrap()), Err(Error::Codec(_))));
    }

    #[test]
    fn scalar_run_is_deterministic_and_lossless() {
        let m = StateSpaceModel::scalar(-0.1, 1.0).unwrap();
        let opts = CodecOptions {
            steps: 2_000,
            seed: 4,
            keep_trace: true,
            ..CodecOptions::default()
        };
        let a = run_codec(&m, 1.0, 1.0, &opts).unwrap();
        let b = run_codec(&m, 1.0, 1.0, &opts).unwrap();
        assert_eq!(a.point, b.point);
        assert_eq!(a.trace, b.trace);
        assert!(a.recovered >= opts.steps - 1);
        for r in &a.trace {
            assert_eq!((r.packet.len() - r.escape_bits) as u32, 63 - r.rank.leading_zeros());
        }
        let mut buf = Vec::new();
        write_trace(&mut buf, &a.trace[..2]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# k symbol rank bits truncated\n0 "));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn rejects_infeasible_budget() {
        let m = StateSpaceModel::scalar(-0.1, 1.0).unwrap();
        assert!(matches!(
            run_codec(&m, 0.1, 1.0, &CodecOptions::default()),
            Err(Error::Infeasible(_))
        ));
        assert!(StateSpaceModel::scalar(-0.1, 0.0).is_err());
    }
}
