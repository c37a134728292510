//! Command-line front end and sweep orchestration.

mod config;
mod output;
mod sweep;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;

pub use config::{load_model, parse_model, ExperimentConfig, Scheme};
pub use output::{emit_csv, sort_rows, CsvRow, CSV_HEADER};
pub use sweep::run_sweep;

use crate::abscheme::{run_ab, AbConfig};
use crate::bounds::{vacuity_profile, BoundEvaluator};
use crate::ctsensor::{design_ti_sensor, periodic_policy_check, run_riccati};
use crate::diqcodec::{run_codec, write_trace, CodecOptions};
use crate::discretize::{ct_to_dt_distortion, discretize, StateSpaceModel};
use crate::error::{Error, Result};
use crate::matkernel::{max_abs, Mat};
use crate::rdsolver::solve_dt_rate;
use crate::rng::stream_rng;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "eventrd", version, about = "Bitrate bounds and simulations for event-based tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Continuous-time bound θ⁻¹(τ·I^c(Dc))/τ in bits per second.
    BoundCt(PointArgs),
    /// Sampled bound θ⁻¹(R)/τ in bits per second.
    BoundDt(PointArgs),
    /// Information rate I^c(Dc) in bits per second.
    Ic(IcArgs),
    /// Per-sample rate R(D_d, Q̄, τ) in bits.
    Rdt(PointArgs),
    /// Simulate the threshold encoder on a scalar model.
    SimAb(AbArgs),
    /// Simulate the dithered quantizer and adaptive coder.
    SimDiq(DiqArgs),
    /// Check the minimum-information sensor and, with --tau, the periodic policy.
    VerifySensor(SensorArgs),
    /// Small-τ profile of the sampled bound for a scalar model.
    Vacuity(VacuityArgs),
    /// Run a grid of cells and write CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct PointArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    dc: f64,
}

#[derive(Debug, Args)]
struct IcArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dc: f64,
}

#[derive(Debug, Args)]
struct AbArgs {
    #[arg(long)]
    model: PathBuf,
    /// Threshold.
    #[arg(long)]
    d: f64,
    #[arg(long)]
    tau: f64,
    /// Seconds; defaults to 10000·d².
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiqArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    dc: f64,
    /// Seconds; rounded to a whole number of samples. Defaults to 10000 samples.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-step trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SensorArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dc: f64,
    /// Integration horizon in seconds.
    #[arg(long, default_value_t = 200.0)]
    horizon: f64,
    /// Seeds the random initial covariance.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also check the periodic policy at this sampling interval.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
}

#[derive(Debug, Args)]
struct VacuityArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dc: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6])]
    tau: Vec<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Experiment file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_enum)]
    scheme: Option<Scheme>,
    #[arg(long, value_delimiter = ',')]
    tau: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    dc: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    d: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Codec run length in samples.
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Dimension(_) => EXIT_CONFIG,
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        _ => EXIT_SOLVER,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write_csv_file(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    emit_csv(BufWriter::new(file), rows)
}

fn run<W: Write>(cmd: Command, out: &mut W) -> Result<()> {
    match cmd {
        Command::BoundCt(a) => {
            let model = load_model(&a.model)?;
            let rep = BoundEvaluator::new(&model, a.dc)?.ct_report(a.tau)?;
            writeln!(out, "{}", rep.rate_lb_ct)?;
        }
        Command::BoundDt(a) => {
            let model = load_model(&a.model)?;
            let rep = BoundEvaluator::new(&model, a.dc)?.report(a.tau)?;
            match rep.rate_lb_dt {
                Some(v) => writeln!(out, "{v}")?,
                None => {
                    return Err(Error::Infeasible(format!(
                        "Dc = {} is at or below the critical distortion {} for tau = {}",
                        a.dc, rep.critical_dc, a.tau
                    )))
                }
            }
        }
        Command::Ic(a) => {
            let model = load_model(&a.model)?;
            writeln!(out, "{}", BoundEvaluator::new(&model, a.dc)?.info_ct())?;
        }
        Command::Rdt(a) => {
            let model = load_model(&a.model)?;
            let dmodel = discretize(&model, a.tau)?;
            let budget = ct_to_dt_distortion(&dmodel, a.dc);
            if !budget.feasible {
                return Err(Error::Infeasible(format!(
                    "per-sample budget {} is not positive",
                    budget.value
                )));
            }
            let sol = solve_dt_rate(&dmodel, budget.value, &dmodel.error_weight)?;
            writeln!(out, "{}", sol.value)?;
        }
        Command::SimAb(a) => sim_ab(a, out)?,
        Command::SimDiq(a) => sim_diq(a, out)?,
        Command::VerifySensor(a) => verify_sensor(a, out)?,
        Command::Vacuity(a) => {
            let model = load_model(&a.model)?;
            writeln!(out, "tau,rate_per_time,info_ct,dt_bound,infeasible")?;
            for r in vacuity_profile(&model, a.dc, &a.tau)? {
                let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.tau,
                    f(r.rate_per_time),
                    r.info_ct,
                    f(r.dt_bound),
                    r.infeasible
                )?;
            }
        }
        Command::Sweep(a) => sweep(a, out)?,
    }
    Ok(())
}

fn sim_ab<W: Write>(a: AbArgs, out: &mut W) -> Result<()> {
    let model = load_model(&a.model)?;
    if model.dim() != 1 {
        return Err(Error::Config("model: the threshold scheme needs a scalar model".into()));
    }
    let cfg = AbConfig {
        drift: model.drift()[(0, 0)],
        diffusion: model.diffusion()[(0, 0)],
        threshold: a.d,
        tau: a.tau,
        horizon: a.horizon.unwrap_or(10_000.0 * a.d * a.d),
        seed: a.seed,
    };
    let p = run_ab(&cfg)?;
    let lb = BoundEvaluator::new(&model, p.mse)?.ct_bound(a.tau)?;
    writeln!(out, "rate {}\nrate_se {}\nmse {}\nmse_se {}", p.rate, p.rate_se, p.mse, p.mse_se)?;
    writeln!(out, "events {}\nsteps {}\nrate_lb_ct {lb}", p.n_events, p.n_steps)?;
    if let Some(path) = a.out {
        let mut row = CsvRow::new(Scheme::Ab.label(), a.tau);
        row.d = Some(a.d);
        row.seed = Some(a.seed);
        row.rate_emp = Some(p.rate);
        row.mse_emp = Some(p.mse);
        let rep = BoundEvaluator::new(&model, p.mse)?.report(a.tau)?;
        row.rate_lb_ct = Some(rep.rate_lb_ct);
        row.rate_lb_dt = rep.rate_lb_dt;
        row.critical_dc = Some(rep.critical_dc);
        row.flags = rep.flags.labels();
        write_csv_file(&path, &[row])?;
    }
    Ok(())
}

fn sim_diq<W: Write>(a: DiqArgs, out: &mut W) -> Result<()> {
    let model = load_model(&a.model)?;
    if !(a.tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {}", a.tau)));
    }
    let steps = match a.horizon {
        Some(h) if h > 0.0 => (h / a.tau).round().max(1.0) as u64,
        Some(h) => return Err(Error::InvalidArgument(format!("horizon must be positive, got {h}"))),
        None => 10_000,
    };
    let opts = CodecOptions {
        steps,
        seed: a.seed,
        keep_trace: a.trace.is_some(),
        ..CodecOptions::default()
    };
    let run = run_codec(&model, a.dc, a.tau, &opts)?;
    let rep = BoundEvaluator::new(&model, run.point.mse)?.report(a.tau)?;
    let p = &run.point;
    writeln!(out, "rate {}\nrate_se {}\nmse {}\nmse_se {}", p.rate, p.rate_se, p.mse, p.mse_se)?;
    writeln!(out, "bits {}\nsteps {}\ntruncations {}", p.bits, p.n_steps, run.truncations)?;
    writeln!(out, "rate_lb_ct {}", rep.rate_lb_ct)?;
    if let Some(v) = rep.rate_lb_dt {
        writeln!(out, "rate_lb_dt {v}")?;
    }
    if let Some(path) = &a.trace {
        let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        write_trace(&mut w, &run.trace)?;
        w.flush()?;
    }
    if let Some(path) = a.out {
        let mut row = CsvRow::new(Scheme::Diq.label(), a.tau);
        row.dc = Some(a.dc);
        row.seed = Some(a.seed);
        row.rate_emp = Some(p.rate);
        row.mse_emp = Some(p.mse);
        row.rate_lb_ct = Some(rep.rate_lb_ct);
        row.rate_lb_dt = rep.rate_lb_dt;
        row.critical_dc = Some(rep.critical_dc);
        row.flags = rep.flags.labels();
        write_csv_file(&path, &[row])?;
    }
    Ok(())
}

/// Random symmetric positive definite matrix with eigenvalues in
/// `[0.1, 10]·scale`.
fn random_spd(n: usize, scale: f64, seed: u64) -> Mat {
    let mut rng = stream_rng(seed, crate::rng::STREAM_INITIAL);
    let g = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let (q, _) = g.qr().unpack();
    let d = Mat::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| scale * 10f64.powf(rng.random_range(-1.0..1.0))));
    crate::matkernel::symmetrize(&(&q * d * q.transpose()))
}

fn verify_sensor<W: Write>(a: SensorArgs, out: &mut W) -> Result<()> {
    let model = load_model(&a.model)?;
    let design = design_ti_sensor(&model, a.dc)?;
    let x0 = random_spd(model.dim(), a.dc / model.dim() as f64, a.seed);
    let traj = run_riccati(&model, &design, &x0, a.horizon)?;
    let info = BoundEvaluator::new(&model, a.dc)?.info_ct();
    writeln!(out, "final_error {:e}", max_abs(&(&traj.final_cov - &design.target_cov)))?;
    writeln!(out, "mi_rate {}\ninfo_ct {info}", traj.mi_rate)?;
    writeln!(out, "mse_rate {}\ndc {}", traj.mse_rate, a.dc)?;
    if let Some(tau) = a.tau {
        let dmodel = discretize(&model, tau)?;
        let rep = periodic_policy_check(&model, &dmodel, a.dc, a.eps, a.delta, 3)?;
        writeln!(out, "period,mse,mi_rate,rate_target")?;
        for (i, p) in rep.periods.iter().enumerate() {
            writeln!(out, "{i},{},{},{}", p.mse, p.mi_rate, rep.rate_target)?;
        }
    }
    Ok(())
}

fn sweep<W: Write>(a: SweepArgs, out: &mut W) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig {
            model: a
                .model
                .clone()
                .ok_or_else(|| Error::Config("sweep needs --config or --model".into()))?,
            scheme: a
                .scheme
                .ok_or_else(|| Error::Config("sweep needs --config or --scheme".into()))?,
            tau: Vec::new(),
            dc: Vec::new(),
            d: Vec::new(),
            seeds: vec![0],
            steps: 10_000,
            out: None,
        },
    };
    if a.config.is_some() {
        if let Some(m) = a.model {
            cfg.model = m;
        }
        if let Some(s) = a.scheme {
            cfg.scheme = s;
        }
    }
    if !a.tau.is_empty() {
        cfg.tau = a.tau;
    }
    if !a.dc.is_empty() {
        cfg.dc = a.dc;
    }
    if !a.d.is_empty() {
        cfg.d = a.d;
    }
    if !a.seed.is_empty() {
        cfg.seeds = a.seed;
    }
    if let Some(s) = a.steps {
        cfg.steps = s;
    }
    if a.out.is_some() {
        cfg.out = a.out;
    }
    cfg.validate()?;
    let model = load_model(&cfg.model)?;
    let rows = run_sweep(&model, &cfg)?;
    match &cfg.out {
        Some(path) => {
            write_csv_file(path, &rows)?;
            writeln!(out, "wrote {} rows to {}", rows.len(), path.display())?;
        }
        None => emit_csv(&mut *out, &rows)?,
    }
    Ok(())
}

/// Convenience for callers that only need the two bounds at one point.
pub fn bounds_at(model: &StateSpaceModel, dc: f64, tau: f64) -> Result<(f64, Option<f64>)> {
    let rep = BoundEvaluator::new(model, dc)?.report(tau)?;
    Ok((rep.rate_lb_ct, rep.rate_lb_dt))
}

