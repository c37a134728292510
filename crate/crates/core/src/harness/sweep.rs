use rayon::prelude::*;

use super::config::{ExperimentConfig, Scheme};
use super::output::{sort_rows, CsvRow};
use crate::abscheme::{ab_sweep, EmpiricalPoint};
use crate::bounds::BoundEvaluator;
use crate::diqcodec::{run_codec, CodecOptions};
use crate::discretize::{critical_distortion, discretize, StateSpaceModel};
use crate::error::{Error, Result};

/// Fills the bound columns for an empirical point, evaluated at the
/// distortion the scheme actually achieved.
fn attach_bounds(row: &mut CsvRow, model: &StateSpaceModel, point: &EmpiricalPoint) -> Result<()> {
    row.rate_emp = Some(point.rate);
    row.mse_emp = Some(point.mse);
    row.rate_se = Some(point.rate_se);
    let rep = BoundEvaluator::new(model, point.mse)?.report(row.tau)?;
    row.rate_lb_ct = Some(rep.rate_lb_ct);
    row.rate_lb_dt = rep.rate_lb_dt;
    row.critical_dc = Some(rep.critical_dc);
    row.flags = rep.flags.labels();
    Ok(())
}

fn bounds_rows(model: &StateSpaceModel, cfg: &ExperimentConfig) -> Result<Vec<CsvRow>> {
    let per_dc = cfg
        .dc
        .par_iter()
        .map(|&dc| {
            let eval = BoundEvaluator::new(model, dc)?;
            cfg.tau
                .iter()
                .map(|&tau| {
                    let rep = eval.report(tau)?;
                    let mut row = CsvRow::new(Scheme::BoundsOnly.label(), tau);
                    row.dc = Some(dc);
                    row.rate_lb_ct = Some(rep.rate_lb_ct);
                    row.rate_lb_dt = rep.rate_lb_dt;
                    row.critical_dc = Some(rep.critical_dc);
                    row.flags = rep.flags.labels();
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_dc.into_iter().flatten().collect())
}

fn ab_rows(model: &StateSpaceModel, cfg: &ExperimentConfig) -> Result<Vec<CsvRow>> {
    if model.dim() != 1 {
        return Err(Error::Config(format!(
            "model: the threshold scheme needs a scalar model, got dimension {}",
            model.dim()
        )));
    }
    let (a, b) = (model.drift()[(0, 0)], model.diffusion()[(0, 0)]);
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let points = ab_sweep(a, b, &cfg.d, &cfg.tau, seed)?;
        let mut part = points
            .par_iter()
            .map(|p| {
                let mut row = CsvRow::new(Scheme::Ab.label(), p.tau);
                row.d = Some(p.threshold);
                row.seed = Some(seed);
                attach_bounds(&mut row, model, &p.point)?;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        rows.append(&mut part);
    }
    Ok(rows)
}

fn diq_rows(model: &StateSpaceModel, cfg: &ExperimentConfig) -> Result<Vec<CsvRow>> {
    let cells: Vec<(f64, f64, u64)> = cfg
        .tau
        .iter()
        .flat_map(|&tau| {
            cfg.dc
                .iter()
                .flat_map(move |&dc| cfg.seeds.iter().map(move |&seed| (tau, dc, seed)))
        })
        .collect();
    cells
        .par_iter()
        .map(|&(tau, dc, seed)| {
            let mut row = CsvRow::new(Scheme::Diq.label(), tau);
            row.dc = Some(dc);
            row.seed = Some(seed);
            let opts = CodecOptions {
                steps: cfg.steps,
                seed,
                ..CodecOptions::default()
            };
            match run_codec(model, dc, tau, &opts) {
                Ok(run) => attach_bounds(&mut row, model, &run.point)?,
                Err(Error::Infeasible(_)) => {
                    // recorded, not dropped
                    let rep = BoundEvaluator::new(model, dc)?.ct_report(tau)?;
                    row.rate_lb_ct = Some(rep.rate_lb_ct);
                    row.critical_dc = Some(critical_distortion(&discretize(model, tau)?));
                    row.flags = rep.flags.labels();
                }
                Err(e) => return Err(e),
            }
            Ok(row)
        })
        .collect()
}

/// Runs every cell of the experiment and returns rows in output order.
pub fn run_sweep(model: &StateSpaceModel, cfg: &ExperimentConfig) -> Result<Vec<CsvRow>> {
    cfg.validate()?;
    let mut rows = match cfg.scheme {
        Scheme::BoundsOnly => bounds_rows(model, cfg)?,
        Scheme::Ab => ab_rows(model, cfg)?,
        Scheme::Diq => diq_rows(model, cfg)?,
    };
    sort_rows(&mut rows);
    Ok(rows)
}
