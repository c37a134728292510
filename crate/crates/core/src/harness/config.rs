//! Flat key/value files (TOML syntax): a model file with `dim`, `A`, `B`,
//! `Sigma0` as row-major arrays, and an experiment file for sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::discretize::StateSpaceModel;
use crate::error::{Error, Result};
use crate::matkernel::Mat;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    dim: usize,
    #[serde(rename = "A")]
    drift: Vec<f64>,
    #[serde(rename = "B")]
    diffusion: Vec<f64>,
    #[serde(rename = "Sigma0")]
    initial_cov: Vec<f64>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn square(dim: usize, values: &[f64], field: &str) -> Result<Mat> {
    if values.len() != dim * dim {
        return Err(Error::Config(format!(
            "{field}: expected {} entries for dim = {dim}, found {}",
            dim * dim,
            values.len()
        )));
    }
    Ok(Mat::from_row_slice(dim, dim, values))
}

pub fn parse_model(text: &str) -> Result<StateSpaceModel> {
    let file: ModelFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if file.dim == 0 {
        return Err(Error::Config("dim: must be at least 1".into()));
    }
    let a = square(file.dim, &file.drift, "A")?;
    let b = square(file.dim, &file.diffusion, "B")?;
    let s0 = square(file.dim, &file.initial_cov, "Sigma0")?;
    StateSpaceModel::new(a, b, s0).map_err(|e| {
        let field = match &e {
            Error::NotHurwitz { .. } => "A",
            Error::NotPsd { what, .. } if what.starts_with("Sigma0") => "Sigma0",
            Error::NotPsd { .. } => "B",
            Error::NonFinite(what) => what,
            Error::InvalidArgument(m) if m.contains("Sigma0") => "Sigma0",
            _ => "model",
        };
        Error::Config(format!("{field}: {e}"))
    })
}

pub fn load_model(path: &Path) -> Result<StateSpaceModel> {
    parse_model(&read(path)?).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Threshold encoder on a scalar model.
    Ab,
    /// Dithered quantizer with adaptive coding.
    Diq,
    /// Bounds only.
    BoundsOnly,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Ab => "ab",
            Scheme::Diq => "diq",
            Scheme::BoundsOnly => "bounds-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Relative paths resolve against the experiment file's directory.
    pub model: PathBuf,
    pub scheme: Scheme,
    pub tau: Vec<f64>,
    #[serde(default)]
    pub dc: Vec<f64>,
    #[serde(default)]
    pub d: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Codec run length in samples.
    #[serde(default = "default_steps")]
    pub steps: u64,
    pub out: Option<PathBuf>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_steps() -> u64 {
    10_000
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str| Error::Config(format!("{name}: grid must be non-empty"));
        if self.tau.is_empty() {
            return Err(empty("tau"));
        }
        if self.seeds.is_empty() {
            return Err(empty("seeds"));
        }
        match self.scheme {
            Scheme::Ab if self.d.is_empty() => Err(empty("d")),
            Scheme::Diq | Scheme::BoundsOnly if self.dc.is_empty() => Err(empty("dc")),
            _ => Ok(()),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(&read(path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if cfg.model.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.model = dir.join(&cfg.model);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
