//! Flat key=value run configuration. Three layers, later wins: built-in
//! defaults, an optional config file, command-line flags. Unknown keys are
//! rejected at every layer so a typo cannot silently fall back to a default.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Every knob of every experiment, flattened. Experiments read the subset
/// they care about; the rest stay at their defaults.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// Scaling exponent: lambda_n = n^-alpha.
    pub alpha: f64,
    /// Weight exponent: w_n = n^-beta.
    pub beta: f64,
    /// Block dimension for the analytic experiments.
    pub d: f64,
    /// Block law: segment | circle | star:k | random:k.
    pub block: String,
    pub n_max: usize,
    pub replicas: u64,
    pub seed: u64,
    /// Trailing step count for urn trajectories.
    pub horizon: usize,
    /// Tracked block for urn trajectories.
    pub urn_block: usize,
    pub probes: usize,
    pub samples: usize,
    /// Radii per scaling fit.
    pub levels: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Test dimension for covering volumes.
    pub s: f64,
    /// Covering stage (1 or 2).
    pub stage: u8,
    /// Exponent slack for coverings and window thresholds.
    pub eps: f64,
    /// Window half-width exponent of the generation census.
    pub window_eps: f64,
    /// Structure growth past the covered block, as a multiple of it.
    pub grow_factor: usize,
    pub gamma: f64,
    pub eta: f64,
    /// Regularity constant of the block property filter.
    pub c: f64,
    pub n0: usize,
    pub depth: usize,
    /// Region block for the grafted-mass identity.
    pub region_block: usize,
    pub iters: usize,
    /// Override tolerance; 0 means each check uses its own default.
    pub tol: f64,
    /// Cells per axis of the dimension surface.
    pub grid: usize,
    /// Leaf-measure leg: census | chi | rates | profile.
    pub mode: String,
    pub out: PathBuf,
}

/// Output directory fallback: $METRIC_GLUE_OUT, else the working directory.
pub fn default_out_dir() -> PathBuf {
    env::var_os("METRIC_GLUE_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: String::new(),
            alpha: 0.6,
            beta: 1.5,
            d: 1.0,
            block: "segment".into(),
            n_max: 2000,
            replicas: 100,
            seed: 1,
            horizon: 10_000,
            urn_block: 10,
            probes: 1000,
            samples: 512,
            levels: 12,
            r_min: 1e-3,
            r_max: 0.1,
            s: 1.5,
            stage: 2,
            eps: 0.02,
            window_eps: 0.35,
            grow_factor: 4,
            gamma: 3.0,
            eta: 0.25,
            c: 4.0,
            n0: 3,
            depth: 2,
            region_block: 2,
            iters: 256,
            tol: 0.0,
            grid: 30,
            mode: "census".into(),
            out: default_out_dir(),
        }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Self {
        ExperimentConfig { experiment: experiment.into(), ..Default::default() }
    }

    /// Applies one key=value override.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "alpha" => self.alpha = parse_f64(key, value)?,
            "beta" => self.beta = parse_f64(key, value)?,
            "d" => self.d = parse_f64(key, value)?,
            "block" => self.block = value.to_string(),
            "n_max" => self.n_max = parse_usize(key, value)?,
            "replicas" => self.replicas = parse_u64(key, value)?,
            "seed" => self.seed = parse_u64(key, value)?,
            "horizon" => self.horizon = parse_usize(key, value)?,
            "urn_block" => self.urn_block = parse_usize(key, value)?,
            "probes" => self.probes = parse_usize(key, value)?,
            "samples" => self.samples = parse_usize(key, value)?,
            "levels" => self.levels = parse_usize(key, value)?,
            "r_min" => self.r_min = parse_f64(key, value)?,
            "r_max" => self.r_max = parse_f64(key, value)?,
            "s" => self.s = parse_f64(key, value)?,
            "stage" => self.stage = parse_u64(key, value)? as u8,
            "eps" => self.eps = parse_f64(key, value)?,
            "window_eps" => self.window_eps = parse_f64(key, value)?,
            "grow_factor" => self.grow_factor = parse_usize(key, value)?,
            "gamma" => self.gamma = parse_f64(key, value)?,
            "eta" => self.eta = parse_f64(key, value)?,
            "c" => self.c = parse_f64(key, value)?,
            "n0" => self.n0 = parse_usize(key, value)?,
            "depth" => self.depth = parse_usize(key, value)?,
            "region_block" => self.region_block = parse_usize(key, value)?,
            "iters" => self.iters = parse_usize(key, value)?,
            "tol" => self.tol = parse_f64(key, value)?,
            "grid" => self.grid = parse_usize(key, value)?,
            "mode" => self.mode = value.to_string(),
            "out" => self.out = PathBuf::from(value),
            _ => return Err(Error::param(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Loads a key=value file: one pair per line, '#' starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::param(format!("{}:{}: expected key=value", path.display(), idx + 1))
            })?;
            self.apply(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Effective tolerance: the override when set, else the check's default.
    pub fn tol_or(&self, default: f64) -> f64 {
        if self.tol > 0.0 { self.tol } else { default }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::param(format!("key '{key}': '{value}' is not a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::param(format!("key '{key}': '{value}' is not a count")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse()
        .map_err(|_| Error::param(format!("key '{key}': '{value}' is not a count")))
}
