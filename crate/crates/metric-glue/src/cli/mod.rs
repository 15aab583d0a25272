//! Command-line surface: experiment dispatch, check rows, results CSV,
//! and exit-code policy (0 pass, 1 failed check, 2 usage, 3 I/O).

pub mod config;
pub mod experiments;
pub mod svg;

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::Parser;

use crate::error::Error;
use crate::Result;
use config::ExperimentConfig;

/// One recorded check or measurement. `pass` is derivable from the row
/// itself: |value - target| <= tolerance for two-sided checks, the bound
/// sense named in `metadata` for one-sided ones, always true for info rows.
#[derive(Clone, Debug)]
pub struct ResultRow {
    pub experiment: String,
    pub replica: Option<u64>,
    pub key: String,
    pub value: f64,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub metadata: String,
}

impl ResultRow {
    pub fn check(experiment: &str, key: &str, value: f64, target: f64, tolerance: f64) -> Self {
        ResultRow {
            experiment: experiment.into(),
            replica: None,
            key: key.into(),
            value,
            target: Some(target),
            tolerance: Some(tolerance),
            pass: value.is_finite() && (value - target).abs() <= tolerance,
            metadata: String::new(),
        }
    }

    pub fn check_le(experiment: &str, key: &str, value: f64, bound: f64) -> Self {
        ResultRow {
            experiment: experiment.into(),
            replica: None,
            key: key.into(),
            value,
            target: Some(bound),
            tolerance: None,
            pass: value.is_finite() && value <= bound,
            metadata: "upper-bound".into(),
        }
    }

    pub fn check_ge(experiment: &str, key: &str, value: f64, bound: f64) -> Self {
        ResultRow {
            experiment: experiment.into(),
            replica: None,
            key: key.into(),
            value,
            target: Some(bound),
            tolerance: None,
            pass: value.is_finite() && value >= bound,
            metadata: "lower-bound".into(),
        }
    }

    pub fn info(experiment: &str, key: &str, value: f64) -> Self {
        ResultRow {
            experiment: experiment.into(),
            replica: None,
            key: key.into(),
            value,
            target: None,
            tolerance: None,
            pass: true,
            metadata: "info".into(),
        }
    }

    pub fn with_meta(mut self, meta: &str) -> Self {
        if self.metadata.is_empty() {
            self.metadata = meta.into();
        } else {
            self.metadata = format!("{}; {meta}", self.metadata);
        }
        self
    }

    pub fn with_replica(mut self, replica: u64) -> Self {
        self.replica = Some(replica);
        self
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("experiment,replica,key,value,target,tolerance,pass,metadata\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.experiment,
            r.replica.map(|v| v.to_string()).unwrap_or_default(),
            r.key,
            r.value,
            fmt_opt(r.target),
            fmt_opt(r.tolerance),
            r.pass,
            r.metadata
        );
    }
    out
}

fn print_row(r: &ResultRow) {
    let status = if r.pass { "ok  " } else { "FAIL" };
    let mut line = format!("[{status}] {:<24} value={}", r.key, r.value);
    if let Some(t) = r.target {
        let _ = write!(line, " target={t}");
    }
    if let Some(t) = r.tolerance {
        let _ = write!(line, " tol={t}");
    }
    if !r.metadata.is_empty() {
        let _ = write!(line, "  ({})", r.metadata);
    }
    println!("{line}");
}

fn run_inner(cfg: &ExperimentConfig) -> Result<bool> {
    fs::create_dir_all(&cfg.out)?;
    let rows = experiments::execute(cfg)?;
    fs::write(cfg.out.join("results.csv"), results_csv(&rows))?;
    let mut all = true;
    for r in &rows {
        print_row(r);
        all &= r.pass;
    }
    println!("{}: {}", cfg.experiment, if all { "pass" } else { "FAIL" });
    Ok(all)
}

fn code_for(err: &Error) -> i32 {
    match err {
        Error::Param(_) | Error::Unsupported(_) => 2,
        Error::Io(_) => 3,
        Error::Numerics(_) => 1,
    }
}

/// Runs one configured experiment and maps the outcome to an exit code.
pub fn run(cfg: &ExperimentConfig) -> i32 {
    match run_inner(cfg) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            code_for(&e)
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "metric-glue",
    version,
    about = "Simulator and numerics for randomly glued scaled blocks",
    after_help = "Run `metric-glue list` to see the experiments."
)]
pub struct Cli {
    /// Experiment name, or `list`.
    pub experiment: String,
    /// key=value defaults file, applied before flag overrides.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    block: Option<String>,
    #[arg(long = "n_max")]
    n_max: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long = "urn_block")]
    urn_block: Option<String>,
    #[arg(long)]
    probes: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    #[arg(long = "r_min")]
    r_min: Option<String>,
    #[arg(long = "r_max")]
    r_max: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    stage: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long = "window_eps")]
    window_eps: Option<String>,
    #[arg(long = "grow_factor")]
    grow_factor: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    n0: Option<String>,
    #[arg(long)]
    depth: Option<String>,
    #[arg(long = "region_block")]
    region_block: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, &String)> {
        let pairs: [(&'static str, &Option<String>); 30] = [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("d", &self.d),
            ("block", &self.block),
            ("n_max", &self.n_max),
            ("replicas", &self.replicas),
            ("seed", &self.seed),
            ("horizon", &self.horizon),
            ("urn_block", &self.urn_block),
            ("probes", &self.probes),
            ("samples", &self.samples),
            ("levels", &self.levels),
            ("r_min", &self.r_min),
            ("r_max", &self.r_max),
            ("s", &self.s),
            ("stage", &self.stage),
            ("eps", &self.eps),
            ("window_eps", &self.window_eps),
            ("grow_factor", &self.grow_factor),
            ("gamma", &self.gamma),
            ("eta", &self.eta),
            ("c", &self.c),
            ("n0", &self.n0),
            ("depth", &self.depth),
            ("region_block", &self.region_block),
            ("iters", &self.iters),
            ("tol", &self.tol),
            ("grid", &self.grid),
            ("mode", &self.mode),
            ("out", &self.out),
        ];
        pairs.iter().filter_map(|&(k, v)| v.as_ref().map(|v| (k, v))).collect()
    }
}

/// Full process entry: parse flags, layer config file and overrides,
/// run, and return the exit code.
pub fn entry() -> i32 {
    let cli = Cli::parse();
    if cli.experiment == "list" {
        for (name, blurb) in experiments::EXPERIMENTS {
            println!("{name:<18} {blurb}");
        }
        return 0;
    }
    let mut cfg = ExperimentConfig::new(&cli.experiment);
    if let Some(path) = &cli.config {
        if let Err(e) = cfg.apply_file(path) {
            eprintln!("error: {e}");
            return code_for(&e);
        }
    }
    for (key, value) in cli.overrides() {
        if let Err(e) = cfg.apply(key, value) {
            eprintln!("error: {e}");
            return code_for(&e);
        }
    }
    run(&cfg)
}
