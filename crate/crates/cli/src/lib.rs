//! Command-line front end for `jumpcurv`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 the bounds do not
//! apply to the model (nonpositive curvature, unbounded second moment,
//! non-Lipschitz observable), 3 a Monte Carlo check exceeded a bound.

pub mod config;
pub mod pipeline;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

pub use config::ExperimentConfig;
pub use pipeline::{
    run_bound, run_curvature, run_simulate, run_transport, run_verify, BoundOutput, CurvatureOutput,
    Report, SimulateOutput, TransportOutput,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INAPPLICABLE: i32 = 2;
pub const EXIT_REFUTED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("bound inapplicable: {0}")]
    Inapplicable(String),
    #[error("verification refuted at y = {0:?}")]
    Refuted(Vec<f64>),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] jumpcurv::Error),
}

macro_rules! core_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}

core_error!(
    jumpcurv::metric::MetricError,
    jumpcurv::process::ProcessError,
    jumpcurv::transport::TransportError,
    jumpcurv::curvature::CurvatureError,
    jumpcurv::bounds::BoundError,
    jumpcurv::simulate::SimulationError
);

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Core(_) => EXIT_USAGE,
            CliError::Inapplicable(_) => EXIT_INAPPLICABLE,
            CliError::Refuted(_) => EXIT_REFUTED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "jumpcurv", version, about = "Wasserstein curvature and deviation bounds for jump processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (JSON, "schema": 1).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write outputs into this directory instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override the configured replica count.
    #[arg(long, global = true)]
    pub replicas: Option<u64>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Curvature certificate with jump constants.
    Curvature,
    /// Deviation bound curve.
    Bound,
    /// Monte Carlo tail (and optional Laplace transform) estimates.
    Simulate,
    /// Bound vs. Monte Carlo with a per-y verdict.
    Verify,
    /// Wasserstein distance, optimal plan and dual certificate.
    Transport,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Curvature => "curvature",
            Command::Bound => "bound",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Transport => "transport",
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("outputs serialize");
    s.push('\n');
    s
}

fn curvature_csv(out: &CurvatureOutput) -> String {
    let c = &out.certificate;
    if c.t_grid.is_empty() {
        let mut s = String::from("x,value\n");
        for (x, v) in c.trace.iter().enumerate() {
            s.push_str(&format!("{x},{v}\n"));
        }
        s
    } else {
        let mut s = String::from("t,value\n");
        for (t, v) in c.t_grid.iter().zip(&c.trace) {
            s.push_str(&format!("{t},{v}\n"));
        }
        s
    }
}

fn simulate_csv(out: &SimulateOutput) -> String {
    let t = &out.tail;
    let mut s = String::from("y,count,estimate,upper,raw_count\n");
    for i in 0..t.y.len() {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            t.y[i], t.counts[i], t.estimate[i], t.upper[i], t.raw_counts[i]
        ));
    }
    s
}

fn verify_csv(r: &Report) -> String {
    let mut s = String::from("y,bound,upper,estimate,pass\n");
    for v in &r.verdicts {
        s.push_str(&format!("{},{},{},{},{}\n", v.y, v.bound, v.upper, v.estimate, v.pass));
    }
    s
}

fn transport_csv(t: &TransportOutput) -> String {
    let mut s = String::from("from,to,mass\n");
    for (i, row) in t.plan.flow.iter().enumerate() {
        for (j, &m) in row.iter().enumerate() {
            if m > 0.0 {
                s.push_str(&format!("{},{},{}\n", t.plan.rows[i], t.plan.cols[j], m));
            }
        }
    }
    s
}

/// Rendered primary output plus extra files (name, contents) for `--out`.
struct Rendered {
    body: String,
    extra: Vec<(String, String)>,
    exit: i32,
    message: Option<String>,
}

fn render(cmd: Command, cfg: &ExperimentConfig, format: Format) -> Result<Rendered, CliError> {
    let pick = |json: String, csv: String| match format {
        Format::Json => json,
        Format::Csv => csv,
    };
    Ok(match cmd {
        Command::Curvature => {
            let out = run_curvature(cfg)?;
            let (exit, message) = match &out.diagnostic {
                Some(d) => (EXIT_INAPPLICABLE, Some(format!("bound inapplicable: {d}"))),
                None => (EXIT_OK, None),
            };
            Rendered {
                body: pick(to_json(&out), curvature_csv(&out)),
                extra: Vec::new(),
                exit,
                message,
            }
        }
        Command::Bound => {
            let out = run_bound(cfg)?;
            Rendered {
                body: pick(to_json(&out), out.curve.to_csv()),
                extra: Vec::new(),
                exit: EXIT_OK,
                message: None,
            }
        }
        Command::Simulate => {
            let out = run_simulate(cfg)?;
            Rendered {
                body: pick(to_json(&out), simulate_csv(&out)),
                extra: vec![("path.csv".into(), out.first_path.to_csv())],
                exit: EXIT_OK,
                message: None,
            }
        }
        Command::Verify => {
            let report = run_verify(cfg)?;
            let refuted = report.refuted_at();
            let (exit, message) = if refuted.is_empty() {
                (EXIT_OK, None)
            } else {
                (EXIT_REFUTED, Some(CliError::Refuted(refuted).to_string()))
            };
            Rendered {
                body: pick(to_json(&report), verify_csv(&report)),
                extra: Vec::new(),
                exit,
                message,
            }
        }
        Command::Transport => {
            let out = run_transport(cfg)?;
            Rendered {
                body: pick(to_json(&out), transport_csv(&out)),
                extra: Vec::new(),
                exit: EXIT_OK,
                message: None,
            }
        }
    })
}

fn write_outputs(dir: &Path, cmd: Command, format: Format, r: &Rendered) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let ext = match format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    fs::write(dir.join(format!("{}.{ext}", cmd.name())), &r.body)?;
    for (name, contents) in &r.extra {
        fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

/// Load a config and apply command-line overrides.
pub fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config PATH is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(r) = cli.replicas {
        cfg.replicas = r;
    }
    Ok(cfg)
}

/// Run the CLI with explicit arguments and streams; returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = load_config(&cli).and_then(|cfg| {
        let rendered = render(cli.command, &cfg, cli.format)?;
        let out_dir = cli.out.clone().or_else(|| cfg.out.as_ref().map(PathBuf::from));
        match out_dir {
            Some(dir) => write_outputs(&dir, cli.command, cli.format, &rendered)?,
            None => stdout.write_all(rendered.body.as_bytes())?,
        }
        Ok(rendered)
    });
    match result {
        Ok(r) => {
            if let Some(m) = r.message {
                let _ = writeln!(stderr, "{m}");
            }
            r.exit
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
