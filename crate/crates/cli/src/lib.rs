//! `soliton-forge`: verification runs for radial gradient Schouten solitons.
//!
//! Every run ends with a verdict line and one of these exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | all checks passed |
//! | 1 | a check failed |
//! | 2 | command line or config could not be parsed |
//! | 3 | domain, parameter or constraint error |
//! | 4 | positivity breakdown during integration |

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use soliton_core::{Error as CoreError, LogGrid};

pub use config::Config;

pub const DEFAULT_TOL_CLOSED: f64 = 1e-10;
pub const DEFAULT_TOL_ORACLE: f64 = 1e-5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Core(CoreError::PositivityBreakdown { .. }) => 4,
            CliError::Core(CoreError::Certification(_)) => 1,
            CliError::Core(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "soliton-forge", version, about = "Verify radial gradient Schouten solitons")]
pub struct Cli {
    /// Emit a single-line JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for sampled points and planes (default: config seed, else 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Tolerance for closed-form residuals.
    #[arg(long, global = true)]
    pub tol_closed: Option<f64>,
    /// Tolerance for comparisons against the finite-difference oracle.
    #[arg(long, global = true)]
    pub tol_oracle: Option<f64>,
    /// Radial grid as `r_min:r_max:count`.
    #[arg(long, global = true, value_parser = parse_grid)]
    pub grid: Option<LogGrid>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reproduce the three worked product examples.
    Examples {
        /// Base dimension for the steady example (fiber dimension n − 1).
        #[arg(long, default_value_t = 4)]
        n_for_example2: usize,
    },
    /// Evaluate residuals for a JSON config.
    Verify {
        config: PathBuf,
        /// Also compare closed-form curvature with the oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Compare closed-form curvature with the finite-difference oracle.
    OracleCompare { config: PathBuf },
    /// Integrate the necessary ODE for ψ from initial data.
    Integrate(IntegrateArgs),
    /// List the Schouten solutions for given dimensions.
    Classify(ClassifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct IntegrateArgs {
    #[arg(long)]
    pub r0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub psi0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub dpsi0: f64,
    #[arg(long)]
    pub r1: f64,
    /// Number of equal steps in the sampled trajectory.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Write the trajectory to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Recover h for this base dimension along the trajectory's ψ.
    #[arg(long)]
    pub recover_n: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub h0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub dh0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FamilyFilter {
    All,
    A,
    B,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    /// Fiber Einstein constant, e.g. `3` or `1/2`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_f: Option<String>,
    #[arg(long, default_value = "1")]
    pub k2: String,
    #[arg(long, value_enum, default_value_t = FamilyFilter::All)]
    pub family: FamilyFilter,
}

pub fn parse_grid(s: &str) -> Result<LogGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected r_min:r_max:count, got {s:?}"));
    }
    let lo: f64 = parts[0].parse().map_err(|e| format!("r_min: {e}"))?;
    let hi: f64 = parts[1].parse().map_err(|e| format!("r_max: {e}"))?;
    let count: usize = parts[2].parse().map_err(|e| format!("count: {e}"))?;
    LogGrid::new(lo, hi, count).map_err(|e| e.to_string())
}

/// Result of one command: human lines, a JSON body and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub command: String,
    pub exit_code: i32,
    pub lines: Vec<String>,
    pub report: Value,
}

impl Outcome {
    pub fn new(command: &str, pass: bool, lines: Vec<String>, report: impl Serialize) -> Self {
        Self {
            command: command.into(),
            exit_code: if pass { 0 } else { 1 },
            lines,
            report: serde_json::to_value(report).unwrap_or(Value::Null),
        }
    }

    pub fn from_error(command: &str, err: &CliError) -> Self {
        Self {
            command: command.into(),
            exit_code: err.exit_code(),
            lines: vec![format!("error: {err}")],
            report: json!({ "error": err.to_string() }),
        }
    }

    pub fn verdict(&self) -> &'static str {
        match self.exit_code {
            0 => "pass",
            1 => "fail",
            _ => "error",
        }
    }

    /// Text output ending in `verdict=<pass|fail|error> exit_code=<n> command=<name>`,
    /// or one compact JSON object.
    pub fn render(&self, as_json: bool) -> String {
        if as_json {
            let mut body = match &self.report {
                Value::Object(map) => map.clone(),
                other => {
                    let mut m = serde_json::Map::new();
                    m.insert("report".into(), other.clone());
                    m
                }
            };
            body.insert("command".into(), json!(self.command));
            body.insert("verdict".into(), json!(self.verdict()));
            body.insert("exit_code".into(), json!(self.exit_code));
            return serde_json::to_string(&Value::Object(body)).expect("serializable report");
        }
        let mut out = self.lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&format!(
            "verdict={} exit_code={} command={}",
            self.verdict(),
            self.exit_code,
            self.command
        ));
        out
    }
}

/// Options shared by all subcommands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Globals {
    pub seed: Option<u64>,
    pub tol_closed: Option<f64>,
    pub tol_oracle: Option<f64>,
    pub grid: Option<LogGrid>,
}

impl Cli {
    pub fn globals(&self) -> Globals {
        Globals {
            seed: self.seed,
            tol_closed: self.tol_closed,
            tol_oracle: self.tol_oracle,
            grid: self.grid,
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let g = cli.globals();
    let (name, result) = match &cli.command {
        Command::Examples { n_for_example2 } => ("examples", commands::examples(*n_for_example2, &g)),
        Command::Verify { config, oracle } => (
            "verify",
            Config::load(config).and_then(|c| commands::verify(&c, *oracle, &g)),
        ),
        Command::OracleCompare { config } => (
            "oracle-compare",
            Config::load(config).and_then(|c| commands::oracle_compare(&c, &g)),
        ),
        Command::Integrate(args) => ("integrate", commands::integrate(args, &g)),
        Command::Classify(args) => ("classify", commands::classify(args, &g)),
    };
    result.unwrap_or_else(|e| Outcome::from_error(name, &e))
}
