//! The `fjq` command-line front end.
//!
//! Every subcommand prints one JSON envelope
//! `{schema_version, command, parameters, results, verdict, header}` with
//! sorted keys; flat tables can also be printed as TSV. Exit codes: 0 all
//! checks pass, 1 a verification failed, 2 input error, 3 resource limit.

pub mod parse;

mod commands;
mod recheck;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

pub use commands::Report;

pub const SCHEMA_VERSION: u64 = 1;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Tsv,
}

#[derive(Debug, Parser)]
#[command(name = "fjq", version, about = "Exact verification suite for flag resolutions of framed Jordan-quiver representations (report schema v1)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// Output format; TSV is available for flat tables only.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the report here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "FJQ_WORKERS")]
    pub workers: Option<usize>,

    /// Step budget for finite-field enumerations.
    #[arg(long, global = true, default_value_t = fjq_core::fq_oracle::DEFAULT_BUDGET)]
    pub budget: u128,

    /// Re-read a JSON report, recompute its verdict from the row data and
    /// compare.
    #[arg(long, value_name = "REPORT")]
    pub recheck: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// dim F_→ν, the fiber dimensions f1, f2 and dim F̃.
    Dims {
        #[arg(long)]
        nu: String,
        #[arg(long)]
        d: String,
    },
    /// The relative-position set Θ with per-stratum dimensions.
    Theta {
        #[arg(long)]
        nu: String,
        /// Framing; adds the Y-fiber columns.
        #[arg(long)]
        d: Option<String>,
        #[arg(long, default_value_t = fjq_core::orbit_calculus::DEFAULT_THETA_BOUND)]
        bound: usize,
    },
    /// Semismallness certificate with the relevant strata.
    Semismall {
        #[arg(long)]
        nu: String,
        #[arg(long)]
        d: String,
        #[arg(long, default_value_t = fjq_core::orbit_calculus::DEFAULT_THETA_BOUND)]
        bound: usize,
    },
    /// Labels and multiplicities of the summands of L_1 for sizes ν_1,…,ν_m.
    Decompose {
        /// Comma-separated block sizes.
        #[arg(long)]
        nu: String,
    },
    /// Number of simple summands: Σ p(ν_1)⋯p(ν_m).
    CountSheaves {
        #[arg(long)]
        nu: usize,
        #[arg(long)]
        m: usize,
    },
    /// Schur-algebra dimensions dim S(N, ν_i) and their product.
    SchurDims {
        #[arg(long)]
        n: usize,
        /// Comma-separated block sizes.
        #[arg(long)]
        nu: String,
    },
    /// Heisenberg relations, the H' relations, the scaled primitive check and
    /// the two Hall-pairing algorithms.
    FockCheck {
        /// Comma-separated charges (integers or n/d).
        #[arg(long, default_value = "1,2,5/3")]
        d: String,
        #[arg(long, default_value_t = 8)]
        h_degree: usize,
        #[arg(long, default_value_t = 6)]
        hprime_degree: usize,
        #[arg(long, default_value_t = 6)]
        hall_degree: usize,
    },
    /// Point counts over F_p: stable pairs, Y buckets, Λ and Π numerics.
    FqVerify {
        #[arg(long)]
        nu: String,
        #[arg(long)]
        d: String,
        /// Comma-separated primes.
        #[arg(long, default_value = "2")]
        p: String,
        /// Also count commuting nilpotent pairs of size ν.
        #[arg(long)]
        lambda: bool,
    },
    /// Orbit separation of the one-parameter family with ν=3, d=(1,1).
    OrbitDemo {
        #[arg(long, default_value = "2")]
        p: String,
    },
    /// The desk-scale acceptance suite.
    Acceptance {
        /// Run a single criterion.
        #[arg(long)]
        only: Option<u32>,
    },
}

/// Failure modes mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    Input { message: String, position: Option<usize> },
    Resource(fjq_core::Error),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Input { .. } | CliError::Io(_) => EXIT_INPUT,
            CliError::Resource(_) => EXIT_RESOURCE,
        }
    }

    fn json(&self) -> Value {
        match self {
            CliError::Input { message, position } => {
                json!({"reason": "invalid_input", "message": message, "position": position})
            }
            CliError::Resource(e) => json!({"reason": e.reason(), "message": e.to_string()}),
            CliError::Io(message) => json!({"reason": "io", "message": message}),
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Input { message, position: Some(p) } => format!("{message} at column {p}"),
            CliError::Input { message, .. } | CliError::Io(message) => message.clone(),
            CliError::Resource(e) => e.to_string(),
        }
    }
}

impl From<fjq_core::Error> for CliError {
    fn from(e: fjq_core::Error) -> Self {
        match e {
            fjq_core::Error::InvalidInput(message) => CliError::Input { message, position: None },
            other => CliError::Resource(other),
        }
    }
}

impl From<parse::ParseError> for CliError {
    fn from(e: parse::ParseError) -> Self {
        CliError::Input {
            message: e.message,
            position: Some(e.position),
        }
    }
}

/// What the process should print and return.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn header() -> Value {
    json!({"tool": "fjq", "version": env!("CARGO_PKG_VERSION")})
}

fn envelope(command: &str, parameters: Value, results: Value, verdict: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "parameters": parameters,
        "results": results,
        "verdict": verdict,
        "header": header(),
    })
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Dims { .. } => "dims",
        Command::Theta { .. } => "theta",
        Command::Semismall { .. } => "semismall",
        Command::Decompose { .. } => "decompose",
        Command::CountSheaves { .. } => "count-sheaves",
        Command::SchurDims { .. } => "schur-dims",
        Command::FockCheck { .. } => "fock-check",
        Command::FqVerify { .. } => "fq-verify",
        Command::OrbitDemo { .. } => "orbit-demo",
        Command::Acceptance { .. } => "acceptance",
    }
}

/// Runs a parsed invocation without touching the process state.
pub fn execute(cli: &Cli) -> Outcome {
    let name = match (&cli.recheck, &cli.command) {
        (Some(_), _) => "recheck",
        (None, Some(cmd)) => command_name(cmd),
        (None, None) => {
            return Outcome {
                code: EXIT_INPUT,
                stdout: String::new(),
                stderr: "error: a subcommand or --recheck is required (see --help)\n".into(),
            }
        }
    };
    let result = match (&cli.recheck, &cli.command) {
        (Some(path), _) => recheck::recheck(path),
        (None, Some(cmd)) => commands::run(cmd, cli),
        (None, None) => unreachable!(),
    };
    let (code, stdout, stderr) = match result {
        Ok(report) => {
            let passed = report.passed;
            let mut verdict = report.verdict.clone();
            verdict["passed"] = Value::Bool(passed);
            let text = match cli.format {
                Format::Json => Ok(render_json(&envelope(name, report.parameters, report.results, verdict))),
                Format::Tsv => report.tsv.ok_or_else(|| CliError::Input {
                    message: format!("{name} has no flat table; use --format json"),
                    position: None,
                }),
            };
            match text {
                Ok(text) => {
                    let summary = report.summary.unwrap_or_default();
                    (if passed { EXIT_PASS } else { EXIT_VERIFICATION }, text, summary)
                }
                Err(e) => (e.code(), String::new(), format!("error: {}\n", e.message())),
            }
        }
        Err(e) => {
            let body = json!({
                "schema_version": SCHEMA_VERSION,
                "command": name,
                "error": e.json(),
                "verdict": {"passed": false},
                "header": header(),
            });
            let stdout = if cli.format == Format::Json { render_json(&body) } else { String::new() };
            (e.code(), stdout, format!("error: {}\n", e.message()))
        }
    };
    if let (Some(path), true) = (&cli.output, !stdout.is_empty()) {
        if let Err(e) = std::fs::write(path, &stdout) {
            return Outcome {
                code: EXIT_INPUT,
                stdout: String::new(),
                stderr: format!("error: cannot write {}: {e}\n", path.display()),
            };
        }
        return Outcome { code, stdout: String::new(), stderr };
    }
    Outcome { code, stdout, stderr }
}
