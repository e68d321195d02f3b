//! Command-line experiments for `toral-dpm`. Each subcommand prints an
//! `ExperimentReport` as JSON; the exit code is 0 when every check passes,
//! 1 when a check fails or a computation gives up, and 2 on bad input.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use toral_dpm::Error;

#[derive(Parser, Debug)]
#[command(name = "toral-dpm", version, about = "Periodic orbits and dense periodic measures on tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// RNG seed for sampled quantities.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for report.json and CSV curve files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Format of the report on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// File of `key = value` lines supplying flags not given on the command line.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count and enumerate the points of period n.
    PeriodicPoints(commands::PeriodicPointsArgs),
    /// Periodic point of period n tracing the orbit of a point.
    CloseOrbit(commands::CloseOrbitArgs),
    /// Point tracing a specification file, optionally periodic.
    TraceSpec(commands::TraceSpecArgs),
    /// Bounded-gap period set of a polynomial.
    BoundedBelow(commands::BoundedBelowArgs),
    /// Newton polygon of a polynomial at a prime.
    Newton(commands::NewtonArgs),
    /// Product over finite places of the expanding absolute values.
    ProductFormula(commands::ProductFormulaArgs),
    /// Periodic approximants of a unipotent orbit closure.
    UnipotentApprox(commands::UnipotentApproxArgs),
    /// Matching of a periodic orbit with a generic orbit of a unipotent map.
    IntervalPerm(commands::IntervalPermArgs),
    /// Periodic measure approximating a generic orbit measure.
    DpmPipeline(commands::DpmPipelineArgs),
    /// Thue-Morse factors and the product without dense periodic measures.
    Subshift(commands::SubshiftArgs),
}

/// One named pass/fail check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Value,
    pub bound: Value,
}

impl Check {
    pub fn new(name: &str, passed: bool, value: impl Serialize, bound: impl Serialize) -> Self {
        Self { name: name.to_string(), passed, value: json!(value), bound: json!(bound) }
    }
}

/// Output of one command before timing.
pub struct Outcome {
    pub parameters: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    /// CSV files written under `--out`: name and contents.
    pub curves: Vec<(String, String)>,
}

#[derive(Serialize)]
struct ExperimentReport<'a> {
    command: &'a str,
    parameters: &'a Value,
    results: &'a Value,
    checks: &'a [Check],
    wall_time_ms: u128,
}

fn input_error(e: &Error) -> bool {
    let inner = match e {
        Error::Stage { source, .. } => source,
        e => e,
    };
    matches!(
        inner,
        Error::Parse(_)
            | Error::DimensionMismatch { .. }
            | Error::NonSquare { .. }
            | Error::Singular
            | Error::NotIntegral
            | Error::NotUnipotent
            | Error::NotSemisimple
            | Error::NotHyperbolic
            | Error::NotAutomorphism(_)
            | Error::ZeroConstantTerm
            | Error::ConstantPolynomial
            | Error::RootOfUnity { .. }
            | Error::Reducible(_)
            | Error::InfinitePeriodicSet { .. }
            | Error::NotPrimitive
            | Error::NotInvariant
            | Error::Coset
            | Error::Precondition(_)
            | Error::Coprimality { .. }
            | Error::SpaceMismatch(_)
    )
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::to_string_pretty(&json!({ "error": { "kind": kind, "message": message } })).expect("plain json")
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::merge_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            emit(&error_json("ConfigError", &msg));
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            emit(&error_json("UsageError", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    let start = Instant::now();
    let (name, outcome) = match &cli.command {
        Command::PeriodicPoints(a) => ("periodic-points", commands::periodic_points(a)),
        Command::CloseOrbit(a) => ("close-orbit", commands::close_orbit(a)),
        Command::TraceSpec(a) => ("trace-spec", commands::trace_spec(a)),
        Command::BoundedBelow(a) => ("bounded-below", commands::bounded_below(a)),
        Command::Newton(a) => ("newton", commands::newton(a)),
        Command::ProductFormula(a) => ("product-formula", commands::product_formula(a)),
        Command::UnipotentApprox(a) => ("unipotent-approx", commands::unipotent_approx(a)),
        Command::IntervalPerm(a) => ("interval-perm", commands::interval_perm(a)),
        Command::DpmPipeline(a) => ("dpm-pipeline", commands::dpm_pipeline(a, &cli.common)),
        Command::Subshift(a) => ("subshift", commands::subshift(a)),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            emit(&error_json(e.kind(), &e.to_string()));
            return ExitCode::from(if input_error(&e) { 2 } else { 1 });
        }
    };
    let report = ExperimentReport {
        command: name,
        parameters: &outcome.parameters,
        results: &outcome.results,
        checks: &outcome.checks,
        wall_time_ms: start.elapsed().as_millis(),
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(dir) = &cli.common.out {
        if let Err(e) = write_outputs(dir, &text, &outcome.curves) {
            emit(&error_json("IoError", &e.to_string()));
            return ExitCode::from(2);
        }
    }
    match cli.common.format {
        Format::Json => emit(&text),
        Format::Csv => {
            let mut rows = String::from("name,passed,value,bound");
            for c in &outcome.checks {
                rows.push_str(&format!("\n{},{},{},{}", c.name, c.passed, csv_field(&c.value), csv_field(&c.bound)));
            }
            emit(&rows);
        }
    }
    if outcome.checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn csv_field(v: &Value) -> String {
    let s = match v {
        Value::String(s) => s.clone(),
        v => v.to_string(),
    };
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

fn write_outputs(dir: &std::path::Path, report: &str, curves: &[(String, String)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report)?;
    for (name, body) in curves {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}
