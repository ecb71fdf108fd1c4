//! The `haltlab` command line.
//!
//! Each subcommand runs one experiment, prints a short human summary and
//! appends one canonical JSON record to the results file. `--check FILE`
//! re-validates and replays every record in a results file.
//!
//! Exit status: 0 success, 1 `--check` found a mismatch, 2 usage error,
//! 3 runtime error. Errors are also written to stderr as one JSON object.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

use crate::machine::MachineError;
use crate::oracle::OracleError;
use crate::protocols::{ProtocolError, Sampling};
use crate::report::{append_line, canonical_json, ExperimentReport};

pub use commands::{
    resolve, run_protocol, Protocol, RunResult, DEFAULT_BOUND, DEFAULT_SEED, MAX_DIM,
};
pub use config::{parse_count, parse_sampling, RunConfig};

/// Environment variable holding the default results path.
pub const RESULTS_ENV: &str = "HALTLAB_RESULTS";
pub const DEFAULT_RESULTS: &str = "haltlab_results.jsonl";

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Runtime(_) => "runtime",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    /// `{"error":{"kind":…,"message":…}}`
    pub fn to_json(&self) -> String {
        canonical_json(&json!({"error": {"kind": self.kind(), "message": self.to_string()}}))
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        ProtocolError::from(e).into()
    }
}

impl From<MachineError> for CliError {
    fn from(e: MachineError) -> Self {
        ProtocolError::from(e).into()
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "haltlab",
    version,
    about = "Step-bounded halting oracles and their quantum read-outs"
)]
struct Cli {
    /// Results file (JSON lines, appended).
    #[arg(long, global = true, env = RESULTS_ENV, default_value = DEFAULT_RESULTS)]
    results: PathBuf,
    /// Re-validate and replay every record in FILE instead of running a command.
    #[arg(long, value_name = "FILE")]
    check: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List programs by index.
    Enumerate(ConfigArgs),
    /// Run program x on an input for up to T steps.
    RunProgram(ConfigArgs),
    /// Tabulate h_T(x) for x <= x_max.
    Oracle(ConfigArgs),
    /// Exact Omega_T over x <= x_max.
    Omega(ConfigArgs),
    /// Measure the halting observable on |x> (amplified when epsilon/delta are given).
    Measure(ConfigArgs),
    /// Apply the interleaving permutation to |x> and read the parity.
    Parity(ConfigArgs),
    /// Estimate Omega_T from N spin measurements.
    EstimateOmega(ConfigArgs),
    /// Estimate Omega_T and extract n certified bits.
    ExtractBits(ConfigArgs),
    /// Sweep angle offsets eta and report corrupted bits.
    Perturb(ConfigArgs),
    /// Check a (possibly flipped) h_T table against dovetailed runs.
    VerifyOracle(ConfigArgs),
}

impl Command {
    fn split(self) -> (Protocol, ConfigArgs) {
        match self {
            Command::Enumerate(a) => (Protocol::Enumerate, a),
            Command::RunProgram(a) => (Protocol::RunProgram, a),
            Command::Oracle(a) => (Protocol::Oracle, a),
            Command::Omega(a) => (Protocol::Omega, a),
            Command::Measure(a) => (Protocol::Measure, a),
            Command::Parity(a) => (Protocol::Parity, a),
            Command::EstimateOmega(a) => (Protocol::EstimateOmega, a),
            Command::ExtractBits(a) => (Protocol::ExtractBits, a),
            Command::Perturb(a) => (Protocol::Perturb, a),
            Command::VerifyOracle(a) => (Protocol::VerifyOracle, a),
        }
    }
}

/// Flags mirror the config file keys. Counts accept `1e6` style.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// JSON config file; flags given on the command line override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Program index.
    #[arg(long, value_parser = parse_count)]
    x: Option<u64>,
    /// Machine input (run-program; defaults to x).
    #[arg(long, value_parser = parse_count)]
    input: Option<u64>,
    /// Step bound.
    #[arg(long = "T", value_parser = parse_count)]
    bound: Option<u64>,
    /// Last program index in the table.
    #[arg(long = "x-max", alias = "x_max", value_parser = parse_count)]
    x_max: Option<u64>,
    /// Truncation dimension.
    #[arg(long = "D", value_parser = parse_count)]
    dim: Option<u64>,
    #[arg(long, value_parser = parse_count)]
    seed: Option<u64>,
    /// Per-reading failure probability of the noisy apparatus.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Reading spread of the noisy apparatus.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    confidence: Option<f64>,
    /// Shot count.
    #[arg(long = "N", value_parser = parse_count)]
    shots: Option<u64>,
    /// Bit count (extract-bits) or bit index (perturb).
    #[arg(long, value_parser = parse_count)]
    n: Option<u64>,
    /// Comma-separated angle offsets.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    etas: Option<Vec<f64>>,
    /// Dovetail step budget.
    #[arg(long, value_parser = parse_count)]
    budget: Option<u64>,
    /// Comma-separated indices whose candidate bit is flipped.
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    flip: Option<Vec<u64>>,
    /// per_shot or aggregate.
    #[arg(long, value_parser = parse_sampling)]
    sampling: Option<Sampling>,
    /// First index (enumerate).
    #[arg(long, value_parser = parse_count)]
    start: Option<u64>,
    /// Number of programs (enumerate).
    #[arg(long, value_parser = parse_count)]
    count: Option<u64>,
}

impl ConfigArgs {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            x: self.x,
            input: self.input,
            bound: self.bound,
            x_max: self.x_max,
            dim: self.dim,
            seed: self.seed,
            epsilon: self.epsilon,
            delta: self.delta,
            confidence: self.confidence,
            shots: self.shots,
            n: self.n,
            etas: self.etas,
            budget: self.budget,
            flip: self.flip,
            sampling: self.sampling,
            start: self.start,
            count: self.count,
        };
        Ok(file.overlay(flags))
    }
}

/// Runs one command and builds its record without writing anything.
pub fn run_record(
    protocol: Protocol,
    cfg: &RunConfig,
) -> Result<(ExperimentReport, String), CliError> {
    let r = run_protocol(protocol, cfg)?;
    let report = ExperimentReport::new(protocol.name(), r.config.to_value(), r.outcome);
    Ok((report, r.summary))
}

/// Entry point shared by the binary and tests. Returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    EXIT_OK
                }
                _ => fail(&CliError::Usage(
                    e.render().to_string().trim_end().to_string(),
                )),
            };
        }
    };
    match (cli.check, cli.command) {
        (Some(_), Some(_)) => fail(&CliError::Usage(
            "--check does not take a subcommand".into(),
        )),
        (None, None) => fail(&CliError::Usage("no subcommand given; see --help".into())),
        (Some(path), None) => match check_file(&path) {
            Ok(summary) => {
                print!("{}", summary.text);
                if summary.mismatches == 0 {
                    EXIT_OK
                } else {
                    EXIT_MISMATCH
                }
            }
            Err(e) => fail(&e),
        },
        (None, Some(command)) => {
            let (protocol, args) = command.split();
            match run_and_append(protocol, args, &cli.results) {
                Ok(summary) => {
                    print!("{summary}");
                    EXIT_OK
                }
                Err(e) => fail(&e),
            }
        }
    }
}

fn fail(e: &CliError) -> i32 {
    eprintln!("{}", e.to_json());
    e.exit_code()
}

fn run_and_append(
    protocol: Protocol,
    args: ConfigArgs,
    results: &Path,
) -> Result<String, CliError> {
    let cfg = args.into_config()?;
    let (report, summary) = run_record(protocol, &cfg)?;
    append_line(results, &report.to_line())
        .map_err(|e| CliError::Runtime(format!("cannot append to {}: {e}", results.display())))?;
    Ok(format!(
        "{summary}record appended to {}\n",
        results.display()
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckSummary {
    pub records: usize,
    pub mismatches: usize,
    pub text: String,
}

/// Validates every line of a results file and replays its config.
pub fn check_file(path: &Path) -> Result<CheckSummary, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let mut summary = CheckSummary {
        records: 0,
        mismatches: 0,
        text: String::new(),
    };
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        summary.records += 1;
        match check_line(line) {
            Ok(command) => summary
                .text
                .push_str(&format!("line {}: ok ({command})\n", i + 1)),
            Err(reason) => {
                summary.mismatches += 1;
                summary
                    .text
                    .push_str(&format!("line {}: MISMATCH: {reason}\n", i + 1));
            }
        }
    }
    summary.text.push_str(&format!(
        "checked {} records, {} mismatches\n",
        summary.records, summary.mismatches
    ));
    Ok(summary)
}

/// `Ok(command name)` when the line is canonical, well formed and replays
/// to the same content.
pub fn check_line(line: &str) -> Result<String, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("not JSON: {e}"))?;
    if canonical_json(&value) != line {
        return Err("not in canonical form".into());
    }
    let report: ExperimentReport =
        serde_json::from_value(value).map_err(|e| format!("not a record: {e}"))?;
    chrono::DateTime::parse_from_rfc3339(&report.timestamp)
        .map_err(|e| format!("bad timestamp: {e}"))?;
    if report.version != env!("CARGO_PKG_VERSION") {
        return Err(format!(
            "recorded by version {}, this is {}",
            report.version,
            env!("CARGO_PKG_VERSION")
        ));
    }
    let protocol = Protocol::from_name(&report.command)
        .ok_or_else(|| format!("unknown command `{}`", report.command))?;
    let cfg = RunConfig::from_value(&report.config).map_err(|e| e.to_string())?;
    let replay = run_protocol(protocol, &cfg).map_err(|e| format!("replay failed: {e}"))?;
    let rebuilt = ExperimentReport {
        config: replay.config.to_value(),
        outcome: replay.outcome,
        ..report.clone()
    };
    if canonical_json(&rebuilt.config) != canonical_json(&report.config) {
        return Err("config is not fully resolved".into());
    }
    if rebuilt.content_line() != report.content_line() {
        return Err("replayed outcome differs".into());
    }
    Ok(report.command)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(protocol: Protocol, v: Value) -> String {
        run_record(protocol, &RunConfig::from_value(&v).unwrap())
            .unwrap()
            .0
            .to_line()
    }

    #[test]
    fn records_check_clean() {
        let l = line(Protocol::Measure, json!({"x": 0, "T": 0}));
        assert_eq!(check_line(&l), Ok("measure".to_string()));
    }

    #[test]
    fn tampering_is_caught() {
        let l = line(
            Protocol::Parity,
            json!({"x": 7, "T": 1000, "x_max": 10, "D": 32}),
        );
        let forged = l.replace("\"outcome\":0", "\"outcome\":1");
        assert_ne!(forged, l);
        assert_eq!(check_line(&forged), Err("replayed outcome differs".into()));
        let spaced = l.replacen(':', ": ", 1);
        assert_eq!(check_line(&spaced), Err("not in canonical form".into()));
        assert!(check_line("{").is_err());
    }

    #[test]
    fn error_objects_are_json() {
        let e = CliError::Usage("bad \"x\"".into());
        let v: Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["error"]["kind"], "usage");
        assert_eq!(v["error"]["message"], "bad \"x\"");
        assert_eq!(e.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
