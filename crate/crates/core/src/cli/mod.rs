//! Command-line front end: single runs and parameter scans written to CSV or
//! JSON.
//!
//! ```text
//! ness run  --config FILE [--verify] [--out DIR] [--seed INT] [--key value ...]
//! ness scan --config FILE [--verify] [--out DIR] [--seed INT] [--key value ...]
//! ```
//!
//! Exit status is 0 when every point succeeded, 2 when some points failed and
//! 1 for usage or configuration errors. `NESS_THREADS` sets the size of the
//! worker pool.

pub mod config;
pub mod output;
pub mod scan;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::info;
use toml::Value;

pub use config::{
    default_observables, from_table, parse_config, parse_overrides, Observable, OutputFormat,
    RunConfig, ScanParameter, ScanSpec,
};
pub use output::{read_json, write_json, ConfigRecord, CsvSink, ResultsDocument};
pub use scan::{
    measure, run_scan, solve_point, verify, ObservableValue, PointResult, Verification,
};

use crate::error::{Error, Result};

/// Environment variable holding the worker-pool size.
pub const THREADS_ENV: &str = "NESS_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "ness",
    version,
    about = "Steady states of driven-dissipative spin chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a single parameter point.
    Run(RunArgs),
    /// Solve every point of the configured scan.
    Scan(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Flat TOML configuration file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Compare against the dense steady state (short chains only).
    #[arg(long)]
    verify: bool,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Any configuration key as `--key value`, e.g. `--h -1.0 --d_max 20`.
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "--KEY VALUE"
    )]
    overrides: Vec<String>,
}

/// Number of worker threads requested through [`THREADS_ENV`].
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(vec![format!(
                "{THREADS_ENV} must be a positive integer, got '{s}'"
            )])),
        },
        Err(_) => Ok(None),
    }
}

fn load_config(args: &RunArgs, scan: bool) -> Result<RunConfig> {
    let mut overrides = parse_overrides(&args.overrides)?;
    if args.verify {
        overrides.insert("verify".into(), Value::Boolean(true));
    }
    if let Some(out) = &args.out {
        overrides.insert("out".into(), Value::String(out.display().to_string()));
    }
    if let Some(seed) = args.seed {
        let seed = i64::try_from(seed)
            .map_err(|_| Error::Config(vec![format!("seed {seed} is too large")]))?;
        overrides.insert("seed".into(), Value::Integer(seed));
    }
    let config = parse_config(args.config.as_deref(), &overrides)?;
    match (scan, config.scan.is_some()) {
        (true, false) => Err(Error::Config(vec![
            "scan needs scan_parameter, scan_start, scan_stop and scan_steps".into(),
        ])),
        (false, true) => Err(Error::Config(vec![
            "the configuration defines a scan; use `ness scan`".into(),
        ])),
        _ => Ok(config),
    }
}

/// Runs `config`, writing the requested files into its output directory.
/// Returns the rows in scan order.
pub fn execute(config: &RunConfig) -> Result<Vec<PointResult>> {
    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    let csv_path = config.out.join("results.csv");
    let json_path = config.out.join("results.json");
    let mut csv = if config.format.csv() {
        Some(CsvSink::create(&csv_path, config)?)
    } else {
        None
    };
    let total = config.points().len();
    let mut doc = ResultsDocument {
        config: ConfigRecord::from(config),
        points: Vec::new(),
    };
    let rows = run_scan(config, |row| {
        info!(
            "point {}/{}: {} after {} sweeps, residual {}",
            row.index + 1,
            total,
            row.status,
            row.sweeps,
            output::format_number(row.residual)
        );
        if let Some(csv) = csv.as_mut() {
            csv.append(config, row)?;
        }
        if config.format.json() {
            doc.points.push(row.clone());
            write_json(&json_path, &doc)?;
        }
        Ok(())
    })?;
    Ok(rows)
}

/// Exit status for a finished scan.
pub fn exit_code(rows: &[PointResult]) -> i32 {
    if rows.iter().any(PointResult::failed) {
        EXIT_PARTIAL
    } else {
        EXIT_OK
    }
}

/// Entry point of the `ness` binary; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (args, scan) = match &cli.command {
        Command::Run(a) => (a, false),
        Command::Scan(a) => (a, true),
    };
    let setup = || -> Result<RunConfig> {
        if let Some(n) = threads_from_env()? {
            // a second call in the same process keeps the existing pool
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
        let config = load_config(args, scan)?;
        fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
        Ok(config)
    };
    let config = match setup() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match execute(&config) {
        Ok(rows) => {
            let failed = rows.iter().filter(|r| r.failed()).count();
            if failed > 0 {
                eprintln!("{failed} of {} points failed", rows.len());
            }
            println!(
                "wrote results for {} points to {}",
                rows.len(),
                config.out.display()
            );
            exit_code(&rows)
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Usage(_) => EXIT_USAGE,
                _ => EXIT_PARTIAL,
            }
        }
    }
}
