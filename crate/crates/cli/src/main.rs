//! `autocorr`: constants, evaluations, searches, dual checks and the
//! acceptance suite from the command line.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use autocorr::acceptance::Faults;
use clap::Parser;

use crate::commands::{Failure, Outcome};
use crate::config::{CommandName, FamilySpec, RunConfig, WeightName};
use crate::report::write_atomic;

#[derive(Debug, Parser)]
#[command(name = "autocorr", version, about = "Autocorrelation inequality toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Option<CommandName>,
    /// Strict JSON file with any of the keys below; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    weight: Option<WeightName>,
    /// Gaussian weight parameter (default 2π).
    #[arg(long, global = true, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, global = true)]
    p_min: Option<f64>,
    #[arg(long, global = true)]
    p_max: Option<f64>,
    /// gaussian, indicator, piecewise-constant or bs-example.
    #[arg(long, global = true)]
    family: Option<String>,
    /// Family parameter: b for the Gaussian, A for the indicator.
    #[arg(long, global = true, allow_negative_numbers = true)]
    param: Option<f64>,
    /// Comma-separated cell values for piecewise-constant.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    values: Option<Vec<f64>>,
    /// mean, gauss, min12 or min01.
    #[arg(long, global = true)]
    functional: Option<String>,
    #[arg(long, global = true)]
    cells: Option<usize>,
    /// Half-width of the support window (bump scale for `dual`).
    #[arg(long, global = true, allow_negative_numbers = true)]
    support: Option<f64>,
    #[arg(long, global = true)]
    budget: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory for report.json and CSV tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Path for the JSON report.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Corrupt the given acceptance criterion (negative control).
    #[arg(long, global = true, hide = true)]
    inject_fault: Vec<u8>,
}

impl Cli {
    fn flags(&self) -> RunConfig {
        RunConfig {
            command: self.command,
            weight: self.weight,
            a: self.a,
            p_min: self.p_min,
            p_max: self.p_max,
            family: self.family.clone().map(FamilySpec::Name),
            param: self.param,
            values: self.values.clone(),
            functional: self.functional.clone(),
            cells: self.cells,
            support: self.support,
            budget: self.budget,
            seed: self.seed,
            tol: self.tol,
            out: self.out.clone(),
            json: self.json.clone(),
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("AUTOCORR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("AUTOCORR_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn write_outputs(config: &RunConfig, outcome: &Outcome) -> std::io::Result<()> {
    let json = report::to_json(&outcome.report);
    if let Some(dir) = &config.out {
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join("report.json"), &json)?;
        for t in &outcome.tables {
            write_atomic(&dir.join(t.file), &t.to_bytes()?)?;
        }
    }
    if let Some(path) = &config.json {
        write_atomic(path, &json)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let base = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };
    let config = base.overlay(cli.flags()).with_defaults();
    let faults = Faults::inject(cli.inject_fault.iter().copied());
    let outcome = match commands::run(&config, &faults) {
        Ok(o) => o,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    for line in &outcome.text {
        println!("{line}");
    }
    if let Err(e) = write_outputs(&config, &outcome) {
        eprintln!("error: writing reports: {e}");
        return ExitCode::from(1);
    }
    if outcome.report.passed {
        ExitCode::SUCCESS
    } else {
        for b in &outcome.report.breaches {
            eprintln!("invariant breached: {b}");
        }
        ExitCode::from(1)
    }
}
