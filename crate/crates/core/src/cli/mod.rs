//! Command-line front end: configuration ingestion, pipeline orchestration
//! and report emission.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

pub use config::{validate_config, Analysis, AnalysisConfig, FamilyEntry, ValidateSettings, SCHEMA_VERSION};
pub use pipeline::{run_pipeline, REPORT_FILE};

use crate::coeff::builtin_families;
use crate::error::{Error, Result};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "regan", version, about = "Regularity analysis of planar nondivergence-form elliptic equations at a point")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the analyses of a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; overrides the configuration.
        #[arg(long)]
        threads: Option<usize>,
        /// Seed for trig-polynomial families without one; overrides the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the built-in coefficient families.
    Families,
}

/// Applies command-line overrides to the raw configuration text.
pub fn with_overrides(raw: &str, threads: Option<usize>, seed: Option<u64>) -> Result<String> {
    if threads.is_none() && seed.is_none() {
        return Ok(raw.to_string());
    }
    let mut v: Value = serde_json::from_str(raw).map_err(|e| Error::Config(vec![format!("invalid JSON: {e}")]))?;
    let obj = v.as_object_mut().ok_or_else(|| Error::Config(vec!["configuration must be a JSON object".into()]))?;
    if let Some(t) = threads {
        obj.insert("threads".into(), Value::from(t));
    }
    if let Some(s) = seed {
        obj.insert("seed".into(), Value::from(s));
    }
    Ok(serde_json::to_string(&v)?)
}

fn run(config: PathBuf, out: PathBuf, threads: Option<usize>, seed: Option<u64>) -> Result<()> {
    let raw = std::fs::read_to_string(&config)
        .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", config.display())]))?;
    let cfg = validate_config(&with_overrides(&raw, threads, seed)?)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let report = pool.install(|| run_pipeline(&cfg, &out))?;
    for (name, v) in report["verdict"].as_object().into_iter().flatten() {
        println!("{name}: {}", v["conclusion"].as_str().unwrap_or("?"));
    }
    println!("report written to {}", out.join(REPORT_FILE).display());
    Ok(())
}

fn families() {
    for f in builtin_families() {
        let descriptor = serde_json::to_string(&f.descriptor).unwrap_or_default();
        println!("{:<14} {}\n{:<14} {}", f.name, f.summary, "", descriptor);
    }
}

pub fn exit_code(e: &Error) -> u8 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERIC
    }
}

pub fn main_with(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Run { config, out, threads, seed } => run(config, out, threads, seed),
        Command::Families => {
            families();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            match &e {
                Error::Config(list) => {
                    eprintln!("configuration invalid:");
                    for v in list {
                        eprintln!("  - {v}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
