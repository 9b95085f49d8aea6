//! Command-line front end for the `boxreg` simulations.

pub mod args;
pub mod commands;
pub mod config;
pub mod svg;
pub mod table;

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use args::{Cli, Command};
use commands::Report;
use config::RunConfig;

/// Thread-count override for the case pool.
pub const THREADS_ENV: &str = "BOXREG_THREADS";

/// Everything needed to repeat a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<PathBuf>,
    pub duration_secs: f64,
    pub passed: bool,
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v:?}"))?;
            Ok((n > 0).then_some(n))
        }
        _ => Ok(None),
    }
}

/// Resolve the config, run the command and write its manifest.
pub fn run(cli: &Cli) -> Result<RunManifest> {
    let cfg = RunConfig::resolve(&cli.command)?;
    let dir = cli.command.common().out_dir.clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let start = Instant::now();
    let exec = || -> Result<Report> {
        match &cli.command {
            Command::Simulate(_) => commands::simulate(&cfg, &dir),
            Command::Enlargement(_) => commands::enlargement(&cfg, &dir),
            Command::Landscape(_) => commands::landscape(&cfg, &dir),
            Command::Gradcheck(_) => commands::gradcheck(&cfg, &dir),
            Command::AlphaBound(_) => commands::alpha_bound(&cfg, &dir),
        }
    };
    let report = match threads_from_env()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building thread pool")?
            .install(exec)?,
        None => exec()?,
    };

    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        seed: cfg.scenario.seed,
        config: cfg,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: report.outputs,
        duration_secs: start.elapsed().as_secs_f64(),
        passed: report.passed,
    };
    let path = dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, body + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}
