//! Experiment runner behind the `logldp` binary.
//!
//! A run reads a JSON config, validates it completely, computes inside a
//! dedicated worker pool and writes CSV/JSON results plus `manifest.json`
//! into the output directory. Validation failures leave no files behind.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

pub use config::{Experiment, Resolved, RunConfig};
pub use error::CliError;
pub use manifest::{Contract, Manifest};

use manifest::{git_describe, sha256_hex, Failure, OutputDir};

pub const THREADS_ENV: &str = "LOGLDP_THREADS";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    /// Worker threads; `None` falls back to `LOGLDP_THREADS`, then to the
    /// hardware parallelism.
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Result of a run that got far enough to write a manifest.
#[derive(Debug)]
pub struct RunReport {
    pub manifest: Manifest,
    pub output_dir: PathBuf,
    pub exit_code: i32,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) if !s.trim().is_empty() => Some(s.trim().parse::<usize>().map_err(|_| {
                CliError::Validation(format!(
                    "{THREADS_ENV} must be a positive integer, got {s:?}"
                ))
            })?),
            _ => None,
        },
    };
    if n == Some(0) {
        return Err(CliError::Validation("thread count must be positive".into()));
    }
    Ok(n)
}

/// Validate the config and build everything the experiment needs.
pub fn prepare(experiment: Experiment, opts: &RunOptions) -> Result<(Resolved, Vec<u8>), CliError> {
    let bytes = std::fs::read(&opts.config).map_err(|e| {
        CliError::Validation(format!("cannot read config {}: {e}", opts.config.display()))
    })?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| CliError::Validation("config is not valid UTF-8".into()))?;
    let base_dir = opts.config.parent().unwrap_or(Path::new("."));
    let resolved = RunConfig::from_json(text)?.resolve(
        experiment,
        opts.seed,
        opts.output.clone(),
        base_dir,
    )?;
    Ok((resolved, bytes))
}

/// Run one experiment end to end.
///
/// Returns `Err` only when nothing was written (validation or I/O failure
/// before the output directory exists). Numerical failures during the run
/// produce a manifest with `status = "failed"` and exit code 3.
pub fn run(experiment: Experiment, opts: &RunOptions) -> Result<RunReport, CliError> {
    let threads = thread_count(opts.threads)?;
    let (res, config_bytes) = prepare(experiment, opts)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;

    let mut out = OutputDir::create(&res.output_dir)?;
    let start = Instant::now();
    let result = pool.install(|| experiments::run(&res, &mut out));
    let wall = start.elapsed().as_secs_f64();

    let (contracts, summary, failure, exit_code) = match result {
        Ok(o) => {
            let code = if o.failure.is_some() { 3 } else { 0 };
            (o.contracts, o.summary, o.failure, code)
        }
        Err(CliError::Io(e)) => return Err(CliError::Io(e)),
        Err(e) => {
            let kind = match &e {
                CliError::Numerical { kind, .. } => kind.clone(),
                _ => "validation".into(),
            };
            let message = match &e {
                CliError::Numerical { message, .. } => message.clone(),
                other => other.to_string(),
            };
            let code = e.exit_code();
            (vec![], json!(null), Some(Failure { kind, message }), code)
        }
    };
    let manifest = Manifest {
        tool: "logldp".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: experiment.name().into(),
        status: if failure.is_none() { "ok" } else { "failed" }.into(),
        failure,
        seed: res.seed,
        threads: pool.current_num_threads(),
        git_describe: git_describe(),
        config_path: opts.config.display().to_string(),
        config_sha256: sha256_hex(&config_bytes),
        config: serde_json::to_value(&res.config)?,
        coefficients: serde_json::to_value(&res.skeleton.coeffs)?,
        wall_time_s: wall,
        contracts,
        summary,
        files: vec![],
    };
    let manifest = out.finish(manifest)?;
    Ok(RunReport {
        manifest,
        output_dir: res.output_dir,
        exit_code,
    })
}
