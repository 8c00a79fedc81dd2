//! Executes a configuration on a worker pool and writes the artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::experiments;
use crate::output::{ExperimentOutput, Verdict};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] critlab_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Runs the experiment on `cfg.workers` threads. The output does not depend
/// on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    Ok(pool.install(|| experiments::run(cfg))?)
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub rows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub config: serde_json::Value,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<OutputFile>,
    pub summary: serde_json::Map<String, serde_json::Value>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

pub fn config_echo(cfg: &ExperimentConfig) -> serde_json::Value {
    json!({
        "experiment": cfg.experiment.name(),
        "distribution": cfg.distribution.to_string(),
        "k": cfg.k,
        "n_list": cfg.n_list,
        "seeds": cfg.seeds,
        "trials": cfg.trials,
        "metric": cfg.metric,
        "output_path": cfg.output_path,
        "workers": cfg.workers,
        "params": {
            "reference_size": cfg.params.reference_size,
            "radius": cfg.params.radius,
            "threshold": cfg.params.threshold,
            "points": cfg.points(),
            "center": [cfg.params.center.re, cfg.params.center.im],
            "spread": cfg.params.spread,
            "psi": format!("{:?}", cfg.params.psi).to_lowercase(),
            "grid": cfg.params.grid,
            "timing": cfg.params.timing,
            "linear_n_list": cfg.params.linear_n_list,
            "directions": cfg.params.directions,
        },
    })
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// Runs `cfg` and writes every CSV plus `manifest.json` into `out_dir`.
pub fn execute(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest, RunError> {
    let started_at = now();
    let output = run_experiment(cfg)?;
    fs::create_dir_all(out_dir).map_err(|source| RunError::Io { path: out_dir.to_path_buf(), source })?;
    let mut outputs = Vec::new();
    for table in &output.tables {
        let path = out_dir.join(&table.file_name);
        write(&path, &table.render())?;
        outputs.push(OutputFile { path, rows: table.rows.len() });
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.name().to_string(),
        config: config_echo(cfg),
        started_at,
        finished_at: now(),
        outputs,
        summary: output.summary.clone(),
        passed: output.passed(),
        verdicts: output.verdicts,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&out_dir.join("manifest.json"), &(text + "\n"))?;
    Ok(manifest)
}
