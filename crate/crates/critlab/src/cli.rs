//! `critlab <experiment> --config <path> [--seed S] [--workers W] [--out DIR]`

use std::path::PathBuf;

use clap::Parser;

use crate::config::{parse_config_for, Experiment};
use crate::run::execute;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "critlab", version, about = "Zeros of derivatives of random polynomials: experiments")]
pub struct Args {
    /// One of convergence, jensen-audit, smallball, decouple-check, maxlog, lln.
    pub experiment: String,
    #[arg(long)]
    pub config: PathBuf,
    /// Run this single seed instead of the configured list.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "CRITLAB_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory; defaults to the configured `output_path`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs the CLI and returns the process exit code.
pub fn run(args: Args) -> i32 {
    let Some(experiment) = Experiment::from_name(&args.experiment) else {
        eprintln!("error: unknown experiment `{}`; valid values are {}", args.experiment, Experiment::valid_names());
        return EXIT_CONFIG;
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return EXIT_CONFIG;
        }
    };
    let mut cfg = match parse_config_for(&text, Some(experiment)) {
        Ok(c) => c,
        Err(errs) => {
            for e in &errs.0 {
                eprintln!("config error: {e}");
            }
            return EXIT_CONFIG;
        }
    };
    if let Some(s) = args.seed {
        cfg.seeds = vec![s];
    }
    if let Some(w) = args.workers {
        if w == 0 {
            eprintln!("config error: workers must be positive");
            return EXIT_CONFIG;
        }
        cfg.workers = w;
    }
    let out = args.out.unwrap_or_else(|| cfg.output_path.clone());
    match execute(&cfg, &out) {
        Ok(manifest) => {
            for v in &manifest.verdicts {
                println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
            }
            for f in &manifest.outputs {
                println!("wrote {} ({} rows)", f.path.display(), f.rows);
            }
            if manifest.passed {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAIL
        }
    }
}
