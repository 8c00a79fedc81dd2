use critlab_core::mobius::{max_log_sn_on_circle, GeneralizedCircle};
use critlab_core::stats::median;
use critlab_core::{RootSet, SampleStream};
use rayon::prelude::*;
use serde_json::json;

use super::seed_n_units;
use crate::config::ExperimentConfig;
use crate::output::{num, CsvTable, ExperimentOutput, Verdict};

pub const HEADER: &str = "seed,n,k,radius,max_log_sn,ratio_to_log_n";
/// Rows below this `n` are reported but left out of the verdict.
pub const MIN_N: usize = 64;

/// `max log₊|S_n|` on a fixed circle, against `log n`.
pub fn run_maxlog(cfg: &ExperimentConfig) -> critlab_core::Result<ExperimentOutput> {
    let units = seed_n_units(cfg);
    let circle = GeneralizedCircle::Circle { center: cfg.params.center, radius: cfg.params.radius };
    let values: Vec<f64> = units
        .par_iter()
        .map(|&(seed, n)| {
            let stream = SampleStream::new(cfg.distribution.clone(), seed)?;
            let roots: RootSet<f64> = stream.sample_prefix(n);
            Ok(max_log_sn_on_circle(&roots, cfg.k, &circle, cfg.params.grid)?.max_log.max(0.0))
        })
        .collect::<critlab_core::Result<_>>()?;

    let mut table = CsvTable::new("maxlog.csv", HEADER);
    let mut ratios = Vec::new();
    for (&(seed, n), &v) in units.iter().zip(&values) {
        let ratio = v / (n as f64).ln();
        if n >= MIN_N {
            ratios.push(ratio);
        }
        table.push(&[seed.to_string(), n.to_string(), cfg.k.to_string(), num(cfg.params.radius), num(v), num(ratio)]);
    }
    let verdict = ratio_verdict(&ratios);
    let mut out = ExperimentOutput { tables: vec![table], verdicts: vec![verdict], ..Default::default() };
    if !ratios.is_empty() {
        out.summary.insert("median_ratio".into(), json!(median(&ratios)));
    }
    Ok(out)
}

/// Every ratio within a factor 3 of the median ratio.
pub fn ratio_verdict(ratios: &[f64]) -> Verdict {
    if ratios.is_empty() {
        return Verdict::new("maxlog_ratio", false, format!("no rows with n ≥ {MIN_N}"));
    }
    let m = median(ratios);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = m > 0.0 && hi <= 3.0 * m && lo >= m / 3.0;
    Verdict::new("maxlog_ratio", ok, format!("ratio median {m:.4}, range [{lo:.4}, {hi:.4}] (need within 3x of median)"))
}
