use critlab_core::measures::{convergence_series, ConvergenceOptions, ConvergenceRow, DEFAULT_REFERENCE_SIZE};
use critlab_core::stats::median;
use critlab_core::SampleStream;
use rayon::prelude::*;
use serde_json::json;

use super::aberth_for;
use crate::config::ExperimentConfig;
use crate::output::{num, CsvTable, ExperimentOutput, Verdict};

pub const HEADER: &str = "seed,n,k,metric,distance,certified,wall_ms";

/// Distance of `ν_n^(k)` to a reference sample of μ along each seed's path.
pub fn run_convergence(cfg: &ExperimentConfig) -> critlab_core::Result<ExperimentOutput> {
    let opts = ConvergenceOptions {
        metric: cfg.metric(),
        reference_size: cfg.params.reference_size.unwrap_or(DEFAULT_REFERENCE_SIZE),
        aberth: aberth_for(0, 0),
    };
    let per_seed: Vec<Vec<ConvergenceRow>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let stream = SampleStream::new(cfg.distribution.clone(), seed)?;
            convergence_series::<f64>(&stream, cfg.k, &cfg.n_list, &opts)
        })
        .collect::<critlab_core::Result<_>>()?;

    let mut table = CsvTable::new("convergence.csv", HEADER);
    for row in per_seed.iter().flatten() {
        let wall = if cfg.params.timing { row.wall_ms } else { 0.0 };
        table.push(&[
            row.seed.to_string(),
            row.n.to_string(),
            row.k.to_string(),
            row.metric_name.clone(),
            num(row.distance),
            row.certified.to_string(),
            num(wall),
        ]);
    }

    let medians: Vec<Option<f64>> = cfg
        .n_list
        .iter()
        .map(|&n| {
            let d: Vec<f64> = per_seed.iter().flatten().filter(|r| r.n == n && r.certified).map(|r| r.distance).collect();
            (!d.is_empty()).then(|| median(&d))
        })
        .collect();
    let uncertified = per_seed.iter().flatten().filter(|r| !r.certified).count();
    let verdict = convergence_verdict(&cfg.n_list, &medians);

    let mut out = ExperimentOutput { tables: vec![table], verdicts: vec![verdict], ..Default::default() };
    out.summary.insert("median_distance".into(), json!(cfg.n_list.iter().zip(&medians).map(|(n, m)| json!({"n": n, "median": m})).collect::<Vec<_>>()));
    out.summary.insert("uncertified_rows".into(), json!(uncertified));
    Ok(out)
}

/// Medians strictly decreasing in `n`, and the last below a third of the
/// first.
pub fn convergence_verdict(n_list: &[usize], medians: &[Option<f64>]) -> Verdict {
    let Some(m) = medians.iter().copied().collect::<Option<Vec<f64>>>() else {
        return Verdict::new("convergence", false, "some n has no certified rows");
    };
    let decreasing = m.windows(2).all(|w| w[1] < w[0]);
    let ratio = m[m.len() - 1] / m[0];
    let decay = m.len() < 2 || ratio < 1.0 / 3.0;
    let detail = format!(
        "medians {} over n = {n_list:?}; last/first = {ratio:.4} (need < 1/3 and strictly decreasing)",
        m.iter().map(|x| format!("{x:.5}")).collect::<Vec<_>>().join(", ")
    );
    Verdict::new("convergence", decreasing && decay, detail)
}
