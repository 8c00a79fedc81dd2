use critlab_core::measures::{mu_n, EmpiricalMeasure};
use critlab_core::mobius::{potential_integral, sample_mobius, MobiusTransform};
use critlab_core::sampling::{domain, keyed_rng};
use critlab_core::{RootSet, SampleStream};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{ExperimentConfig, PsiChoice};
use crate::output::{num, CsvTable, ExperimentOutput, Verdict};

pub const HEADER: &str = "seed,n,psi_id,integral_mu_n,integral_mu_ref,abs_gap";
pub const DEFAULT_REFERENCE_SIZE: usize = 1 << 20;
pub const PASS_FRACTION: f64 = 0.8;

pub fn psi_for(choice: PsiChoice, seed: u64, psi_id: u64) -> MobiusTransform<f64> {
    match choice {
        PsiChoice::Identity => MobiusTransform::identity(),
        PsiChoice::Random => sample_mobius(&mut keyed_rng(seed, domain::MOBIUS, psi_id)),
    }
}

struct PairResult {
    reference: f64,
    integrals: Vec<f64>,
}

/// `∫ log₋|ψ| dμ_n` along each path against a large reference sample.
pub fn run_lln(cfg: &ExperimentConfig) -> critlab_core::Result<ExperimentOutput> {
    let ref_size = cfg.params.reference_size.unwrap_or(DEFAULT_REFERENCE_SIZE);
    let max_n = *cfg.n_list.last().expect("validated");
    let pairs: Vec<(u64, u64)> = cfg.seeds.iter().flat_map(|&s| (0..cfg.trials).map(move |p| (s, p))).collect();
    let results: Vec<PairResult> = pairs
        .par_iter()
        .map(|&(seed, psi_id)| {
            let stream = SampleStream::new(cfg.distribution.clone(), seed)?;
            let psi = psi_for(cfg.params.psi, seed, psi_id);
            let reference = EmpiricalMeasure::new(stream.reference_sample::<f64>(ref_size))?;
            let path: RootSet<f64> = stream.sample_prefix(max_n);
            let integrals = cfg.n_list.iter().map(|&n| potential_integral(&psi, &mu_n(&path.prefix(n)))).collect();
            Ok(PairResult { reference: potential_integral(&psi, &reference), integrals })
        })
        .collect::<critlab_core::Result<_>>()?;

    let mut table = CsvTable::new("lln.csv", HEADER);
    for &seed in dedup(&cfg.seeds).iter() {
        for (i, &n) in cfg.n_list.iter().enumerate() {
            for (&(s, psi_id), r) in pairs.iter().zip(&results) {
                if s != seed {
                    continue;
                }
                let v = r.integrals[i];
                table.push(&[seed.to_string(), n.to_string(), psi_id.to_string(), num(v), num(r.reference), num((v - r.reference).abs())]);
            }
        }
    }

    let improved = results
        .iter()
        .filter(|r| {
            let first = (r.integrals[0] - r.reference).abs();
            let last = (r.integrals[r.integrals.len() - 1] - r.reference).abs();
            last < first || (last == 0.0 && first == 0.0)
        })
        .count();
    let fraction = improved as f64 / results.len() as f64;
    let verdict = Verdict::new(
        "lln_gap",
        fraction >= PASS_FRACTION,
        format!("{improved} of {} (seed, psi) pairs closer at n = {max_n} than at n = {} (need ≥ 80%)", results.len(), cfg.n_list[0]),
    );
    let mut out = ExperimentOutput { tables: vec![table], verdicts: vec![verdict], ..Default::default() };
    out.summary.insert("improved_fraction".into(), json!(fraction));
    let last: Vec<f64> = results.iter().map(|r| r.integrals[r.integrals.len() - 1]).collect();
    out.summary.insert("mean_integral_at_max_n".into(), json!(last.iter().sum::<f64>() / last.len() as f64));
    Ok(out)
}

fn dedup(seeds: &[u64]) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    for &s in seeds {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}
