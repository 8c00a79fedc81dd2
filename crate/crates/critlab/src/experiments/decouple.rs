use critlab_core::anticoncentration::{decoupled_h, product_form, DecoupledInstance};
use critlab_core::sampling::{domain, keyed_rng};
use critlab_core::Error;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{num, CsvTable, ExperimentOutput, Verdict};

pub const HEADER: &str = "n,k,instance,abs_h,abs_product,rel_err";
pub const REL_TOL: f64 = 1e-10;
/// Evaluation points are drawn uniformly from the disk of this radius.
pub const Z_RADIUS: f64 = 1.5;

pub struct DecoupleRow {
    pub n: usize,
    pub k: usize,
    pub instance: u64,
    pub abs_h: f64,
    pub abs_product: f64,
    pub rel_err: f64,
}

/// Instance `instance` of size `n`: its order is uniform on
/// `1..=min(k_max, n)` and `z` is redrawn until no evaluation hits a pole.
pub fn decouple_instance(cfg: &ExperimentConfig, seed: u64, n: usize, instance: u64) -> critlab_core::Result<DecoupleRow> {
    let mut rng = keyed_rng(seed, domain::INSTANCES, ((n as u64) << 32) | instance);
    let k = rng.random_range(1..=cfg.k.min(n));
    let y: Vec<Complex64> = cfg.distribution.sample_n(&mut rng, n);
    let y_prime: Vec<Complex64> = cfg.distribution.sample_n(&mut rng, n);
    for _ in 0..1000 {
        let z = Complex64::from_polar(Z_RADIUS * rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>());
        let inst = DecoupledInstance::new(
            critlab_core::RootSet::new(y.clone())?,
            critlab_core::RootSet::new(y_prime.clone())?,
            critlab_core::anticoncentration::make_partition(n, k)?,
            z,
        )?;
        match (decoupled_h(&inst), product_form(&inst)) {
            (Ok(h), Ok(p)) => {
                return Ok(DecoupleRow {
                    n,
                    k,
                    instance,
                    abs_h: h.norm(),
                    abs_product: p.norm(),
                    rel_err: (h - p).norm() / (1.0 + p.norm()),
                })
            }
            (Err(Error::Pole), _) | (_, Err(Error::Pole)) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    Err(Error::Pole)
}

/// Alternating sum against product form on random instances.
pub fn run_decouple_check(cfg: &ExperimentConfig) -> critlab_core::Result<ExperimentOutput> {
    // instance ids run across seeds so that (n, instance) names the inputs
    let units: Vec<(u64, usize, u64)> = cfg
        .seeds
        .iter()
        .enumerate()
        .flat_map(|(si, &s)| {
            cfg.n_list.iter().flat_map(move |&n| (0..cfg.trials).map(move |i| (s, n, si as u64 * cfg.trials + i)))
        })
        .collect();
    let rows: Vec<DecoupleRow> = units
        .par_iter()
        .map(|&(seed, n, instance)| decouple_instance(cfg, seed, n, instance))
        .collect::<critlab_core::Result<_>>()?;

    let mut table = CsvTable::new("decouple-check.csv", HEADER);
    let mut worst = 0.0f64;
    for r in &rows {
        worst = worst.max(r.rel_err);
        table.push(&[r.n.to_string(), r.k.to_string(), r.instance.to_string(), num(r.abs_h), num(r.abs_product), num(r.rel_err)]);
    }
    let verdict = Verdict::new(
        "decoupling_identity",
        worst < REL_TOL,
        format!("max rel_err {worst:.3e} over {} instances (need < {REL_TOL:e})", rows.len()),
    );
    let mut out = ExperimentOutput { tables: vec![table], verdicts: vec![verdict], ..Default::default() };
    out.summary.insert("max_rel_err".into(), json!(worst));
    out.summary.insert("instances".into(), json!(rows.len()));
    Ok(out)
}
