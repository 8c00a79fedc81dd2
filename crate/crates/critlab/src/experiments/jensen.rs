use critlab_core::mobius::{jensen_audit, sample_mobius, AuditRejection, JensenAudit, MobiusTransform};
use critlab_core::rootfinding::certify;
use critlab_core::sampling::{domain, keyed_rng};
use critlab_core::{derivative_zeros, RootSet, SampleStream};
use rayon::prelude::*;
use serde_json::json;

use super::{aberth_for, seed_n_units};
use crate::config::ExperimentConfig;
use crate::output::{num, CsvTable, ExperimentOutput, Verdict};

pub const HEADER: &str = "seed,n,k,psi_id,lhs,rhs_max,rhs_center,slack,rejected";
pub const SLACK_FLOOR: f64 = -2e-3;

pub fn rejection_name(r: Option<AuditRejection>) -> &'static str {
    match r {
        None => "none",
        Some(AuditRejection::NotConverged) => "not_converged",
        Some(AuditRejection::Coincidence) => "coincidence",
        Some(AuditRejection::CenterAtInfinity) => "center_at_infinity",
        Some(AuditRejection::NonFinite) => "non_finite",
    }
}

/// The Möbius map with id `psi_id` for instance `(seed, n)`.
pub fn psi_for(seed: u64, n: usize, psi_id: u64) -> MobiusTransform<f64> {
    sample_mobius(&mut keyed_rng(seed, domain::MOBIUS, ((n as u64) << 32) | psi_id))
}

/// Both sides of the Jensen bound for `trials` random maps per `(seed, n)`.
pub fn run_jensen_audit(cfg: &ExperimentConfig) -> critlab_core::Result<ExperimentOutput> {
    let units = seed_n_units(cfg);
    let results: Vec<Vec<Result<JensenAudit<f64>, AuditRejection>>> = units
        .par_iter()
        .map(|&(seed, n)| {
            let stream = SampleStream::new(cfg.distribution.clone(), seed)?;
            let roots: RootSet<f64> = stream.sample_prefix(n);
            let mut zeros = derivative_zeros(&roots, cfg.k, &aberth_for(seed, n))?;
            zeros.converged = zeros.converged && certify(&roots, cfg.k, &zeros).passed();
            Ok((0..cfg.trials)
                .into_par_iter()
                .map(|psi_id| jensen_audit(&roots, cfg.k, &psi_for(seed, n, psi_id), &zeros, cfg.params.grid))
                .collect())
        })
        .collect::<critlab_core::Result<_>>()?;

    let mut table = CsvTable::new("jensen-audit.csv", HEADER);
    let (mut accepted, mut unstabilized) = (0usize, 0usize);
    let mut min_slack = f64::INFINITY;
    for (&(seed, n), audits) in units.iter().zip(&results) {
        for (psi_id, audit) in audits.iter().enumerate() {
            let (vals, rejected) = match audit {
                Ok(a) => {
                    accepted += 1;
                    unstabilized += usize::from(!a.stabilized);
                    min_slack = min_slack.min(a.slack);
                    ([a.lhs, a.rhs_max_term, a.rhs_center_term, a.slack], None)
                }
                Err(r) => ([f64::NAN; 4], Some(*r)),
            };
            table.push(&[
                seed.to_string(),
                n.to_string(),
                cfg.k.to_string(),
                psi_id.to_string(),
                num(vals[0]),
                num(vals[1]),
                num(vals[2]),
                num(vals[3]),
                rejection_name(rejected).to_string(),
            ]);
        }
    }
    let total = table.rows.len();
    let verdict = Verdict::new(
        "jensen_slack",
        accepted > 0 && min_slack >= SLACK_FLOOR,
        format!("{accepted} of {total} instances accepted; min slack {min_slack:.3e} (floor {SLACK_FLOOR:e})"),
    );
    let mut out = ExperimentOutput { tables: vec![table], verdicts: vec![verdict], ..Default::default() };
    out.summary.insert("accepted".into(), json!(accepted));
    out.summary.insert("rejected".into(), json!(total - accepted));
    out.summary.insert("min_slack".into(), json!(min_slack));
    out.summary.insert("unstabilized_grids".into(), json!(unstabilized));
    Ok(out)
}
