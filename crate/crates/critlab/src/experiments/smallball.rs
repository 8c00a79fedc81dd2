use critlab_core::anticoncentration::{
    central_binomial_probability, cluster_points, estimate_joint_small_ball, estimate_linear_small_ball,
    SmallBallEstimate, StepDistribution,
};
use critlab_core::stats::log_log_slope;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{num, CsvTable, ExperimentOutput, Verdict};

pub const HEADER: &str = "n,L,k,trials,hits,p_hat,ci_low,ci_high";
pub const LINEAR_HEADER: &str = "d,n,radius,trials,hits,p_hat,ci_low,ci_high";
/// `n` of the exact binomial cross-check.
pub const BINOMIAL_N: usize = 100;

/// Ball radius for the `d`-dimensional walk; chosen so that the ball holds
/// enough lattice points for a stable hit count.
pub fn linear_radius(d: usize) -> f64 {
    match d {
        1 => 1.0,
        2 => 2.0,
        _ => 4.0,
    }
}

/// Slope tolerance for dimension `d`.
pub fn slope_tolerance(d: usize) -> f64 {
    match d {
        1 => 0.15,
        2 => 0.2,
        _ => 0.25,
    }
}

/// Joint small-ball decay in `n`, plus the linear-rate companion table.
pub fn run_smallball(cfg: &ExperimentConfig) -> critlab_core::Result<ExperimentOutput> {
    let seed = cfg.seeds[0];
    let points = cluster_points(cfg.params.center, cfg.params.spread, cfg.points());
    let joint: Vec<SmallBallEstimate> = cfg
        .n_list
        .iter()
        .map(|&n| estimate_joint_small_ball(&cfg.distribution, n, cfg.k, &points, cfg.params.threshold, cfg.trials, seed))
        .collect::<critlab_core::Result<_>>()?;

    let mut table = CsvTable::new("smallball.csv", HEADER);
    for e in &joint {
        table.push(&[
            e.n.to_string(),
            e.l.to_string(),
            cfg.k.to_string(),
            e.trials.to_string(),
            e.hits.to_string(),
            num(e.p_hat),
            num(e.ci_low),
            num(e.ci_high),
        ]);
    }
    let mut verdicts = vec![decay_verdict(&joint)];

    let mut linear = CsvTable::new("smallball_linear.csv", LINEAR_HEADER);
    let mut slopes = Vec::new();
    for d in 1..=3 {
        let mut ns = cfg.params.linear_n_list.clone();
        if d == 1 && !ns.contains(&BINOMIAL_N) {
            ns.push(BINOMIAL_N);
            ns.sort_unstable();
        }
        let mut fit = Vec::new();
        for &n in &ns {
            let e = estimate_linear_small_ball(d, n, StepDistribution::Rademacher, linear_radius(d), cfg.trials, seed)?;
            linear.push(&[
                d.to_string(),
                n.to_string(),
                num(linear_radius(d)),
                e.trials.to_string(),
                e.hits.to_string(),
                num(e.p_hat),
                num(e.ci_low),
                num(e.ci_high),
            ]);
            if d == 1 && n == BINOMIAL_N {
                let exact = central_binomial_probability(n);
                verdicts.push(Verdict::new(
                    "linear_binomial_n100",
                    e.contains(exact),
                    format!("p_hat {:.5} in [{:.5}, {:.5}], exact {exact:.5}", e.p_hat, e.ci_low, e.ci_high),
                ));
            }
            if cfg.params.linear_n_list.contains(&n) {
                fit.push(e);
            }
        }
        verdicts.push(slope_verdict(d, &fit));
        if let Some(s) = fitted_slope(&fit) {
            slopes.push(json!({"d": d, "slope": s}));
        }
    }

    let mut out = ExperimentOutput { tables: vec![table, linear], verdicts, ..Default::default() };
    out.summary.insert("joint_p_hat".into(), json!(joint.iter().map(|e| json!({"n": e.n, "p_hat": e.p_hat})).collect::<Vec<_>>()));
    out.summary.insert("linear_slopes".into(), json!(slopes));
    Ok(out)
}

/// `p_hat` non-increasing up to overlapping confidence intervals.
pub fn decay_verdict(estimates: &[SmallBallEstimate]) -> Verdict {
    let ok = estimates.windows(2).all(|w| w[1].ci_low <= w[0].ci_high);
    let detail = estimates.iter().map(|e| format!("n={}: {} hits", e.n, e.hits)).collect::<Vec<_>>().join("; ");
    Verdict::new("joint_decay", ok, detail)
}

fn fitted_slope(fit: &[SmallBallEstimate]) -> Option<f64> {
    if fit.len() < 2 || fit.iter().any(|e| e.hits == 0) {
        return None;
    }
    let n: Vec<f64> = fit.iter().map(|e| e.n as f64).collect();
    let p: Vec<f64> = fit.iter().map(|e| e.p_hat).collect();
    Some(log_log_slope(&n, &p))
}

pub fn slope_verdict(d: usize, fit: &[SmallBallEstimate]) -> Verdict {
    let name = format!("linear_slope_d{d}");
    let target = -(d as f64) / 2.0;
    let tol = slope_tolerance(d);
    match fitted_slope(fit) {
        None => Verdict::new(name, false, "need at least two n values with hits"),
        Some(s) => Verdict::new(name, (s - target).abs() <= tol, format!("slope {s:.4}, target {target} ± {tol}")),
    }
}
