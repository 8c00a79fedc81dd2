//! The six experiments. Each runner splits its work into independent units,
//! evaluates them in parallel and emits rows in canonical
//! `(seed, n, instance)` order.

mod convergence;
mod decouple;
mod jensen;
mod lln;
mod maxlog;
mod smallball;

pub use convergence::run_convergence;
pub use decouple::run_decouple_check;
pub use jensen::run_jensen_audit;
pub use lln::run_lln;
pub use maxlog::run_maxlog;
pub use smallball::run_smallball;

use critlab_core::sampling::mix64;
use critlab_core::AberthOptions;

use crate::config::{Experiment, ExperimentConfig};
use crate::output::ExperimentOutput;

pub fn run(cfg: &ExperimentConfig) -> critlab_core::Result<ExperimentOutput> {
    match cfg.experiment {
        Experiment::Convergence => run_convergence(cfg),
        Experiment::JensenAudit => run_jensen_audit(cfg),
        Experiment::Smallball => run_smallball(cfg),
        Experiment::DecoupleCheck => run_decouple_check(cfg),
        Experiment::Maxlog => run_maxlog(cfg),
        Experiment::Lln => run_lln(cfg),
    }
}

/// Root-finder options for the instance `(seed, n)`.
fn aberth_for(seed: u64, n: usize) -> AberthOptions {
    AberthOptions { seed: mix64(seed) ^ n as u64, ..AberthOptions::default() }
}

/// Every `(seed, n)` pair in canonical order.
fn seed_n_units(cfg: &ExperimentConfig) -> Vec<(u64, usize)> {
    cfg.seeds.iter().flat_map(|&s| cfg.n_list.iter().map(move |&n| (s, n))).collect()
}
