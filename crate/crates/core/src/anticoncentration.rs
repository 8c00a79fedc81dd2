//! Decoupling and small-ball estimates for `S_n`.
//!
//! `[n]` is cut into `k` blocks `R_1, …, R_k`. For a root vector `Y`, an
//! independent copy `Y′` and `α ⊂ [k]`, `Y^α` takes block `j` from `Y` when
//! `j ∈ α` and from `Y′` otherwise. The alternating sum
//!
//! ```text
//! h = Σ_α (−1)^{k−|α|} S_n(z; Y^α)
//! ```
//!
//! keeps only the `k`-subsets meeting every block once, and factors as
//! `∏_i Σ_{j∈R_i} (1/(z − Y_j) − 1/(z − Y′_j))`.
//!
//! Subsets `α` are bit masks: bit `j` set means block `j` comes from `Y`.

use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};
use num_traits::One;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::compensated::ComplexDw;
use crate::error::{Error, Result};
use crate::polynomial::{sn_value, RootSet};
use crate::sampling::{domain, keyed_rng, RootDistribution};
use crate::scalar::{cast_complex, Scalar};
use crate::stats::{wilson_interval, Z95};

/// Largest configuration space walked by the exact enumerations.
pub const ENUMERATION_LIMIT: u64 = 1 << 20;
pub const MIN_TRIALS: u64 = 10_000;

/// Contiguous balanced blocks covering `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    n: usize,
    blocks: Vec<Range<usize>>,
}

/// Blocks of size `⌈n/k⌉` first, then `⌊n/k⌋`.
pub fn make_partition(n: usize, k: usize) -> Result<Partition> {
    if k == 0 || k > n {
        return Err(Error::InvalidPartition { n, k });
    }
    let (base, extra) = (n / k, n % k);
    let mut blocks = Vec::with_capacity(k);
    let mut start = 0;
    for j in 0..k {
        let len = base + usize::from(j < extra);
        blocks.push(start..start + len);
        start += len;
    }
    Ok(Partition { n, blocks })
}

impl Partition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.blocks.iter().position(|b| b.contains(&i)).expect("index out of range")
    }
}

/// `(Y, Y′, partition, z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoupledInstance<T> {
    pub y: RootSet<T>,
    pub y_prime: RootSet<T>,
    pub partition: Partition,
    pub z: Complex<T>,
}

impl<T: Scalar> DecoupledInstance<T> {
    pub fn new(y: RootSet<T>, y_prime: RootSet<T>, partition: Partition, z: Complex<T>) -> Result<Self> {
        if y.len() != y_prime.len() {
            return Err(Error::SizeMismatch(y.len(), y_prime.len()));
        }
        if y.len() != partition.n() {
            return Err(Error::SizeMismatch(y.len(), partition.n()));
        }
        Ok(Self { y, y_prime, partition, z })
    }

    /// `Y` and `Y′` as `2n` consecutive draws from `dist`.
    pub fn sample<R: Rng + ?Sized>(dist: &RootDistribution, n: usize, k: usize, z: Complex<T>, rng: &mut R) -> Result<Self> {
        let partition = make_partition(n, k)?;
        let y = RootSet::new(dist.sample_n(rng, n))?;
        let y_prime = RootSet::new(dist.sample_n(rng, n))?;
        Self::new(y, y_prime, partition, z)
    }

    pub fn k(&self) -> usize {
        self.partition.k()
    }

    /// The roots of `Y^α`.
    pub fn mixed(&self, alpha: u32) -> Vec<Complex<T>> {
        let mut out = Vec::with_capacity(self.y.len());
        for (j, block) in self.partition.blocks().iter().enumerate() {
            let src = if alpha >> j & 1 == 1 { &self.y } else { &self.y_prime };
            out.extend_from_slice(&src.roots()[block.clone()]);
        }
        out
    }
}

fn full_mask(k: usize) -> u32 {
    ((1u64 << k) - 1) as u32
}

/// `S_n(w; Y^α)` with `S_n` of order `k = partition.k()`.
pub fn sn_alpha_at<T: Scalar>(inst: &DecoupledInstance<T>, alpha: u32, w: Complex<T>) -> Result<Complex<T>> {
    let v = sn_value(&inst.mixed(alpha), w, inst.k());
    if v.is_pole {
        return Err(Error::Pole);
    }
    Ok(v.value)
}

/// `S_n(z; Y^α)`.
pub fn sn_alpha<T: Scalar>(inst: &DecoupledInstance<T>, alpha: u32) -> Result<Complex<T>> {
    sn_alpha_at(inst, alpha, inst.z)
}

/// `1/(w − r)` for every root, or [`Error::Pole`] under the same rule as
/// [`sn_value`].
fn reciprocals<T: Scalar>(roots: &[Complex<T>], w: Complex<T>) -> Result<Vec<Complex<T>>> {
    let tol = T::pole_rtol() * (T::one() + w.norm());
    roots
        .iter()
        .map(|r| {
            let d = w - r;
            if d.norm() < tol || d.norm() < T::overflow_guard() {
                Err(Error::Pole)
            } else {
                Ok(d.inv())
            }
        })
        .collect()
}

/// `Σ_α (−1)^{k−|α|} S_n(w; Y^α)`.
///
/// The `2^k` terms can be many orders of magnitude larger than the sum, so
/// each `e_k` recurrence and the alternating sum run in double-word
/// arithmetic over the rounded reciprocals `1/(w − Y_j)`, `1/(w − Y′_j)`.
/// The result is then accurate relative to `|h|` rather than to the terms.
pub fn decoupled_h_at<T: Scalar>(inst: &DecoupledInstance<T>, w: Complex<T>) -> Result<Complex<T>> {
    let k = inst.k();
    let from_y = reciprocals(inst.y.roots(), w)?;
    let from_y_prime = reciprocals(inst.y_prime.roots(), w)?;
    let mut h = ComplexDw::default();
    let mut e = vec![ComplexDw::default(); k + 1];
    for alpha in 0..=full_mask(k) {
        e.fill(ComplexDw::default());
        e[0] = ComplexDw::from_value(Complex::one());
        for (b, block) in inst.partition.blocks().iter().enumerate() {
            let src = if alpha >> b & 1 == 1 { &from_y } else { &from_y_prime };
            for &x in &src[block.clone()] {
                for j in (1..=k).rev() {
                    e[j] = e[j].add(e[j - 1].mul_value(x));
                }
            }
        }
        h = if (k as u32 - alpha.count_ones()) % 2 == 0 { h.add(e[k]) } else { h.sub(e[k]) };
    }
    Ok(h.value())
}

pub fn decoupled_h<T: Scalar>(inst: &DecoupledInstance<T>) -> Result<Complex<T>> {
    decoupled_h_at(inst, inst.z)
}

/// `Σ_{j∈R_b} (1/(w − Y_j) − 1/(w − Y′_j))`, accumulated in double-word
/// arithmetic so that exact cancellation gives exactly zero.
pub fn block_difference<T: Scalar>(inst: &DecoupledInstance<T>, block: usize, w: Complex<T>) -> Result<Complex<T>> {
    let range = inst.partition.blocks()[block].clone();
    let a = reciprocals(&inst.y.roots()[range.clone()], w)?;
    let b = reciprocals(&inst.y_prime.roots()[range], w)?;
    let acc = a.iter().zip(&b).fold(ComplexDw::default(), |acc, (x, y)| acc.add_value(*x).sub_value(*y));
    Ok(acc.value())
}

pub fn product_form_at<T: Scalar>(inst: &DecoupledInstance<T>, w: Complex<T>) -> Result<Complex<T>> {
    (0..inst.k()).try_fold(Complex::one(), |acc, b| Ok(acc * block_difference(inst, b, w)?))
}

pub fn product_form<T: Scalar>(inst: &DecoupledInstance<T>) -> Result<Complex<T>> {
    product_form_at(inst, inst.z)
}

/// A block `ℓ` (0-based) whose difference sum has modulus at most 2 at
/// every `z_i`, `i ∈ indices`.
#[derive(Clone, Debug, PartialEq)]
pub struct PigeonholeWitness {
    pub block: usize,
    pub indices: Vec<usize>,
    /// `|block difference|` at each listed point.
    pub moduli: Vec<f64>,
}

/// Given `|S_n(z_i; Y^α)| ≤ 1` for every `α` and every `i`, some block has
/// small difference sums on at least `⌈L/k⌉` of the points.
pub fn pigeonhole_witness<T: Scalar>(inst: &DecoupledInstance<T>, points: &[Complex<T>]) -> Result<PigeonholeWitness> {
    let k = inst.k();
    for (i, &w) in points.iter().enumerate() {
        for alpha in 0..=full_mask(k) {
            let v = sn_value(&inst.mixed(alpha), w, k);
            let m = v.abs();
            if !(m <= T::one()) {
                return Err(Error::HypothesisNotSatisfied { point: i, subset: alpha, value: m.as_f64() });
            }
        }
    }
    let bound = T::lit(2.0 * (1.0 + 1e-12));
    let mut best: Option<PigeonholeWitness> = None;
    for block in 0..k {
        let mut indices = Vec::new();
        let mut moduli = Vec::new();
        for (i, &w) in points.iter().enumerate() {
            let m = block_difference(inst, block, w)?.norm();
            if m <= bound {
                indices.push(i);
                moduli.push(m.as_f64());
            }
        }
        if best.as_ref().is_none_or(|b| indices.len() > b.indices.len()) {
            best = Some(PigeonholeWitness { block, indices, moduli });
        }
    }
    let best = best.expect("k ≥ 1");
    if best.indices.len() < points.len().div_ceil(k) {
        return Err(Error::NotConverged);
    }
    Ok(best)
}

/// A Monte Carlo (or exact) probability with its 95% Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallBallEstimate {
    pub n: usize,
    /// Number of evaluation points, or the dimension for linear sums.
    pub l: usize,
    pub trials: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SmallBallEstimate {
    pub fn from_counts(n: usize, l: usize, trials: u64, hits: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(hits, trials, Z95);
        let p_hat = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        Self { n, l, trials, hits, p_hat, ci_low, ci_high }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    Ok(())
}

fn count_hits(trials: u64, hit: impl Fn(u64) -> bool + Sync) -> u64 {
    (0..trials).into_par_iter().filter(|&t| hit(t)).count() as u64
}

fn small(roots: &[Complex64], z: Complex64, k: usize, radius: f64) -> bool {
    // a pole has |S_n| = +∞, so the event is false there
    let v = sn_value(roots, z, k);
    !v.is_pole && v.value.norm() <= radius
}

/// Both sides of the decoupling inequality `P(E) ≤ P(⋀_α E(Y^α))^{1/2^k}` for
/// `E = {|S_n(z)| ≤ radius}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CtvCheck {
    pub k: usize,
    pub lhs: SmallBallEstimate,
    pub rhs: SmallBallEstimate,
    /// `lhs.ci_low ≤ rhs.ci_high^{1/2^k}`.
    pub holds: bool,
}

impl CtvCheck {
    pub fn from_estimates(k: usize, lhs: SmallBallEstimate, rhs: SmallBallEstimate) -> Self {
        let holds = lhs.ci_low <= rhs.ci_high.powf(1.0 / (1u64 << k) as f64);
        Self { k, lhs, rhs, holds }
    }
}

fn all_mixed_small(inst: &DecoupledInstance<f64>, radius: f64) -> bool {
    (0..=full_mask(inst.k())).all(|alpha| small(&inst.mixed(alpha), inst.z, inst.k(), radius))
}

/// Monte Carlo estimate of both sides; trial `t` draws `Y` then `Y′` from
/// its own stream.
pub fn ctv_check(
    k: usize,
    n: usize,
    dist: &RootDistribution,
    z: Complex64,
    event_radius: f64,
    trials: u64,
    seed: u64,
) -> Result<CtvCheck> {
    check_trials(trials)?;
    dist.validate()?;
    make_partition(n, k)?;
    let outcomes: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = keyed_rng(seed, domain::TRIALS, t);
            let inst = DecoupledInstance::sample(dist, n, k, z, &mut rng).expect("validated");
            let lhs = small(inst.y.roots(), z, k, event_radius);
            (lhs, lhs && all_mixed_small(&inst, event_radius))
        })
        .collect();
    let lhs_hits = outcomes.iter().filter(|o| o.0).count() as u64;
    let rhs_hits = outcomes.iter().filter(|o| o.1).count() as u64;
    Ok(CtvCheck::from_estimates(
        k,
        SmallBallEstimate::from_counts(n, 1, trials, lhs_hits),
        SmallBallEstimate::from_counts(n, 1, trials, rhs_hits),
    ))
}

/// Calls `f(config, probability)` for every ordered `n`-tuple of atoms.
pub fn for_each_configuration(atoms: &[(Complex64, f64)], n: usize, mut f: impl FnMut(&[Complex64], f64)) -> Result<()> {
    let s = atoms.len() as u64;
    let size = (0..n).try_fold(1u64, |acc, _| acc.checked_mul(s).filter(|&v| v <= ENUMERATION_LIMIT));
    let Some(size) = size else {
        return Err(Error::MeasureTooLarge { size: usize::MAX, limit: ENUMERATION_LIMIT as usize });
    };
    let mut digits = vec![0usize; n];
    let mut config = vec![atoms[0].0; n];
    for _ in 0..size {
        let mut p = 1.0;
        for (i, &d) in digits.iter().enumerate() {
            config[i] = atoms[d].0;
            p *= atoms[d].1;
        }
        f(&config, p);
        for d in digits.iter_mut() {
            *d += 1;
            if *d < atoms.len() {
                break;
            }
            *d = 0;
        }
    }
    Ok(())
}

fn finite_atoms(dist: &RootDistribution) -> Result<Vec<(Complex64, f64)>> {
    dist.atoms().ok_or_else(|| Error::InvalidDistribution("exact enumeration needs finite support".into()))
}

/// Exact `(lhs, rhs)` of [`ctv_check`] for finitely supported μ, summing over
/// all `s^{2n}` configurations of `(Y, Y′)`.
pub fn ctv_exact(k: usize, n: usize, dist: &RootDistribution, z: Complex64, event_radius: f64) -> Result<(f64, f64)> {
    let atoms = finite_atoms(dist)?;
    let partition = make_partition(n, k)?;
    let mut lhs = 0.0;
    for_each_configuration(&atoms, n, |y, p| {
        if small(y, z, k, event_radius) {
            lhs += p;
        }
    })?;
    let mut rhs = 0.0;
    for_each_configuration(&atoms, 2 * n, |both, p| {
        let inst = DecoupledInstance {
            y: RootSet::from_vec_unchecked(both[..n].to_vec()),
            y_prime: RootSet::from_vec_unchecked(both[n..].to_vec()),
            partition: partition.clone(),
            z,
        };
        if all_mixed_small(&inst, event_radius) {
            rhs += p;
        }
    })?;
    Ok((lhs, rhs))
}

/// Outcome of the affine-span test on `(1/(z_j − Z) − 1/(z_j − Z′))_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankTest {
    pub rank: usize,
    pub degenerate: bool,
    /// Draws thrown away because `Z` or `Z′` hit some `z_j`.
    pub discarded: usize,
}

/// Rank of the centred `m × 2L` real sample matrix, with singular values
/// below `1e-8 σ_max` treated as zero.
pub fn nondegeneracy_rank_test(dist: &RootDistribution, points: &[Complex64], m: usize, seed: u64) -> Result<RankTest> {
    dist.validate()?;
    let l = points.len();
    if l == 0 {
        return Err(Error::InvalidArgument("no evaluation points".into()));
    }
    if m < 4 * l {
        return Err(Error::InvalidArgument(format!("need m ≥ 4L = {}, got {m}", 4 * l)));
    }
    for i in 0..l {
        for j in i + 1..l {
            if points[i] == points[j] {
                return Err(Error::InvalidArgument(format!("points {i} and {j} coincide")));
            }
        }
    }
    let mut rng = keyed_rng(seed, domain::TRIALS, 0);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut discarded = 0;
    while rows.len() < m {
        let (a, b) = (dist.sample(&mut rng), dist.sample(&mut rng));
        let hit = points.iter().any(|p| (p - a).norm() < 1e-12 || (p - b).norm() < 1e-12);
        if hit {
            discarded += 1;
            if discarded > 1000 * m {
                return Err(Error::InvalidDistribution("samples keep landing on the evaluation points".into()));
            }
            continue;
        }
        let mut row = Vec::with_capacity(2 * l);
        for p in points {
            let v = (p - a).inv() - (p - b).inv();
            row.push(v.re);
            row.push(v.im);
        }
        rows.push(row);
    }
    let mut mat = DMatrix::from_fn(m, 2 * l, |i, j| rows[i][j]);
    for j in 0..2 * l {
        let mean = mat.column(j).mean();
        mat.column_mut(j).add_scalar_mut(-mean);
    }
    let sv = mat.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let rank = if smax == 0.0 { 0 } else { sv.iter().filter(|&&s| s > 1e-8 * smax).count() };
    Ok(RankTest { rank, degenerate: rank < 2 * l, discarded })
}

/// Step law for the linear small-ball estimate. Steps are real vectors in
/// `R^d ⊂ C^d` with independent coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepDistribution {
    Rademacher,
    Gaussian,
}

fn rademacher_sum<R: Rng + ?Sized>(rng: &mut R, n: usize) -> i64 {
    let mut ones = 0u32;
    let mut left = n;
    while left > 0 {
        let take = left.min(64);
        let word: u64 = rng.random();
        let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
        ones += (word & mask).count_ones();
        left -= take;
    }
    2 * ones as i64 - n as i64
}

/// `P(‖Σ_{i≤n} X_i‖ ≤ radius)` for i.i.d. steps `X_i`.
pub fn estimate_linear_small_ball(
    d: usize,
    n: usize,
    step: StepDistribution,
    radius: f64,
    trials: u64,
    seed: u64,
) -> Result<SmallBallEstimate> {
    check_trials(trials)?;
    if d == 0 || n == 0 {
        return Err(Error::InvalidArgument("dimension and n must be positive".into()));
    }
    let r2 = radius * radius;
    let hits = count_hits(trials, |t| {
        let mut rng = keyed_rng(seed, domain::TRIALS, t);
        let mut norm2 = 0.0;
        for _ in 0..d {
            let coord = match step {
                StepDistribution::Rademacher => rademacher_sum(&mut rng, n) as f64,
                StepDistribution::Gaussian => (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).sum(),
            };
            norm2 += coord * coord;
        }
        norm2 <= r2
    });
    Ok(SmallBallEstimate::from_counts(n, d, trials, hits))
}

/// `P(|S_n(z_j)| ≤ threshold for all j)`; a pole makes the event false.
pub fn estimate_joint_small_ball(
    dist: &RootDistribution,
    n: usize,
    k: usize,
    points: &[Complex64],
    threshold: f64,
    trials: u64,
    seed: u64,
) -> Result<SmallBallEstimate> {
    check_trials(trials)?;
    dist.validate()?;
    if k == 0 || k > n {
        return Err(Error::InvalidOrder { k, n });
    }
    let hits = count_hits(trials, |t| {
        let mut rng = keyed_rng(seed, domain::TRIALS, t);
        let roots: Vec<Complex64> = dist.sample_n(&mut rng, n);
        points.iter().all(|&z| small(&roots, z, k, threshold))
    });
    Ok(SmallBallEstimate::from_counts(n, points.len(), trials, hits))
}

/// Exact joint small-ball probability for finitely supported μ.
pub fn joint_small_ball_exact(
    dist: &RootDistribution,
    n: usize,
    k: usize,
    points: &[Complex64],
    threshold: f64,
) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::InvalidOrder { k, n });
    }
    let atoms = finite_atoms(dist)?;
    let mut p = 0.0;
    for_each_configuration(&atoms, n, |roots, w| {
        if points.iter().all(|&z| small(roots, z, k, threshold)) {
            p += w;
        }
    })?;
    Ok(p)
}

/// `L` points on a circle of radius `spread` about `center`.
pub fn cluster_points<T: Scalar>(center: Complex<T>, spread: T, l: usize) -> Vec<Complex<T>> {
    (0..l)
        .map(|j| {
            let theta = T::TAU() * T::from_usize(j).unwrap() / T::from_usize(l).unwrap();
            center + Complex::from_polar(spread, theta)
        })
        .collect()
}

/// `C(n, n/2) / 2^n` for even `n`, the exact `P(S = 0)` of a simple walk.
pub fn central_binomial_probability(n: usize) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    let half = n / 2;
    // log C(n, n/2) − n log 2, accumulated to stay finite for large n
    let mut log_p = -(n as f64) * std::f64::consts::LN_2;
    for i in 1..=half {
        log_p += ((half + i) as f64).ln() - (i as f64).ln();
    }
    log_p.exp()
}

/// Casts a double-precision instance to another scalar type.
pub fn cast_instance<T: Scalar>(inst: &DecoupledInstance<f64>) -> DecoupledInstance<T> {
    let cast = |r: &RootSet<f64>| RootSet::from_vec_unchecked(r.iter().map(|z| cast_complex(*z)).collect());
    DecoupledInstance {
        y: cast(&inst.y),
        y_prime: cast(&inst.y_prime),
        partition: inst.partition.clone(),
        z: cast_complex(inst.z),
    }
}
