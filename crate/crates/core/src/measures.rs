//! Empirical measures of roots and derivative zeros, and distances between
//! them.
//!
//! Weak convergence is metrized by the sliced Wasserstein-1 distance: the
//! average over projection angles θ of the one-dimensional W1 distance
//! between the pushforwards under `z ↦ Re(e^{−iθ} z)`. Exact planar W1 via an
//! optimal assignment is available for small equal-size point sets.

use std::time::Instant;

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mobius::Extended;
use crate::polynomial::RootSet;
use crate::rootfinding::{certify, derivative_zeros, AberthOptions, RootFindResult};
use crate::sampling::{domain, keyed_rng, mix64, SampleStream};
use crate::scalar::Scalar;

pub const EXACT_W1_LIMIT: usize = 512;
pub const DEFAULT_REFERENCE_SIZE: usize = 1 << 14;
pub const DEFAULT_DIRECTIONS: usize = 128;

/// Uniform probability measure on a multiset of points.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure<T> {
    points: Vec<Complex<T>>,
}

impl<T: Scalar> EmpiricalMeasure<T> {
    pub fn new(points: Vec<Complex<T>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mass of each atom.
    pub fn weight(&self) -> T {
        T::one() / T::from_usize(self.points.len()).unwrap()
    }

    pub fn total_mass(&self) -> T {
        self.weight() * T::from_usize(self.points.len()).unwrap()
    }
}

/// `μ_n`, the empirical measure of the roots.
pub fn mu_n<T: Scalar>(roots: &RootSet<T>) -> EmpiricalMeasure<T> {
    EmpiricalMeasure { points: roots.roots().to_vec() }
}

/// `ν_n^(k)`, the empirical measure of the zeros of `P_n^(k)`.
pub fn nu_nk<T: Scalar>(roots: &RootSet<T>, k: usize, zeros: &RootFindResult<T>) -> Result<EmpiricalMeasure<T>> {
    if !zeros.converged {
        return Err(Error::NotConverged);
    }
    if k == 0 || zeros.zeros.len() + k != roots.len() {
        return Err(Error::InvalidOrder { k, n: roots.len() });
    }
    EmpiricalMeasure::new(zeros.zeros.clone())
}

/// One-dimensional W1 between two sorted samples with uniform weights,
/// `∫ |F⁻¹(u) − G⁻¹(u)| du` over the merged quantile breakpoints.
pub fn w1_sorted<T: Scalar>(a: &[T], b: &[T]) -> T {
    let (na, nb) = (a.len(), b.len());
    // breakpoints i/na and j/nb compared exactly as i*nb vs j*na
    let (mut i, mut j) = (0usize, 0usize);
    let mut last = 0usize;
    let mut acc = T::zero();
    let scale = T::from_usize(na * nb).unwrap();
    while i < na && j < nb {
        let next_a = (i + 1) * nb;
        let next_b = (j + 1) * na;
        let next = next_a.min(next_b);
        acc += (a[i] - b[j]).abs() * T::from_usize(next - last).unwrap();
        last = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    acc / scale
}

fn sorted<T: Scalar>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

/// `n` projection angles, uniform on `[0, 2π)`, fixed by `seed`.
pub fn projection_angles<T: Scalar>(n: usize, seed: u64) -> Vec<T> {
    let mut rng = keyed_rng(seed, domain::DIRECTIONS, 0);
    (0..n).map(|_| T::lit(rng.random::<f64>() * std::f64::consts::TAU)).collect()
}

fn project_plane<T: Scalar>(m: &EmpiricalMeasure<T>, theta: T) -> Vec<T> {
    let (s, c) = theta.sin_cos();
    sorted(m.points.iter().map(|z| z.re * c + z.im * s).collect())
}

/// Sliced W1 over the given projection angles.
pub fn sliced_w1_with_angles<T: Scalar>(m1: &EmpiricalMeasure<T>, m2: &EmpiricalMeasure<T>, angles: &[T]) -> T {
    let total: T = angles.iter().map(|&theta| w1_sorted(&project_plane(m1, theta), &project_plane(m2, theta))).sum();
    total / T::from_usize(angles.len().max(1)).unwrap()
}

/// Sliced W1 with `n_directions` random angles derived from `seed`.
pub fn sliced_w1<T: Scalar>(m1: &EmpiricalMeasure<T>, m2: &EmpiricalMeasure<T>, n_directions: usize, seed: u64) -> T {
    sliced_w1_with_angles(m1, m2, &projection_angles(n_directions.max(1), seed))
}

/// Inverse stereographic projection onto the unit sphere; `∞` goes to the
/// north pole.
pub fn lift_to_sphere<T: Scalar>(z: Extended<T>) -> [T; 3] {
    match z {
        Extended::Infinity => [T::zero(), T::zero(), T::one()],
        Extended::Finite(z) => {
            let r2 = z.norm_sqr();
            if !r2.is_finite() {
                return [T::zero(), T::zero(), T::one()];
            }
            let d = T::one() + r2;
            let two = T::lit(2.0);
            [two * z.re / d, two * z.im / d, (r2 - T::one()) / d]
        }
    }
}

/// `2|z − w| / √((1 + |z|²)(1 + |w|²))`, the Euclidean distance between the
/// lifts to the unit sphere.
pub fn chordal_metric<T: Scalar>(z: Extended<T>, w: Extended<T>) -> T {
    match (z, w) {
        (Extended::Infinity, Extended::Infinity) => T::zero(),
        (Extended::Finite(a), Extended::Infinity) | (Extended::Infinity, Extended::Finite(a)) => {
            T::lit(2.0) / (T::one() + a.norm_sqr()).sqrt()
        }
        (Extended::Finite(a), Extended::Finite(b)) => {
            let d = T::lit(2.0) * (a - b).norm() / ((T::one() + a.norm_sqr()) * (T::one() + b.norm_sqr())).sqrt();
            d.min(T::lit(2.0))
        }
    }
}

fn chordal_directions<T: Scalar>(n: usize, seed: u64) -> Vec<[T; 3]> {
    let mut rng = keyed_rng(seed, domain::DIRECTIONS, 1);
    (0..n)
        .map(|_| {
            let v: [f64; 3] = [0; 3].map(|_| rng.sample::<f64, _>(StandardNormal));
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            v.map(|x| T::lit(x / norm))
        })
        .collect()
}

fn lift<T: Scalar>(m: &EmpiricalMeasure<T>) -> Vec<[T; 3]> {
    m.points.iter().map(|z| lift_to_sphere(Extended::Finite(*z))).collect()
}

fn project_3d<T: Scalar>(l: &[[T; 3]], u: &[T; 3]) -> Vec<T> {
    sorted(l.iter().map(|p| p[0] * u[0] + p[1] * u[1] + p[2] * u[2]).collect())
}

/// Sliced W1 of the lifts to the unit sphere, over random directions in R³.
pub fn sliced_w1_chordal<T: Scalar>(m1: &EmpiricalMeasure<T>, m2: &EmpiricalMeasure<T>, n_directions: usize, seed: u64) -> T {
    let (l1, l2) = (lift(m1), lift(m2));
    let dirs = chordal_directions::<T>(n_directions.max(1), seed);
    let total: T = dirs.iter().map(|u| w1_sorted(&project_3d(&l1, u), &project_3d(&l2, u))).sum();
    total / T::from_usize(dirs.len()).unwrap()
}

/// Minimum-cost perfect assignment on a square cost matrix; `result[i]` is
/// the column matched to row `i`.
pub fn optimal_assignment<T: Scalar>(cost: &[Vec<T>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let inf = T::infinity();
    // potentials, 1-based with a virtual column 0
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0usize; n];
    for j in 1..=n {
        result[owner[j] - 1] = j - 1;
    }
    result
}

/// Matching of `b` to `a` minimising the total Euclidean distance.
pub fn optimal_matching<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Result<Vec<usize>> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(a.len(), b.len()));
    }
    let cost: Vec<Vec<T>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    Ok(optimal_assignment(&cost))
}

/// Planar W1 between equal-size empirical measures.
pub fn exact_w1<T: Scalar>(m1: &EmpiricalMeasure<T>, m2: &EmpiricalMeasure<T>) -> Result<T> {
    if m1.len() != m2.len() {
        return Err(Error::SizeMismatch(m1.len(), m2.len()));
    }
    if m1.len() > EXACT_W1_LIMIT {
        return Err(Error::MeasureTooLarge { size: m1.len(), limit: EXACT_W1_LIMIT });
    }
    let m = optimal_matching(&m1.points, &m2.points)?;
    let total: T = m.iter().enumerate().map(|(i, &j)| (m1.points[i] - m2.points[j]).norm()).sum();
    Ok(total * m1.weight())
}

/// Distance used by the convergence diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    SlicedW1 { directions: usize },
    /// Sliced W1 of the stereographic lifts; bounded, and insensitive to far
    /// outliers.
    SlicedW1Chordal { directions: usize },
}

impl Default for Metric {
    fn default() -> Self {
        Self::SlicedW1 { directions: DEFAULT_DIRECTIONS }
    }
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SlicedW1 { .. } => "sliced_w1",
            Self::SlicedW1Chordal { .. } => "sliced_w1_chordal",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sliced_w1" => Some(Self::SlicedW1 { directions: DEFAULT_DIRECTIONS }),
            "sliced_w1_chordal" => Some(Self::SlicedW1Chordal { directions: DEFAULT_DIRECTIONS }),
            _ => None,
        }
    }

    pub fn names() -> &'static [&'static str] {
        &["sliced_w1", "sliced_w1_chordal"]
    }

    pub fn distance<T: Scalar>(&self, m1: &EmpiricalMeasure<T>, m2: &EmpiricalMeasure<T>, seed: u64) -> T {
        match *self {
            Self::SlicedW1 { directions } => sliced_w1(m1, m2, directions, seed),
            Self::SlicedW1Chordal { directions } => sliced_w1_chordal(m1, m2, directions, seed),
        }
    }
}

/// A reference measure with its sorted projections cached, so repeated
/// distances against it cost one sort of the other measure per direction.
/// Agrees exactly with [`Metric::distance`] under the same seed.
#[derive(Clone, Debug)]
pub struct ProjectedReference<T> {
    metric: Metric,
    angles: Vec<T>,
    directions: Vec<[T; 3]>,
    sorted: Vec<Vec<T>>,
}

impl<T: Scalar> ProjectedReference<T> {
    pub fn new(metric: Metric, reference: &EmpiricalMeasure<T>, seed: u64) -> Self {
        match metric {
            Metric::SlicedW1 { directions } => {
                let angles = projection_angles::<T>(directions.max(1), seed);
                let sorted = angles.iter().map(|&t| project_plane(reference, t)).collect();
                Self { metric, angles, directions: Vec::new(), sorted }
            }
            Metric::SlicedW1Chordal { directions } => {
                let dirs = chordal_directions::<T>(directions.max(1), seed);
                let l = lift(reference);
                let sorted = dirs.iter().map(|u| project_3d(&l, u)).collect();
                Self { metric, angles: Vec::new(), directions: dirs, sorted }
            }
        }
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn distance(&self, m: &EmpiricalMeasure<T>) -> T {
        let total: T = match self.metric {
            Metric::SlicedW1 { .. } => {
                self.angles.iter().zip(&self.sorted).map(|(&t, r)| w1_sorted(&project_plane(m, t), r)).sum()
            }
            Metric::SlicedW1Chordal { .. } => {
                let l = lift(m);
                self.directions.iter().zip(&self.sorted).map(|(u, r)| w1_sorted(&project_3d(&l, u), r)).sum()
            }
        };
        total / T::from_usize(self.sorted.len()).unwrap()
    }
}

/// One point of a convergence trace.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub metric_name: String,
    pub distance: f64,
    pub wall_ms: f64,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceOptions {
    pub metric: Metric,
    pub reference_size: usize,
    pub aberth: AberthOptions,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self { metric: Metric::default(), reference_size: DEFAULT_REFERENCE_SIZE, aberth: AberthOptions::default() }
    }
}

/// Distance from `ν_n^(k)` (or `μ_n` when `k = 0`) to a fixed reference
/// sample of μ, for each `n` along one sample path.
///
/// All `n` share the same stream prefix, the same reference sample and the
/// same projection directions. Rows whose zeros fail certification are kept
/// with `certified = false`.
pub fn convergence_series<T: Scalar>(
    stream: &SampleStream,
    k: usize,
    n_list: &[usize],
    opts: &ConvergenceOptions,
) -> Result<Vec<ConvergenceRow>> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n_list must be non-empty and strictly ascending".into()));
    }
    if n_list[0] <= k {
        return Err(Error::InvalidOrder { k, n: n_list[0] });
    }
    let path: RootSet<T> = stream.sample_prefix(*n_list.last().unwrap());
    let reference = EmpiricalMeasure::new(stream.reference_sample::<T>(opts.reference_size.max(1)))?;
    let reference = ProjectedReference::new(opts.metric, &reference, mix64(stream.seed() ^ domain::DIRECTIONS));
    n_list
        .iter()
        .map(|&n| {
            let start = Instant::now();
            let roots = path.prefix(n);
            let (measure, certified) = if k == 0 {
                (mu_n(&roots), true)
            } else {
                let aberth = AberthOptions { seed: mix64(stream.seed()) ^ n as u64, ..opts.aberth.clone() };
                let zeros = derivative_zeros(&roots, k, &aberth)?;
                let ok = zeros.converged && certify(&roots, k, &zeros).passed();
                (EmpiricalMeasure::new(zeros.zeros)?, ok)
            };
            let distance = reference.distance(&measure).as_f64();
            Ok(ConvergenceRow {
                n,
                k,
                seed: stream.seed(),
                metric_name: opts.metric.name().to_string(),
                distance,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
                certified: certified && distance.is_finite(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn m(points: &[Complex64]) -> EmpiricalMeasure<f64> {
        EmpiricalMeasure::new(points.to_vec()).unwrap()
    }

    #[test]
    fn nu_of_small_cases() {
        let opts = AberthOptions::default();
        let r = RootSet::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let nu = nu_nk(&r, 1, &derivative_zeros(&r, 1, &opts).unwrap()).unwrap();
        assert_eq!(nu.len(), 1);
        assert!(nu.points()[0].norm() < 1e-12);
        assert_eq!(nu.total_mass(), 1.0);
        let r = RootSet::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        let nu = nu_nk(&r, 2, &derivative_zeros(&r, 2, &opts).unwrap()).unwrap();
        assert!((nu.points()[0] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn nu_requires_convergence() {
        let r = RootSet::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let bad = RootFindResult { zeros: vec![c(0.0, 0.0)], residuals: vec![1.0], iterations: 1, converged: false };
        assert_eq!(nu_nk(&r, 1, &bad), Err(Error::NotConverged));
    }

    #[test]
    fn w1_sorted_unequal_sizes() {
        // {0, 1} vs {0.5}: each half of the mass moves 0.5
        assert!((w1_sorted::<f64>(&[0.0, 1.0], &[0.5]) - 0.5).abs() < 1e-15);
        // {0,1,2} vs {0,2}: quantiles [0,1/3)→0 vs 0, [1/3,1/2)→1 vs 0, [1/2,2/3)→1 vs 2, [2/3,1)→2 vs 2
        assert!((w1_sorted::<f64>(&[0.0, 1.0, 2.0], &[0.0, 2.0]) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sliced_self_distance_is_zero() {
        let a = m(&[c(0.1, 0.2), c(-0.4, 0.9), c(1.0, -1.0)]);
        assert_eq!(sliced_w1(&a, &a, 64, 5), 0.0);
    }

    #[test]
    fn sliced_point_masses() {
        let t = 3.0;
        let got = sliced_w1(&m(&[c(0.0, 0.0)]), &m(&[c(0.0, t)]), 10_000, 1);
        let want = 2.0 / std::f64::consts::PI * t;
        assert!((got / want - 1.0).abs() < 0.02, "{got} vs {want}");
    }

    #[test]
    fn exact_w1_basics() {
        assert_eq!(exact_w1(&m(&[c(0.0, 0.0)]), &m(&[c(3.0, 4.0)])).unwrap(), 5.0);
        let pts: Vec<Complex64> = (0..64).map(|j| Complex64::from_polar(1.0 + j as f64 * 0.01, j as f64)).collect();
        let mut perm = pts.clone();
        perm.reverse();
        perm.swap(3, 40);
        assert!(exact_w1(&m(&pts), &m(&perm)).unwrap() < 1e-15);
        assert!(matches!(exact_w1(&m(&pts), &m(&pts[..3])), Err(Error::SizeMismatch(64, 3))));
        let big = m(&vec![c(0.0, 0.0); 513]);
        assert!(matches!(exact_w1(&big, &big), Err(Error::MeasureTooLarge { .. })));
    }

    #[test]
    fn assignment_beats_every_permutation() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = optimal_assignment(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn chordal_values() {
        let zero = Extended::Finite(c(0.0, 0.0));
        assert!((chordal_metric(zero, Extended::Infinity) - 2.0).abs() < 1e-15);
        assert_eq!(chordal_metric(zero, zero), 0.0);
        let d = chordal_metric(Extended::Finite(c(1.0, 0.0)), Extended::Finite(c(0.0, 1.0)));
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let lift = |z: Complex64| lift_to_sphere(Extended::Finite(z));
        let (p, q) = (lift(c(0.3, -2.0)), lift(c(-1.1, 0.4)));
        let e = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
        let d = chordal_metric(Extended::Finite(c(0.3, -2.0)), Extended::Finite(c(-1.1, 0.4)));
        assert!((d - e).abs() < 1e-14);
    }

    #[test]
    fn projected_reference_matches_direct() {
        let a = m(&[c(0.1, 0.2), c(-0.4, 0.3), c(0.9, -0.1)]);
        let b = m(&[c(0.0, 0.0), c(0.5, 0.5), c(-1.0, 0.2), c(0.3, -0.8), c(0.2, 0.1)]);
        for metric in [Metric::SlicedW1 { directions: 16 }, Metric::SlicedW1Chordal { directions: 16 }] {
            let prepared = ProjectedReference::new(metric, &b, 42);
            assert_eq!(prepared.distance(&a), metric.distance(&a, &b, 42));
        }
    }

    #[test]
    fn metric_names_roundtrip() {
        for name in Metric::names() {
            assert_eq!(Metric::from_name(name).unwrap().name(), *name);
        }
        assert!(Metric::from_name("w2").is_none());
    }
}
