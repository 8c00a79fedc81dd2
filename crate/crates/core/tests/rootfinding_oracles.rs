//! Aberth–Ehrlich zeros against the 512-bit oracle, plus certificates and
//! invariants.

use critlab_core::measures::optimal_matching;
use critlab_core::rootfinding::oracle::oracle_derivative_zeros;
use critlab_core::rootfinding::{certify, count_zeros_argument_principle, hull_disk};
use critlab_core::sampling::{domain, keyed_rng};
use critlab_core::{derivative_zeros, AberthOptions, RootDistribution, RootSet};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn instance(idx: u64) -> (RootSet<f64>, usize) {
    let mut rng = keyed_rng(7, domain::INSTANCES, idx);
    let dists = [
        RootDistribution::uniform_disk(1.0).unwrap(),
        RootDistribution::uniform_circle(1.0).unwrap(),
        RootDistribution::complex_gaussian(1.0).unwrap(),
    ];
    let dist = &dists[idx as usize % dists.len()];
    let n = rng.random_range(5..=40);
    let k = rng.random_range(1..=3);
    (RootSet::new(dist.sample_n(&mut rng, n)).unwrap(), k)
}

fn max_matched_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    let m = optimal_matching(a, b).unwrap();
    m.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).norm()).fold(0.0, f64::max)
}

#[test]
fn matches_high_precision_oracle() {
    for idx in 0..20 {
        let (roots, k) = instance(idx);
        let got = derivative_zeros(&roots, k, &AberthOptions::default()).unwrap();
        assert!(got.converged, "idx {idx}");
        let want = oracle_derivative_zeros(&roots, k, 512).unwrap();
        let err = max_matched_error(&got.zeros, &want);
        assert!(err < 1e-8, "idx {idx}: {err}");
        let cert = certify(&roots, k, &got);
        assert!(cert.passed(), "idx {idx}: {cert:?}");
    }
}

#[test]
fn repeated_roots_are_exact() {
    // (z-1)^3 (z+1)^2: P' = (z-1)^2 (z+1) (5z + 1)
    let roots = RootSet::new(
        [1.0, 1.0, 1.0, -1.0, -1.0].iter().map(|&x| Complex64::new(x, 0.0)).collect(),
    )
    .unwrap();
    let got = derivative_zeros(&roots, 1, &AberthOptions::default()).unwrap();
    let want: Vec<Complex64> = [1.0, 1.0, -1.0, -0.2].iter().map(|&x| Complex64::new(x, 0.0)).collect();
    assert!(max_matched_error(&got.zeros, &want) < 1e-10);
}

#[test]
fn zero_on_a_root() {
    // P'' of z(z-1)(z-2) vanishes at the root 1
    let roots = RootSet::new((0..3).map(|x| Complex64::new(x as f64, 0.0)).collect()).unwrap();
    let got = derivative_zeros(&roots, 2, &AberthOptions::default()).unwrap();
    assert!(got.converged);
    assert!((got.zeros[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn argument_principle_counts_every_zero() {
    for idx in 20..30 {
        let (roots, k) = instance(idx);
        let (c, r) = hull_disk(&roots);
        assert_eq!(count_zeros_argument_principle(&roots, k, c, r, 64).unwrap(), roots.len() - k);
    }
}

#[test]
fn large_instance_certifies() {
    let dist = RootDistribution::uniform_disk(1.0).unwrap();
    let roots: RootSet<f64> = RootSet::new(dist.sample_n(&mut keyed_rng(3, domain::ROOTS, 0), 512)).unwrap();
    for k in 1..=3 {
        let got = derivative_zeros(&roots, k, &AberthOptions::default()).unwrap();
        assert!(certify(&roots, k, &got).passed(), "k {k}");
    }
}

#[test]
fn reproducible_for_fixed_seed() {
    let (roots, k) = instance(99);
    let a = derivative_zeros(&roots, k, &AberthOptions::default()).unwrap();
    let b = derivative_zeros(&roots, k, &AberthOptions::default()).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn certified_for_random_points(xs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..25), k in 1usize..3) {
        let roots = RootSet::new(xs.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
        prop_assume!(k < roots.len());
        // near-coincident roots make genuinely ill-conditioned zeros
        let sep = (0..xs.len()).flat_map(|i| (i + 1..xs.len()).map(move |j| (i, j)))
            .map(|(i, j)| (roots.roots()[i] - roots.roots()[j]).norm()).fold(f64::INFINITY, f64::min);
        prop_assume!(sep > 1e-3);
        let got = derivative_zeros(&roots, k, &AberthOptions::default()).unwrap();
        let cert = certify(&roots, k, &got);
        prop_assert!(cert.passed(), "{:?}", cert);
        prop_assert_eq!(got.zeros.len(), roots.len() - k);
    }

    #[test]
    fn equivariant_under_similarity(xs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..15), t in 0.0f64..6.28, s in 0.5f64..2.0) {
        let roots = RootSet::new(xs.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
        let sep = (0..xs.len()).flat_map(|i| (i + 1..xs.len()).map(move |j| (i, j)))
            .map(|(i, j)| (roots.roots()[i] - roots.roots()[j]).norm()).fold(f64::INFINITY, f64::min);
        prop_assume!(sep > 1e-2);
        let a = Complex64::from_polar(s, t);
        let b = Complex64::new(0.3, -0.2);
        let mapped = RootSet::new(roots.iter().map(|z| a * z + b).collect()).unwrap();
        let z1 = derivative_zeros(&roots, 1, &AberthOptions::default()).unwrap();
        let z2 = derivative_zeros(&mapped, 1, &AberthOptions::default()).unwrap();
        let image: Vec<Complex64> = z1.zeros.iter().map(|z| a * z + b).collect();
        prop_assert!(max_matched_error(&image, &z2.zeros) < 1e-7);
    }
}
