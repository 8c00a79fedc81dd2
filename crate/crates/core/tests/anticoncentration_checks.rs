//! Decoupling identity, pigeonhole certificates, small-ball estimates and
//! their exact enumeration oracles.

use critlab_core::anticoncentration::{
    block_difference, central_binomial_probability, cluster_points, ctv_check, ctv_exact, decoupled_h,
    estimate_joint_small_ball, estimate_linear_small_ball, joint_small_ball_exact, make_partition,
    nondegeneracy_rank_test, pigeonhole_witness, product_form, sn_alpha, sn_alpha_at, DecoupledInstance,
    StepDistribution,
};
use critlab_core::sampling::{domain, keyed_rng};
use critlab_core::{evaluate_sn, Error, RootDistribution, RootSet};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_instance(idx: u64) -> DecoupledInstance<f64> {
    let mut rng = keyed_rng(13, domain::INSTANCES, idx);
    let n = rng.random_range(1..=60);
    let k = rng.random_range(1..=4usize.min(n));
    let dist = if idx % 2 == 0 {
        RootDistribution::complex_gaussian(1.0).unwrap()
    } else {
        RootDistribution::uniform_disk(1.0).unwrap()
    };
    let z = c(rng.random::<f64>() * 3.0 - 1.5, rng.random::<f64>() * 3.0 - 1.5);
    DecoupledInstance::sample(&dist, n, k, z, &mut rng).unwrap()
}

fn full(k: usize) -> u32 {
    (1u32 << k) - 1
}

#[test]
fn decoupling_identity_on_random_instances() {
    let mut checked = 0;
    for idx in 0..500 {
        let inst = random_instance(idx);
        let (Ok(h), Ok(p)) = (decoupled_h(&inst), product_form(&inst)) else {
            continue;
        };
        assert!((h - p).norm() <= 1e-10 * (1.0 + p.norm()), "instance {idx}: {h} vs {p}");
        checked += 1;
    }
    assert!(checked >= 495);
}

#[test]
fn identity_survives_cancellation_near_an_atom() {
    // every block of Y′ is a permutation of the block of Y, so the product
    // vanishes while each S_n(z; Y^α) is of order 1e8
    let n = 64;
    let y: Vec<Complex64> = (0..n).map(|i| c(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect();
    let mut y_prime = y.clone();
    for pair in y_prime.chunks_mut(2) {
        pair.swap(0, 1);
    }
    let inst = DecoupledInstance::new(
        RootSet::new(y).unwrap(),
        RootSet::new(y_prime).unwrap(),
        make_partition(n, 4).unwrap(),
        c(1.0, 0.1),
    )
    .unwrap();
    assert!(sn_alpha(&inst, 0b0101).unwrap().norm() > 1e7);
    assert_eq!(product_form(&inst).unwrap(), c(0.0, 0.0));
    assert!(decoupled_h(&inst).unwrap().norm() < 1e-10);
}

#[test]
fn extreme_subsets_are_the_copies() {
    for idx in 0..20 {
        let inst = random_instance(idx);
        let k = inst.k();
        let on_y = evaluate_sn(&inst.y, inst.z, k).unwrap().value;
        let on_y_prime = evaluate_sn(&inst.y_prime, inst.z, k).unwrap().value;
        assert_eq!(sn_alpha(&inst, full(k)).unwrap(), on_y);
        assert_eq!(sn_alpha(&inst, 0).unwrap(), on_y_prime);
    }
}

#[test]
fn mixed_blocks_match_subset_sums() {
    let mut rng = keyed_rng(2, domain::INSTANCES, 0);
    let dist = RootDistribution::complex_gaussian(1.0).unwrap();
    let z = c(0.3, -0.2);
    let inst = DecoupledInstance::<f64>::sample(&dist, 4, 2, z, &mut rng).unwrap();
    // α = {first block}: indices 0, 1 from Y and 2, 3 from Y′
    let mixed = [inst.y.roots()[0], inst.y.roots()[1], inst.y_prime.roots()[2], inst.y_prime.roots()[3]];
    let mut brute = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        for j in i + 1..4 {
            brute += 1.0 / ((z - mixed[i]) * (z - mixed[j]));
        }
    }
    assert!((sn_alpha(&inst, 0b01).unwrap() - brute).norm() < 1e-12);
}

#[test]
fn terms_missing_a_block_cancel() {
    let mut rng = keyed_rng(3, domain::INSTANCES, 0);
    let dist = RootDistribution::uniform_disk(1.0).unwrap();
    let z = c(1.4, 0.3);
    for (n, k) in [(6, 2), (7, 3), (8, 3)] {
        let inst = DecoupledInstance::<f64>::sample(&dist, n, k, z, &mut rng).unwrap();
        let blocks = inst.partition.blocks().to_vec();
        let alternating = |subset: &[usize]| {
            let mut acc = Complex64::new(0.0, 0.0);
            for alpha in 0..=full(k) {
                let roots = inst.mixed(alpha);
                let term: Complex64 = subset.iter().map(|&i| 1.0 / (z - roots[i])).product();
                let sign = if (k as u32 - alpha.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
                acc += term * sign;
            }
            acc
        };
        // every index from the first block: misses all the others
        let missing: Vec<usize> = blocks[0].clone().chain(blocks[1].clone()).take(k).collect();
        let touches_all = blocks.iter().all(|b| missing.iter().any(|i| b.contains(i)));
        assert!(!touches_all);
        assert!(alternating(&missing).norm() < 1e-14);
        // one index per block survives
        let transversal: Vec<usize> = blocks.iter().map(|b| b.start).collect();
        assert!(alternating(&transversal).norm() > 1e-6);
    }
}

#[test]
fn h_bounded_when_all_values_small() {
    let mut seen = 0;
    for idx in 0..2000 {
        let mut rng = keyed_rng(21, domain::INSTANCES, idx);
        let k = rng.random_range(1..=3);
        let inst =
            DecoupledInstance::<f64>::sample(&RootDistribution::uniform_circle(1.0).unwrap(), 12, k, c(0.0, 0.0), &mut rng)
                .unwrap();
        let all_small = (0..=full(k)).all(|a| sn_alpha(&inst, a).is_ok_and(|v| v.norm() <= 1.0));
        if all_small {
            seen += 1;
            assert!(decoupled_h(&inst).unwrap().norm() <= (1u32 << k) as f64);
        }
    }
    assert!(seen > 0);
}

#[test]
fn pigeonhole_single_block_keeps_everything() {
    let y = RootSet::new(vec![c(30.0, 0.0), c(0.0, 40.0), c(-35.0, 5.0)]).unwrap();
    let yp = RootSet::new(vec![c(-30.0, 1.0), c(2.0, -40.0), c(33.0, 3.0)]).unwrap();
    let inst = DecoupledInstance::new(y, yp, make_partition(3, 1).unwrap(), c(0.0, 0.0)).unwrap();
    let points = cluster_points(c(0.0, 0.0), 0.5, 6);
    let w = pigeonhole_witness(&inst, &points).unwrap();
    assert_eq!(w.block, 0);
    assert_eq!(w.indices, (0..6).collect::<Vec<_>>());
}

#[test]
fn pigeonhole_certificate_verifies() {
    let dist = RootDistribution::uniform_circle(50.0).unwrap();
    for idx in 0..20 {
        let mut rng = keyed_rng(6, domain::INSTANCES, idx);
        let k = rng.random_range(2..=4);
        let inst = DecoupledInstance::<f64>::sample(&dist, 12, k, c(0.0, 0.0), &mut rng).unwrap();
        let points = cluster_points(c(0.0, 0.0), 1.0, 10);
        let w = pigeonhole_witness(&inst, &points).unwrap();
        assert!(w.indices.len() >= 10usize.div_ceil(k));
        for (&i, &m) in w.indices.iter().zip(&w.moduli) {
            let d = block_difference(&inst, w.block, points[i]).unwrap().norm();
            assert_eq!(d, m);
            assert!(d <= 2.0);
        }
    }
}

#[test]
fn pigeonhole_rejects_large_values() {
    let y = RootSet::new(vec![c(0.1, 0.0), c(0.2, 0.0)]).unwrap();
    let yp = RootSet::new(vec![c(-0.1, 0.0), c(0.0, 0.2)]).unwrap();
    let inst = DecoupledInstance::new(y, yp, make_partition(2, 2).unwrap(), c(0.0, 0.0)).unwrap();
    let points = [c(0.05, 0.05), c(-0.05, 0.02)];
    assert!(sn_alpha_at(&inst, 0, points[0]).unwrap().norm() > 1.0);
    assert!(matches!(pigeonhole_witness(&inst, &points), Err(Error::HypothesisNotSatisfied { .. })));
}

#[test]
fn ctv_point_mass_is_deterministic() {
    let dist = RootDistribution::point_mass(c(1.0, 0.0));
    // S_4(z) = 4/(z − 1) at z = 5 has modulus 1
    for (radius, expected) in [(0.9, 0.0), (1.1, 1.0)] {
        let check = ctv_check(1, 4, &dist, c(5.0, 0.0), radius, 10_000, 0).unwrap();
        assert_eq!(check.lhs.p_hat, expected);
        assert_eq!(check.rhs.p_hat, expected);
        assert!(check.holds);
        assert_eq!(ctv_exact(1, 4, &dist, c(5.0, 0.0), radius).unwrap(), (expected, expected));
    }
}

#[test]
fn ctv_two_atom_matches_enumeration() {
    let dist = RootDistribution::two_atom();
    let z = c(0.0, 3.0);
    // |S| ≤ 2.42 exactly when 3 to 5 of the 8 roots sit at 1
    let (lhs, rhs) = ctv_exact(1, 8, &dist, z, 2.42).unwrap();
    assert!((lhs - 182.0 / 256.0).abs() < 1e-15);
    assert!(lhs <= rhs.sqrt());
    let check = ctv_check(1, 8, &dist, z, 2.42, 20_000, 5).unwrap();
    assert!(check.lhs.contains(lhs), "{check:?} {lhs}");
    assert!(check.rhs.contains(rhs), "{check:?} {rhs}");
    assert!(check.holds);
}

#[test]
fn ctv_violation_rate_is_small() {
    let dist = RootDistribution::uniform_disk(1.0).unwrap();
    let violations = (0..50)
        .filter(|&seed| !ctv_check(2, 10, &dist, c(0.2, 0.1), 3.0, 10_000, seed).unwrap().holds)
        .count();
    assert!(violations <= 3, "{violations}");
}

#[test]
fn rank_test_detects_finite_support() {
    let points = cluster_points(c(0.0, 2.0), 0.5, 4);
    let two = nondegeneracy_rank_test(&RootDistribution::two_atom(), &points, 64, 1).unwrap();
    assert!(two.degenerate, "{two:?}");
    let disk = nondegeneracy_rank_test(&RootDistribution::uniform_disk(1.0).unwrap(), &points, 64, 1).unwrap();
    assert_eq!(disk.rank, 8);
    assert!(!disk.degenerate);
    assert!(nondegeneracy_rank_test(&RootDistribution::two_atom(), &points, 15, 1).is_err());
}

#[test]
fn linear_binomial_oracle() {
    let exact = central_binomial_probability(100);
    assert!((exact - 0.0795892).abs() < 1e-6);
    let est = estimate_linear_small_ball(1, 100, StepDistribution::Rademacher, 1.0, 100_000, 3).unwrap();
    assert!(est.contains(exact), "{est:?}");
}

#[test]
fn joint_two_atom_matches_enumeration() {
    let dist = RootDistribution::two_atom();
    // S_n(0) = n − 2·#{roots at 1}
    let points = [c(0.0, 0.0)];
    for n in [6, 10, 14] {
        let exact = joint_small_ball_exact(&dist, n, 1, &points, 1.0).unwrap();
        assert!((exact - central_binomial_probability(n)).abs() < 1e-15, "{n} {exact}");
        let est = estimate_joint_small_ball(&dist, n, 1, &points, 1.0, 20_000, n as u64).unwrap();
        assert!(est.contains(exact), "{n}: {est:?} vs {exact}");
    }
}

#[test]
fn joint_point_mass_far_away_vanishes() {
    let dist = RootDistribution::point_mass(c(0.0, 0.0));
    let est = estimate_joint_small_ball(&dist, 50, 1, &[c(10.0, 0.0)], 1.0, 10_000, 0).unwrap();
    assert_eq!(est.hits, 0);
}

#[test]
fn estimates_ignore_thread_count() {
    let dist = RootDistribution::uniform_circle(1.0).unwrap();
    let points = cluster_points(c(0.0, 0.0), 0.01, 8);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            estimate_joint_small_ball(&dist, 16, 2, &points, 1.0, 10_000, 9).unwrap()
        })
    };
    assert_eq!(run(1), run(4));
}

proptest! {
    #[test]
    fn partitions_are_balanced(n in 1usize..200, k in 1usize..20) {
        prop_assume!(k <= n);
        let p = make_partition(n, k).unwrap();
        let sizes = p.sizes();
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        prop_assert!(sizes.iter().all(|&s| s == n / k || s == n.div_ceil(k)));
        let mut next = 0;
        for (j, b) in p.blocks().iter().enumerate() {
            prop_assert_eq!(b.start, next);
            next = b.end;
            for i in b.clone() {
                prop_assert_eq!(p.block_of(i), j);
            }
        }
    }

    #[test]
    fn oversized_k_rejected(n in 1usize..50, extra in 1usize..5) {
        prop_assert!(make_partition(n, n + extra).is_err());
    }
}
