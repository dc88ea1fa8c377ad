mod support;

use otmap::ot::{
    divergence, ot_divergence, pairwise_cost, solve_assignment, solve_point_assignment, CostMatrix,
    CostMetric,
};
use otmap::PointSet;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{brute_force_min, random_points};

fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> CostMatrix {
    CostMatrix::from_raw(n, n, (0..n * n).map(|_| rng.random::<f64>()).collect()).unwrap()
}

#[test]
fn six_by_six_matches_all_720_permutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let c = random_matrix(6, &mut rng);
        let a = solve_assignment(&c).unwrap();
        assert!(a.is_bijection());
        assert_eq!(a.total_cost, brute_force_min(&c), "{c:?}");
    }
}

#[test]
fn integer_costs_with_ties_are_exact_and_repeatable() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let n = rng.random_range(2..=7);
        let vals = (0..n * n)
            .map(|_| f64::from(rng.random_range(0..4u8)))
            .collect();
        let c = CostMatrix::from_raw(n, n, vals).unwrap();
        let a = solve_assignment(&c).unwrap();
        assert_eq!(a.total_cost, brute_force_min(&c));
        assert_eq!(a, solve_assignment(&c).unwrap());
    }
}

#[test]
fn warm_started_plan_has_no_improving_swaps_or_cycles() {
    // Too large for enumeration. An optimal plan admits no improving pair
    // swap and no improving 3-cycle.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let a = random_points(900, 2, &mut rng);
    let b = random_points(900, 2, &mut rng);
    let plan = solve_point_assignment(&a, &b, CostMetric::SquaredEuclidean).unwrap();
    assert!(plan.is_bijection());
    let c = |i: usize, j: usize| CostMetric::SquaredEuclidean.eval(a.point(i), b.point(j));
    let p = &plan.perm;
    for i in 0..900 {
        for j in i + 1..900 {
            let now = c(i, p[i]) + c(j, p[j]);
            let swapped = c(i, p[j]) + c(j, p[i]);
            assert!(swapped >= now - 1e-12, "swap {i},{j} improves");
        }
    }
    for _ in 0..20_000 {
        let (i, j, k) = (
            rng.random_range(0..900),
            rng.random_range(0..900),
            rng.random_range(0..900),
        );
        if i == j || j == k || i == k {
            continue;
        }
        let now = c(i, p[i]) + c(j, p[j]) + c(k, p[k]);
        let rotated = c(i, p[j]) + c(j, p[k]) + c(k, p[i]);
        assert!(rotated >= now - 1e-12);
    }
}

#[test]
fn identity_and_forced_pair() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_points(100, 3, &mut rng);
    for m in [
        CostMetric::SquaredEuclidean,
        CostMetric::Euclidean,
        CostMetric::L1,
    ] {
        assert_eq!(ot_divergence(&a, &a, m, m).unwrap(), 0.0);
    }
    let big = random_points(1000, 2, &mut rng);
    assert_eq!(divergence(&big, &big).unwrap(), 0.0);
    let p = PointSet::from_rows(&[[0.0, 0.0]]).unwrap();
    let q = PointSet::from_rows(&[[3.0, 4.0]]).unwrap();
    assert_eq!(divergence(&p, &q).unwrap(), 5.0);
}

fn shuffled(p: &PointSet, rng: &mut ChaCha8Rng) -> PointSet {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.shuffle(rng);
    p.select(&idx).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn small_problems_are_optimal(n in 2usize..=7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_matrix(n, &mut rng);
        let a = solve_assignment(&c).unwrap();
        prop_assert!(a.is_bijection());
        prop_assert_eq!(a.total_cost, brute_force_min(&c));
    }

    #[test]
    fn row_shuffle_of_targets_keeps_divergence(k in 2usize..60, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_points(k, 2, &mut rng);
        let b = random_points(k, 2, &mut rng);
        let d1 = divergence(&a, &b).unwrap();
        let d2 = divergence(&a, &shuffled(&b, &mut rng)).unwrap();
        prop_assert!((d1 - d2).abs() <= 1e-12 * d1.max(1.0));
    }

    #[test]
    fn scaling_scales_distance_and_keeps_plan(k in 2usize..40, s in 0.1f64..10.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_points(k, 2, &mut rng);
        let b = random_points(k, 2, &mut rng);
        let (sa, sb) = (a.map(|v| v * s).unwrap(), b.map(|v| v * s).unwrap());
        for m in [CostMetric::Euclidean, CostMetric::L1] {
            let d = ot_divergence(&a, &b, m, m).unwrap();
            let ds = ot_divergence(&sa, &sb, m, m).unwrap();
            prop_assert!((ds - s * d).abs() <= 1e-9 * ds.max(1.0));
        }
        let p = solve_point_assignment(&a, &b, CostMetric::SquaredEuclidean).unwrap();
        let ps = solve_point_assignment(&sa, &sb, CostMetric::SquaredEuclidean).unwrap();
        // Same plan up to ties: equal cost after rescaling.
        prop_assert!((ps.total_cost - s * s * p.total_cost).abs() <= 1e-9 * ps.total_cost.max(1.0));
    }

    #[test]
    fn perturbed_permutation_is_within_eps(k in 2usize..60, eps in 1e-4f64..0.05, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_points(k, 2, &mut rng);
        let jitter: Vec<f64> = a.points().flat_map(|p| {
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let r = eps * rng.random::<f64>();
            [p[0] + r * t.cos(), p[1] + r * t.sin()]
        }).collect();
        let b = shuffled(&PointSet::new(k, 2, jitter).unwrap(), &mut rng);
        let d = divergence(&a, &b).unwrap();
        prop_assert!(d <= eps + 1e-12, "{} > {}", d, eps);
        let c = pairwise_cost(&a, &b, CostMetric::SquaredEuclidean).unwrap();
        prop_assert!(solve_assignment(&c).unwrap().is_bijection());
    }
}

#[test]
fn cost_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let a = random_points(5, 3, &mut rng);
        let b = random_points(5, 3, &mut rng);
        let sigma = solve_point_assignment(&a, &b, CostMetric::SquaredEuclidean).unwrap();
        let grad =
            otmap::ot::assignment_cost_gradient(&a, &b, &sigma, CostMetric::SquaredEuclidean)
                .unwrap();
        // Objective with the plan frozen: (1/k) sum of squared distances.
        let frozen = |pts: &[f64]| -> f64 {
            (0..5)
                .map(|i| {
                    (0..3)
                        .map(|c| (pts[i * 3 + c] - b.point(sigma.perm[i])[c]).powi(2))
                        .sum::<f64>()
                })
                .sum::<f64>()
                / 5.0
        };
        let h = 1e-5;
        for idx in 0..15 {
            let mut plus = a.as_slice().to_vec();
            let mut minus = plus.clone();
            plus[idx] += h;
            minus[idx] -= h;
            let numeric = (frozen(&plus) - frozen(&minus)) / (2.0 * h);
            let rel = (grad[idx] - numeric).abs() / grad[idx].abs().max(numeric.abs()).max(1e-8);
            assert!(rel < 1e-5, "coord {idx}: {} vs {numeric}", grad[idx]);
        }
    }
}
