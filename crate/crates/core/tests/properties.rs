//! Property tests for the measure, sampler, search and oracle invariants.

use d2kmeans::harness::{kmeanspp_seed, lloyd_refine};
use d2kmeans::measure::{centroid, centroid_property_gap, cost, inspect_tuples, sq_dist};
use d2kmeans::oracle::{enumerate_partitions, optimal_kmeans};
use d2kmeans::ptas::{find_k_means, rank_of_subset, subset_by_rank, PtasParams};
use d2kmeans::sampler::DistanceCache;
use d2kmeans::{CenterSet, Dataset, Rng, SquaredEuclidean};
use proptest::prelude::*;

fn dataset(max_n: usize, max_d: usize) -> impl Strategy<Value = Dataset> {
    (1..=max_n, 1..=max_d).prop_flat_map(|(n, d)| {
        prop::collection::vec(prop::collection::vec(-100.0f64..100.0, d), n)
            .prop_map(|rows| Dataset::from_rows(&rows).unwrap())
    })
}

fn dataset_with_point(max_n: usize, max_d: usize) -> impl Strategy<Value = (Dataset, Vec<f64>)> {
    dataset(max_n, max_d).prop_flat_map(|data| {
        let d = data.dim();
        (Just(data), prop::collection::vec(-200.0f64..200.0, d))
    })
}

/// Stirling numbers of the second kind by the usual recurrence.
fn stirling2(n: usize, k: usize) -> u64 {
    let mut table = vec![vec![0u64; k + 1]; n + 1];
    table[0][0] = 1;
    for i in 1..=n {
        for j in 1..=k.min(i) {
            table[i][j] = j as u64 * table[i - 1][j] + table[i - 1][j - 1];
        }
    }
    table[n][k]
}

#[test]
fn partition_counts_match_stirling_sums() {
    for n in 1..=10 {
        for k in 1..=n {
            let expected: u64 = (1..=k).map(|j| stirling2(n, j)).sum();
            let got = enumerate_partitions(n, k).unwrap().count() as u64;
            assert_eq!(got, expected, "n={n} k={k}");
        }
    }
}

#[test]
fn partitions_are_distinct_restricted_growth_strings() {
    let all: Vec<Vec<usize>> = enumerate_partitions(6, 3).unwrap().map(|p| p.labels).collect();
    for labels in &all {
        let mut seen = 0;
        for &l in labels {
            assert!(l <= seen);
            seen = seen.max(l + 1);
        }
    }
    assert!(all.windows(2).all(|w| w[0] < w[1]), "lexicographic and duplicate-free");
}

#[test]
fn unranking_round_trips_exhaustively() {
    let mut expected = Vec::new();
    for a in 0..7 {
        for b in a + 1..7 {
            for c in b + 1..7 {
                expected.push(vec![a, b, c]);
            }
        }
    }
    for (rank, subset) in expected.iter().enumerate() {
        assert_eq!(&subset_by_rank(7, 3, rank as u128).unwrap(), subset);
        assert_eq!(rank_of_subset(7, subset).unwrap(), rank as u128);
    }
    assert!(subset_by_rank(7, 3, 35).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dissimilarity_axioms(p in prop::collection::vec(-1e3f64..1e3, 3), q in prop::collection::vec(-1e3f64..1e3, 3)) {
        prop_assert_eq!(sq_dist(&p, &p), 0.0);
        prop_assert!(sq_dist(&p, &q) >= 0.0);
        prop_assert_eq!(sq_dist(&p, &q), sq_dist(&q, &p));
    }

    #[test]
    fn triangle_with_alpha_two(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 2), 3)) {
        let check = inspect_tuples(&[(&rows[0], &rows[1], &rows[2])], &SquaredEuclidean);
        prop_assert!(check.passed());
    }

    #[test]
    fn centroid_identity((data, c) in dataset_with_point(60, 8)) {
        prop_assert!(centroid_property_gap(&data, &c, &SquaredEuclidean).unwrap() <= 1e-9);
    }

    #[test]
    fn adding_a_center_never_raises_cost((data, c) in dataset_with_point(40, 4)) {
        let mut centers = CenterSet::from_rows(data.dim(), &[data.point(0)]).unwrap();
        let before = cost(&data, &centers, &SquaredEuclidean).unwrap();
        centers.push(&c).unwrap();
        prop_assert!(cost(&data, &centers, &SquaredEuclidean).unwrap() <= before);
    }

    #[test]
    fn centroid_is_the_best_single_center((data, c) in dataset_with_point(40, 4)) {
        let rows: Vec<&[f64]> = data.iter().collect();
        let mean = centroid(&rows).unwrap();
        let at_mean = cost(&data, &CenterSet::from_rows(data.dim(), &[mean.as_slice()]).unwrap(), &SquaredEuclidean).unwrap();
        let at_c = cost(&data, &CenterSet::from_rows(data.dim(), &[&c]).unwrap(), &SquaredEuclidean).unwrap();
        prop_assert!(at_mean <= at_c * (1.0 + 1e-12) + 1e-9);
    }

    #[test]
    fn cache_matches_fresh_recomputation(
        data in dataset(30, 4),
        ops in prop::collection::vec((any::<bool>(), 0usize..1000), 1..60),
    ) {
        let mut cache = DistanceCache::new(data.len());
        let mut centers: Vec<Vec<f64>> = Vec::new();
        let mut last_total = f64::INFINITY;
        for (push, pick) in ops {
            if push || centers.is_empty() {
                let c: Vec<f64> = data.point(pick % data.len()).iter().map(|x| x + 0.5).collect();
                cache.push_center(&data, &c, &SquaredEuclidean);
                centers.push(c);
                let total = cache.total().unwrap();
                prop_assert!(total <= last_total);
                last_total = total;
            } else {
                cache.pop_center().unwrap();
                centers.pop();
                last_total = cache.total().unwrap_or(f64::INFINITY);
            }
            prop_assert_eq!(cache.depth(), centers.len());
            if let Some(min_dist) = cache.min_dist() {
                for (i, p) in data.iter().enumerate() {
                    let fresh = centers.iter().map(|c| sq_dist(p, c)).fold(f64::INFINITY, f64::min);
                    prop_assert!((min_dist[i] - fresh).abs() <= 1e-12 * fresh.max(1e-300));
                }
                let total = cache.total().unwrap();
                let sum: f64 = min_dist.iter().sum();
                prop_assert!((total - sum).abs() <= 1e-9 * sum.max(1.0));
                if total > 0.0 {
                    let normalized: f64 = min_dist.iter().map(|w| w / total).sum();
                    prop_assert!((normalized - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn oracle_dominates_the_solver_and_the_baseline(data in dataset(8, 2), k in 1usize..4, seed in any::<u64>()) {
        let k = k.min(data.len());
        let exact = optimal_kmeans(&data, k).unwrap();
        let params = PtasParams::practical(k, 1.0).unwrap().with_shape(5, 2).with_repetitions(2).with_seed(seed);
        let solved = find_k_means(&data, k, &params, &SquaredEuclidean).unwrap();
        prop_assert!(solved.cost >= exact.cost * (1.0 - 1e-9));
        let mut rng = Rng::seed_from_u64(seed);
        let seeded = kmeanspp_seed(&data, k, &mut rng).unwrap();
        let refined = lloyd_refine(&data, &seeded, 50).unwrap();
        prop_assert!(*refined.costs.last().unwrap() >= exact.cost * (1.0 - 1e-9));
    }

    #[test]
    fn oracle_is_permutation_invariant(data in dataset(8, 2), k in 1usize..4, shift in 0usize..8) {
        let k = k.min(data.len());
        let n = data.len();
        let order: Vec<usize> = (0..n).map(|i| (i * 5 + shift) % n).collect();
        // i ↦ 5i + shift is a permutation only when gcd(5, n) = 1.
        prop_assume!(n % 5 != 0);
        let permuted = data.permuted(&order).unwrap();
        let a = optimal_kmeans(&data, k).unwrap().cost;
        let b = optimal_kmeans(&permuted, k).unwrap().cost;
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300) || a == b);
    }

    #[test]
    fn lloyd_never_increases_cost(data in dataset(40, 3), k in 1usize..5, seed in any::<u64>()) {
        let k = k.min(data.len());
        let seeded = kmeanspp_seed(&data, k, &mut Rng::seed_from_u64(seed)).unwrap();
        let out = lloyd_refine(&data, &seeded, 30).unwrap();
        for w in out.costs.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn solver_is_independent_of_thread_count(data in dataset(12, 2), seed in any::<u64>()) {
        prop_assume!(data.len() > 2);
        let params = PtasParams::practical(2, 1.0).unwrap().with_shape(5, 2).with_repetitions(6).with_seed(seed);
        let single = find_k_means(&data, 2, &params, &SquaredEuclidean).unwrap();
        let multi = find_k_means(&data, 2, &params.clone().with_threads(4), &SquaredEuclidean).unwrap();
        prop_assert_eq!(single.centers, multi.centers);
        prop_assert_eq!(single.cost.to_bits(), multi.cost.to_bits());
        prop_assert_eq!(single.best_restart, multi.best_restart);
        prop_assert_eq!(single.candidates_evaluated, multi.candidates_evaluated);
    }

    #[test]
    fn more_restarts_never_hurt(data in dataset(12, 2), seed in any::<u64>()) {
        prop_assume!(data.len() > 2);
        let base = PtasParams::practical(2, 1.0).unwrap().with_shape(4, 2).with_seed(seed);
        let mut previous = f64::INFINITY;
        for reps in [1, 2, 4, 8] {
            let res = find_k_means(&data, 2, &base.clone().with_repetitions(reps), &SquaredEuclidean).unwrap();
            prop_assert!(res.cost <= previous);
            previous = res.cost;
        }
    }
}
