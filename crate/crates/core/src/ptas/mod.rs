//! The D²-sampling PTAS.
//!
//! Every node of the search draws a multiset `S` of `N` points by D²-sampling
//! against the centers chosen so far, then branches once per `M`-subset `T`
//! of `S` (in lexicographic order of positions in `S`), adding the centroid of
//! `T` as the next center. Leaves at depth `k` are scored by the clustering
//! cost and the cheapest is kept. The whole search is repeated with
//! independent random substreams and the best restart wins.

mod params;
pub mod subsets;

use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use params::{
    default_repetitions, theoretical_params, Mode, PtasParams, TheoreticalParams, DEFAULT_LEAF_BUDGET, SUBSET_DELTA,
};
pub use subsets::{binomial, next_subset, rank_of_subset, subset_by_rank};

use crate::error::{Error, Result};
use crate::measure::{centroid_of_indices, CenterSet, Dataset, Measure};
use crate::rng::Rng;
use crate::sampler::{draw_multiset_into, DistanceCache};

/// Running minimum over evaluated leaves.
#[derive(Debug, Clone)]
pub struct Incumbent {
    best: Option<(f64, CenterSet)>,
    leaves: u64,
    leaf_costs: Option<Vec<f64>>,
}

impl Default for Incumbent {
    fn default() -> Self {
        Self::new()
    }
}

impl Incumbent {
    pub fn new() -> Self {
        Self { best: None, leaves: 0, leaf_costs: None }
    }

    /// Like [`Incumbent::new`] but also keeps every leaf cost in visit order.
    pub fn recording() -> Self {
        Self { leaf_costs: Some(Vec::new()), ..Self::new() }
    }

    /// Records a leaf. Only a strictly smaller cost replaces the incumbent, so
    /// the first leaf in traversal order wins ties.
    pub fn offer(&mut self, cost: f64, centers: &CenterSet) {
        self.leaves += 1;
        if let Some(costs) = &mut self.leaf_costs {
            costs.push(cost);
        }
        match &mut self.best {
            Some((best, set)) if cost < *best => {
                *best = cost;
                set.clone_from(centers);
            }
            Some(_) => {}
            None => self.best = Some((cost, centers.clone())),
        }
    }

    pub fn cost(&self) -> Option<f64> {
        self.best.as_ref().map(|(c, _)| *c)
    }

    pub fn centers(&self) -> Option<&CenterSet> {
        self.best.as_ref().map(|(_, s)| s)
    }

    pub fn leaves(&self) -> u64 {
        self.leaves
    }

    pub fn leaf_costs(&self) -> Option<&[f64]> {
        self.leaf_costs.as_deref()
    }
}

/// Sample width and subset size of the search tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchShape {
    pub samples: usize,
    pub subset_size: usize,
}

/// Expands the search below the current node. The depth is `centers.len()`,
/// and `cache` must hold exactly those centers. Every push is matched by a
/// pop before returning.
#[allow(clippy::too_many_arguments)]
pub fn sample_centers<M: Measure + ?Sized>(
    data: &Dataset,
    measure: &M,
    k: usize,
    centers: &mut CenterSet,
    cache: &mut DistanceCache,
    shape: SearchShape,
    rng: &mut Rng,
    best: &mut Incumbent,
) {
    debug_assert_eq!(centers.len(), cache.depth());
    if centers.len() >= k {
        let cost = cache.total().expect("k ≥ 1 centers at a leaf");
        best.offer(cost, centers);
        return;
    }

    let mut sample = Vec::with_capacity(shape.samples);
    draw_multiset_into(cache, shape.samples, rng, &mut sample);

    let last_level = centers.len() + 1 == k;
    let mut subset: Vec<usize> = (0..shape.subset_size).collect();
    let mut mean = vec![0.0; data.dim()];
    loop {
        centroid_of_indices(data, subset.iter().map(|&t| sample[t]), &mut mean);
        centers.push(&mean).expect("centroid of dataset points has the dataset dimension");
        if last_level {
            // Children are leaves: score them without materializing a cache level.
            best.offer(cost_with_center(data, cache, &mean, measure), centers);
        } else {
            cache.push_center(data, &mean, measure);
            sample_centers(data, measure, k, centers, cache, shape, rng, best);
            cache.pop_center().expect("pushed above");
        }
        centers.pop();
        if !next_subset(shape.samples, &mut subset) {
            break;
        }
    }
}

/// `Δ(P, C ∪ {c})` from the cached `D(p_i, C)`; the same sum `push_center` would cache.
fn cost_with_center<M: Measure + ?Sized>(data: &Dataset, cache: &DistanceCache, c: &[f64], measure: &M) -> f64 {
    match cache.min_dist() {
        Some(prev) => data.iter().zip(prev).map(|(p, &old)| old.min(measure.dissimilarity(p, c))).sum(),
        None => data.iter().map(|p| measure.dissimilarity(p, c)).sum(),
    }
}

/// Best centers found by [`find_k_means`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub centers: CenterSet,
    pub cost: f64,
    /// Leaves evaluated over all restarts.
    pub candidates_evaluated: u64,
    /// Restart that produced the returned centers; `None` for the `n ≤ k` shortcut.
    pub best_restart: Option<u64>,
    pub elapsed: Duration,
    pub seed: u64,
    pub params: PtasParams,
}

/// Exact `repetitions · binomial(N, M)^k`, or `None` on overflow.
pub fn leaf_count(k: usize, params: &PtasParams) -> Option<u128> {
    let kappa = binomial(params.samples, params.subset_size)?;
    let per_restart = (0..k).try_fold(1u128, |acc, _| acc.checked_mul(kappa))?;
    per_restart.checked_mul(params.repetitions as u128)
}

fn check_budget(k: usize, params: &PtasParams) -> Result<()> {
    let estimate = match leaf_count(k, params) {
        Some(leaves) if leaves <= params.leaf_budget as u128 => return Ok(()),
        Some(leaves) => leaves.to_string(),
        None => {
            let log2 = (params.repetitions as f64).log2()
                + k as f64 * subsets::log2_binomial(params.samples as u64, params.subset_size as u64);
            format!("2^{log2:.1}")
        }
    };
    Err(Error::BudgetExceeded { estimate, budget: params.leaf_budget })
}

/// Runs `params.repetitions` independent searches and returns the cheapest
/// leaf. Restart `r` draws from substream `r` of `params.master_seed`, so the
/// result does not depend on `params.threads`.
pub fn find_k_means<M: Measure + ?Sized>(
    data: &Dataset,
    k: usize,
    params: &PtasParams,
    measure: &M,
) -> Result<SolveResult> {
    let started = Instant::now();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    params.validate()?;

    if data.len() <= k {
        let mut centers = CenterSet::empty(data.dim());
        for p in data.iter() {
            if !centers.iter().any(|c| c == p) {
                centers.push(p)?;
            }
        }
        return Ok(SolveResult {
            centers,
            cost: 0.0,
            candidates_evaluated: 0,
            best_restart: None,
            elapsed: started.elapsed(),
            seed: params.master_seed,
            params: params.clone(),
        });
    }

    check_budget(k, params)?;

    let shape = SearchShape { samples: params.samples, subset_size: params.subset_size };
    let restart = |r: u64| {
        let mut rng = Rng::substream(params.master_seed, r);
        let mut cache = DistanceCache::new(data.len());
        let mut centers = CenterSet::empty(data.dim());
        let mut best = Incumbent::new();
        sample_centers(data, measure, k, &mut centers, &mut cache, shape, &mut rng, &mut best);
        debug_assert_eq!(cache.depth(), 0);
        best
    };

    let outcomes: Vec<Incumbent> = if params.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(params.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| (0..params.repetitions).into_par_iter().map(restart).collect())
    } else {
        (0..params.repetitions).map(restart).collect()
    };

    // Ties go to the lowest restart index.
    let mut winner: Option<(u64, &Incumbent)> = None;
    for (r, outcome) in outcomes.iter().enumerate() {
        let cost = outcome.cost().expect("every restart reaches at least one leaf");
        if winner.is_none_or(|(_, w)| cost < w.cost().unwrap()) {
            winner = Some((r as u64, outcome));
        }
    }
    let (best_restart, best) = winner.expect("repetitions ≥ 1");
    Ok(SolveResult {
        centers: best.centers().cloned().expect("leaf recorded"),
        cost: best.cost().unwrap(),
        candidates_evaluated: outcomes.iter().map(Incumbent::leaves).sum(),
        best_restart: Some(best_restart),
        elapsed: started.elapsed(),
        seed: params.master_seed,
        params: params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{cost, SquaredEuclidean};

    fn line(xs: &[f64]) -> Dataset {
        let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        Dataset::from_rows(&rows).unwrap()
    }

    fn run_one(data: &Dataset, k: usize, shape: SearchShape, seed: u64, best: &mut Incumbent) {
        let mut rng = Rng::seed_from_u64(seed);
        let mut cache = DistanceCache::new(data.len());
        let mut centers = CenterSet::empty(data.dim());
        sample_centers(data, &SquaredEuclidean, k, &mut centers, &mut cache, shape, &mut rng, best);
        assert_eq!(cache.depth(), 0);
        assert!(centers.is_empty());
    }

    #[test]
    fn leaf_at_entry_evaluates_once_without_sampling() {
        let data = line(&[0.0, 1.0, 3.0]);
        let mut cache = DistanceCache::new(3);
        let mut centers = CenterSet::empty(1);
        cache.push_center(&data, &[0.0], &SquaredEuclidean);
        centers.push(&[0.0]).unwrap();
        let mut rng = Rng::seed_from_u64(1);
        let before = rng.clone().next_u64();
        let mut best = Incumbent::new();
        let shape = SearchShape { samples: 4, subset_size: 2 };
        sample_centers(&data, &SquaredEuclidean, 1, &mut centers, &mut cache, shape, &mut rng, &mut best);
        assert_eq!(best.leaves(), 1);
        assert_eq!(best.cost(), Some(10.0));
        assert_eq!(rng.next_u64(), before);
    }

    #[test]
    fn single_subset_degenerates_to_a_path() {
        let data = line(&[0.0, 1.0, 3.0, 7.0, 8.0]);
        let mut best = Incumbent::new();
        run_one(&data, 3, SearchShape { samples: 2, subset_size: 2 }, 4, &mut best);
        assert_eq!(best.leaves(), 1);
    }

    #[test]
    fn leaf_count_is_kappa_to_the_k() {
        let data = line(&[0.0, 1.0, 3.0, 7.0, 8.0]);
        let mut best = Incumbent::recording();
        run_one(&data, 2, SearchShape { samples: 4, subset_size: 2 }, 4, &mut best);
        assert_eq!(best.leaves(), 36);
        let costs = best.leaf_costs().unwrap();
        assert_eq!(costs.len(), 36);
        let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(best.cost(), Some(min));
        let first_min = costs.iter().position(|&c| c == min).unwrap();
        assert!(costs[..first_min].iter().all(|&c| c > min));
    }

    #[test]
    fn incumbent_keeps_first_of_equal_costs() {
        let mut best = Incumbent::new();
        let a = CenterSet::from_rows(1, &[[1.0]]).unwrap();
        let b = CenterSet::from_rows(1, &[[2.0]]).unwrap();
        best.offer(3.0, &a);
        best.offer(3.0, &b);
        assert_eq!(best.centers(), Some(&a));
        best.offer(2.0, &b);
        assert_eq!(best.centers(), Some(&b));
        assert_eq!(best.leaves(), 3);
    }

    #[test]
    fn degenerate_small_input_returns_distinct_points() {
        let data = line(&[5.0, 1.0, 5.0]);
        let params = PtasParams::practical(3, 1.0).unwrap();
        let res = find_k_means(&data, 3, &params, &SquaredEuclidean).unwrap();
        assert_eq!(res.cost, 0.0);
        assert_eq!(res.centers.to_vecs(), vec![vec![5.0], vec![1.0]]);
        assert_eq!(res.candidates_evaluated, 0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let data = line(&[0.0, 1.0, 2.0]);
        let params = PtasParams::practical(1, 1.0).unwrap();
        assert!(matches!(find_k_means(&data, 0, &params, &SquaredEuclidean), Err(Error::InvalidArgument(_))));
        let bad = params.clone().with_shape(2, 3);
        assert!(matches!(find_k_means(&data, 1, &bad, &SquaredEuclidean), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn budget_refusal_names_the_estimate() {
        let data = line(&[0.0, 1.0, 2.0, 3.0]);
        let params = PtasParams::practical(2, 1.0).unwrap().with_shape(10, 2).with_repetitions(1).with_leaf_budget(2000);
        // 45² = 2025 leaves.
        match find_k_means(&data, 2, &params, &SquaredEuclidean) {
            Err(Error::BudgetExceeded { estimate, budget }) => {
                assert_eq!(estimate, "2025");
                assert_eq!(budget, 2000);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
        let theory = PtasParams::theoretical(2, 1.0, &SquaredEuclidean).unwrap();
        let err = find_k_means(&data, 2, &theory, &SquaredEuclidean).unwrap_err();
        assert!(err.is_refusal());
    }

    #[test]
    fn reported_cost_matches_recomputation() {
        let data = line(&[0.0, 0.5, 1.0, 10.0, 10.5, 11.0, 30.0]);
        let params = PtasParams::practical(3, 1.0).unwrap().with_shape(6, 2).with_repetitions(4).with_seed(17);
        let res = find_k_means(&data, 3, &params, &SquaredEuclidean).unwrap();
        let fresh = cost(&data, &res.centers, &SquaredEuclidean).unwrap();
        assert!((res.cost - fresh).abs() <= 1e-9 * fresh.max(1.0));
        assert_eq!(res.candidates_evaluated as u128, leaf_count(3, &params).unwrap());
    }
}
