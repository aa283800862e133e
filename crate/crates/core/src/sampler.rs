//! D²-sampling against a growing center set.
//!
//! [`DistanceCache`] keeps one array of per-point minimum dissimilarities per
//! pushed center, so that popping a center restores the previous state
//! exactly without recomputation.

use crate::error::{Error, Result};
use crate::measure::{Dataset, Measure};
use crate::rng::Rng;

/// Stack of per-point minimum dissimilarities, one level per pushed center.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceCache {
    n: usize,
    levels: Vec<Vec<f64>>,
    totals: Vec<f64>,
}

impl DistanceCache {
    pub fn new(n: usize) -> Self {
        Self { n, levels: Vec::new(), totals: Vec::new() }
    }

    /// Number of pushed centers.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `D(p_i, C)` for every point, or `None` when no center has been pushed.
    pub fn min_dist(&self) -> Option<&[f64]> {
        self.levels.last().map(Vec::as_slice)
    }

    /// `Δ(P, C)`, or `None` when no center has been pushed.
    pub fn total(&self) -> Option<f64> {
        self.totals.last().copied()
    }

    /// Adds center `c`: the new level is the pointwise minimum of the previous
    /// level and `D(p_i, c)`.
    pub fn push_center<M: Measure + ?Sized>(&mut self, data: &Dataset, c: &[f64], measure: &M) {
        debug_assert_eq!(data.len(), self.n);
        debug_assert_eq!(c.len(), data.dim());
        let mut level = match self.levels.last() {
            Some(prev) => data
                .iter()
                .zip(prev)
                .map(|(p, &old)| old.min(measure.dissimilarity(p, c)))
                .collect(),
            None => data.iter().map(|p| measure.dissimilarity(p, c)).collect::<Vec<_>>(),
        };
        level.shrink_to_fit();
        self.totals.push(level.iter().sum());
        self.levels.push(level);
    }

    pub fn pop_center(&mut self) -> Result<()> {
        self.levels.pop().ok_or(Error::EmptyCache)?;
        self.totals.pop();
        Ok(())
    }
}

/// Prefix sums of nonnegative weights, sampled by inverting the cumulative sum.
#[derive(Debug, Clone)]
pub struct CumulativeWeights {
    prefix: Vec<f64>,
}

impl CumulativeWeights {
    pub fn new(weights: &[f64]) -> Self {
        let prefix = weights
            .iter()
            .scan(0.0, |acc, &w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Self { prefix }
    }

    pub fn total(&self) -> f64 {
        self.prefix.last().copied().unwrap_or(0.0)
    }

    /// Index `i` with probability `w_i / total`. Falls back to a uniform index
    /// when the total is zero.
    pub fn draw(&self, rng: &mut Rng) -> usize {
        let total = self.total();
        if total <= 0.0 {
            return rng.index(self.prefix.len());
        }
        let u = rng.next_f64() * total;
        let i = self.prefix.partition_point(|&c| c <= u);
        if i < self.prefix.len() {
            i
        } else {
            // u rounded up to the total: take the last index with positive weight.
            self.prefix.partition_point(|&c| c < total)
        }
    }
}

/// One index drawn with probability `D(p_i, C) / Δ(P, C)`; uniform when no
/// center is present or every point coincides with a center.
pub fn d2_draw(cache: &DistanceCache, rng: &mut Rng) -> usize {
    match cache.min_dist() {
        Some(weights) => CumulativeWeights::new(weights).draw(rng),
        None => rng.index(cache.len()),
    }
}

pub fn uniform_draw(data: &Dataset, rng: &mut Rng) -> usize {
    rng.index(data.len())
}

/// `count` independent D²-draws (uniform while the center set is empty), in draw order.
pub fn draw_multiset(cache: &DistanceCache, count: usize, rng: &mut Rng) -> Vec<usize> {
    let mut out = Vec::with_capacity(count);
    draw_multiset_into(cache, count, rng, &mut out);
    out
}

pub(crate) fn draw_multiset_into(cache: &DistanceCache, count: usize, rng: &mut Rng, out: &mut Vec<usize>) {
    out.clear();
    if count == 0 {
        return;
    }
    match cache.min_dist() {
        Some(weights) => {
            let table = CumulativeWeights::new(weights);
            out.extend((0..count).map(|_| table.draw(rng)));
        }
        None => out.extend((0..count).map(|_| rng.index(cache.len()))),
    }
}
