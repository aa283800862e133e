//! Exact k-means on tiny inputs by enumerating every set partition.
//!
//! Partitions are restricted-growth strings: label 0 is used first and label
//! `j + 1` never appears before label `j`, so each partition of the points
//! into at most `k` blocks is visited exactly once. The best center of a
//! block under squared Euclidean distance is its centroid, which makes the
//! search finite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{sq_dist, CenterSet, Dataset};

/// Largest input the oracle accepts.
pub const ORACLE_MAX_POINTS: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    /// Block id of each point, as a restricted-growth string.
    pub labels: Vec<usize>,
    /// Number of nonempty blocks.
    pub k_used: usize,
}

/// Restricted-growth strings of length `n` with labels below `k`, in lexicographic order.
#[derive(Debug, Clone)]
pub struct Partitions {
    labels: Vec<usize>,
    /// `prefix_max[i]` is the largest label among `labels[..=i]`.
    prefix_max: Vec<usize>,
    k: usize,
    started: bool,
    done: bool,
}

impl Partitions {
    fn new(n: usize, k: usize) -> Self {
        Self { labels: vec![0; n], prefix_max: vec![0; n], k, started: false, done: false }
    }

    fn advance(&mut self) -> bool {
        let n = self.labels.len();
        for i in (1..n).rev() {
            let cap = (self.prefix_max[i - 1] + 1).min(self.k - 1);
            if self.labels[i] < cap {
                self.labels[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.labels[i]);
                for j in i + 1..n {
                    self.labels[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for Partitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        let k_used = self.prefix_max.last().map_or(0, |m| m + 1);
        Some(Partition { labels: self.labels.clone(), k_used })
    }
}

fn check_sizes(n: usize, k: usize) -> Result<()> {
    if n > ORACLE_MAX_POINTS {
        return Err(Error::OracleCap { n, cap: ORACLE_MAX_POINTS });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("oracle needs 1 ≤ k ≤ n, got k={k}, n={n}")));
    }
    Ok(())
}

/// Every partition of `0..n` into at most `k` nonempty blocks.
pub fn enumerate_partitions(n: usize, k: usize) -> Result<Partitions> {
    check_sizes(n, k)?;
    Ok(Partitions::new(n, k))
}

/// Optimal k-means clustering: partition, block centroids, and cost.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub partition: Partition,
    pub centers: CenterSet,
    pub cost: f64,
    /// Partitions examined.
    pub partitions: u64,
}

fn block_centroids(data: &Dataset, labels: &[usize], blocks: usize, sums: &mut [f64], counts: &mut [usize]) {
    let d = data.dim();
    sums[..blocks * d].fill(0.0);
    counts[..blocks].fill(0);
    for (p, &b) in data.iter().zip(labels) {
        counts[b] += 1;
        for (s, x) in sums[b * d..(b + 1) * d].iter_mut().zip(p) {
            *s += x;
        }
    }
    for b in 0..blocks {
        let c = counts[b] as f64;
        sums[b * d..(b + 1) * d].iter_mut().for_each(|s| *s /= c);
    }
}

/// Exhaustive minimum of `Σ_blocks Δ(block, centroid(block))`, squared Euclidean only.
/// The first minimum in enumeration order wins ties.
pub fn optimal_kmeans(data: &Dataset, k: usize) -> Result<OracleSolution> {
    let partitions = enumerate_partitions(data.len(), k)?;
    let d = data.dim();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    let mut best: Option<(f64, Partition)> = None;
    let mut examined = 0u64;
    for partition in partitions {
        examined += 1;
        block_centroids(data, &partition.labels, partition.k_used, &mut sums, &mut counts);
        let cost: f64 = data
            .iter()
            .zip(&partition.labels)
            .map(|(p, &b)| sq_dist(p, &sums[b * d..(b + 1) * d]))
            .sum();
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, partition));
        }
    }
    let (cost, partition) = best.expect("at least one partition exists for 1 ≤ k ≤ n");
    block_centroids(data, &partition.labels, partition.k_used, &mut sums, &mut counts);
    let rows: Vec<&[f64]> = sums[..partition.k_used * d].chunks_exact(d).collect();
    let centers = CenterSet::from_rows(d, &rows)?;
    Ok(OracleSolution { partition, centers, cost, partitions: examined })
}
