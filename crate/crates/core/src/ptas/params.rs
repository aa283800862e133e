use serde::{Deserialize, Serialize};

use super::subsets::log2_binomial;
use crate::error::{Error, Result};
use crate::measure::{ceil_to_count, Measure};

/// Failure probability fed to the sample-size function when sizing the search.
pub const SUBSET_DELTA: f64 = 0.2;

/// Leaf budget used when the caller does not set one.
pub const DEFAULT_LEAF_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Sample width and subset size from the approximation guarantee.
    Theoretical,
    /// Executable defaults, `N = max(4, ⌈8k/ε⌉)`, `M = 2`, or explicit overrides.
    Practical,
}

/// Constants that make the search a `(1 + ε)`-approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalParams {
    /// `2α²/β² · (1 + 1/β)`.
    pub eta: f64,
    /// Sample width `N = 64αηk/(βε²) · f(ε/2η, 0.2)`, rounded up.
    pub samples: u64,
    /// Subset size `M = f(ε/2η, 0.2)`.
    pub subset_size: u64,
    /// `log2(binomial(N, M))`, the branching factor per level.
    pub kappa_log2: f64,
}

impl TheoreticalParams {
    /// `log2` of `repetitions · κ^k`.
    pub fn leaf_estimate_log2(&self, k: usize, repetitions: u64) -> f64 {
        (repetitions as f64).log2() + k as f64 * self.kappa_log2
    }
}

pub fn theoretical_params<M: Measure + ?Sized>(k: usize, epsilon: f64, measure: &M) -> TheoreticalParams {
    let (alpha, beta) = (measure.alpha(), measure.beta());
    let eta = 2.0 * alpha * alpha / (beta * beta) * (1.0 + 1.0 / beta);
    let subset_size = measure.sample_size(epsilon / (2.0 * eta), SUBSET_DELTA);
    let width = 64.0 * alpha * eta * k as f64 / (beta * epsilon * epsilon) * subset_size as f64;
    let samples = ceil_to_count(width);
    TheoreticalParams { eta, samples, subset_size, kappa_log2: log2_binomial(samples, subset_size) }
}

/// Search parameters for one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtasParams {
    /// Size `N` of the multiset drawn at every node.
    pub samples: usize,
    /// Size `M` of each candidate subset; `M ≤ N`.
    pub subset_size: usize,
    /// Independent restarts; the best one is returned.
    pub repetitions: u64,
    pub mode: Mode,
    pub master_seed: u64,
    pub epsilon: f64,
    /// Upper bound on `repetitions · binomial(N, M)^k`.
    pub leaf_budget: u64,
    /// Worker threads for restarts; never changes the result, so it is not serialized.
    #[serde(skip, default = "one")]
    pub threads: usize,
}

fn one() -> usize {
    1
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1], got {epsilon}")))
    }
}

/// `2^k`, saturating.
pub fn default_repetitions(k: usize) -> u64 {
    1u64.checked_shl(k as u32).filter(|_| k < 64).unwrap_or(u64::MAX)
}

impl PtasParams {
    pub fn practical(k: usize, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        let samples = (ceil_to_count(8.0 * k as f64 / epsilon) as usize).max(4);
        Ok(Self {
            samples,
            subset_size: 2,
            repetitions: default_repetitions(k),
            mode: Mode::Practical,
            master_seed: 0,
            epsilon,
            leaf_budget: DEFAULT_LEAF_BUDGET,
            threads: 1,
        })
    }

    pub fn theoretical<M: Measure + ?Sized>(k: usize, epsilon: f64, measure: &M) -> Result<Self> {
        check_epsilon(epsilon)?;
        let t = theoretical_params(k, epsilon, measure);
        Ok(Self {
            samples: usize::try_from(t.samples).unwrap_or(usize::MAX),
            subset_size: usize::try_from(t.subset_size).unwrap_or(usize::MAX),
            repetitions: default_repetitions(k),
            mode: Mode::Theoretical,
            master_seed: 0,
            epsilon,
            leaf_budget: DEFAULT_LEAF_BUDGET,
            threads: 1,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_shape(mut self, samples: usize, subset_size: usize) -> Self {
        self.samples = samples;
        self.subset_size = subset_size;
        self
    }

    pub fn with_repetitions(mut self, repetitions: u64) -> Self {
        self.repetitions = repetitions;
        self
    }

    pub fn with_leaf_budget(mut self, budget: u64) -> Self {
        self.leaf_budget = budget;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.subset_size == 0 {
            return Err(Error::InvalidArgument("subset size M must be at least 1".into()));
        }
        if self.subset_size > self.samples {
            return Err(Error::InvalidArgument(format!(
                "subset size M={} exceeds sample width N={}",
                self.subset_size, self.samples
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::InvalidArgument("threads must be at least 1".into()));
        }
        Ok(())
    }
}
