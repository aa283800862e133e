//! Baselines and statistical experiments: k-means++ seeding, Lloyd refinement,
//! approximation ratios against the exact oracle, and an empirical check of
//! the sampling property.

use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{centroid, cost, nearest_center, CenterSet, Dataset, Measure, SquaredEuclidean};
use crate::oracle::{optimal_kmeans, ORACLE_MAX_POINTS};
use crate::ptas::{find_k_means, PtasParams};
use crate::rng::Rng;
use crate::sampler::{d2_draw, DistanceCache};

/// Lloyd iterations applied to the k-means++ baseline in ratio experiments.
pub const BASELINE_LLOYD_ITERS: usize = 100;

/// Distance between neighbouring gaussian-mixture means, in units of the component deviation.
const MIXTURE_SPACING: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Generator {
    /// Coordinates uniform in `[0, 1)`.
    UniformBox,
    /// `k` unit-variance gaussians centred on scaled simplex vertices.
    GaussianMixture,
    /// Points `t·(1, …, 1)` with `t` uniform in `[0, 10)`.
    Collinear,
}

pub fn generate(generator: Generator, n: usize, d: usize, k: usize, rng: &mut Rng) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument(format!("instances need n ≥ 1 and d ≥ 1, got n={n}, d={d}")));
    }
    let rows: Vec<Vec<f64>> = match generator {
        Generator::UniformBox => (0..n).map(|_| (0..d).map(|_| rng.next_f64()).collect()).collect(),
        Generator::GaussianMixture => {
            let k = k.max(1);
            (0..n)
                .map(|_| {
                    let component = rng.index(k);
                    let mut mean = vec![0.0; d];
                    // Vertex `component` of a scaled simplex; wraps to farther shells when k > d.
                    mean[component % d] = MIXTURE_SPACING * (1 + component / d) as f64;
                    mean.iter()
                        .map(|m| m + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng.as_rand()))
                        .collect()
                })
                .collect()
        }
        Generator::Collinear => (0..n)
            .map(|_| {
                let t = 10.0 * rng.next_f64();
                vec![t; d]
            })
            .collect(),
    };
    Dataset::from_rows(&rows)
}

/// k-means++: a uniform first center, then each next center drawn by D²-sampling.
pub fn kmeanspp_seed(data: &Dataset, k: usize, rng: &mut Rng) -> Result<CenterSet> {
    if k == 0 || k > data.len() {
        return Err(Error::InvalidArgument(format!("k-means++ needs 1 ≤ k ≤ n, got k={k}, n={}", data.len())));
    }
    let mut cache = DistanceCache::new(data.len());
    let mut centers = CenterSet::empty(data.dim());
    for _ in 0..k {
        let i = d2_draw(&cache, rng);
        centers.push(data.point(i))?;
        cache.push_center(data, data.point(i), &SquaredEuclidean);
    }
    Ok(centers)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydOutcome {
    pub centers: CenterSet,
    /// Cost of the input centers followed by the cost after each iteration.
    pub costs: Vec<f64>,
    pub iterations: usize,
    /// True when the last iteration left the assignment unchanged.
    pub converged: bool,
}

/// Lloyd's algorithm. A cluster that loses all its points keeps its previous center.
pub fn lloyd_refine(data: &Dataset, centers: &CenterSet, max_iters: usize) -> Result<LloydOutcome> {
    let m = SquaredEuclidean;
    let mut current = centers.clone();
    let mut costs = vec![cost(data, &current, &m)?];
    let mut assignment: Vec<usize> = data.iter().map(|p| nearest_center(p, &current, &m).0).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let mut next = CenterSet::empty(data.dim());
        for j in 0..current.len() {
            let members: Vec<&[f64]> = data.iter().zip(&assignment).filter(|(_, &a)| a == j).map(|(p, _)| p).collect();
            match centroid(&members) {
                Ok(mean) => next.push(mean.as_slice())?,
                Err(_) => next.push(current.center(j))?,
            }
        }
        current = next;
        costs.push(cost(data, &current, &m)?);
        let reassigned: Vec<usize> = data.iter().map(|p| nearest_center(p, &current, &m).0).collect();
        if reassigned == assignment {
            converged = true;
            break;
        }
        assignment = reassigned;
    }
    Ok(LloydOutcome { centers: current, costs, iterations, converged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator: Generator,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub epsilon: f64,
    pub trials: usize,
    /// Overrides for the practical search defaults.
    pub samples: Option<usize>,
    pub subset_size: Option<usize>,
    pub repetitions: Option<u64>,
    pub master_seed: u64,
    #[serde(skip, default = "one")]
    pub threads: usize,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(generator: Generator, n: usize, d: usize, k: usize, epsilon: f64, trials: usize) -> Self {
        Self {
            generator,
            n,
            d,
            k,
            epsilon,
            trials,
            samples: None,
            subset_size: None,
            repetitions: None,
            master_seed: 0,
            threads: 1,
        }
    }

    pub fn ptas_params(&self) -> Result<PtasParams> {
        let mut params = PtasParams::practical(self.k, self.epsilon)?.with_threads(1);
        if let Some(samples) = self.samples {
            params.samples = samples;
        }
        if let Some(m) = self.subset_size {
            params.subset_size = m;
        }
        if let Some(r) = self.repetitions {
            params.repetitions = r;
        }
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub ptas_cost: f64,
    pub oracle_cost: f64,
    /// `ptas_cost / oracle_cost`; 1 when both are 0, absent when only the oracle cost is 0.
    pub ratio: Option<f64>,
    /// k-means++ followed by Lloyd.
    pub baseline_cost: f64,
    pub baseline_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub trials: usize,
    pub mean_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub min_ratio: Option<f64>,
    /// Fraction of trials with ratio ≤ 1 + ε.
    pub fraction_within: f64,
    /// Fraction of trials with ratio ≥ 1 − 1e-9.
    pub fraction_not_below_oracle: f64,
    pub baseline_mean_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub ptas_secs: f64,
    pub oracle_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub epsilon: f64,
    pub per_trial: Vec<TrialRecord>,
    pub summary: RatioSummary,
    pub runtime: RuntimeStats,
}

/// Tolerance under which a PTAS cost may undercut the oracle through rounding.
pub const ORACLE_DOMINANCE_TOL: f64 = 1e-9;

pub fn approximation_ratio(cost: f64, optimum: f64) -> Option<f64> {
    if optimum > 0.0 {
        Some(cost / optimum)
    } else if cost == 0.0 {
        Some(1.0)
    } else {
        None
    }
}

/// Runs `config.trials` generated instances through the PTAS, the oracle, and the baseline.
pub fn ratio_experiment(config: &ExperimentConfig) -> Result<RatioReport> {
    run_trials(config, config.n, |rng| generate(config.generator, config.n, config.d, config.k, rng))
}

/// Like [`ratio_experiment`], with every trial on `data`; trials differ only in their seeds.
pub fn ratio_experiment_on(data: &Dataset, config: &ExperimentConfig) -> Result<RatioReport> {
    run_trials(config, data.len(), |_| Ok(data.clone()))
}

struct TrialOutcome {
    record: TrialRecord,
    ptas_secs: f64,
    oracle_secs: f64,
}

fn run_trials<G>(config: &ExperimentConfig, n: usize, instance: G) -> Result<RatioReport>
where
    G: Fn(&mut Rng) -> Result<Dataset> + Sync,
{
    if n > ORACLE_MAX_POINTS {
        return Err(Error::OracleCap { n, cap: ORACLE_MAX_POINTS });
    }
    if config.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if config.k == 0 || config.k > n {
        return Err(Error::InvalidArgument(format!("bench needs 1 ≤ k ≤ n, got k={}, n={n}", config.k)));
    }
    let params = config.ptas_params()?;

    let trial = |t: usize| -> Result<TrialOutcome> {
        let mut rng = Rng::substream(config.master_seed, t as u64);
        let data = instance(&mut rng)?;
        let trial_params = params.clone().with_seed(rng.next_u64());

        let started = Instant::now();
        let solved = find_k_means(&data, config.k, &trial_params, &SquaredEuclidean)?;
        let ptas_secs = started.elapsed().as_secs_f64();

        let started = Instant::now();
        let exact = optimal_kmeans(&data, config.k)?;
        let oracle_secs = started.elapsed().as_secs_f64();

        let seeded = kmeanspp_seed(&data, config.k, &mut rng)?;
        let baseline = lloyd_refine(&data, &seeded, BASELINE_LLOYD_ITERS)?;
        let baseline_cost = *baseline.costs.last().expect("initial cost recorded");

        Ok(TrialOutcome {
            record: TrialRecord {
                trial: t,
                ptas_cost: solved.cost,
                oracle_cost: exact.cost,
                ratio: approximation_ratio(solved.cost, exact.cost),
                baseline_cost,
                baseline_ratio: approximation_ratio(baseline_cost, exact.cost),
            },
            ptas_secs,
            oracle_secs,
        })
    };

    let outcomes: Vec<TrialOutcome> = if config.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| (0..config.trials).into_par_iter().map(trial).collect::<Result<_>>())?
    } else {
        (0..config.trials).map(trial).collect::<Result<_>>()?
    };

    let runtime = RuntimeStats {
        ptas_secs: outcomes.iter().map(|o| o.ptas_secs).sum(),
        oracle_secs: outcomes.iter().map(|o| o.oracle_secs).sum(),
    };
    let per_trial: Vec<TrialRecord> = outcomes.into_iter().map(|o| o.record).collect();
    Ok(RatioReport { epsilon: config.epsilon, summary: summarize(&per_trial, config.epsilon), per_trial, runtime })
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn summarize(per_trial: &[TrialRecord], epsilon: f64) -> RatioSummary {
    let trials = per_trial.len();
    let ratios: Vec<f64> = per_trial.iter().filter_map(|r| r.ratio).collect();
    // An unbounded ratio misses the (1 + ε) target but is not below the oracle;
    // mean and max are reported only when every ratio is finite.
    let all_finite = ratios.len() == trials;
    let fraction = |pred: &dyn Fn(f64) -> bool| ratios.iter().filter(|&&r| pred(r)).count() as f64 / trials as f64;
    let baseline: Vec<f64> = per_trial.iter().filter_map(|r| r.baseline_ratio).collect();
    RatioSummary {
        trials,
        mean_ratio: mean(&ratios).filter(|_| all_finite),
        max_ratio: ratios.iter().copied().reduce(f64::max).filter(|_| all_finite),
        min_ratio: ratios.iter().copied().reduce(f64::min),
        fraction_within: fraction(&|r| r <= 1.0 + epsilon),
        fraction_not_below_oracle: fraction(&|r| r >= 1.0 - ORACLE_DOMINANCE_TOL) + (trials - ratios.len()) as f64 / trials as f64,
        baseline_mean_ratio: mean(&baseline).filter(|_| baseline.len() == trials),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPropertyOutcome {
    pub gamma: f64,
    pub delta: f64,
    pub sample_size: u64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// `(1 − δ) − 3·sqrt(δ(1 − δ)/trials)`.
    pub threshold: f64,
    pub passed: bool,
}

/// Success-rate threshold: `1 − δ` less three binomial standard errors.
pub fn sampling_threshold(delta: f64, trials: usize) -> f64 {
    (1.0 - delta) - 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt()
}

/// Draws `f(γ, δ)` points uniformly with replacement from a fresh random set
/// per trial and counts how often their mean is a `(1 + γ)`-approximate 1-center.
pub fn sampling_property_test(
    gamma: f64,
    delta: f64,
    n: usize,
    d: usize,
    trials: usize,
    rng: &mut Rng,
) -> Result<SamplingPropertyOutcome> {
    let size = SquaredEuclidean.sample_size(gamma, delta);
    sampling_property_test_with_size(gamma, delta, n, d, trials, size, rng)
}

/// [`sampling_property_test`] with an explicit sample size.
pub fn sampling_property_test_with_size(
    gamma: f64,
    delta: f64,
    n: usize,
    d: usize,
    trials: usize,
    sample_size: u64,
    rng: &mut Rng,
) -> Result<SamplingPropertyOutcome> {
    if !(gamma > 0.0 && gamma <= 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < γ ≤ 1 and 0 < δ < 1, got γ={gamma}, δ={delta}")));
    }
    if trials < 100 {
        return Err(Error::InvalidArgument(format!("sampling test needs at least 100 trials, got {trials}")));
    }
    if sample_size == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let m = SquaredEuclidean;
    let mut successes = 0;
    for _ in 0..trials {
        let data = generate(Generator::UniformBox, n, d, 1, rng)?;
        let sample: Vec<&[f64]> = (0..sample_size).map(|_| data.point(rng.index(n))).collect();
        let guess = CenterSet::from_rows(d, &[centroid(&sample)?])?;
        let mean = CenterSet::from_rows(d, &[centroid(&data.iter().collect::<Vec<_>>())?])?;
        // Averaging copies of one point need not reproduce it exactly; allow that rounding.
        let scale = data.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
        let slack = 1e-20 * (n * d) as f64 * scale * scale;
        if cost(&data, &guess, &m)? <= (1.0 + gamma) * cost(&data, &mean, &m)? + slack {
            successes += 1;
        }
    }
    let success_rate = successes as f64 / trials as f64;
    let threshold = sampling_threshold(delta, trials);
    Ok(SamplingPropertyOutcome {
        gamma,
        delta,
        sample_size,
        trials,
        successes,
        success_rate,
        threshold,
        passed: success_rate >= threshold,
    })
}
