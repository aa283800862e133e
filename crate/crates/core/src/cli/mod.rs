//! `d2kmeans` command-line front end.
//!
//! Every command writes exactly one JSON report to standard output and
//! diagnostics to standard error. Exit codes: 0 success, 1 failed check,
//! 2 resource refusal, 64 usage error, 65 unreadable or malformed input.

pub mod dataset;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

pub use dataset::{load_dataset, load_dataset_with_digest, parse_dataset, InputDigest};
pub use report::{
    strip_nondeterministic, CheckPayload, CommandName, OraclePayload, ResultPayload, RunReport, Solution,
    SolvePayload, Status, TheoreticalSummary, Verdict, NONDETERMINISTIC_FIELDS, SCHEMA_VERSION,
};

use crate::error::{Error, Result};
use crate::harness::{
    generate, ratio_experiment, ratio_experiment_on, sampling_property_test, ExperimentConfig, Generator,
};
use crate::measure::{centroid_property_gap, inspect_tuples, Dataset, Measure, SquaredEuclidean};
use crate::oracle::optimal_kmeans;
use crate::ptas::{find_k_means, theoretical_params, Mode, PtasParams, DEFAULT_LEAF_BUDGET};
use crate::rng::Rng;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_REFUSED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INPUT: i32 = 65;

#[derive(Debug, Parser)]
#[command(name = "d2kmeans", version, about = "D²-sampling approximation scheme for k-means")]
pub struct Cli {
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a CSV file with the sampling search.
    Solve(SolveArgs),
    /// Exact k-means by exhaustive partition search (n ≤ 15).
    Oracle(OracleArgs),
    /// Approximation ratios of the search against the oracle on seeded instances.
    Bench(BenchArgs),
    /// Spot-check the properties the search relies on.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Practical,
    Theoretical,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Practical)]
    pub mode: ModeArg,
    /// Multiset size drawn at each node (practical mode).
    #[arg(long = "N")]
    pub samples: Option<usize>,
    /// Subset size averaged into each candidate center (practical mode).
    #[arg(long = "M")]
    pub subset_size: Option<usize>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_LEAF_BUDGET)]
    pub leaf_budget: u64,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Generator::UniformBox)]
    pub generator: Generator,
    /// Run every trial on this file instead of generated instances.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long = "N")]
    pub samples: Option<usize>,
    #[arg(long = "M")]
    pub subset_size: Option<usize>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropertyArg {
    Centroid,
    Symmetry,
    Triangle,
    Sampling,
    All,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, value_enum, default_value_t = PropertyArg::All)]
    pub property: PropertyArg,
    /// Points to probe; a seeded uniform sample of 50 points in 3-d when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random centers (centroid) or tuples (symmetry, triangle) to test.
    #[arg(long, default_value_t = 200)]
    pub probes: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.2)]
    pub delta: f64,
    /// Points per random set in the sampling test.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

/// Parses `args` (including the program name), runs the command, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{rendered}") } else { write!(out, "{rendered}") };
            return code;
        }
    };
    if cli.threads == 0 {
        let _ = writeln!(err, "error: --threads must be at least 1");
        return EXIT_USAGE;
    }

    let started = Instant::now();
    let outcome = match &cli.command {
        Command::Solve(args) => run_solve(args, cli.threads),
        Command::Oracle(args) => run_oracle(args),
        Command::Bench(args) => run_bench(args, cli.threads),
        Command::Check(args) => run_check(args),
    };
    match outcome {
        Ok(mut report) => {
            report.duration_secs = started.elapsed().as_secs_f64();
            if let Some(message) = &report.message {
                let _ = writeln!(err, "{message}");
            }
            let _ = writeln!(out, "{}", report.to_json());
            match report.status {
                Status::Ok => EXIT_OK,
                Status::Refused => EXIT_REFUSED,
                Status::Failed => EXIT_CHECK_FAILED,
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_input() {
                EXIT_INPUT
            } else if e.is_refusal() {
                EXIT_REFUSED
            } else {
                EXIT_USAGE
            }
        }
    }
}

/// Turns a refusal into a `refused` report; other errors propagate.
fn refuse(mut report: RunReport, error: Error) -> Result<RunReport> {
    if !error.is_refusal() {
        return Err(error);
    }
    report.status = Status::Refused;
    report.message = Some(format!("refused: {error}"));
    Ok(report)
}

pub fn run_solve(args: &SolveArgs, threads: usize) -> Result<RunReport> {
    let (data, digest) = load_dataset_with_digest(&args.input)?;
    let measure = SquaredEuclidean;
    let mut params = match args.mode {
        ModeArg::Practical => PtasParams::practical(args.k, args.epsilon)?,
        ModeArg::Theoretical => {
            if args.samples.is_some() || args.subset_size.is_some() {
                return Err(Error::InvalidArgument("--N and --M are fixed in theoretical mode".into()));
            }
            PtasParams::theoretical(args.k, args.epsilon, &measure)?
        }
    };
    if let Some(samples) = args.samples {
        params.samples = samples;
    }
    if let Some(m) = args.subset_size {
        params.subset_size = m;
    }
    if let Some(reps) = args.reps {
        params.repetitions = reps;
    }
    params = params.with_seed(args.seed).with_leaf_budget(args.leaf_budget).with_threads(threads);
    params.validate()?;

    let theoretical = (params.mode == Mode::Theoretical).then(|| {
        let t = theoretical_params(args.k, args.epsilon, &measure);
        TheoreticalSummary {
            params: t,
            repetitions: params.repetitions,
            leaf_estimate_log2: t.leaf_estimate_log2(args.k, params.repetitions),
            leaf_budget: params.leaf_budget,
        }
    });

    let mut report = RunReport::new(
        CommandName::Solve,
        json!({ "k": args.k, "ptas": serde_json::to_value(&params).expect("plain data") }),
    );
    report.input = Some(digest);
    report.seed = Some(args.seed);
    report.result = Some(ResultPayload::Solve(SolvePayload { theoretical, solution: None }));

    match find_k_means(&data, args.k, &params, &measure) {
        Ok(solved) => {
            if let Some(ResultPayload::Solve(payload)) = &mut report.result {
                payload.solution = Some(Solution {
                    centers: solved.centers.to_vecs(),
                    cost: solved.cost,
                    candidates_evaluated: solved.candidates_evaluated,
                    best_restart: solved.best_restart,
                });
            }
            Ok(report)
        }
        Err(e) => refuse(report, e),
    }
}

pub fn run_oracle(args: &OracleArgs) -> Result<RunReport> {
    let (data, digest) = load_dataset_with_digest(&args.input)?;
    let mut report = RunReport::new(CommandName::Oracle, json!({ "k": args.k }));
    report.input = Some(digest);
    match optimal_kmeans(&data, args.k) {
        Ok(sol) => {
            report.result = Some(ResultPayload::Oracle(OraclePayload {
                partition: sol.partition,
                centers: sol.centers.to_vecs(),
                cost: sol.cost,
                partitions_examined: sol.partitions,
            }));
            Ok(report)
        }
        Err(e) => refuse(report, e),
    }
}

pub fn run_bench(args: &BenchArgs, threads: usize) -> Result<RunReport> {
    let fixed = args.input.as_ref().map(load_dataset_with_digest).transpose()?;
    let (n, d) = fixed.as_ref().map_or((args.n, args.d), |(data, _)| (data.len(), data.dim()));
    let mut config = ExperimentConfig::new(args.generator, n, d, args.k, args.epsilon, args.trials);
    config.samples = args.samples;
    config.subset_size = args.subset_size;
    config.repetitions = args.reps;
    config.master_seed = args.seed;
    config.threads = threads;

    let mut report = RunReport::new(
        CommandName::Bench,
        json!({
            "experiment": serde_json::to_value(&config).expect("plain data"),
            "generator_used": fixed.is_none(),
        }),
    );
    report.seed = Some(args.seed);
    let outcome = match &fixed {
        Some((data, digest)) => {
            report.input = Some(digest.clone());
            ratio_experiment_on(data, &config)
        }
        None => ratio_experiment(&config),
    };
    match outcome {
        Ok(ratios) => {
            report.result = Some(ResultPayload::Bench(ratios));
            Ok(report)
        }
        Err(e) => refuse(report, e),
    }
}

pub fn run_check(args: &CheckArgs) -> Result<RunReport> {
    let mut rng = Rng::seed_from_u64(args.seed);
    let (data, digest) = match &args.input {
        Some(path) => {
            let (data, digest) = load_dataset_with_digest(path)?;
            (data, Some(digest))
        }
        None => (generate(Generator::UniformBox, 50, 3, 1, &mut rng)?, None),
    };
    let measure = SquaredEuclidean;
    let wanted = |p: PropertyArg| args.property == p || args.property == PropertyArg::All;
    let mut verdicts = Vec::new();

    if wanted(PropertyArg::Centroid) {
        let mut worst = 0.0f64;
        for _ in 0..args.probes {
            let probe = random_probe(&data, &mut rng);
            worst = worst.max(centroid_property_gap(&data, &probe, &measure)?);
        }
        verdicts.push(Verdict::Centroid {
            probes: args.probes,
            rel_tol: args.rel_tol,
            worst_relative_gap: worst,
            passed: worst <= args.rel_tol,
        });
    }
    if wanted(PropertyArg::Symmetry) || wanted(PropertyArg::Triangle) {
        let triples: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..args.probes)
            .map(|_| (random_probe(&data, &mut rng), random_probe(&data, &mut rng), random_probe(&data, &mut rng)))
            .collect();
        let check = inspect_tuples(&triples, &measure);
        if wanted(PropertyArg::Symmetry) {
            verdicts.push(Verdict::Symmetry { check, passed: check.symmetry_violations == 0 });
        }
        if wanted(PropertyArg::Triangle) {
            verdicts.push(Verdict::Triangle { check, alpha: measure.alpha(), passed: check.triangle_violations == 0 });
        }
    }
    if wanted(PropertyArg::Sampling) {
        let outcome = sampling_property_test(args.gamma, args.delta, args.n, args.d, args.trials, &mut rng)?;
        verdicts.push(Verdict::Sampling { passed: outcome.passed, outcome });
    }

    let all_passed = verdicts.iter().all(Verdict::passed);
    let mut report = RunReport::new(
        CommandName::Check,
        json!({
            "property": format!("{:?}", args.property).to_lowercase(),
            "probes": args.probes,
            "rel_tol": args.rel_tol,
            "gamma": args.gamma,
            "delta": args.delta,
            "n": args.n,
            "d": args.d,
            "trials": args.trials,
        }),
    );
    report.input = digest;
    report.seed = Some(args.seed);
    if !all_passed {
        report.status = Status::Failed;
        report.message = Some("one or more property checks failed".into());
    }
    report.result = Some(ResultPayload::Check(CheckPayload { verdicts, all_passed }));
    Ok(report)
}

/// A data point, or with equal odds a uniform point in the data's bounding box
/// widened by half its extent on each side.
fn random_probe(data: &Dataset, rng: &mut Rng) -> Vec<f64> {
    if rng.next_f64() < 0.5 {
        return data.point(rng.index(data.len())).to_vec();
    }
    (0..data.dim())
        .map(|j| {
            let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[j]), hi.max(p[j])));
            let pad = 0.5 * (hi - lo).max(1.0);
            (lo - pad) + rng.next_f64() * (hi - lo + 2.0 * pad)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("d2kmeans").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn bad_flags_exit_64() {
        let (code, out, err) = run_capture(&["solve", "--k", "2"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(out.is_empty());
        assert!(!err.is_empty());
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["--threads", "0", "check"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("solve"));
    }

    #[test]
    fn missing_file_is_an_input_error() {
        let (code, _, err) = run_capture(&["oracle", "--input", "/nonexistent/points.csv", "--k", "2"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("error"));
    }

    #[test]
    fn check_without_input_passes() {
        let (code, out, _) = run_capture(&["check", "--property", "all", "--trials", "200"]);
        assert_eq!(code, EXIT_OK, "{out}");
        let report = RunReport::from_json(&out).unwrap();
        match report.result {
            Some(ResultPayload::Check(payload)) => {
                assert!(payload.all_passed);
                assert_eq!(payload.verdicts.len(), 4);
            }
            other => panic!("unexpected payload {other:?}"),
        }
    }

    #[test]
    fn bench_over_the_oracle_cap_is_refused() {
        let (code, out, err) = run_capture(&["bench", "--n", "16", "--k", "2", "--trials", "1"]);
        assert_eq!(code, EXIT_REFUSED);
        assert!(err.contains("refused"));
        let report = RunReport::from_json(&out).unwrap();
        assert_eq!(report.status, Status::Refused);
    }
}
