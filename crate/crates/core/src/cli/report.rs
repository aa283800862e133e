//! The JSON document every command writes to standard output.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::dataset::InputDigest;
use crate::harness::{RatioReport, SamplingPropertyOutcome};
use crate::measure::TupleCheck;
use crate::oracle::Partition;
use crate::ptas::TheoreticalParams;

pub const SCHEMA_VERSION: &str = "d2kmeans.report.v1";

/// Fields (dotted paths) that carry wall-clock timings. Everything else in a
/// report is a function of the flags, the input bytes and the seed.
pub const NONDETERMINISTIC_FIELDS: &[&str] = &["duration_secs", "result.runtime"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Solve,
    Oracle,
    Bench,
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// The request was well-formed but over a resource cap.
    Refused,
    /// A check ran and at least one verdict failed.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub command: CommandName,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub input: Option<InputDigest>,
    pub params: Value,
    pub seed: Option<u64>,
    pub result: Option<ResultPayload>,
    pub duration_secs: f64,
}

impl RunReport {
    pub fn new(command: CommandName, params: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            command,
            status: Status::Ok,
            message: None,
            input: None,
            params,
            seed: None,
            result: None,
            duration_secs: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite numbers")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResultPayload {
    Solve(SolvePayload),
    Oracle(OraclePayload),
    Bench(RatioReport),
    Check(CheckPayload),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalSummary {
    #[serde(flatten)]
    pub params: TheoreticalParams,
    pub repetitions: u64,
    /// `log2(repetitions · κ^k)`.
    pub leaf_estimate_log2: f64,
    pub leaf_budget: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub centers: Vec<Vec<f64>>,
    pub cost: f64,
    pub candidates_evaluated: u64,
    pub best_restart: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvePayload {
    pub theoretical: Option<TheoreticalSummary>,
    pub solution: Option<Solution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePayload {
    pub partition: Partition,
    pub centers: Vec<Vec<f64>>,
    pub cost: f64,
    pub partitions_examined: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "property", rename_all = "snake_case")]
pub enum Verdict {
    Centroid { probes: usize, rel_tol: f64, worst_relative_gap: f64, passed: bool },
    Symmetry { check: TupleCheck, passed: bool },
    Triangle { check: TupleCheck, alpha: f64, passed: bool },
    Sampling { outcome: SamplingPropertyOutcome, passed: bool },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        match self {
            Verdict::Centroid { passed, .. }
            | Verdict::Symmetry { passed, .. }
            | Verdict::Triangle { passed, .. }
            | Verdict::Sampling { passed, .. } => *passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckPayload {
    pub verdicts: Vec<Verdict>,
    pub all_passed: bool,
}

/// Removes [`NONDETERMINISTIC_FIELDS`] from a parsed report.
pub fn strip_nondeterministic(report: &mut Value) {
    for path in NONDETERMINISTIC_FIELDS {
        let mut node = &mut *report;
        let mut parts = path.split('.').peekable();
        while let Some(part) = parts.next() {
            if parts.peek().is_none() {
                if let Some(map) = node.as_object_mut() {
                    map.remove(part);
                }
                break;
            }
            match node.get_mut(part) {
                Some(next) => node = next,
                None => break,
            }
        }
    }
}
