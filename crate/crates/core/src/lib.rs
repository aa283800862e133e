//! D²-sampling approximation scheme for k-means.
//!
//! The solver ([`ptas::find_k_means`]) grows a center set one center at a
//! time: it draws a multiset of points by D²-sampling, branches over every
//! fixed-size subset of that multiset, and adds the subset's centroid. With
//! large enough sample sizes the best leaf is a `(1 + ε)`-approximation; the
//! practical defaults keep the same structure at executable scale.
//!
//! Alongside the solver sit an exhaustive oracle for tiny inputs
//! ([`oracle::optimal_kmeans`]), k-means++/Lloyd baselines and statistical
//! experiments ([`harness`]), and the `d2kmeans` command-line front end ([`cli`]).

pub mod cli;
pub mod error;
pub mod harness;
pub mod measure;
pub mod oracle;
pub mod ptas;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use measure::{CenterSet, Dataset, Measure, Point, SquaredEuclidean};
pub use ptas::{find_k_means, PtasParams, SolveResult};
pub use rng::Rng;
