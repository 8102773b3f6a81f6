//! Minimize benchmark test suites while preserving the ranking of the
//! software variants they compare.
//!
//! Given one or more variants-by-tests performance matrices, the solvers in
//! this crate search for a low-cost weighted subset of tests whose induced
//! ranking matches the full ranking up to a target Kendall tau. The crate is
//! `no_std` (alloc required); IO, file formats and the CLI live in the
//! companion `rtsm` crate.

#![no_std]

extern crate alloc;

pub mod baselines;
pub mod bisect;
pub mod error;
pub mod exact;
pub mod matrix;
pub mod oracle;
pub mod ranking;
pub mod rng;
pub mod solution;
pub mod solver;
pub mod stop;

pub use error::Error;
pub use exact::{exact_minimize, exact_minimize_with, ExactBackend, ExactModel};
pub use matrix::{CostVector, PerformanceMatrix, RtsmInstance, TestSet};
pub use oracle::{solves, solves_in_context, FitOptions, OracleResult};
pub use ranking::{cost_reduction, full_ranking, kendall_tau, score, weighted_ranking, Ranking};
pub use solution::Solution;
pub use solver::{divide_and_conquer, iterative_solve, SamplerKind, SolverConfig};
pub use stop::{Never, StopCondition};

pub type Result<T> = core::result::Result<T, Error>;
