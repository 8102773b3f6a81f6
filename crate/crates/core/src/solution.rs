use alloc::string::String;
use alloc::vec::Vec;

use crate::matrix::TestSet;

/// A feasible answer to a minimization run: the kept tests, the fitted
/// per-metric weights, and the worst-metric Kendall it achieves.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub tests: TestSet,
    /// One weight vector per metric, aligned with `tests` in canonical order.
    pub weights: Vec<Vec<f64>>,
    /// Worst Kendall tau over all metrics against the full ranking.
    pub achieved_tau: f64,
    pub total_cost: f64,
    pub method: String,
    pub seed: u64,
    /// Outer-loop iterations that produced this solution (1 for single pass).
    pub iterations: u32,
}

impl Solution {
    /// Weight of a given test for a metric, if the test is selected.
    pub fn weight_of(&self, metric: usize, test: usize) -> Option<f64> {
        let pos = self.tests.as_slice().binary_search(&test).ok()?;
        Some(self.weights[metric][pos])
    }
}
