//! Solution files: JSON with stable key ordering so reruns diff cleanly.
//!
//! Layout: `{tests: [id], weights: {metric: {id: value}}, tau, cost,
//! method, seed}`. Tests are listed in the instance's canonical column
//! order; maps are sorted by key.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rtsm_core::ranking::{full_ranking, kendall_counts, tau_meets_target, weighted_ranking};
use rtsm_core::{RtsmInstance, Solution, TestSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub tests: Vec<String>,
    pub weights: BTreeMap<String, BTreeMap<String, f64>>,
    pub tau: f64,
    pub cost: f64,
    pub method: String,
    pub seed: u64,
}

impl SolutionFile {
    pub fn from_solution(instance: &RtsmInstance, solution: &Solution) -> SolutionFile {
        let ids = instance.test_ids();
        let tests: Vec<String> = solution.tests.iter().map(|t| ids[t].clone()).collect();
        let weights = instance
            .matrices()
            .iter()
            .enumerate()
            .map(|(mi, m)| {
                let per_test = solution
                    .tests
                    .iter()
                    .zip(&solution.weights[mi])
                    .map(|(t, w)| (ids[t].clone(), *w))
                    .collect();
                (m.metric_name().to_owned(), per_test)
            })
            .collect();
        SolutionFile {
            tests,
            weights,
            tau: solution.achieved_tau,
            cost: solution.total_cost,
            method: solution.method.clone(),
            seed: solution.seed,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut body = serde_json::to_string_pretty(self)?;
        body.push('\n');
        fs::write(path, body).with_context(|| format!("{}: cannot write", path.display()))
    }

    pub fn read(path: &Path) -> Result<SolutionFile> {
        let body =
            fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))?;
        serde_json::from_str(&body).with_context(|| format!("{}: invalid solution file", path.display()))
    }

    /// Recheck the file against an instance from scratch: resolve ids,
    /// recompute each metric's weighted ranking with the stored weights,
    /// and compare Kendall against the instance target and stored values.
    pub fn verify(&self, instance: &RtsmInstance) -> Result<()> {
        if self.tests.is_empty() {
            bail!("solution selects no tests");
        }
        let index_of: BTreeMap<&str, usize> = instance
            .test_ids()
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut indices = Vec::new();
        for id in &self.tests {
            match index_of.get(id.as_str()) {
                Some(i) => indices.push(*i),
                None => bail!("solution references unknown test {id}"),
            }
        }
        let subset = TestSet::new(indices);
        if subset.len() != self.tests.len() {
            bail!("solution lists a test more than once");
        }
        let kept_cost = instance.costs().total(&subset);
        if (kept_cost - self.cost).abs() > 1e-9 * kept_cost.abs().max(1.0) {
            bail!("stored cost {} != recomputed cost {kept_cost}", self.cost);
        }
        let mut worst = f64::INFINITY;
        for m in instance.matrices() {
            let per_test = self
                .weights
                .get(m.metric_name())
                .with_context(|| format!("no weights for metric {}", m.metric_name()))?;
            let ids = instance.test_ids();
            let weights: Vec<f64> = subset
                .iter()
                .map(|t| {
                    per_test
                        .get(&ids[t])
                        .copied()
                        .with_context(|| format!("metric {}: no weight for test {}", m.metric_name(), ids[t]))
                })
                .collect::<Result<_>>()?;
            let induced = weighted_ranking(m, &subset, &weights)?;
            let counts = kendall_counts(&full_ranking(m), &induced)?;
            if !tau_meets_target(counts, instance.target_tau()) {
                bail!(
                    "metric {}: Kendall {} misses target {}",
                    m.metric_name(),
                    counts.tau(),
                    instance.target_tau()
                );
            }
            worst = worst.min(counts.tau());
        }
        if (worst - self.tau).abs() > 1e-9 {
            bail!("stored tau {} != recomputed tau {worst}", self.tau);
        }
        Ok(())
    }
}
