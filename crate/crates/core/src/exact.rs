//! Exact optimizer for the unit-weight, Kendall-1 formulation.
//!
//! One binary selection variable per test; one linear inequality per
//! ordered variant pair and metric, requiring the selected columns' sums
//! to order the pair as the full suite does. The built-in backend is a
//! cost-pruned depth-first search; an external integer-programming service
//! can be plugged in behind [`ExactBackend`] (the companion crate ships a
//! process-boundary adapter with a documented file format).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::matrix::{RtsmInstance, TestSet};
use crate::ranking::{full_ranking, subset_ranking};
use crate::solution::Solution;
use crate::{Error, Result};

/// Built-in search limit; beyond this, plug in an external backend.
pub const BUILTIN_TEST_LIMIT: usize = 30;

/// A pairwise ranking-preservation constraint: the selected columns must
/// satisfy sum_{t in S} coeffs[t] >= 0 (strict when `strict`).
#[derive(Debug, Clone, PartialEq)]
pub struct PairConstraint {
    pub metric: usize,
    /// Variant ranked higher in the full ranking.
    pub higher: usize,
    /// Variant ranked lower.
    pub lower: usize,
    /// Per-test coefficients: value(higher, t) - value(lower, t).
    pub coeffs: Vec<f64>,
    /// Strict inequality required when the index tie-break would order the
    /// pair the wrong way on equality.
    pub strict: bool,
}

/// The unit-weight selection model: binary variable per test, pair
/// constraints, and the summed-cost objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactModel {
    pub n_tests: usize,
    pub costs: Vec<f64>,
    pub constraints: Vec<PairConstraint>,
}

impl ExactModel {
    pub fn build(instance: &RtsmInstance) -> Result<ExactModel> {
        if instance.target_tau() != 1.0 {
            return Err(Error::ExactTargetUnsupported);
        }
        let n_tests = instance.n_tests();
        let mut constraints = Vec::new();
        for (mi, matrix) in instance.matrices().iter().enumerate() {
            let full = full_ranking(matrix);
            let n = matrix.n_variants();
            for a in 0..n {
                for b in (a + 1)..n {
                    let (higher, lower) = if full.rank_of(a) < full.rank_of(b) {
                        (a, b)
                    } else {
                        (b, a)
                    };
                    let coeffs = (0..n_tests)
                        .map(|t| matrix.value(higher, t) - matrix.value(lower, t))
                        .collect();
                    constraints.push(PairConstraint {
                        metric: mi,
                        higher,
                        lower,
                        coeffs,
                        // On an exact total tie, the index rule ranks the
                        // smaller index first; equality is only acceptable
                        // when that reproduces the full order.
                        strict: higher > lower,
                    });
                }
            }
        }
        Ok(ExactModel {
            n_tests,
            costs: instance.costs().as_slice().to_vec(),
            constraints,
        })
    }

    /// Check a selection against every constraint.
    pub fn satisfied_by(&self, selected: &TestSet) -> bool {
        if selected.is_empty() {
            return false;
        }
        self.constraints.iter().all(|c| {
            let margin: f64 = selected.iter().map(|t| c.coeffs[t]).sum();
            if c.strict {
                margin > 0.0
            } else {
                margin >= 0.0
            }
        })
    }
}

/// Interface for exact solvers of an [`ExactModel`]; returns the selected
/// test indices of a minimum-cost satisfying selection.
pub trait ExactBackend {
    fn minimize(&self, model: &ExactModel) -> Result<Vec<usize>>;
}

/// Cost-pruned depth-first search over the selection variables. Optimal;
/// intended for desk-scale instances (limit [`BUILTIN_TEST_LIMIT`]).
#[derive(Debug, Clone, Copy, Default)]
pub struct BranchAndBound;

impl ExactBackend for BranchAndBound {
    fn minimize(&self, model: &ExactModel) -> Result<Vec<usize>> {
        if model.n_tests > BUILTIN_TEST_LIMIT {
            return Err(Error::ExactTooLarge {
                limit: BUILTIN_TEST_LIMIT,
                got: model.n_tests,
            });
        }
        // Branch on tests in descending cost so expensive exclusions are
        // decided early and the cost bound bites sooner.
        let mut order: Vec<usize> = (0..model.n_tests).collect();
        order.sort_by(|&a, &b| {
            model.costs[b]
                .partial_cmp(&model.costs[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut best: Option<(f64, TestSet)> = None;
        let mut chosen = Vec::new();
        search(model, &order, 0, 0.0, &mut chosen, &mut best);
        match best {
            Some((_, set)) => Ok(set.iter().collect()),
            None => Err(Error::Backend(String::from(
                "no selection preserves the ranking (unit weights)",
            ))),
        }
    }
}

fn search(
    model: &ExactModel,
    order: &[usize],
    depth: usize,
    cost: f64,
    chosen: &mut Vec<usize>,
    best: &mut Option<(f64, TestSet)>,
) {
    if let Some((best_cost, best_set)) = best {
        // Costs are non-negative, so the accumulated cost is a lower bound.
        if cost > *best_cost {
            return;
        }
        if cost == *best_cost {
            // Tie-break toward the lexicographically smaller sorted set;
            // a partial branch can only win a tie if it could still be
            // smaller, which the full check below resolves.
            if depth == order.len() {
                let candidate: TestSet = chosen.iter().copied().collect();
                if model.satisfied_by(&candidate) && candidate.as_slice() < best_set.as_slice() {
                    *best = Some((cost, candidate));
                }
                return;
            }
        }
    }
    if depth == order.len() {
        let candidate: TestSet = chosen.iter().copied().collect();
        if model.satisfied_by(&candidate) {
            match best {
                Some((bc, bs)) => {
                    if cost < *bc || (cost == *bc && candidate.as_slice() < bs.as_slice()) {
                        *best = Some((cost, candidate));
                    }
                }
                None => *best = Some((cost, candidate)),
            }
        }
        return;
    }
    let t = order[depth];
    // Exclude first: biases the search toward small selections.
    search(model, order, depth + 1, cost, chosen, best);
    chosen.push(t);
    search(model, order, depth + 1, cost + model.costs[t], chosen, best);
    chosen.pop();
}

/// Minimum-cost unit-weight subset preserving every metric's full ranking.
/// Requires a Kendall target of exactly 1.
pub fn exact_minimize(instance: &RtsmInstance) -> Result<Solution> {
    exact_minimize_with(instance, &BranchAndBound)
}

pub fn exact_minimize_with(instance: &RtsmInstance, backend: &dyn ExactBackend) -> Result<Solution> {
    let model = ExactModel::build(instance)?;
    let selected = backend.minimize(&model)?;
    let tests = TestSet::new(selected);
    if tests.is_empty() || tests.iter().any(|t| t >= instance.n_tests()) {
        return Err(Error::Backend(format!(
            "backend returned an invalid selection {:?}",
            tests
        )));
    }
    // Validate independently of the backend: unit-weight rankings must
    // match the full ranking on every metric.
    for matrix in instance.matrices() {
        let full = full_ranking(matrix);
        let induced = subset_ranking(matrix, &tests)?;
        if full.ranks() != induced.ranks() {
            return Err(Error::Backend(format!(
                "backend selection does not preserve the ranking of metric {}",
                matrix.metric_name()
            )));
        }
    }
    let unit = alloc::vec![1.0; tests.len()];
    Ok(Solution {
        total_cost: instance.costs().total(&tests),
        weights: instance.matrices().iter().map(|_| unit.clone()).collect(),
        tests,
        achieved_tau: 1.0,
        method: String::from("exact"),
        seed: 0,
        iterations: 1,
    })
}
