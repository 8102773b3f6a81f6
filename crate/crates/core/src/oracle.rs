//! The feasibility oracle: fit per-metric least-squares weights predicting
//! each variant's full-suite total from a candidate subset's columns, then
//! check the induced ranking against the Kendall target on every metric.

use alloc::vec::Vec;

use libm::sqrt;
use nalgebra::{DMatrix, DVector};

use crate::matrix::{PerformanceMatrix, RtsmInstance, TestSet};
use crate::ranking::{
    full_ranking, kendall_counts, subset_ranking, tau_meets_target, weighted_ranking, Ranking,
};
use crate::{Error, Result};

/// Knobs on the regression fit. Defaults are what all standard runs use:
/// no regularization, unconstrained weight signs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Ridge penalty; 0 disables it.
    pub ridge: f64,
    /// Clamp negative fitted weights to zero (experimentation flag).
    pub clamp_negative: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            ridge: 0.0,
            clamp_negative: false,
        }
    }
}

/// Outcome of one `solves` call.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// True iff the worst metric meets the target (exact rational compare).
    pub feasible: bool,
    /// Kendall per metric, aligned with the instance's matrices.
    pub per_metric_tau: Vec<f64>,
    /// Fitted weights per metric, aligned with the subset's canonical order.
    pub weights: Vec<Vec<f64>>,
    /// Sum of squared residuals of each fit.
    pub residuals: Vec<f64>,
}

impl OracleResult {
    /// Worst Kendall over all metrics.
    pub fn worst_tau(&self) -> f64 {
        self.per_metric_tau.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Least-squares weights for predicting the full row totals of `matrix`
/// from the subset's columns. Returns the minimum-norm solution when the
/// system is rank-deficient, plus the attained sum of squared residuals.
pub fn fit_weights(
    matrix: &PerformanceMatrix,
    subset: &TestSet,
    opts: &FitOptions,
) -> Result<(Vec<f64>, f64)> {
    let target = row_totals(matrix, &TestSet::full(matrix.n_tests()));
    fit_to_totals(matrix, subset, &target, opts)
}

fn row_totals(matrix: &PerformanceMatrix, over: &TestSet) -> Vec<f64> {
    (0..matrix.n_variants())
        .map(|v| {
            let row = matrix.row(v);
            over.iter().map(|t| row[t]).sum()
        })
        .collect()
}

fn fit_to_totals(
    matrix: &PerformanceMatrix,
    subset: &TestSet,
    totals: &[f64],
    opts: &FitOptions,
) -> Result<(Vec<f64>, f64)> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(t) = subset.iter().find(|&t| t >= matrix.n_tests()) {
        return Err(Error::UnknownTest(t));
    }
    let n = matrix.n_variants();
    let k = subset.len();
    let design = DMatrix::from_fn(n, k, |i, j| matrix.value(i, subset.as_slice()[j]));
    let y = DVector::from_row_slice(totals);

    let weights = if opts.ridge > 0.0 {
        // Augmented system [X; sqrt(ridge) I] w = [y; 0].
        let mut aug = DMatrix::zeros(n + k, k);
        aug.view_mut((0, 0), (n, k)).copy_from(&design);
        let s = sqrt(opts.ridge);
        for j in 0..k {
            aug[(n + j, j)] = s;
        }
        let mut ay = DVector::zeros(n + k);
        ay.rows_mut(0, n).copy_from(&y);
        min_norm_solve(aug, &ay)
    } else {
        min_norm_solve(design.clone(), &y)
    };
    let mut weights: Vec<f64> = weights.iter().copied().collect();
    if opts.clamp_negative {
        for w in &mut weights {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
    }
    let fitted = &design * DVector::from_row_slice(&weights);
    let residual = (fitted - y).norm_squared();
    Ok((weights, residual))
}

/// Pseudo-inverse solve via SVD; yields the minimum-norm least-squares
/// solution for any rank.
fn min_norm_solve(a: DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let (rows, cols) = a.shape();
    let svd = a.svd(true, true);
    let max_sv = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    if max_sv == 0.0 {
        return DVector::zeros(cols);
    }
    let eps = max_sv * rows.max(cols) as f64 * f64::EPSILON;
    svd.solve(y, eps).expect("svd solve with both factors computed")
}

/// The `solves` predicate: feasible iff, for every metric, the ranking
/// induced by the fitted weights reaches the Kendall target against the
/// full ranking. The worst metric governs.
pub fn solves(instance: &RtsmInstance, subset: &TestSet, opts: &FitOptions) -> Result<OracleResult> {
    solves_against(instance, &instance.all_tests(), subset, opts)
}

/// `solves` for a sub-problem: the prediction target and reference ranking
/// come from the summed performance over `context` only.
pub fn solves_in_context(
    instance: &RtsmInstance,
    context: &TestSet,
    subset: &TestSet,
    opts: &FitOptions,
) -> Result<OracleResult> {
    if !subset.is_subset_of(context) {
        return Err(Error::SubsetNotInContext);
    }
    solves_against(instance, context, subset, opts)
}

fn solves_against(
    instance: &RtsmInstance,
    context: &TestSet,
    subset: &TestSet,
    opts: &FitOptions,
) -> Result<OracleResult> {
    let mut per_metric_tau = Vec::with_capacity(instance.matrices().len());
    let mut weights = Vec::with_capacity(instance.matrices().len());
    let mut residuals = Vec::with_capacity(instance.matrices().len());
    let mut feasible = true;
    for matrix in instance.matrices() {
        let reference = reference_ranking(matrix, context);
        let totals = row_totals(matrix, context);
        let (w, residual) = fit_to_totals(matrix, subset, &totals, opts)?;
        let induced = weighted_ranking(matrix, subset, &w)?;
        let counts = kendall_counts(&reference, &induced)?;
        feasible &= tau_meets_target(counts, instance.target_tau());
        per_metric_tau.push(counts.tau());
        weights.push(w);
        residuals.push(residual);
    }
    Ok(OracleResult {
        feasible,
        per_metric_tau,
        weights,
        residuals,
    })
}

fn reference_ranking(matrix: &PerformanceMatrix, context: &TestSet) -> Ranking {
    if context.len() == matrix.n_tests() {
        full_ranking(matrix)
    } else {
        subset_ranking(matrix, context).expect("context indices validated")
    }
}
