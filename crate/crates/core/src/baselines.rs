//! Comparison methods: random shrinking search, variance-ordered greedy
//! removal, and PCA-guided removal. All of them validate every candidate
//! with the regression oracle, so their outputs carry the same feasibility
//! guarantee as the bisection solver.

use alloc::string::String;
use alloc::vec::Vec;

use libm::sqrt;
use nalgebra::DMatrix;

use crate::bisect::shuffle;
use crate::matrix::{RtsmInstance, TestSet};
use crate::oracle::{solves, solves_in_context, FitOptions};
use crate::rng::SplitRng;
use crate::solution::Solution;
use crate::stop::StopCondition;
use crate::{Error, Result};

/// How per-test variances are folded across metrics for the greedy order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VariancePriority {
    /// Worst-case rule: a test is only as informative as its least
    /// informative metric.
    #[default]
    Min,
    Mean,
}

/// Sampling attempts per shrink level of the random search; bounds the
/// search when no deadline is set.
const RANDOM_ATTEMPTS_FLOOR: usize = 16;

/// One shrink step chain of the random baseline, standalone form.
pub fn random_search_step(
    current: &TestSet,
    instance: &RtsmInstance,
    rng: &mut SplitRng,
    stop: &dyn StopCondition,
) -> Result<Solution> {
    let fit = FitOptions::default();
    let subset = random_shrink(instance, current, current, &fit, rng, stop)?;
    build_solution(instance, subset, "random", 0)
}

/// Random shrinking restricted to a context (divide-and-conquer subroutine).
pub fn random_shrink_in_context(
    instance: &RtsmInstance,
    context: &TestSet,
    fit: &FitOptions,
    rng: &mut SplitRng,
    stop: &dyn StopCondition,
) -> Result<TestSet> {
    random_shrink(instance, context, context, fit, rng, stop)
}

fn random_shrink(
    instance: &RtsmInstance,
    start: &TestSet,
    context: &TestSet,
    fit: &FitOptions,
    rng: &mut SplitRng,
    stop: &dyn StopCondition,
) -> Result<TestSet> {
    if !start.is_subset_of(context) {
        return Err(Error::SubsetNotInContext);
    }
    let mut current = start.clone();
    'shrink: while current.len() > 1 && !stop.should_stop() {
        let size = current.len() - 1;
        let attempts = RANDOM_ATTEMPTS_FLOOR.max(current.len());
        let mut items: Vec<usize> = current.iter().collect();
        for _ in 0..attempts {
            if stop.should_stop() {
                break 'shrink;
            }
            shuffle(&mut items, rng);
            let candidate: TestSet = items[..size].iter().copied().collect();
            if solves_in_context(instance, context, &candidate, fit)?.feasible {
                current = candidate;
                continue 'shrink;
            }
        }
        break;
    }
    Ok(current)
}

/// Greedy removal in ascending order of per-test variance.
pub fn greedy_minimize(instance: &RtsmInstance, stop: &dyn StopCondition) -> Result<Solution> {
    let fit = FitOptions::default();
    let subset = greedy_in_context(
        instance,
        &instance.all_tests(),
        &fit,
        VariancePriority::Min,
        stop,
    )?;
    build_solution(instance, subset, "greedy", 0)
}

pub fn greedy_in_context(
    instance: &RtsmInstance,
    context: &TestSet,
    fit: &FitOptions,
    priority: VariancePriority,
    stop: &dyn StopCondition,
) -> Result<TestSet> {
    let order = variance_order(instance, context, priority);
    let mut current = context.clone();
    // Passes repeat until none of the attempted removals stays feasible.
    loop {
        let mut removed_any = false;
        for &t in &order {
            if stop.should_stop() {
                return Ok(current);
            }
            if !current.contains(t) || current.len() == 1 {
                continue;
            }
            let candidate = current.without(t);
            if solves_in_context(instance, context, &candidate, fit)?.feasible {
                current = candidate;
                removed_any = true;
            }
        }
        if !removed_any {
            return Ok(current);
        }
    }
}

/// Tests of a context ordered by ascending variance priority, ties broken
/// by ascending index. Variances are normalized per metric (divided by the
/// metric's largest column variance) so that metrics with incomparable
/// units can be folded.
fn variance_order(
    instance: &RtsmInstance,
    context: &TestSet,
    priority: VariancePriority,
) -> Vec<usize> {
    let tests: Vec<usize> = context.iter().collect();
    let n_metrics = instance.matrices().len();
    let mut normalized: Vec<Vec<f64>> = Vec::with_capacity(n_metrics);
    for matrix in instance.matrices() {
        let vars: Vec<f64> = tests
            .iter()
            .map(|&t| {
                let n = matrix.n_variants() as f64;
                let mean: f64 = (0..matrix.n_variants()).map(|v| matrix.value(v, t)).sum::<f64>() / n;
                (0..matrix.n_variants())
                    .map(|v| {
                        let d = matrix.value(v, t) - mean;
                        d * d
                    })
                    .sum::<f64>()
                    / n
            })
            .collect();
        let max = vars.iter().copied().fold(0.0f64, f64::max);
        normalized.push(if max > 0.0 {
            vars.iter().map(|v| v / max).collect()
        } else {
            alloc::vec![0.0; tests.len()]
        });
    }
    let mut keyed: Vec<(f64, usize)> = tests
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let key = match priority {
                VariancePriority::Min => normalized
                    .iter()
                    .map(|m| m[i])
                    .fold(f64::INFINITY, f64::min),
                VariancePriority::Mean => {
                    normalized.iter().map(|m| m[i]).sum::<f64>() / n_metrics as f64
                }
            };
            (key, t)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, t)| t).collect()
}

/// PCA-guided removal: repeatedly drop the test with the smallest absolute
/// loading on the first principal direction of the standardized, column-
/// centered performance data (metrics stacked), as long as the oracle
/// accepts the removal.
pub fn pca_minimize(instance: &RtsmInstance, stop: &dyn StopCondition) -> Result<Solution> {
    let fit = FitOptions::default();
    let subset = pca_in_context(instance, &instance.all_tests(), &fit, stop)?;
    build_solution(instance, subset, "pca", 0)
}

pub fn pca_in_context(
    instance: &RtsmInstance,
    context: &TestSet,
    fit: &FitOptions,
    stop: &dyn StopCondition,
) -> Result<TestSet> {
    if instance.n_variants() < 2 {
        return Err(Error::InvalidInstance(String::from("pca needs >= 2 variants")));
    }
    let mut current = context.clone();
    while current.len() > 1 && !stop.should_stop() {
        let order = match pca_loading_order(instance, &current) {
            Some(order) => order,
            // Degenerate data (no variance anywhere): fall back to the
            // greedy variance order, which handles zero-variance columns.
            None => variance_order(instance, &current, VariancePriority::Min),
        };
        let mut removed = false;
        for t in order {
            if stop.should_stop() {
                return Ok(current);
            }
            let candidate = current.without(t);
            if candidate.is_empty() {
                continue;
            }
            if solves_in_context(instance, context, &candidate, fit)?.feasible {
                current = candidate;
                removed = true;
                break; // recompute the principal direction
            }
        }
        if !removed {
            break;
        }
    }
    Ok(current)
}

/// Tests ordered by ascending absolute loading on the first principal
/// direction; None when every column is constant.
fn pca_loading_order(instance: &RtsmInstance, tests: &TestSet) -> Option<Vec<usize>> {
    let cols: Vec<usize> = tests.iter().collect();
    let n_variants = instance.n_variants();
    let n_rows = n_variants * instance.matrices().len();
    let mut data = DMatrix::zeros(n_rows, cols.len());
    let mut any_variance = false;
    for (mi, matrix) in instance.matrices().iter().enumerate() {
        for (j, &t) in cols.iter().enumerate() {
            let mean: f64 =
                (0..n_variants).map(|v| matrix.value(v, t)).sum::<f64>() / n_variants as f64;
            let var: f64 = (0..n_variants)
                .map(|v| {
                    let d = matrix.value(v, t) - mean;
                    d * d
                })
                .sum::<f64>()
                / n_variants as f64;
            let std = sqrt(var);
            if std > 0.0 {
                any_variance = true;
                for v in 0..n_variants {
                    data[(mi * n_variants + v, j)] = (matrix.value(v, t) - mean) / std;
                }
            }
        }
    }
    if !any_variance {
        return None;
    }
    let svd = data.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let first = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)?;
    let loadings = v_t.row(first);
    let mut keyed: Vec<(f64, usize)> = cols
        .iter()
        .enumerate()
        .map(|(j, &t)| (loadings[j].abs(), t))
        .collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    Some(keyed.into_iter().map(|(_, t)| t).collect())
}

fn build_solution(
    instance: &RtsmInstance,
    subset: TestSet,
    method: &str,
    seed: u64,
) -> Result<Solution> {
    let fit = FitOptions::default();
    let result = solves(instance, &subset, &fit)?;
    Ok(Solution {
        total_cost: instance.costs().total(&subset),
        tests: subset,
        achieved_tau: result.worst_tau(),
        weights: result.weights,
        method: String::from(method),
        seed,
        iterations: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::PerformanceMatrix;
    use crate::stop::Never;
    use alloc::vec;
    use rand_chacha::rand_core::RngCore;

    fn random_instance(seed: u64, n: usize, k: usize) -> RtsmInstance {
        let mut rng = SplitRng::new(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| (rng.next_u64() % 1000) as f64 / 10.0).collect())
            .collect();
        RtsmInstance::single(PerformanceMatrix::from_rows("m", &rows).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn random_cannot_shrink_below_one() {
        let m = PerformanceMatrix::from_rows("m", &[vec![2.0], vec![1.0]]).unwrap();
        let inst = RtsmInstance::single(m, 1.0).unwrap();
        let current = TestSet::full(1);
        let mut rng = SplitRng::new(0);
        let sol = random_search_step(&current, &inst, &mut rng, &Never).unwrap();
        assert_eq!(sol.tests, current);
    }

    #[test]
    fn random_shrinks_duplicates_to_one() {
        let base = [5.0, 2.0, 8.0];
        let rows: Vec<Vec<f64>> = base.iter().map(|&b| vec![b; 8]).collect();
        let inst =
            RtsmInstance::single(PerformanceMatrix::from_rows("m", &rows).unwrap(), 1.0).unwrap();
        let mut rng = SplitRng::new(3);
        let sol = random_search_step(&inst.all_tests(), &inst, &mut rng, &Never).unwrap();
        // Every non-empty subset is feasible by construction, so the shrink
        // chain reaches a single test.
        assert_eq!(sol.tests.len(), 1);
        assert!(sol.achieved_tau >= 1.0);
    }

    #[test]
    fn random_fixed_seed_is_deterministic() {
        let inst = random_instance(4, 4, 10);
        let run = || {
            let mut rng = SplitRng::new(8);
            random_search_step(&inst.all_tests(), &inst, &mut rng, &Never).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn greedy_removes_redundant_constant_column_first() {
        // Column 1 is constant (zero variance) and redundant.
        let rows = vec![
            vec![9.0, 4.0, 1.0],
            vec![5.0, 4.0, 2.0],
            vec![1.0, 4.0, 3.0],
        ];
        let inst =
            RtsmInstance::single(PerformanceMatrix::from_rows("m", &rows).unwrap(), 1.0).unwrap();
        let order = variance_order(&inst, &inst.all_tests(), VariancePriority::Min);
        assert_eq!(order[0], 1);
        let sol = greedy_minimize(&inst, &Never).unwrap();
        assert!(!sol.tests.contains(1));
    }

    #[test]
    fn greedy_keeps_low_variance_discriminator() {
        // Column 1 has by far the lowest variance but decides the v0/v1
        // pair; its removal attempt must fail the oracle, so it survives.
        let rows = vec![vec![10.0, 6.0], vec![14.0, 1.0], vec![30.0, 3.5]];
        let inst =
            RtsmInstance::single(PerformanceMatrix::from_rows("m", &rows).unwrap(), 1.0).unwrap();
        let order = variance_order(&inst, &inst.all_tests(), VariancePriority::Min);
        assert_eq!(order[0], 1);
        // Brute force: removing column 1 misranks.
        assert!(
            !solves(&inst, &TestSet::new(vec![0]), &FitOptions::default())
                .unwrap()
                .feasible
        );
        let sol = greedy_minimize(&inst, &Never).unwrap();
        assert!(sol.tests.contains(1));
    }

    #[test]
    fn greedy_is_deterministic_and_feasible() {
        for seed in 0..10 {
            let inst = random_instance(seed, 5, 12);
            let a = greedy_minimize(&inst, &Never).unwrap();
            let b = greedy_minimize(&inst, &Never).unwrap();
            assert_eq!(a, b);
            assert!(solves(&inst, &a.tests, &FitOptions::default()).unwrap().feasible);
            assert!(a.total_cost <= inst.costs().total_all());
        }
    }

    #[test]
    fn pca_removes_tiny_orthogonal_noise_column_first() {
        // Rank-1 data plus one low-magnitude noise column: the noise
        // column carries the smallest loading on the first principal
        // direction (the rank-1 direction dominates).
        let base = [4.0, 1.0, 9.0, 6.0];
        let scales = [1.0, 2.0, 3.0];
        let mut rows: Vec<Vec<f64>> = base
            .iter()
            .map(|&b| scales.iter().map(|&s| s * b).collect())
            .collect();
        let noise = [0.001, -0.002, 0.0015, -0.0005];
        for (row, n) in rows.iter_mut().zip(noise) {
            row.push(5.0 + n);
        }
        let inst =
            RtsmInstance::single(PerformanceMatrix::from_rows("m", &rows).unwrap(), 1.0).unwrap();
        let order = pca_loading_order(&inst, &inst.all_tests()).unwrap();
        assert_eq!(order[0], 3);
        let sol = pca_minimize(&inst, &Never).unwrap();
        assert!(solves(&inst, &sol.tests, &FitOptions::default()).unwrap().feasible);
    }

    #[test]
    fn pca_handles_duplicate_columns() {
        let rows = vec![
            vec![5.0, 5.0, 1.0],
            vec![2.0, 2.0, 9.0],
            vec![4.0, 4.0, 3.0],
        ];
        let inst =
            RtsmInstance::single(PerformanceMatrix::from_rows("m", &rows).unwrap(), 1.0).unwrap();
        let sol = pca_minimize(&inst, &Never).unwrap();
        assert!(solves(&inst, &sol.tests, &FitOptions::default()).unwrap().feasible);
        assert!(sol.tests.len() < 3);
    }

    #[test]
    fn pca_degenerate_matrix_falls_back() {
        let rows = vec![vec![4.0, 4.0], vec![4.0, 4.0], vec![4.0, 4.0]];
        let inst =
            RtsmInstance::single(PerformanceMatrix::from_rows("m", &rows).unwrap(), 1.0).unwrap();
        let sol = pca_minimize(&inst, &Never).unwrap();
        assert!(solves(&inst, &sol.tests, &FitOptions::default()).unwrap().feasible);
    }

    #[test]
    fn all_baselines_never_exceed_full_cost() {
        let inst = random_instance(31, 6, 14);
        let full_cost = inst.costs().total_all();
        let mut rng = SplitRng::new(1);
        let sols = [
            random_search_step(&inst.all_tests(), &inst, &mut rng, &Never).unwrap(),
            greedy_minimize(&inst, &Never).unwrap(),
            pca_minimize(&inst, &Never).unwrap(),
        ];
        for sol in sols {
            assert!(sol.total_cost <= full_cost);
            assert!(solves(&inst, &sol.tests, &FitOptions::default()).unwrap().feasible);
        }
    }
}
