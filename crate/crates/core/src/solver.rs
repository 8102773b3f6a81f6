//! Divide-and-conquer over test-set chunks with merge validation, and the
//! iterative-restart outer loop. Both are parameterized by the sampling
//! subroutine (bisection or a baseline).

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::baselines;
use crate::bisect::{shuffle, BisectionSampler};
use crate::matrix::{RtsmInstance, TestSet};
use crate::oracle::{solves, solves_in_context, FitOptions};
use crate::rng::SplitRng;
use crate::solution::Solution;
use crate::stop::StopCondition;
use crate::{Error, Result};

/// Which subroutine produces sub-instance solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Biss,
    Random,
    Greedy,
    Pca,
}

impl SamplerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::Biss => "biss",
            SamplerKind::Random => "random",
            SamplerKind::Greedy => "greedy",
            SamplerKind::Pca => "pca",
        }
    }
}

impl core::str::FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "biss" => Ok(SamplerKind::Biss),
            "random" => Ok(SamplerKind::Random),
            "greedy" => Ok(SamplerKind::Greedy),
            "pca" => Ok(SamplerKind::Pca),
            other => Err(Error::InvalidArgument(format!("unknown sampler {other}"))),
        }
    }
}

/// Configuration of one solver run.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Number of initial chunks; `None` targets chunks of about 64 tests.
    pub n_splits: Option<usize>,
    pub sampler: SamplerKind,
    /// Resampling attempts before a failed merge falls back to the union
    /// of its operands.
    pub max_merge_retries: u32,
    pub seed: u64,
    pub fit: FitOptions,
}

impl SolverConfig {
    pub fn new(sampler: SamplerKind, seed: u64) -> Self {
        SolverConfig {
            n_splits: None,
            sampler,
            max_merge_retries: 3,
            seed,
            fit: FitOptions::default(),
        }
    }

    fn effective_splits(&self, n_tests: usize) -> usize {
        let auto = n_tests.div_ceil(64);
        self.n_splits.unwrap_or(auto).clamp(1, n_tests.max(1))
    }
}

/// Disjoint chunks covering `tests`, sizes differing by at most one,
/// assignment uniformly random.
pub fn split(tests: &TestSet, n: usize, rng: &mut SplitRng) -> Result<Vec<TestSet>> {
    if n == 0 || n > tests.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} tests into {} chunks",
            tests.len(),
            n
        )));
    }
    let mut items: Vec<usize> = tests.iter().collect();
    shuffle(&mut items, rng);
    let base = items.len() / n;
    let extra = items.len() % n;
    let mut chunks = Vec::with_capacity(n);
    let mut at = 0;
    for i in 0..n {
        let size = base + usize::from(i < extra);
        chunks.push(items[at..at + size].iter().copied().collect());
        at += size;
    }
    Ok(chunks)
}

/// One sampler invocation: a feasible subset of `context`, solved against
/// `context` as the sub-instance's notion of "all tests".
fn sample_subset(
    kind: SamplerKind,
    sampler: &mut BisectionSampler<'_>,
    context: &TestSet,
    rng: &mut SplitRng,
    stop: &dyn StopCondition,
) -> Result<TestSet> {
    match kind {
        SamplerKind::Biss => sampler.bisection_sample(context, &TestSet::empty(), context, rng),
        SamplerKind::Random => baselines::random_shrink_in_context(
            sampler.instance(),
            context,
            sampler.fit_options(),
            rng,
            stop,
        ),
        SamplerKind::Greedy => baselines::greedy_in_context(
            sampler.instance(),
            context,
            sampler.fit_options(),
            baselines::VariancePriority::Min,
            stop,
        ),
        SamplerKind::Pca => {
            baselines::pca_in_context(sampler.instance(), context, sampler.fit_options(), stop)
        }
    }
}

/// Divide-and-conquer pass over a context: split, solve chunks, merge
/// pairwise with validity re-checks. Returns a subset feasible for the
/// whole context.
fn dc_pass(
    instance: &RtsmInstance,
    context: &TestSet,
    config: &SolverConfig,
    rng: &mut SplitRng,
    stop: &dyn StopCondition,
) -> Result<TestSet> {
    let fit = config.fit;
    let mut sampler = BisectionSampler::new(instance, fit, stop);
    let n = config.effective_splits(context.len());
    let chunks = split(context, n, rng)?;

    let mut queue: VecDeque<(TestSet, TestSet)> = VecDeque::with_capacity(n);
    for chunk in chunks {
        if stop.should_stop() {
            // Unsolved chunks enter the queue as their own solution.
            queue.push_back((chunk.clone(), chunk));
            continue;
        }
        let mut chunk_rng = rng.split();
        let sol = sample_subset(config.sampler, &mut sampler, &chunk, &mut chunk_rng, stop)?;
        debug_assert!(solves_in_context(instance, &chunk, &sol, &fit)?.feasible);
        queue.push_back((sol, chunk));
    }

    while queue.len() > 1 {
        let (a, ctx_a) = queue.pop_front().expect("queue non-empty");
        let (b, ctx_b) = queue.pop_front().expect("queue has two elements");
        let merged_ctx = ctx_a.union(&ctx_b);
        let union = a.union(&b);
        let mut accepted: Option<TestSet> = None;
        if !stop.should_stop() {
            for _ in 0..config.max_merge_retries {
                let mut merge_rng = rng.split();
                let candidate =
                    sample_subset(config.sampler, &mut sampler, &union, &mut merge_rng, stop)?;
                if solves_in_context(instance, &merged_ctx, &candidate, &fit)?.feasible {
                    accepted = Some(candidate);
                    break;
                }
                if stop.should_stop() {
                    break;
                }
            }
        }
        // Fall back to the union of the two solutions; if even that does
        // not validate against the merged context, keep the context itself
        // (trivially feasible).
        let merged = match accepted {
            Some(s) => s,
            None => {
                if solves_in_context(instance, &merged_ctx, &union, &fit)?.feasible {
                    union
                } else {
                    merged_ctx.clone()
                }
            }
        };
        queue.push_back((merged, merged_ctx));
    }
    let (solution, final_ctx) = queue.pop_front().expect("one element remains");
    debug_assert_eq!(&final_ctx, context);
    Ok(solution)
}

/// Single divide-and-conquer run on the full instance.
pub fn divide_and_conquer(
    instance: &RtsmInstance,
    config: &SolverConfig,
    stop: &dyn StopCondition,
) -> Result<Solution> {
    let mut rng = SplitRng::new(config.seed);
    let context = instance.all_tests();
    let subset = dc_pass(instance, &context, config, &mut rng, stop)?;
    finish(instance, subset, config, 1)
}

/// Divide-and-conquer plus iterative restarts: rerun on the previous
/// solution's tests while the cost strictly decreases. The final solution
/// is re-validated on the original full instance.
pub fn iterative_solve(
    instance: &RtsmInstance,
    config: &SolverConfig,
    stop: &dyn StopCondition,
) -> Result<Solution> {
    let mut rng = SplitRng::new(config.seed);
    let full = instance.all_tests();
    let fit = config.fit;
    let mut best = dc_pass(instance, &full, config, &mut rng, stop)?;
    let mut best_cost = instance.costs().total(&best);
    let mut iterations = 1u32;
    while !stop.should_stop() && best.len() > 1 {
        let candidate = dc_pass(instance, &best, config, &mut rng, stop)?;
        let cost = instance.costs().total(&candidate);
        // Restart only pays off while cost strictly improves; candidates
        // must also hold up on the original full instance.
        if cost < best_cost && solves(instance, &candidate, &fit)?.feasible {
            best = candidate;
            best_cost = cost;
            iterations += 1;
        } else {
            break;
        }
    }
    finish(instance, best, config, iterations)
}

fn finish(
    instance: &RtsmInstance,
    subset: TestSet,
    config: &SolverConfig,
    iterations: u32,
) -> Result<Solution> {
    let result = solves(instance, &subset, &config.fit)?;
    let subset = if result.feasible {
        subset
    } else {
        // Anytime floor: keeping every test is always feasible.
        instance.all_tests()
    };
    let result = solves(instance, &subset, &config.fit)?;
    debug_assert!(result.feasible);
    Ok(Solution {
        total_cost: instance.costs().total(&subset),
        tests: subset,
        achieved_tau: result.worst_tau(),
        weights: result.weights,
        method: String::from(config.sampler.name()),
        seed: config.seed,
        iterations,
    })
}
