//! Necessity partitioning and bisection sampling.
//!
//! `find_necessary` classifies tests whose individual removal breaks
//! feasibility; `bisection_sample` then recursively halves the remaining
//! removable tests, recursing into feasible halves and, when neither half
//! works alone, into both branch orders.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::rand_core::RngCore;

use crate::matrix::{RtsmInstance, TestSet};
use crate::oracle::{solves_in_context, FitOptions};
use crate::rng::SplitRng;
use crate::solution::Solution;
use crate::stop::StopCondition;
use crate::{Error, Result};

/// Split of a working test set into proven-necessary and still-removable.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub necessary: TestSet,
    pub removable: TestSet,
}

/// Shared state for one sampling run: oracle options, stop condition and
/// the per-context cache of tests already proven necessary.
pub struct BisectionSampler<'a> {
    instance: &'a RtsmInstance,
    fit: FitOptions,
    stop: &'a dyn StopCondition,
    /// (context hash, test) pairs proven necessary; necessity only shrinks
    /// the working set, so a test proven necessary under a context stays
    /// necessary for later, smaller working sets within the same context.
    proven_necessary: BTreeSet<(u64, usize)>,
}

impl<'a> BisectionSampler<'a> {
    pub fn new(instance: &'a RtsmInstance, fit: FitOptions, stop: &'a dyn StopCondition) -> Self {
        BisectionSampler {
            instance,
            fit,
            stop,
            proven_necessary: BTreeSet::new(),
        }
    }

    pub fn instance(&self) -> &RtsmInstance {
        self.instance
    }

    pub fn fit_options(&self) -> &FitOptions {
        &self.fit
    }

    fn feasible(&self, context: &TestSet, subset: &TestSet) -> Result<bool> {
        Ok(solves_in_context(self.instance, context, subset, &self.fit)?.feasible)
    }

    /// Move every test whose single removal breaks feasibility from
    /// `removable` into `necessary`. Iterates in canonical test order.
    /// The second return value is false when the budget ran out mid-scan
    /// and the partition is partial.
    pub fn find_necessary(
        &mut self,
        removable: &TestSet,
        necessary: &TestSet,
        context: &TestSet,
    ) -> Result<(Partition, bool)> {
        let working = removable.union(necessary);
        if !working.is_subset_of(context) {
            return Err(Error::SubsetNotInContext);
        }
        if removable.iter().any(|t| necessary.contains(t)) {
            return Err(Error::InvalidArgument(String::from(
                "removable and necessary overlap",
            )));
        }
        let ctx_hash = context.hash64();
        let mut nec = necessary.clone();
        let mut rem = Vec::new();
        let mut complete = true;
        for (i, t) in removable.iter().enumerate() {
            if self.stop.should_stop() {
                // Partition computed so far; the untested remainder stays
                // removable.
                rem.extend(removable.iter().skip(i));
                complete = false;
                break;
            }
            if self.proven_necessary.contains(&(ctx_hash, t)) {
                nec = nec.with(t);
                continue;
            }
            let candidate = rem
                .iter()
                .copied()
                .chain(removable.iter().skip(i + 1))
                .chain(nec.iter())
                .collect::<TestSet>();
            if candidate.is_empty() || !self.feasible(context, &candidate)? {
                nec = nec.with(t);
                self.proven_necessary.insert((ctx_hash, t));
            } else {
                rem.push(t);
            }
        }
        Ok((
            Partition {
                necessary: nec,
                removable: rem.into_iter().collect(),
            },
            complete,
        ))
    }

    /// Sample a feasible subset of `context` by bisection. The caller
    /// guarantees `removable U necessary` is feasible for the context.
    /// Anytime: budget exhaustion returns the current working set, which
    /// is feasible by the recursion invariant.
    pub fn bisection_sample(
        &mut self,
        removable: &TestSet,
        necessary: &TestSet,
        context: &TestSet,
        rng: &mut SplitRng,
    ) -> Result<TestSet> {
        let max_depth = removable.len().max(1).ilog2() as usize + 8;
        let set = self.bisect(removable, necessary, context, rng, 0, max_depth)?;
        debug_assert!(
            solves_in_context(self.instance, context, &set, &self.fit)?.feasible,
            "bisection returned an infeasible set"
        );
        Ok(set)
    }

    fn bisect(
        &mut self,
        removable: &TestSet,
        necessary: &TestSet,
        context: &TestSet,
        rng: &mut SplitRng,
        depth: usize,
        max_depth: usize,
    ) -> Result<TestSet> {
        if self.stop.should_stop() {
            return Ok(removable.union(necessary));
        }
        let (partition, complete) = self.find_necessary(removable, necessary, context)?;
        let (rem, nec) = (partition.removable, partition.necessary);
        if !complete {
            return Ok(rem.union(&nec));
        }
        if rem.is_empty() {
            return Ok(nec);
        }
        let (half_a, half_b) = split_half(&rem, rng);
        let a_work = half_a.union(&nec);
        if !a_work.is_empty() && self.feasible(context, &a_work)? {
            return self.bisect(&half_a, &nec, context, rng, depth + 1, max_depth);
        }
        if self.feasible(context, &half_b.union(&nec))? {
            return self.bisect(&half_b, &nec, context, rng, depth + 1, max_depth);
        }
        // Neither half suffices alone; assume one of them is necessary and
        // explore both orders. Past the depth bound, keep everything rather
        // than risk exponential blowup.
        if depth >= max_depth {
            return Ok(rem.union(&nec));
        }
        let sol_a = self.bisect(&half_b, &half_a.union(&nec), context, rng, depth + 1, max_depth)?;
        let sol_b = self.bisect(&half_a, &half_b.union(&nec), context, rng, depth + 1, max_depth)?;
        Ok(self.better_of(sol_a, sol_b))
    }

    /// Lower total cost wins; ties break toward the lexicographically
    /// smaller sorted index list.
    fn better_of(&self, a: TestSet, b: TestSet) -> TestSet {
        let ca = self.instance.costs().total(&a);
        let cb = self.instance.costs().total(&b);
        if ca < cb {
            a
        } else if cb < ca {
            b
        } else if a.as_slice() <= b.as_slice() {
            a
        } else {
            b
        }
    }

    /// Build a full `Solution` for a feasible subset of `context`, with
    /// weights refit against the context and tau measured against it.
    pub fn solution_for(
        &self,
        context: &TestSet,
        subset: &TestSet,
        method: &str,
        seed: u64,
    ) -> Result<Solution> {
        let result = solves_in_context(self.instance, context, subset, &self.fit)?;
        Ok(Solution {
            tests: subset.clone(),
            achieved_tau: result.worst_tau(),
            weights: result.weights,
            total_cost: self.instance.costs().total(subset),
            method: String::from(method),
            seed,
            iterations: 1,
        })
    }
}

/// Uniformly split a set into halves with |A| = floor(|set| / 2).
pub fn split_half(set: &TestSet, rng: &mut SplitRng) -> (TestSet, TestSet) {
    let mut items: Vec<usize> = set.iter().collect();
    shuffle(&mut items, rng);
    let half = items.len() / 2;
    let a: TestSet = items[..half].iter().copied().collect();
    let b: TestSet = items[half..].iter().copied().collect();
    (a, b)
}

/// Fisher-Yates; kept local so the draw sequence is pinned by this crate
/// rather than by a dependency's implementation details.
pub(crate) fn shuffle(items: &mut [usize], rng: &mut SplitRng) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}
