//! Variant rankings, Kendall rank correlation and the cost/accuracy score.

use alloc::format;
use alloc::vec::Vec;

use crate::matrix::{PerformanceMatrix, RtsmInstance, TestSet};
use crate::solution::Solution;
use crate::{Error, Result};

/// A total order over the variants of one matrix.
///
/// Rank 1 is the variant with the maximal summed performance. Ties in the
/// totals are broken by ascending variant index, so the order is always
/// total and deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// `ranks[v]` is the rank of variant `v`, in `1..=n`.
    ranks: Vec<u32>,
    /// Summed (weighted) performance per variant.
    totals: Vec<f64>,
}

impl Ranking {
    fn from_totals(totals: Vec<f64>) -> Ranking {
        let mut order: Vec<usize> = (0..totals.len()).collect();
        // Descending by total, ties by ascending variant index. Totals are
        // finite by matrix invariant, so the comparison is total.
        order.sort_by(|&a, &b| {
            totals[b]
                .partial_cmp(&totals[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut ranks = alloc::vec![0u32; totals.len()];
        for (pos, &v) in order.iter().enumerate() {
            ranks[v] = pos as u32 + 1;
        }
        Ranking { ranks, totals }
    }

    pub fn n_variants(&self) -> usize {
        self.ranks.len()
    }

    /// Rank of a variant, 1-based.
    pub fn rank_of(&self, variant: usize) -> u32 {
        self.ranks[variant]
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    pub fn totals(&self) -> &[f64] {
        &self.totals
    }

    /// Build a ranking directly from 1-based ranks (must be a permutation).
    pub fn from_ranks(ranks: Vec<u32>) -> Result<Ranking> {
        let n = ranks.len();
        let mut seen = alloc::vec![false; n];
        for &r in &ranks {
            if r == 0 || r as usize > n || seen[r as usize - 1] {
                return Err(Error::InvalidArgument(format!(
                    "ranks are not a permutation of 1..={n}"
                )));
            }
            seen[r as usize - 1] = true;
        }
        // Totals chosen so that from_totals would reproduce these ranks.
        let totals = ranks.iter().map(|&r| -(r as f64)).collect();
        Ok(Ranking { ranks, totals })
    }
}

/// Ranking induced by the full test suite: totals are plain row sums.
pub fn full_ranking(matrix: &PerformanceMatrix) -> Ranking {
    let totals = (0..matrix.n_variants())
        .map(|v| matrix.row(v).iter().sum())
        .collect();
    Ranking::from_totals(totals)
}

/// Ranking induced by a subset under unit weights.
pub fn subset_ranking(matrix: &PerformanceMatrix, subset: &TestSet) -> Result<Ranking> {
    let unit = alloc::vec![1.0; subset.len()];
    weighted_ranking(matrix, subset, &unit)
}

/// Ranking induced by a weighted subset. `weights` is aligned with the
/// subset's canonical (ascending index) order.
pub fn weighted_ranking(
    matrix: &PerformanceMatrix,
    subset: &TestSet,
    weights: &[f64],
) -> Result<Ranking> {
    if weights.len() != subset.len() {
        return Err(Error::InvalidArgument(format!(
            "{} weights for a subset of {} tests",
            weights.len(),
            subset.len()
        )));
    }
    if let Some(t) = subset.iter().find(|&t| t >= matrix.n_tests()) {
        return Err(Error::UnknownTest(t));
    }
    let ws: Vec<(usize, f64)> = subset.iter().zip(weights.iter().copied()).collect();
    let totals = (0..matrix.n_variants())
        .map(|v| {
            let row = matrix.row(v);
            // Fixed left-to-right summation over the canonical test order
            // keeps totals bit-reproducible.
            ws.iter().map(|&(t, w)| w * row[t]).sum()
        })
        .collect();
    Ok(Ranking::from_totals(totals))
}

/// Concordant/discordant pair counts between two total orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KendallCounts {
    pub concordant: u64,
    pub discordant: u64,
    pub pairs: u64,
}

impl KendallCounts {
    pub fn tau(&self) -> f64 {
        if self.pairs == 0 {
            return 1.0;
        }
        (self.concordant as f64 - self.discordant as f64) / self.pairs as f64
    }
}

/// Exact pair counts via merge-sort inversion counting, O(n log n).
pub fn kendall_counts(a: &Ranking, b: &Ranking) -> Result<KendallCounts> {
    if a.n_variants() != b.n_variants() {
        return Err(Error::MismatchedVariants {
            left: a.n_variants(),
            right: b.n_variants(),
        });
    }
    let n = a.n_variants();
    // Order variants by rank in `a`; a pair is discordant exactly when the
    // corresponding `b` ranks form an inversion in that sequence. Both
    // rankings are strict total orders, so there are no ties to correct for.
    let mut by_a: Vec<usize> = (0..n).collect();
    by_a.sort_unstable_by_key(|&v| a.rank_of(v));
    let mut seq: Vec<u32> = by_a.iter().map(|&v| b.rank_of(v)).collect();
    let discordant = count_inversions(&mut seq);
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    Ok(KendallCounts {
        concordant: pairs - discordant,
        discordant,
        pairs,
    })
}

fn count_inversions(seq: &mut [u32]) -> u64 {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = seq.split_at_mut(mid);
    let mut inv = count_inversions(left) + count_inversions(right);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            merged.push(left[i]);
            i += 1;
        } else {
            inv += (left.len() - i) as u64;
            merged.push(right[j]);
            j += 1;
        }
    }
    merged.extend_from_slice(&left[i..]);
    merged.extend_from_slice(&right[j..]);
    seq.copy_from_slice(&merged);
    inv
}

/// Kendall's tau: (concordant - discordant) / pairs, in [-1, 1].
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<f64> {
    Ok(kendall_counts(a, b)?.tau())
}

/// Exact test of `tau >= target` on the rational pair counts.
///
/// The target is an f64 and therefore a dyadic rational m * 2^-k; the
/// comparison (c - d) / pairs >= m * 2^-k is carried out in integers so no
/// floating rounding can flip a feasibility decision.
pub fn tau_meets_target(counts: KendallCounts, target: f64) -> bool {
    debug_assert!((-1.0..=1.0).contains(&target));
    if counts.pairs == 0 {
        return true;
    }
    let diff = counts.concordant as i128 - counts.discordant as i128;
    let (m, e) = decode_f64(target);
    if m == 0 {
        return diff >= 0;
    }
    // |target| <= 1 and m != 0 imply e < 0.
    let k = (-e) as u32;
    let rhs = (m.unsigned_abs()) * counts.pairs as u128;
    match (diff > 0, m > 0) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => match shl_exact(diff as u128, k) {
            Some(lhs) => lhs >= rhs,
            None => true,
        },
        (false, false) => {
            if diff == 0 {
                return true;
            }
            match shl_exact((-diff) as u128, k) {
                Some(lhs) => lhs <= rhs,
                None => false,
            }
        }
    }
}

/// `v << k` without silent overflow; None means the true value exceeds u128.
fn shl_exact(v: u128, k: u32) -> Option<u128> {
    if v == 0 {
        Some(0)
    } else if k >= 128 || v.leading_zeros() < k {
        None
    } else {
        Some(v << k)
    }
}

/// Decompose a finite f64 into (mantissa-with-sign, binary exponent).
fn decode_f64(x: f64) -> (i128, i32) {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1i128 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i128;
    if exp == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac | (1 << 52)), exp - 1075)
    }
}

/// The joint cost/accuracy score (2c + (1 + k)) / 4, in [0, 1].
pub fn score(cost_reduction: f64, tau: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&cost_reduction) {
        return Err(Error::InvalidArgument(format!(
            "cost reduction {cost_reduction} outside [0, 1]"
        )));
    }
    if !(-1.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!("tau {tau} outside [-1, 1]")));
    }
    Ok((2.0 * cost_reduction + (1.0 + tau)) / 4.0)
}

/// Fraction of total cost removed by a solution: 1 - kept / total.
pub fn cost_reduction(instance: &RtsmInstance, solution: &Solution) -> f64 {
    let total = instance.costs().total_all();
    if total == 0.0 {
        return 0.0;
    }
    (1.0 - solution.total_cost / total).clamp(0.0, 1.0)
}
