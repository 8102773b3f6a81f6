//! Performance matrices, test costs and problem instances.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A sorted, duplicate-free set of test indices.
///
/// All solvers reference tests by their column index in the instance's
/// canonical test order; identifiers are only resolved at the boundaries.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TestSet(Vec<usize>);

impl TestSet {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        TestSet(indices)
    }

    /// The full test set `0..n`.
    pub fn full(n: usize) -> Self {
        TestSet((0..n).collect())
    }

    pub fn empty() -> Self {
        TestSet(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, test: usize) -> bool {
        self.0.binary_search(&test).is_ok()
    }

    pub fn is_subset_of(&self, other: &TestSet) -> bool {
        self.0.iter().all(|t| other.contains(*t))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn union(&self, other: &TestSet) -> TestSet {
        let mut merged = Vec::with_capacity(self.0.len() + other.0.len());
        merged.extend_from_slice(&self.0);
        merged.extend_from_slice(&other.0);
        TestSet::new(merged)
    }

    pub fn difference(&self, other: &TestSet) -> TestSet {
        TestSet(self.iter().filter(|t| !other.contains(*t)).collect())
    }

    /// The set with a single test removed.
    pub fn without(&self, test: usize) -> TestSet {
        TestSet(self.iter().filter(|t| *t != test).collect())
    }

    pub fn with(&self, test: usize) -> TestSet {
        if self.contains(test) {
            self.clone()
        } else {
            let mut v = self.0.clone();
            v.push(test);
            TestSet::new(v)
        }
    }

    /// FNV-1a over the indices; used to key per-context caches.
    pub fn hash64(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in &self.0 {
            let mut v = *t as u64;
            for _ in 0..8 {
                h ^= v & 0xff;
                h = h.wrapping_mul(0x100_0000_01b3);
                v >>= 8;
            }
        }
        h
    }
}

impl FromIterator<usize> for TestSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        TestSet::new(iter.into_iter().collect())
    }
}

/// A dense variants-by-tests matrix for one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceMatrix {
    variant_ids: Vec<String>,
    test_ids: Vec<String>,
    /// Row-major, `n_variants * n_tests` entries.
    values: Vec<f64>,
    metric_name: String,
}

impl PerformanceMatrix {
    pub fn new(
        metric_name: String,
        variant_ids: Vec<String>,
        test_ids: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if variant_ids.is_empty() || test_ids.is_empty() {
            return Err(Error::InvalidInstance(format!(
                "metric {metric_name}: matrix must have at least one variant and one test"
            )));
        }
        if values.len() != variant_ids.len() * test_ids.len() {
            return Err(Error::InvalidInstance(format!(
                "metric {}: expected {} values, got {}",
                metric_name,
                variant_ids.len() * test_ids.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "metric {}: non-finite value at row {}, column {}",
                metric_name,
                pos / test_ids.len(),
                pos % test_ids.len()
            )));
        }
        if let Some(id) = first_duplicate(&variant_ids) {
            return Err(Error::InvalidInstance(format!(
                "metric {metric_name}: duplicate variant id {id}"
            )));
        }
        if let Some(id) = first_duplicate(&test_ids) {
            return Err(Error::InvalidInstance(format!(
                "metric {metric_name}: duplicate test id {id}"
            )));
        }
        Ok(PerformanceMatrix {
            variant_ids,
            test_ids,
            values,
            metric_name,
        })
    }

    /// Build a matrix from rows of values, ids generated as `v0..` / `t0..`.
    pub fn from_rows(metric_name: &str, rows: &[Vec<f64>]) -> Result<Self> {
        let n_tests = rows.first().map(|r| r.len()).unwrap_or(0);
        let variant_ids = (0..rows.len()).map(|i| format!("v{i}")).collect();
        let test_ids = (0..n_tests).map(|i| format!("t{i}")).collect();
        let mut values = Vec::with_capacity(rows.len() * n_tests);
        for row in rows {
            if row.len() != n_tests {
                return Err(Error::InvalidInstance(String::from("ragged rows")));
            }
            values.extend_from_slice(row);
        }
        PerformanceMatrix::new(String::from(metric_name), variant_ids, test_ids, values)
    }

    pub fn metric_name(&self) -> &str {
        &self.metric_name
    }

    pub fn variant_ids(&self) -> &[String] {
        &self.variant_ids
    }

    pub fn test_ids(&self) -> &[String] {
        &self.test_ids
    }

    pub fn n_variants(&self) -> usize {
        self.variant_ids.len()
    }

    pub fn n_tests(&self) -> usize {
        self.test_ids.len()
    }

    pub fn value(&self, variant: usize, test: usize) -> f64 {
        self.values[variant * self.n_tests() + test]
    }

    pub fn row(&self, variant: usize) -> &[f64] {
        let n = self.n_tests();
        &self.values[variant * n..(variant + 1) * n]
    }

    /// Negate all entries (used at ingestion for lower-is-better metrics).
    pub fn negated(mut self) -> Self {
        for v in &mut self.values {
            *v = -*v;
        }
        self
    }

    /// Keep only the given variants, in the order provided.
    pub fn restrict_variants(&self, keep: &[usize]) -> Result<Self> {
        let mut variant_ids = Vec::with_capacity(keep.len());
        let mut values = Vec::with_capacity(keep.len() * self.n_tests());
        for &v in keep {
            if v >= self.n_variants() {
                return Err(Error::InvalidArgument(format!("variant index {v} out of range")));
            }
            variant_ids.push(self.variant_ids[v].clone());
            values.extend_from_slice(self.row(v));
        }
        PerformanceMatrix::new(
            self.metric_name.clone(),
            variant_ids,
            self.test_ids.clone(),
            values,
        )
    }

    /// Keep only the given test columns; they become the new canonical order.
    pub fn restrict_tests(&self, keep: &TestSet) -> Result<Self> {
        let mut test_ids = Vec::with_capacity(keep.len());
        for t in keep.iter() {
            if t >= self.n_tests() {
                return Err(Error::UnknownTest(t));
            }
            test_ids.push(self.test_ids[t].clone());
        }
        let mut values = Vec::with_capacity(self.n_variants() * keep.len());
        for v in 0..self.n_variants() {
            for t in keep.iter() {
                values.push(self.value(v, t));
            }
        }
        PerformanceMatrix::new(
            self.metric_name.clone(),
            self.variant_ids.clone(),
            test_ids,
            values,
        )
    }
}

fn first_duplicate(ids: &[String]) -> Option<&String> {
    let mut sorted: Vec<&String> = ids.iter().collect();
    sorted.sort();
    sorted.windows(2).find(|w| w[0] == w[1]).map(|w| w[0])
}

/// Non-negative cost per test, aligned with the canonical test order.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVector(Vec<f64>);

impl CostVector {
    pub fn new(costs: Vec<f64>) -> Result<Self> {
        if costs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidInstance(String::from(
                "costs must be finite and non-negative",
            )));
        }
        if !costs.iter().any(|c| *c > 0.0) {
            return Err(Error::InvalidInstance(String::from(
                "at least one cost must be positive",
            )));
        }
        Ok(CostVector(costs))
    }

    pub fn unit(n: usize) -> Self {
        CostVector(alloc::vec![1.0; n])
    }

    pub fn get(&self, test: usize) -> f64 {
        self.0[test]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Summed cost of a subset, left to right in canonical order.
    pub fn total(&self, subset: &TestSet) -> f64 {
        subset.iter().map(|t| self.0[t]).sum()
    }

    pub fn total_all(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// One or more performance matrices over a shared test set, plus costs and
/// the Kendall target the minimized suite must reach on every metric.
#[derive(Debug, Clone, PartialEq)]
pub struct RtsmInstance {
    matrices: Vec<PerformanceMatrix>,
    costs: CostVector,
    target_tau: f64,
}

impl RtsmInstance {
    pub fn new(matrices: Vec<PerformanceMatrix>, costs: CostVector, target_tau: f64) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidInstance(String::from("no matrices")))?;
        if first.n_variants() < 2 {
            return Err(Error::InvalidInstance(String::from(
                "instance needs at least 2 variants",
            )));
        }
        for m in &matrices[1..] {
            if m.variant_ids() != first.variant_ids() || m.test_ids() != first.test_ids() {
                return Err(Error::InvalidInstance(format!(
                    "metric {} disagrees with metric {} on variant or test ids",
                    m.metric_name(),
                    first.metric_name()
                )));
            }
        }
        if costs.len() != first.n_tests() {
            return Err(Error::InvalidInstance(format!(
                "cost vector has {} entries for {} tests",
                costs.len(),
                first.n_tests()
            )));
        }
        if !(-1.0..=1.0).contains(&target_tau) {
            return Err(Error::InvalidArgument(format!(
                "target tau {target_tau} outside [-1, 1]"
            )));
        }
        Ok(RtsmInstance {
            matrices,
            costs,
            target_tau,
        })
    }

    /// Single-metric instance with unit costs; the common case in tests.
    pub fn single(matrix: PerformanceMatrix, target_tau: f64) -> Result<Self> {
        let costs = CostVector::unit(matrix.n_tests());
        RtsmInstance::new(alloc::vec![matrix], costs, target_tau)
    }

    pub fn matrices(&self) -> &[PerformanceMatrix] {
        &self.matrices
    }

    pub fn costs(&self) -> &CostVector {
        &self.costs
    }

    pub fn target_tau(&self) -> f64 {
        self.target_tau
    }

    pub fn n_variants(&self) -> usize {
        self.matrices[0].n_variants()
    }

    pub fn n_tests(&self) -> usize {
        self.matrices[0].n_tests()
    }

    pub fn variant_ids(&self) -> &[String] {
        self.matrices[0].variant_ids()
    }

    pub fn test_ids(&self) -> &[String] {
        self.matrices[0].test_ids()
    }

    pub fn all_tests(&self) -> TestSet {
        TestSet::full(self.n_tests())
    }

    pub fn restrict_variants(&self, keep: &[usize]) -> Result<Self> {
        let matrices = self
            .matrices
            .iter()
            .map(|m| m.restrict_variants(keep))
            .collect::<Result<Vec<_>>>()?;
        RtsmInstance::new(matrices, self.costs.clone(), self.target_tau)
    }

    /// Restrict to a test subset; the subset becomes the new canonical order.
    pub fn restrict_tests(&self, keep: &TestSet) -> Result<Self> {
        let matrices = self
            .matrices
            .iter()
            .map(|m| m.restrict_tests(keep))
            .collect::<Result<Vec<_>>>()?;
        let costs = CostVector::new(keep.iter().map(|t| self.costs.get(t)).collect())?;
        RtsmInstance::new(matrices, costs, self.target_tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_non_finite_values() {
        let err = PerformanceMatrix::from_rows("m", &[vec![1.0, f64::NAN], vec![2.0, 3.0]]);
        assert!(matches!(err, Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn rejects_duplicate_ids() {
        let err = PerformanceMatrix::new(
            String::from("m"),
            vec![String::from("a"), String::from("a")],
            vec![String::from("t")],
            vec![1.0, 2.0],
        );
        assert!(matches!(err, Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn rejects_mismatched_metrics() {
        let a = PerformanceMatrix::from_rows("a", &[vec![1.0], vec![2.0]]).unwrap();
        let mut rows = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        let b = PerformanceMatrix::from_rows("b", &rows.drain(..).collect::<Vec<_>>()).unwrap();
        let err = RtsmInstance::new(vec![a, b], CostVector::unit(1), 1.0);
        assert!(matches!(err, Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn testset_ops() {
        let a = TestSet::new(vec![3, 1, 3, 0]);
        assert_eq!(a.as_slice(), &[0, 1, 3]);
        let b = TestSet::new(vec![1, 2]);
        assert_eq!(a.union(&b).as_slice(), &[0, 1, 2, 3]);
        assert_eq!(a.difference(&b).as_slice(), &[0, 3]);
        assert_eq!(a.without(1).as_slice(), &[0, 3]);
        assert!(b.is_subset_of(&TestSet::full(4)));
        assert!(!TestSet::full(4).is_subset_of(&b));
    }

    #[test]
    fn cost_vector_requires_positive_total() {
        assert!(CostVector::new(vec![0.0, 0.0]).is_err());
        assert!(CostVector::new(vec![0.0, 2.0]).is_ok());
        assert!(CostVector::new(vec![-1.0, 2.0]).is_err());
    }

    #[test]
    fn restrict_tests_reorders_canonically() {
        let m = PerformanceMatrix::from_rows("m", &[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]])
            .unwrap();
        let r = m.restrict_tests(&TestSet::new(vec![2, 0])).unwrap();
        assert_eq!(r.test_ids(), &[String::from("t0"), String::from("t2")]);
        assert_eq!(r.row(1), &[4.0, 6.0]);
    }
}
