//! Evaluation harness: multi-seed studies with variant subsampling,
//! score aggregation, cumulative score distributions, and the redundancy
//! report.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rtsm_core::ranking::{full_ranking, kendall_counts, weighted_ranking};
use rtsm_core::rng::{RngCore, SplitRng};
use rtsm_core::solver::{iterative_solve, SamplerKind, SolverConfig};
use rtsm_core::{cost_reduction, score, solves, Never, RtsmInstance, Solution, StopCondition};
use serde::Serialize;

use crate::deadline::Deadline;
use crate::stats::{mean_ci95, wilcoxon_one_sided, WilcoxonResult};

/// One study cell: a method run on one instance under one seed and one
/// variant fraction, always evaluated against the full variant set.
#[derive(Debug, Clone, Serialize)]
pub struct EvalRecord {
    pub benchmark_id: String,
    pub method: String,
    pub seed: u64,
    pub variant_fraction: f64,
    pub cost_reduction: f64,
    pub tau_on_full: f64,
    pub score: f64,
    pub wall_seconds: f64,
    pub timed_out: bool,
    pub iterations: u32,
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub methods: Vec<SamplerKind>,
    pub seeds: Vec<u64>,
    /// Variant fractions in (0, 1]; 1.0 evaluates without restriction.
    pub fractions: Vec<f64>,
    pub deadline_seconds: Option<f64>,
    /// Refit weights on the full variant set before evaluation instead of
    /// reusing the weights fitted on the restricted set (default: reuse —
    /// a live leaderboard would not refit when new entrants appear).
    pub refit_on_full: bool,
    pub n_splits: Option<usize>,
}

impl StudyConfig {
    pub fn new(methods: Vec<SamplerKind>, seeds: Vec<u64>, fractions: Vec<f64>) -> Self {
        StudyConfig {
            methods,
            seeds,
            fractions,
            deadline_seconds: None,
            refit_on_full: false,
            n_splits: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct StudyOutput {
    pub records: Vec<EvalRecord>,
    pub warnings: Vec<String>,
}

fn sample_variants(n: usize, keep: usize, rng: &mut SplitRng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    // Fisher–Yates; only the first `keep` entries matter.
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        idx.swap(i, j);
    }
    idx.truncate(keep);
    idx.sort_unstable();
    idx
}

/// Evaluate a solution's subset and weights against the full variant set.
/// Returns the worst-metric Kendall, recomputed from scratch.
pub fn tau_on_full(instance: &RtsmInstance, solution: &Solution) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for (mi, m) in instance.matrices().iter().enumerate() {
        let induced = weighted_ranking(m, &solution.tests, &solution.weights[mi])?;
        let counts = kendall_counts(&full_ranking(m), &induced)?;
        worst = worst.min(counts.tau());
    }
    Ok(worst)
}

pub fn run_matrix_study(
    instances: &[(String, RtsmInstance)],
    config: &StudyConfig,
) -> Result<StudyOutput> {
    for f in &config.fractions {
        if !(*f > 0.0 && *f <= 1.0) {
            bail!("variant fraction {f} outside (0, 1]");
        }
    }
    let mut out = StudyOutput::default();
    for (bench_id, instance) in instances {
        for &fraction in &config.fractions {
            for &seed in &config.seeds {
                // The variant subset depends on (seed, fraction) only, so
                // methods compete on identical restricted instances.
                let restricted = if fraction < 1.0 {
                    let keep =
                        ((fraction * instance.n_variants() as f64).ceil() as usize).max(1);
                    if keep < 2 {
                        out.warnings.push(format!(
                            "{bench_id}: fraction {fraction} keeps {keep} < 2 variants; skipped"
                        ));
                        continue;
                    }
                    let mut rng = SplitRng::new(seed ^ (fraction.to_bits().rotate_left(17)));
                    let kept = sample_variants(instance.n_variants(), keep, &mut rng);
                    Some(instance.restrict_variants(&kept)?)
                } else {
                    None
                };
                let work = restricted.as_ref().unwrap_or(instance);
                for &method in &config.methods {
                    let record = run_cell(
                        bench_id, instance, work, method, seed, fraction, config,
                    )?;
                    out.records.push(record);
                }
            }
        }
    }
    sort_records(&mut out.records);
    Ok(out)
}

fn run_cell(
    bench_id: &str,
    full: &RtsmInstance,
    work: &RtsmInstance,
    method: SamplerKind,
    seed: u64,
    fraction: f64,
    config: &StudyConfig,
) -> Result<EvalRecord> {
    let mut solver = SolverConfig::new(method, seed);
    solver.n_splits = config.n_splits;
    let start = Instant::now();
    let deadline = config.deadline_seconds.map(Deadline::after_seconds);
    let stop: &dyn StopCondition = match &deadline {
        Some(d) => d,
        None => &Never,
    };
    let mut solution = iterative_solve(work, &solver, stop)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let timed_out = deadline.map(|d| d.expired()).unwrap_or(false);
    if config.refit_on_full {
        let refit = solves(full, &solution.tests, &solver.fit)?;
        solution.weights = refit.weights;
    }
    // Never trust the solver's own numbers: recompute Kendall and cost
    // reduction against the unrestricted instance.
    let tau = tau_on_full(full, &solution)?;
    let reduction = cost_reduction(full, &solution);
    Ok(EvalRecord {
        benchmark_id: bench_id.to_owned(),
        method: method.name().to_owned(),
        seed,
        variant_fraction: fraction,
        cost_reduction: reduction,
        tau_on_full: tau,
        score: score(reduction, tau)?,
        wall_seconds,
        timed_out,
        iterations: solution.iterations,
    })
}

/// Canonical record order, so aggregation is schedule-independent.
fn sort_records(records: &mut [EvalRecord]) {
    records.sort_by(|a, b| {
        (&a.benchmark_id, &a.method, a.seed)
            .cmp(&(&b.benchmark_id, &b.method, b.seed))
            .then(a.variant_fraction.partial_cmp(&b.variant_fraction).unwrap())
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Method,
    Benchmark,
    Fraction,
}

impl GroupBy {
    pub fn parse(s: &str) -> Result<GroupBy> {
        match s {
            "method" => Ok(GroupBy::Method),
            "benchmark" => Ok(GroupBy::Benchmark),
            "fraction" => Ok(GroupBy::Fraction),
            other => bail!("unknown group-by field {other} (method|benchmark|fraction)"),
        }
    }

    fn key(&self, r: &EvalRecord) -> String {
        match self {
            GroupBy::Method => r.method.clone(),
            GroupBy::Benchmark => r.benchmark_id.clone(),
            GroupBy::Fraction => format!("{}", r.variant_fraction),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CdfRow {
    pub group: String,
    pub score: f64,
    pub cdf: f64,
}

/// Empirical CDF of scores per group: one row per distinct score with the
/// fraction of the group's records at or below it.
pub fn cumulative_score_distribution(records: &[EvalRecord], group_by: GroupBy) -> Vec<CdfRow> {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry(group_by.key(r)).or_default().push(r.score);
    }
    let mut rows = Vec::new();
    for (group, mut scores) in groups {
        scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = scores.len() as f64;
        let mut at = 0;
        while at < scores.len() {
            let s = scores[at];
            let mut end = at;
            while end + 1 < scores.len() && scores[end + 1] == s {
                end += 1;
            }
            rows.push(CdfRow {
                group: group.clone(),
                score: s,
                cdf: (end + 1) as f64 / n,
            });
            at = end + 1;
        }
    }
    rows
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupStats {
    pub group: String,
    pub records: usize,
    pub mean_score: f64,
    pub ci95_score: f64,
    pub mean_cost_reduction: f64,
    pub ci95_cost_reduction: f64,
    pub mean_tau: f64,
}

pub fn group_stats(records: &[EvalRecord], group_by: GroupBy) -> Vec<GroupStats> {
    let mut groups: BTreeMap<String, Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(group_by.key(r)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(group, rs)| {
            let scores: Vec<f64> = rs.iter().map(|r| r.score).collect();
            let reds: Vec<f64> = rs.iter().map(|r| r.cost_reduction).collect();
            let taus: Vec<f64> = rs.iter().map(|r| r.tau_on_full).collect();
            let (mean_score, ci95_score) = mean_ci95(&scores);
            let (mean_cost_reduction, ci95_cost_reduction) = mean_ci95(&reds);
            GroupStats {
                group,
                records: rs.len(),
                mean_score,
                ci95_score,
                mean_cost_reduction,
                ci95_cost_reduction,
                mean_tau: taus.iter().sum::<f64>() / taus.len().max(1) as f64,
            }
        })
        .collect()
}

/// One-sided Wilcoxon signed-rank test that method `a` scores higher than
/// method `b`, paired on (benchmark, seed, fraction) cells present for both.
pub fn compare_methods(records: &[EvalRecord], a: &str, b: &str) -> Option<WilcoxonResult> {
    let key = |r: &EvalRecord| (r.benchmark_id.clone(), r.seed, r.variant_fraction.to_bits());
    let mut of_a = BTreeMap::new();
    let mut of_b = BTreeMap::new();
    for r in records {
        if r.method == a {
            of_a.insert(key(r), r.score);
        } else if r.method == b {
            of_b.insert(key(r), r.score);
        }
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, sa) in &of_a {
        if let Some(sb) = of_b.get(k) {
            xs.push(*sa);
            ys.push(*sb);
        }
    }
    if xs.is_empty() {
        return None;
    }
    // "a scores higher" means b's scores are the smaller ones.
    wilcoxon_one_sided(&ys, &xs)
}

#[derive(Debug, Clone, Serialize)]
pub struct RedundancyReport {
    pub n_tests: usize,
    pub n_seeds: usize,
    pub min_cost_ratio: f64,
    pub median_cost_ratio: f64,
    /// Median kept-cost ratio below 1% marks the suite as dominated by
    /// redundant tests.
    pub highly_redundant: bool,
    /// How often each test id was selected across seeds.
    pub selection_frequency: BTreeMap<String, usize>,
}

pub fn redundancy_report(instance: &RtsmInstance, solutions: &[Solution]) -> Result<RedundancyReport> {
    if solutions.len() < 2 {
        bail!("redundancy report needs solutions from at least 2 seeds");
    }
    let total = instance.costs().total_all();
    let mut ratios: Vec<f64> = solutions.iter().map(|s| s.total_cost / total).collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if ratios.len() % 2 == 1 {
        ratios[ratios.len() / 2]
    } else {
        (ratios[ratios.len() / 2 - 1] + ratios[ratios.len() / 2]) / 2.0
    };
    let ids = instance.test_ids();
    let mut selection_frequency = BTreeMap::new();
    for s in solutions {
        for t in s.tests.iter() {
            *selection_frequency.entry(ids[t].clone()).or_insert(0) += 1;
        }
    }
    Ok(RedundancyReport {
        n_tests: instance.n_tests(),
        n_seeds: solutions.len(),
        min_cost_ratio: ratios[0],
        median_cost_ratio: median,
        highly_redundant: median < 0.01,
        selection_frequency,
    })
}

pub fn write_records_csv(records: &[EvalRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("{}: cannot write", path.display()))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv(path: &Path) -> Result<Vec<EvalRecord>> {
    #[derive(serde::Deserialize)]
    struct Row {
        benchmark_id: String,
        method: String,
        seed: u64,
        variant_fraction: f64,
        cost_reduction: f64,
        tau_on_full: f64,
        score: f64,
        wall_seconds: f64,
        timed_out: bool,
        iterations: u32,
    }
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("{}: cannot read", path.display()))?;
    let mut records = Vec::new();
    for row in reader.deserialize() {
        let row: Row = row.with_context(|| format!("{}: invalid record", path.display()))?;
        records.push(EvalRecord {
            benchmark_id: row.benchmark_id,
            method: row.method,
            seed: row.seed,
            variant_fraction: row.variant_fraction,
            cost_reduction: row.cost_reduction,
            tau_on_full: row.tau_on_full,
            score: row.score,
            wall_seconds: row.wall_seconds,
            timed_out: row.timed_out,
            iterations: row.iterations,
        });
    }
    Ok(records)
}

pub fn write_cdf_csv(rows: &[CdfRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("{}: cannot write", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
