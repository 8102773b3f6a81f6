//! `rtsm` — minimize benchmark test suites while preserving the ranking of
//! the variants they compare.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rtsm::deadline::Deadline;
use rtsm::harness::{
    compare_methods, cumulative_score_distribution, group_stats, read_records_csv,
    run_matrix_study, write_cdf_csv, write_records_csv, GroupBy, StudyConfig,
};
use rtsm::ingest::{ingest, CostSource, MetricFile};
use rtsm::solfile::SolutionFile;
use rtsm::synth::{generate_synthetic, Structure, SyntheticSpec};
use rtsm_core::exact::exact_minimize;
use rtsm_core::solver::{iterative_solve, SamplerKind, SolverConfig};
use rtsm_core::{cost_reduction, RtsmInstance, Solution, StopCondition};

#[derive(Parser)]
#[command(name = "rtsm", about = "Rank-preserving test-suite minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize a suite and write per-seed solution files plus a summary.
    Minimize(MinimizeArgs),
    /// Recheck a solution file against the instance it was produced from.
    Verify(VerifyArgs),
    /// Run the variant-subsampling study and export its records.
    Study(StudyArgs),
    /// Generate a synthetic instance and write it as CSV.
    Synth(SynthArgs),
    /// Aggregate study records into CDF and summary statistics.
    Report(ReportArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Matrix CSV, one per metric (first row test ids, first column
    /// variant ids). Repeatable.
    #[arg(long = "matrix", required = true)]
    matrices: Vec<PathBuf>,
    /// Metric names whose values should be negated (lower is better).
    #[arg(long = "negate")]
    negate: Vec<String>,
    /// Cost CSV (test_id,cost). Default: unit costs.
    #[arg(long = "costs")]
    costs: Option<PathBuf>,
    /// Derive costs as the per-test mean of this runtime metric.
    #[arg(long = "cost-from-runtime", conflicts_with = "costs")]
    cost_from_runtime: Option<String>,
    /// Kendall target in [-1, 1].
    #[arg(long = "target-tau", default_value_t = 1.0)]
    target_tau: f64,
}

impl InstanceArgs {
    fn load(&self) -> Result<RtsmInstance> {
        let metrics: Vec<MetricFile> = self
            .matrices
            .iter()
            .map(|p| MetricFile {
                path: p.clone(),
                negate: self.negate.contains(&rtsm::ingest::metric_name(p)),
            })
            .collect();
        for n in &self.negate {
            if !metrics.iter().any(|m| rtsm::ingest::metric_name(&m.path) == *n) {
                bail!("--negate {n} does not match any matrix file stem");
            }
        }
        let costs = match (&self.costs, &self.cost_from_runtime) {
            (Some(path), _) => CostSource::File(path.clone()),
            (None, Some(metric)) => CostSource::MeanRuntime { metric: metric.clone() },
            (None, None) => CostSource::Unit,
        };
        ingest(&metrics, &costs, self.target_tau)
    }
}

#[derive(Args)]
struct MinimizeArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// biss | random | greedy | pca | exact
    #[arg(long, default_value = "biss")]
    method: String,
    /// Comma-separated seed list.
    #[arg(long, default_value = "0", value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Chunk count for divide-and-conquer; omit for automatic sizing.
    #[arg(long = "n-splits")]
    n_splits: Option<usize>,
    /// Wall-clock budget per seed, in seconds.
    #[arg(long = "deadline-seconds", default_value_t = 300.0)]
    deadline_seconds: f64,
    /// Output directory for solution files and the summary.
    #[arg(long, default_value = "rtsm-out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Solution files to verify.
    #[arg(long = "solution", required = true)]
    solutions: Vec<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Methods to compare (comma-separated: biss,random,greedy,pca).
    #[arg(long, default_value = "biss", value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long, default_value = "0", value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Variant fractions in (0, 1].
    #[arg(long, default_value = "0.25,0.5,0.75,1.0", value_delimiter = ',')]
    fractions: Vec<f64>,
    #[arg(long = "deadline-seconds")]
    deadline_seconds: Option<f64>,
    /// Refit weights on the full variant set before evaluation.
    #[arg(long = "refit-on-full", default_value_t = false)]
    refit_on_full: bool,
    #[arg(long = "n-splits")]
    n_splits: Option<usize>,
    #[arg(long, default_value = "rtsm-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// duplicate_blocks | rank1_noise | adversarial_all_necessary | random_uniform
    #[arg(long)]
    structure: String,
    #[arg(long)]
    variants: usize,
    #[arg(long)]
    tests: usize,
    /// Base-column count for duplicate_blocks.
    #[arg(long, default_value_t = 1)]
    blocks: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "rtsm-out")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Records CSV produced by `rtsm study`.
    #[arg(long)]
    records: PathBuf,
    /// method | benchmark | fraction
    #[arg(long = "group-by", default_value = "method")]
    group_by: String,
    /// Wilcoxon comparison "methodA,methodB" (one-sided: A scores higher).
    #[arg(long, value_delimiter = ',')]
    compare: Option<Vec<String>>,
    #[arg(long, default_value = "rtsm-out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Minimize(args) => minimize(args),
        Command::Verify(args) => verify(args),
        Command::Study(args) => study(args),
        Command::Synth(args) => synth(args),
        Command::Report(args) => report(args),
    }
}

fn worker_count(jobs: usize) -> usize {
    std::env::var("RTSM_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n >= 1)
        .unwrap_or(1)
        .min(jobs.max(1))
}

fn minimize(args: MinimizeArgs) -> Result<ExitCode> {
    let instance = args.instance.load()?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("{}: cannot create", args.out.display()))?;

    if args.method == "exact" {
        let solution = exact_minimize(&instance)?;
        let file = SolutionFile::from_solution(&instance, &solution);
        let path = args.out.join("solution-exact.json");
        file.write(&path)?;
        println!(
            "exact: {} of {} tests kept, cost {}, wrote {}",
            solution.tests.len(),
            instance.n_tests(),
            solution.total_cost,
            path.display()
        );
        return Ok(ExitCode::SUCCESS);
    }

    let method: SamplerKind = args.method.parse()?;
    let results = run_seeds(&instance, method, &args.seeds, args.n_splits, args.deadline_seconds)?;

    // Single writer: workers hand completed solutions back to this thread.
    let mut any_stuck_timeout = false;
    let mut reductions = Vec::new();
    let mut best: Option<&(u64, Solution, bool)> = None;
    let mut paths = Vec::new();
    for entry in &results {
        let (seed, solution, timed_out) = entry;
        let file = SolutionFile::from_solution(&instance, solution);
        let path = args
            .out
            .join(format!("solution-{}-seed{}.json", method.name(), seed));
        file.write(&path)?;
        paths.push(path);
        let red = cost_reduction(&instance, solution);
        reductions.push(red);
        if *timed_out && red == 0.0 {
            any_stuck_timeout = true;
        }
        if best.map(|b| solution.total_cost < b.1.total_cost).unwrap_or(true) {
            best = Some(entry);
        }
    }
    let best = best.expect("at least one seed");
    let (mean, ci) = rtsm::stats::mean_ci95(&reductions);
    let summary = serde_json::json!({
        "method": method.name(),
        "seeds": args.seeds,
        "best_seed": best.0,
        "best_cost": best.1.total_cost,
        "best_tests_kept": best.1.tests.len(),
        "n_tests": instance.n_tests(),
        "mean_cost_reduction": mean,
        "ci95_cost_reduction": ci,
        "solutions": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    let summary_path = args.out.join("summary.json");
    std::fs::write(&summary_path, format!("{:#}\n", summary))?;
    println!(
        "{}: best seed {} keeps {}/{} tests (cost {}), mean reduction {:.3} ± {:.3}",
        method.name(),
        best.0,
        best.1.tests.len(),
        instance.n_tests(),
        best.1.total_cost,
        mean,
        ci
    );
    if any_stuck_timeout {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

/// Run one solver per seed, up to RTSM_WORKERS at a time. Each seed gets
/// its own deadline, so parallelism changes wall-clock, never results.
fn run_seeds(
    instance: &RtsmInstance,
    method: SamplerKind,
    seeds: &[u64],
    n_splits: Option<usize>,
    deadline_seconds: f64,
) -> Result<Vec<(u64, Solution, bool)>> {
    if seeds.is_empty() {
        bail!("at least one seed is required");
    }
    if deadline_seconds <= 0.0 {
        bail!("deadline must be positive");
    }
    let workers = worker_count(seeds.len());
    let jobs: Vec<u64> = seeds.to_vec();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results = std::sync::Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some(&seed) = jobs.get(i) else { break };
                let mut config = SolverConfig::new(method, seed);
                config.n_splits = n_splits;
                let deadline = Deadline::after_seconds(deadline_seconds);
                let outcome = iterative_solve(instance, &config, &deadline)
                    .map(|s| (seed, s, deadline.should_stop()));
                results.lock().unwrap().push(outcome);
            });
        }
    });
    let mut outcomes: Vec<(u64, Solution, bool)> =
        results.into_inner().unwrap().into_iter().collect::<rtsm_core::Result<_>>()?;
    outcomes.sort_by_key(|(seed, _, _)| *seed);
    Ok(outcomes)
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let instance = args.instance.load()?;
    let mut failed = false;
    for path in &args.solutions {
        let file = SolutionFile::read(path)?;
        match file.verify(&instance) {
            Ok(()) => println!("{}: ok", path.display()),
            Err(err) => {
                failed = true;
                println!("{}: FAILED ({err:#})", path.display());
            }
        }
    }
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn study(args: StudyArgs) -> Result<ExitCode> {
    let instance = args.instance.load()?;
    let bench_id = args
        .instance
        .matrices
        .first()
        .map(|p| rtsm::ingest::metric_name(p))
        .unwrap_or_else(|| "instance".into());
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<SamplerKind>())
        .collect::<rtsm_core::Result<Vec<_>>>()?;
    let mut config = StudyConfig::new(methods, args.seeds.clone(), args.fractions.clone());
    config.deadline_seconds = args.deadline_seconds;
    config.refit_on_full = args.refit_on_full;
    config.n_splits = args.n_splits;

    let start = Instant::now();
    let out = run_matrix_study(&[(bench_id, instance)], &config)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    std::fs::create_dir_all(&args.out)?;
    let records_path = args.out.join("records.csv");
    write_records_csv(&out.records, &records_path)?;
    let cdf = cumulative_score_distribution(&out.records, GroupBy::Method);
    write_cdf_csv(&cdf, &args.out.join("cdf.csv"))?;
    println!(
        "{} records in {:.1}s -> {}",
        out.records.len(),
        start.elapsed().as_secs_f64(),
        records_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn synth(args: SynthArgs) -> Result<ExitCode> {
    let spec = SyntheticSpec {
        n_variants: args.variants,
        n_tests: args.tests,
        structure: Structure::parse(&args.structure, args.blocks)?,
        noise_scale: args.noise,
        seed: args.seed,
    };
    let instance = generate_synthetic(&spec)?;
    let paths = rtsm::ingest::emit(&instance, &args.out)?;
    println!(
        "wrote {} ({} variants x {} tests) and costs.csv",
        paths[0].display(),
        instance.n_variants(),
        instance.n_tests()
    );
    Ok(ExitCode::SUCCESS)
}

fn report(args: ReportArgs) -> Result<ExitCode> {
    let records = read_records_csv(&args.records)?;
    if records.is_empty() {
        bail!("{}: no records", args.records.display());
    }
    let group_by = GroupBy::parse(&args.group_by)?;
    std::fs::create_dir_all(&args.out)?;
    let cdf = cumulative_score_distribution(&records, group_by);
    write_cdf_csv(&cdf, &args.out.join("cdf.csv"))?;
    let stats = group_stats(&records, group_by);
    let mut report = serde_json::json!({ "groups": stats });
    if let Some(pair) = &args.compare {
        if pair.len() != 2 {
            bail!("--compare needs exactly two methods, e.g. --compare biss,greedy");
        }
        let (a, b) = (&pair[0], &pair[1]);
        match compare_methods(&records, a, b) {
            Some(w) => {
                report["comparison"] = serde_json::json!({
                    "hypothesis": format!("{a} scores higher than {b}"),
                    "n_pairs_used": w.n_used,
                    "p_value": w.p_value,
                    "rank_biserial": w.rank_biserial,
                });
            }
            None => bail!("no paired records for methods {a} and {b}"),
        }
    }
    let path = args.out.join("report.json");
    std::fs::write(&path, format!("{:#}\n", report))?;
    // Plain-text mirror of the JSON for quick reading.
    for g in &stats {
        println!(
            "{}: n={} score {:.3} ± {:.3}, reduction {:.3} ± {:.3}, mean tau {:.3}",
            g.group, g.records, g.mean_score, g.ci95_score, g.mean_cost_reduction,
            g.ci95_cost_reduction, g.mean_tau
        );
    }
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}
