//! CSV interchange for performance matrices and test costs.
//!
//! Matrix format: first row = header (corner cell ignored, then test ids);
//! each following row = variant id, then one value per test. One file per
//! metric; the metric name defaults to the file stem. Cost format: two
//! columns, `test_id,cost`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rtsm_core::{CostVector, PerformanceMatrix, RtsmInstance};

/// Where per-test costs come from.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSource {
    /// Every test costs 1.
    Unit,
    /// `test_id,cost` CSV.
    File(PathBuf),
    /// Per-test mean of the named runtime metric across variants, taken
    /// before any negation is applied.
    MeanRuntime { metric: String },
}

/// One metric input: its CSV and whether to negate values so that
/// lower-is-better measurements rank max-first.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricFile {
    pub path: PathBuf,
    pub negate: bool,
}

pub fn metric_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

/// Parse one matrix CSV into a (not yet negated) PerformanceMatrix.
pub fn read_matrix_csv(path: &Path) -> Result<PerformanceMatrix> {
    let name = metric_name(path);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("{}: cannot open", path.display()))?;
    let mut rows = reader.records();
    let header = match rows.next() {
        Some(h) => h.with_context(|| format!("{}: line 1", path.display()))?,
        None => bail!("{}: empty file", path.display()),
    };
    if header.len() < 2 {
        bail!("{}: line 1: header needs at least one test id", path.display());
    }
    let test_ids: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut variant_ids = Vec::new();
    let mut values = Vec::new();
    for (i, record) in rows.enumerate() {
        let line = i + 2;
        let record = record.with_context(|| format!("{}: line {line}", path.display()))?;
        if record.len() != test_ids.len() + 1 {
            bail!(
                "{}: line {line}: expected {} cells, found {}",
                path.display(),
                test_ids.len() + 1,
                record.len()
            );
        }
        variant_ids.push(record[0].to_owned());
        for (j, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().with_context(|| {
                format!(
                    "{}: line {line}, column {} ({}): invalid number {cell:?}",
                    path.display(),
                    j + 2,
                    test_ids[j]
                )
            })?;
            if !v.is_finite() {
                bail!(
                    "{}: line {line}, column {} ({}): non-finite value {cell}",
                    path.display(),
                    j + 2,
                    test_ids[j]
                );
            }
            values.push(v);
        }
    }
    PerformanceMatrix::new(name, variant_ids, test_ids, values)
        .with_context(|| format!("{}: invalid matrix", path.display()))
}

fn read_cost_csv(path: &Path, test_ids: &[String]) -> Result<CostVector> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("{}: cannot open", path.display()))?;
    let mut by_id = std::collections::BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.with_context(|| format!("{}: line {line}", path.display()))?;
        if record.len() != 2 {
            bail!("{}: line {line}: expected test_id,cost", path.display());
        }
        // Tolerate a header row.
        if line == 1 && record[1].parse::<f64>().is_err() {
            continue;
        }
        let cost: f64 = record[1]
            .parse()
            .with_context(|| format!("{}: line {line}: invalid cost {:?}", path.display(), &record[1]))?;
        if by_id.insert(record[0].to_owned(), cost).is_some() {
            bail!("{}: line {line}: duplicate test id {}", path.display(), &record[0]);
        }
    }
    let costs: Vec<f64> = test_ids
        .iter()
        .map(|id| {
            by_id
                .get(id)
                .copied()
                .with_context(|| format!("{}: missing cost for test {id}", path.display()))
        })
        .collect::<Result<_>>()?;
    let known: BTreeSet<&String> = test_ids.iter().collect();
    if let Some(extra) = by_id.keys().find(|id| !known.contains(id)) {
        bail!("{}: cost entry for unknown test {extra}", path.display());
    }
    CostVector::new(costs).context("invalid cost vector")
}

/// Build a full instance from metric CSVs and a cost source.
pub fn ingest(metrics: &[MetricFile], costs: &CostSource, target_tau: f64) -> Result<RtsmInstance> {
    if metrics.is_empty() {
        bail!("at least one matrix file is required");
    }
    let raw: Vec<PerformanceMatrix> = metrics
        .iter()
        .map(|m| read_matrix_csv(&m.path))
        .collect::<Result<_>>()?;
    for (m, first) in raw.iter().zip(std::iter::repeat(&raw[0])).skip(1) {
        if m.test_ids() != first.test_ids() {
            let diff = m
                .test_ids()
                .iter()
                .zip(first.test_ids())
                .find(|(a, b)| a != b)
                .map(|(a, b)| format!("{a} vs {b}"))
                .unwrap_or_else(|| format!("{} vs {} columns", m.test_ids().len(), first.test_ids().len()));
            bail!(
                "metric {} disagrees with {} on test columns ({diff})",
                m.metric_name(),
                first.metric_name()
            );
        }
        if m.variant_ids() != first.variant_ids() {
            bail!(
                "metric {} disagrees with {} on variant rows",
                m.metric_name(),
                first.metric_name()
            );
        }
    }
    let cost_vector = match costs {
        CostSource::Unit => CostVector::unit(raw[0].n_tests()),
        CostSource::File(path) => read_cost_csv(path, raw[0].test_ids())?,
        CostSource::MeanRuntime { metric } => {
            let m = raw
                .iter()
                .find(|m| m.metric_name() == metric)
                .with_context(|| format!("runtime metric {metric} not among the inputs"))?;
            let n = m.n_variants() as f64;
            let means = (0..m.n_tests())
                .map(|t| (0..m.n_variants()).map(|v| m.value(v, t)).sum::<f64>() / n)
                .collect();
            CostVector::new(means).context("mean-runtime costs invalid (negative mean?)")?
        }
    };
    let matrices = raw
        .into_iter()
        .zip(metrics)
        .map(|(m, f)| if f.negate { m.negated() } else { m })
        .collect();
    Ok(RtsmInstance::new(matrices, cost_vector, target_tau)?)
}

/// Write an instance back out as one CSV per metric plus a cost CSV;
/// returns the matrix paths. Inverse of `ingest` with unit target.
pub fn emit(instance: &RtsmInstance, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for m in instance.matrices() {
        let mut out = String::new();
        out.push_str("variant");
        for id in m.test_ids() {
            write!(out, ",{id}").unwrap();
        }
        out.push('\n');
        for (v, vid) in m.variant_ids().iter().enumerate() {
            out.push_str(vid);
            for t in 0..m.n_tests() {
                write!(out, ",{}", fmt_value(m.value(v, t))).unwrap();
            }
            out.push('\n');
        }
        let path = dir.join(format!("{}.csv", m.metric_name()));
        fs::write(&path, out)?;
        paths.push(path);
    }
    let mut out = String::new();
    for (t, id) in instance.test_ids().iter().enumerate() {
        writeln!(out, "{id},{}", fmt_value(instance.costs().get(t))).unwrap();
    }
    fs::write(dir.join("costs.csv"), out)?;
    Ok(paths)
}

/// Shortest decimal that round-trips (Rust's float Display guarantees this).
fn fmt_value(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn unit_cost_ingest() {
        let dir = tempdir().unwrap();
        let p = write(dir.path(), "time.csv", "id,a,b\nv1,1.5,2\nv2,3,4\n");
        let inst = ingest(
            &[MetricFile { path: p, negate: false }],
            &CostSource::Unit,
            1.0,
        )
        .unwrap();
        assert_eq!(inst.test_ids(), &["a".to_string(), "b".to_string()]);
        assert_eq!(inst.costs().as_slice(), &[1.0, 1.0]);
        assert_eq!(inst.matrices()[0].value(0, 0), 1.5);
    }

    #[test]
    fn mean_runtime_costs() {
        let dir = tempdir().unwrap();
        // Column means computed by hand: (1+3+5)/3 = 3, (2+4+9)/3 = 5.
        let p = write(dir.path(), "runtime.csv", "id,a,b\nv1,1,2\nv2,3,4\nv3,5,9\n");
        let inst = ingest(
            &[MetricFile { path: p, negate: true }],
            &CostSource::MeanRuntime { metric: "runtime".into() },
            1.0,
        )
        .unwrap();
        assert_eq!(inst.costs().as_slice(), &[3.0, 5.0]);
        // Negation applied after cost extraction.
        assert_eq!(inst.matrices()[0].value(0, 0), -1.0);
    }

    #[test]
    fn mismatched_columns_name_the_offender() {
        let dir = tempdir().unwrap();
        let a = write(dir.path(), "m1.csv", "id,a,b\nv1,1,2\nv2,3,4\n");
        let b = write(dir.path(), "m2.csv", "id,a,c\nv1,1,2\nv2,3,4\n");
        let err = ingest(
            &[
                MetricFile { path: a, negate: false },
                MetricFile { path: b, negate: false },
            ],
            &CostSource::Unit,
            1.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("c vs b"), "{err}");
    }

    #[test]
    fn bad_number_reports_location() {
        let dir = tempdir().unwrap();
        let p = write(dir.path(), "m.csv", "id,a\nv1,1\nv2,oops\n");
        let err = read_matrix_csv(&p).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("oops"), "{msg}");
    }

    #[test]
    fn cost_file_round_trip() {
        let dir = tempdir().unwrap();
        let m = write(dir.path(), "m.csv", "id,a,b\nv1,1,2\nv2,3,4\n");
        let c = write(dir.path(), "costs.csv", "a,2.5\nb,0.5\n");
        let inst = ingest(
            &[MetricFile { path: m, negate: false }],
            &CostSource::File(c),
            1.0,
        )
        .unwrap();
        assert_eq!(inst.costs().as_slice(), &[2.5, 0.5]);

        let out = dir.path().join("emitted");
        let paths = emit(&inst, &out).unwrap();
        let again = ingest(
            &[MetricFile { path: paths[0].clone(), negate: false }],
            &CostSource::File(out.join("costs.csv")),
            1.0,
        )
        .unwrap();
        assert_eq!(again, inst);
    }

    #[test]
    fn missing_cost_entry_fails() {
        let dir = tempdir().unwrap();
        let m = write(dir.path(), "m.csv", "id,a,b\nv1,1,2\nv2,3,4\n");
        let c = write(dir.path(), "costs.csv", "a,2.5\n");
        let err = ingest(
            &[MetricFile { path: m, negate: false }],
            &CostSource::File(c),
            1.0,
        )
        .unwrap_err();
        assert!(format!("{err:#}").contains("missing cost for test b"));
    }
}
