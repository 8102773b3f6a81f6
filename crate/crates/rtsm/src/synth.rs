//! Synthetic instance generators: desk-scale stand-ins for the structural
//! patterns real benchmark suites exhibit (heavy duplication, low-rank
//! structure, or the opposite — a suite where nothing is redundant).

use rtsm_core::rng::{RngCore, SplitRng};
use rtsm_core::{CostVector, Error, PerformanceMatrix, Result, RtsmInstance, TestSet};

/// Structural family of a generated instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Structure {
    /// `blocks` base columns, each repeated to fill `n_tests`, plus
    /// per-entry noise. With one block and zero noise every column is a
    /// duplicate and any single test preserves the ranking.
    DuplicateBlocks { blocks: usize },
    /// Outer product of a variant vector and a positive test vector, plus
    /// noise. At zero noise any single column reconstructs the totals.
    Rank1Noise,
    /// Every test is necessary: removing any single column forces a tie
    /// that the index tie-break resolves against the full ranking. Needs
    /// `n_variants == 2 * n_tests`; noise perturbs shared base values only,
    /// so the certificate survives it.
    AdversarialAllNecessary,
    /// Independent uniform entries.
    RandomUniform,
}

impl Structure {
    pub fn name(&self) -> &'static str {
        match self {
            Structure::DuplicateBlocks { .. } => "duplicate_blocks",
            Structure::Rank1Noise => "rank1_noise",
            Structure::AdversarialAllNecessary => "adversarial_all_necessary",
            Structure::RandomUniform => "random_uniform",
        }
    }

    pub fn parse(name: &str, blocks: usize) -> Result<Structure> {
        match name {
            "duplicate_blocks" => Ok(Structure::DuplicateBlocks { blocks }),
            "rank1_noise" => Ok(Structure::Rank1Noise),
            "adversarial_all_necessary" => Ok(Structure::AdversarialAllNecessary),
            "random_uniform" => Ok(Structure::RandomUniform),
            other => Err(Error::InvalidArgument(format!(
                "unknown synthetic structure {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n_variants: usize,
    pub n_tests: usize,
    pub structure: Structure,
    pub noise_scale: f64,
    pub seed: u64,
}

/// Uniform draw in [0, 1).
fn unit(rng: &mut SplitRng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Uniform draw in [-scale, scale].
fn noise(rng: &mut SplitRng, scale: f64) -> f64 {
    (2.0 * unit(rng) - 1.0) * scale
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<RtsmInstance> {
    if spec.n_variants < 2 {
        return Err(Error::InvalidArgument(String::from(
            "synthetic instances need at least 2 variants",
        )));
    }
    if spec.n_tests == 0 {
        return Err(Error::InvalidArgument(String::from(
            "synthetic instances need at least 1 test",
        )));
    }
    if spec.noise_scale < 0.0 || !spec.noise_scale.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise scale {} must be finite and non-negative",
            spec.noise_scale
        )));
    }
    let mut rng = SplitRng::new(spec.seed);
    let rows = match spec.structure {
        Structure::DuplicateBlocks { blocks } => duplicate_blocks(spec, blocks, &mut rng)?,
        Structure::Rank1Noise => rank1_noise(spec, &mut rng),
        Structure::AdversarialAllNecessary => adversarial(spec, &mut rng)?,
        Structure::RandomUniform => (0..spec.n_variants)
            .map(|_| (0..spec.n_tests).map(|_| 100.0 * unit(&mut rng)).collect())
            .collect(),
    };
    let matrix = PerformanceMatrix::from_rows(spec.structure.name(), &rows)?;
    RtsmInstance::new(vec![matrix], CostVector::unit(spec.n_tests), 1.0)
}

fn duplicate_blocks(spec: &SyntheticSpec, blocks: usize, rng: &mut SplitRng) -> Result<Vec<Vec<f64>>> {
    if blocks == 0 || blocks > spec.n_tests {
        return Err(Error::InvalidArgument(format!(
            "{} blocks for {} tests",
            blocks, spec.n_tests
        )));
    }
    // One base column per block; test t copies base column t % blocks.
    let base: Vec<Vec<f64>> = (0..blocks)
        .map(|_| (0..spec.n_variants).map(|_| 100.0 * unit(rng)).collect())
        .collect();
    Ok((0..spec.n_variants)
        .map(|v| {
            (0..spec.n_tests)
                .map(|t| base[t % blocks][v] + noise(rng, spec.noise_scale))
                .collect()
        })
        .collect())
}

fn rank1_noise(spec: &SyntheticSpec, rng: &mut SplitRng) -> Vec<Vec<f64>> {
    let u: Vec<f64> = (0..spec.n_variants).map(|_| 1.0 + 99.0 * unit(rng)).collect();
    let w: Vec<f64> = (0..spec.n_tests).map(|_| 0.5 + unit(rng)).collect();
    (0..spec.n_variants)
        .map(|v| {
            (0..spec.n_tests)
                .map(|t| u[v] * w[t] + noise(rng, spec.noise_scale))
                .collect()
        })
        .collect()
}

/// Construction: variants come in pairs (2t, 2t+1) that agree everywhere
/// except column t, where variant 2t+1 exceeds variant 2t. Dropping column
/// t leaves the pair's remaining rows identical, so no weighting can
/// separate them; the index tie-break then ranks 2t first, inverting the
/// full order. Hence every column is necessary — even for weighted fits.
fn adversarial(spec: &SyntheticSpec, rng: &mut SplitRng) -> Result<Vec<Vec<f64>>> {
    let n = spec.n_tests;
    if spec.n_variants != 2 * n {
        return Err(Error::InvalidArgument(format!(
            "adversarial_all_necessary needs n_variants = 2 * n_tests (got {} variants, {} tests)",
            spec.n_variants, n
        )));
    }
    for _attempt in 0..100 {
        // Shared base values keep pair rows equal off their own column;
        // noise perturbs the base, not the individual rows.
        let base: Vec<Vec<f64>> = (0..n)
            .map(|pair| {
                (0..n)
                    .map(|_| (n - pair) as f64 * 100.0 + noise(rng, spec.noise_scale))
                    .collect()
            })
            .collect();
        let delta = 1.0;
        let mut rows = vec![vec![0.0; n]; 2 * n];
        for pair in 0..n {
            for t in 0..n {
                rows[2 * pair][t] = base[pair][t];
                rows[2 * pair + 1][t] = base[pair][t];
            }
            rows[2 * pair][pair] -= delta;
            rows[2 * pair + 1][pair] += delta;
        }
        if certify_all_necessary(&rows) {
            return Ok(rows);
        }
    }
    Err(Error::InvalidInstance(String::from(
        "adversarial construction failed verification after 100 attempts",
    )))
}

/// Generation-time certificate: under unit weights, removing any single
/// column must change the ranking.
fn certify_all_necessary(rows: &[Vec<f64>]) -> bool {
    let matrix = match PerformanceMatrix::from_rows("check", rows) {
        Ok(m) => m,
        Err(_) => return false,
    };
    let n_tests = rows[0].len();
    let full = rtsm_core::full_ranking(&matrix);
    // All full totals must be distinct, otherwise the tie-break hides gaps.
    let mut totals = full.totals().to_vec();
    totals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if totals.windows(2).any(|w| w[0] == w[1]) {
        return false;
    }
    (0..n_tests).all(|t| {
        let subset = TestSet::full(n_tests).without(t);
        match rtsm_core::ranking::subset_ranking(&matrix, &subset) {
            Ok(r) => r.ranks() != full.ranks(),
            Err(_) => false,
        }
    })
}
