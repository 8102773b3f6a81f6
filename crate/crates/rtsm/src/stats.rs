//! Small statistical helpers for the evaluation reports: normal-based
//! confidence intervals and a one-sided Wilcoxon signed-rank comparison
//! with a rank-biserial effect size.

/// Mean and 95% confidence half-width (normal approximation over samples).
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Standard normal CDF via the Abramowitz–Stegun 7.1.26 erf approximation
/// (absolute error below 1.5e-7, plenty for reporting p-values).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / core::f64::consts::SQRT_2))
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// One-sided Wilcoxon signed-rank test that paired samples in `a` are
/// smaller than in `b` (e.g. method A's costs beat method B's).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Number of non-zero-difference pairs actually used.
    pub n_used: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// One-sided p-value (normal approximation with tie correction omitted).
    pub p_value: f64,
    /// Rank-biserial correlation in [-1, 1]; positive favors `a < b`.
    pub rank_biserial: f64,
}

pub fn wilcoxon_one_sided(a: &[f64], b: &[f64]) -> Option<WilcoxonResult> {
    if a.len() != b.len() {
        return None;
    }
    // Signed differences; zero differences are dropped per the standard test.
    let mut diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Some(WilcoxonResult {
            n_used: 0,
            w_plus: 0.0,
            w_minus: 0.0,
            p_value: 1.0,
            rank_biserial: 0.0,
        });
    }
    diffs.sort_by(|x, y| x.abs().partial_cmp(&y.abs()).unwrap());
    // Average ranks over ties in |d|.
    let n = diffs.len();
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[j + 1].abs() == diffs[i].abs() {
            j += 1;
        }
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for r in ranks.iter_mut().take(j + 1).skip(i) {
            *r = avg;
        }
        i = j + 1;
    }
    let w_minus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d < 0.0)
        .map(|(_, r)| r)
        .sum();
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0).sqrt();
    // `a` smaller than `b` shows up as small W+, so the one-sided p is the
    // lower tail of W+.
    let z = (w_plus - mean) / sd;
    let p_value = normal_cdf(z).clamp(0.0, 1.0);
    let rank_biserial = (w_minus - w_plus) / (w_plus + w_minus);
    Some(WilcoxonResult {
        n_used: n,
        w_plus,
        w_minus,
        p_value,
        rank_biserial,
    })
}
