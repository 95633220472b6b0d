//! Two-sample Kolmogorov–Smirnov tests and boxplot summaries.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::kolmogorov_sf;

/// Sample sizes below this make the asymptotic p-value unreliable.
pub const SMALL_SAMPLE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub d_stat: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

impl KsResult {
    pub fn small_sample(&self) -> bool {
        self.n1 < SMALL_SAMPLE || self.n2 < SMALL_SAMPLE
    }
}

fn sorted_finite(x: &[f64], what: &str) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::invalid(format!("{what} is empty")));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid(format!("{what} contains NaN")));
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample KS statistic with the asymptotic Kolmogorov p-value
/// `P(K > D √(n₁n₂/(n₁+n₂)))`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let a = sorted_finite(a, "first sample")?;
    let b = sorted_finite(b, "second sample")?;
    let (n1, n2) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        // step past every copy of the smallest remaining value in both samples
        let x = a[i].min(b[j]);
        while i < n1 && a[i] <= x {
            i += 1;
        }
        while j < n2 && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let en = (n1 as f64 * n2 as f64 / (n1 + n2) as f64).sqrt();
    let p_value = if d == 0.0 { 1.0 } else { kolmogorov_sf(d * en)? };
    let res = KsResult {
        d_stat: d,
        p_value,
        n1,
        n2,
    };
    if res.small_sample() {
        log::warn!("KS test with n1 = {n1}, n2 = {n2}: asymptotic p-value is approximate");
    }
    Ok(res)
}

/// Quantile by linear interpolation between order statistics, at position
/// `(n - 1) q` of a sorted sample.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Tukey boxplot statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistSummary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

impl DistSummary {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

pub fn summarize(sample: &[f64]) -> Result<DistSummary> {
    let s = sorted_finite(sample, "sample")?;
    let q1 = quantile_sorted(&s, 0.25);
    let q3 = quantile_sorted(&s, 0.75);
    let fence = 1.5 * (q3 - q1);
    let (lo_f, hi_f) = (q1 - fence, q3 + fence);
    let inside = || s.iter().copied().filter(|&v| v >= lo_f && v <= hi_f);
    Ok(DistSummary {
        n: s.len(),
        min: s[0],
        q1,
        median: quantile_sorted(&s, 0.5),
        q3,
        max: s[s.len() - 1],
        mean: s.iter().sum::<f64>() / s.len() as f64,
        whisker_lo: inside().fold(f64::INFINITY, f64::min),
        whisker_hi: inside().fold(f64::NEG_INFINITY, f64::max),
        outliers: s.iter().copied().filter(|&v| v < lo_f || v > hi_f).collect(),
    })
}

pub fn median(sample: &[f64]) -> Result<f64> {
    Ok(quantile_sorted(&sorted_finite(sample, "sample")?, 0.5))
}
