//! Distances between one-dimensional empirical distributions and a normality test.

use crate::math::normal_cdf;
use crate::{HawkesError, Result};

/// Sorted sample with uniform weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
}

impl EmpiricalSample {
    /// Sorts `values`; fails on an empty sample or NaN entries.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(HawkesError::InvalidParameter(
                "empirical sample must be non-empty".into(),
            ));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(HawkesError::InvalidParameter(
                "empirical sample contains NaN".into(),
            ));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Unbiased sample variance (0 for a single point).
    pub fn variance(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let mu = self.mean();
        self.values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    /// Standard error of the sample mean.
    pub fn stderr(&self) -> f64 {
        (self.variance() / self.values.len() as f64).sqrt()
    }

    /// Standard error of the sample variance, from the fourth central moment.
    pub fn variance_stderr(&self) -> f64 {
        let n = self.values.len() as f64;
        if n < 4.0 {
            return f64::INFINITY;
        }
        let mu = self.mean();
        let m2 = self.values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
        let m4 = self.values.iter().map(|v| (v - mu).powi(4)).sum::<f64>() / n;
        ((m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
    }

    /// Empirical CDF `F(x) = #{v ≤ x} / n`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    /// Scales every value by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * c).collect())
    }
}

/// `sup_x |F_a(x) − F_b(x)|`.
pub fn kolmogorov_distance(a: &EmpiricalSample, b: &EmpiricalSample) -> f64 {
    let (x, y) = (&a.values, &b.values);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < x.len() || j < y.len() {
        let v = match (x.get(i), y.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// `sup_x |F_a(x) − F(x)|` against a continuous CDF.
pub fn kolmogorov_distance_cdf<F: Fn(f64) -> f64>(a: &EmpiricalSample, cdf: F) -> f64 {
    let n = a.values.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < a.values.len() {
        let v = a.values[i];
        let below = i as f64 / n;
        while i < a.values.len() && a.values[i] == v {
            i += 1;
        }
        let f = cdf(v);
        d = d.max((f - below).abs()).max((i as f64 / n - f).abs());
    }
    d
}

/// `∫_0^1 |Q_a(u) − Q_b(u)| du` with step quantile functions; for equal sizes this is the
/// mean absolute difference of order statistics.
pub fn wasserstein1(a: &EmpiricalSample, b: &EmpiricalSample) -> f64 {
    let (x, y) = (&a.values, &b.values);
    let (n, m) = (x.len(), y.len());
    if n == m {
        return x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum::<f64>() / n as f64;
    }
    // walk the merged breakpoints {i/n} ∪ {j/m} with exact rational comparisons
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0.0;
    let mut total = 0.0;
    while i < n && j < m {
        let (next_i, next_j) = ((i + 1) * m, (j + 1) * n);
        let upper = next_i.min(next_j) as f64 / (n * m) as f64;
        total += (upper - prev) * (x[i] - y[j]).abs();
        prev = upper;
        if next_i <= next_j {
            i += 1;
        }
        if next_j <= next_i {
            j += 1;
        }
    }
    total
}

/// Two-sample Kolmogorov critical value at `level` (asymptotic):
/// `√(−ln(level/2)/2) · √((n+m)/(nm))`.
pub fn ks_critical_value(n: usize, m: usize, level: f64) -> f64 {
    let c = (-(0.5 * level).ln() / 2.0).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}

/// Outcome of the Anderson–Darling test for normality with estimated mean and variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AndersonDarling {
    /// `A² (1 + 0.75/n + 2.25/n²)`.
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// Anderson–Darling normality test; `level` must be one of 0.10, 0.05, 0.025, 0.01.
pub fn anderson_darling_normal(sample: &EmpiricalSample, level: f64) -> Result<AndersonDarling> {
    let critical = [(0.10, 0.631), (0.05, 0.752), (0.025, 0.873), (0.01, 1.035)]
        .iter()
        .find(|(l, _)| (l - level).abs() < 1e-12)
        .map(|&(_, c)| c)
        .ok_or_else(|| {
            HawkesError::InvalidParameter(format!("no critical value tabulated for level {level}"))
        })?;
    let n = sample.len();
    if n < 8 {
        return Err(HawkesError::InvalidParameter(
            "Anderson-Darling needs at least 8 points".into(),
        ));
    }
    let mu = sample.mean();
    let sd = sample.variance().sqrt();
    if !(sd > 0.0) {
        return Err(HawkesError::Domain(
            "Anderson-Darling on a degenerate sample".into(),
        ));
    }
    let x = sample.values();
    let nf = n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let zi = (x[i] - mu) / sd;
        let zr = (x[n - 1 - i] - mu) / sd;
        let lo = normal_cdf(zi).max(f64::MIN_POSITIVE).ln();
        let hi = normal_cdf(-zr).max(f64::MIN_POSITIVE).ln();
        s += (2 * i + 1) as f64 * (lo + hi);
    }
    let a2 = -nf - s / nf;
    let statistic = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    Ok(AndersonDarling {
        statistic,
        critical,
        pass: statistic < critical,
    })
}
