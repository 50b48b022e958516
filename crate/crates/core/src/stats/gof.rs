//! Goodness-of-fit machinery: Kolmogorov-Smirnov tests with the asymptotic
//! Kolmogorov law, and Pearson chi-square tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Significance level used for every pass/fail decision.
pub const SIGNIFICANCE: f64 = 0.01;

/// Smallest (effective) sample size for which a KS test reports a decision.
pub const KS_MIN_N: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    /// KS distance or chi-square statistic.
    pub statistic: f64,
    pub n: usize,
    /// `None` when the sample is too small for the asymptotic law.
    pub p_value: Option<f64>,
    pub pass: Option<bool>,
    pub target_law: String,
    /// Auxiliary quantities (bin counts, dispersion interval, ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl GofReport {
    fn decided(statistic: f64, n: usize, p_value: f64, target_law: String) -> GofReport {
        GofReport {
            statistic,
            n,
            p_value: Some(p_value),
            pass: Some(p_value > SIGNIFICANCE),
            target_law,
            details: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.pass == Some(true)
    }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form converges fast for small arguments
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let sum: f64 = (1..=20).map(|j| (-((2 * j - 1) as f64).powi(2) * c).exp()).sum();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * sum;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        s += if j % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Asymptotic p-value with the small-sample correction
/// `(sqrt(n) + 0.12 + 0.11 / sqrt(n)) D`.
fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let rn = n_eff.sqrt();
    kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d)
}

/// KS distance between the empirical law of `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d = 0.0f64;
    for (i, v) in x.iter().enumerate() {
        let f = cdf(*v);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// One-sample KS test against a continuous `cdf`.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64, target_law: impl Into<String>) -> Result<GofReport> {
    if samples.is_empty() {
        return Err(Error::data("KS test needs at least one observation"));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::data("KS test input contains NaN"));
    }
    let d = ks_statistic(samples, cdf);
    Ok(finish_ks(d, samples.len(), samples.len() as f64, target_law.into()))
}

fn finish_ks(d: f64, n: usize, n_eff: f64, target_law: String) -> GofReport {
    if n_eff < KS_MIN_N as f64 {
        return GofReport { statistic: d, n, p_value: None, pass: None, target_law, details: BTreeMap::new() };
    }
    GofReport::decided(d, n, ks_p_value(d, n_eff), target_law)
}

/// Two-sample KS distance, handling ties.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
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

/// Two-sample KS test with effective size `nm / (n + m)`.
pub fn ks_two_sample(a: &[f64], b: &[f64], target_law: impl Into<String>) -> Result<GofReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::data("two-sample KS test needs observations on both sides"));
    }
    let d = ks_two_sample_statistic(a, b);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let mut r = finish_ks(d, a.len() + b.len(), n * m / (n + m), target_law.into());
    r.details.insert("n_first".into(), n);
    r.details.insert("n_second".into(), m);
    Ok(r)
}

/// Pearson chi-square test of observed counts against expected counts.
pub fn chi_square(observed: &[f64], expected: &[f64], fitted_params: usize, target_law: impl Into<String>) -> Result<GofReport> {
    if observed.len() != expected.len() || observed.len() < 2 + fitted_params {
        return Err(Error::data("chi-square test needs matching bins and positive degrees of freedom"));
    }
    if expected.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::data("expected bin counts must be positive"));
    }
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (observed.len() - 1 - fitted_params) as f64;
    let p = ChiSquared::new(df).expect("positive degrees of freedom").sf(stat);
    let n = observed.iter().sum::<f64>().round() as usize;
    let mut r = GofReport::decided(stat, n, p, target_law.into());
    r.details.insert("df".into(), df);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_law_values() {
        // two series agree in the overlap and hit the familiar 1% point
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 2e-4);
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 2e-4);
        let lo = {
            let c = std::f64::consts::PI.powi(2) / (8.0 * 1.18f64.powi(2));
            1.0 - (2.0 * std::f64::consts::PI).sqrt() / 1.18
                * (1..=20).map(|j| (-((2 * j - 1) as f64).powi(2) * c).exp()).sum::<f64>()
        };
        assert!((lo - kolmogorov_survival(1.18)).abs() < 1e-10);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn two_sample_ties() {
        assert_eq!(ks_two_sample_statistic(&[1.0, 1.0, 2.0], &[1.0, 1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample_statistic(&[0.0], &[1.0]), 1.0);
    }

    #[test]
    fn small_samples_get_no_decision() {
        let r = ks_one_sample(&[0.2, 0.4], |x| x, "uniform").unwrap();
        assert_eq!(r.pass, None);
    }
}
