//! Extremal index estimators, threshold calibration and goodness-of-fit
//! diagnostics for the limit laws of the cluster process.

pub mod gof;

pub use gof::{chi_square, ks_one_sample, ks_two_sample, GofReport, KS_MIN_N, SIGNIFICANCE};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::cluster::{metric_m_tilde, normalize_cluster, ClusterEntry, DEFAULT_SHIFT_TOL};
use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, unit_ball_volume};
use crate::pattern::{is_origin, lex_cmp, norm, Pattern};
use crate::scoring::WeightFn;
use crate::tail::{ScalingLaw, TailKind, TailSample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMethod {
    Anchor,
    Ratio,
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: ThetaMethod,
    pub n_samples: usize,
}

/// Anchoring function selecting a distinguished point of a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Anchor {
    /// Lexicographically first point of maximal score.
    FirstMax,
    /// Lexicographically first point with score above 1 in the tail
    /// configuration; `alpha` is the tail index of the Pareto score used to
    /// pass from a spectral sample to the tail configuration.
    FirstExceedance { alpha: f64 },
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `a_tau` solving `tau^d P(xi > a) = 1` for reciprocal k-NN scores:
/// `tau^{1/k} (C_d^k / k!)^{1/(dk)}`.
pub fn threshold_a_tau(tau: f64, k: usize, d: usize) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) || k == 0 || d == 0 {
        return Err(Error::argument(format!("invalid threshold inputs tau={tau}, k={k}, d={d}")));
    }
    let (kf, df) = (k as f64, d as f64);
    let log_const = kf * unit_ball_volume(d).ln() - ln_gamma(kf + 1.0);
    Ok(tau.powf(1.0 / kf) * (log_const / (df * kf)).exp())
}

/// `a_tau = mark_scale (kappa tau^d)^{1/alpha}` for moving maxima of marks
/// with `P(zeta > u) = (u / mark_scale)^{-alpha}` in the tail.
pub fn threshold_a_tau_movmax(tau: f64, d: usize, kappa: f64, alpha: f64, mark_scale: f64) -> Result<f64> {
    if !(tau > 0.0 && kappa > 0.0 && alpha > 0.0 && mark_scale > 0.0) || d == 0 {
        return Err(Error::argument("threshold inputs must be positive"));
    }
    Ok(mark_scale * (kappa * tau.powi(d as i32)).powf(1.0 / alpha))
}

fn check_nonempty(samples: &[TailSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::domain("no samples"));
    }
    Ok(())
}

/// Probability that the first-exceedance anchor of `Y = T_{eta^{-beta},
/// eta^{-1}} theta` is the origin, averaged over the Pareto `eta`: the points
/// lexicographically before the origin must all stay at or below 1 after
/// multiplication by `eta`.
fn first_exceedance_at_origin(theta: &Pattern, alpha: f64) -> f64 {
    let zero = vec![0.0; theta.dim()];
    let before = theta
        .iter()
        .filter(|(t, _)| lex_cmp(t, &zero) == std::cmp::Ordering::Less)
        .map(|(_, s)| s)
        .fold(0.0, f64::max);
    if before >= 1.0 {
        0.0
    } else {
        1.0 - before.powf(alpha)
    }
}

/// `P(anchor(Theta) = 0)` estimated from spectral (or tail) samples.
pub fn extremal_index_anchor(samples: &[TailSample], anchor: Anchor) -> Result<ThetaEstimate> {
    check_nonempty(samples)?;
    let mut values = Vec::with_capacity(samples.len());
    for s in samples {
        let v = match (anchor, s.kind) {
            (Anchor::FirstMax, TailKind::Theta | TailKind::Y) => {
                if is_origin(&s.config.anchor_first_max()?) {
                    1.0
                } else {
                    0.0
                }
            }
            (Anchor::FirstExceedance { .. }, TailKind::Y) => {
                if is_origin(&s.config.anchor_first_exceedance(1.0)) {
                    1.0
                } else {
                    0.0
                }
            }
            (Anchor::FirstExceedance { alpha }, TailKind::Theta) => {
                if !(alpha > 0.0) {
                    return Err(Error::argument("alpha must be positive"));
                }
                first_exceedance_at_origin(&s.config, alpha)
            }
            _ => return Err(Error::argument("anchor estimates need Theta or Y samples")),
        };
        values.push(v);
    }
    let (value, std_error) = mean_and_se(&values);
    Ok(ThetaEstimate { value, std_error, method: ThetaMethod::Anchor, n_samples: values.len() })
}

fn power_sums(p: &Pattern, alpha: f64) -> (f64, f64) {
    let max = p.max_score().powf(alpha);
    let sum = p.scores().iter().map(|s| s.powf(alpha)).sum();
    (max, sum)
}

/// Ratio representation: the mean of `M^alpha / sum s^alpha` over spectral
/// samples, or `E[max s^alpha] / E[sum s^alpha]` over moving-maxima `W`
/// samples (delta-method standard error).
pub fn extremal_index_ratio(samples: &[TailSample], alpha: f64) -> Result<ThetaEstimate> {
    check_nonempty(samples)?;
    if !(alpha > 0.0) {
        return Err(Error::argument("alpha must be positive"));
    }
    let kind = samples[0].kind;
    if samples.iter().any(|s| s.kind != kind) {
        return Err(Error::argument("ratio estimate needs samples of a single kind"));
    }
    if samples.iter().any(|s| s.config.is_empty()) {
        return Err(Error::domain("ratio estimate needs nonempty samples"));
    }
    let n = samples.len();
    match kind {
        TailKind::Theta => {
            let values: Vec<f64> = samples
                .iter()
                .map(|s| {
                    let (m, t) = power_sums(&s.config, alpha);
                    m / t
                })
                .collect();
            let (value, std_error) = mean_and_se(&values);
            Ok(ThetaEstimate { value, std_error, method: ThetaMethod::Ratio, n_samples: n })
        }
        TailKind::W => {
            let pairs: Vec<(f64, f64)> = samples.iter().map(|s| power_sums(&s.config, alpha)).collect();
            let nf = n as f64;
            let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
            let sm = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
            let value = mx / sm;
            // variance of the linearization (max - value * sum) / E[sum]
            let resid: Vec<f64> = pairs.iter().map(|(m, s)| (m - value * s) / sm).collect();
            let (_, std_error) = mean_and_se(&resid);
            Ok(ThetaEstimate { value, std_error, method: ThetaMethod::Ratio, n_samples: n })
        }
        _ => Err(Error::argument("ratio estimate needs Theta or W samples")),
    }
}

/// `theta_{2,d} = 1 - 2 Gamma(1 + d/2) / (sqrt(pi) Gamma((d+1)/2)) int_0^{pi/3} sin^d u du`.
pub fn theta2_closed_form(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::argument("dimension must be at least 1"));
    }
    let df = d as f64;
    let integral = adaptive_simpson(&|u: f64| u.sin().powi(d as i32), 0.0, std::f64::consts::PI / 3.0, 1e-14);
    let log_c = ln_gamma(1.0 + df / 2.0) - 0.5 * std::f64::consts::PI.ln() - ln_gamma((df + 1.0) / 2.0);
    Ok(1.0 - 2.0 * log_c.exp() * integral)
}

/// KS test of `max / a_tau` against `exp(-theta y^{-alpha})`.
pub fn fit_frechet_max(max_scores: &[f64], a_tau: f64, theta: f64, alpha: f64) -> Result<GofReport> {
    if !(a_tau > 0.0 && theta > 0.0 && alpha > 0.0) {
        return Err(Error::argument("Frechet parameters must be positive"));
    }
    let y: Vec<f64> = max_scores.iter().map(|m| m / a_tau).collect();
    let cdf = move |v: f64| if v <= 0.0 { 0.0 } else { (-theta * v.powf(-alpha)).exp() };
    ks_one_sample(&y, cdf, format!("frechet(theta={theta}, alpha={alpha})"))
}

/// KS test of `a_tau m` against the survival law `exp(-theta v^{dk})`.
pub fn fit_weibull_min_knn(min_distances: &[f64], a_tau: f64, theta: f64, d: usize, k: usize) -> Result<GofReport> {
    if !(a_tau > 0.0 && theta > 0.0) || d == 0 || k == 0 {
        return Err(Error::argument("Weibull parameters must be positive"));
    }
    let shape = (d * k) as f64;
    let v: Vec<f64> = min_distances.iter().map(|m| m * a_tau).collect();
    let cdf = move |x: f64| if x <= 0.0 { 0.0 } else { 1.0 - (-theta * x.powf(shape)).exp() };
    ks_one_sample(&v, cdf, format!("weibull(theta={theta}, shape={shape})"))
}

/// Median of the limiting law of `a_tau m`: `(ln 2 / theta)^{1/(dk)}`.
pub fn weibull_min_median(theta: f64, d: usize, k: usize) -> f64 {
    (std::f64::consts::LN_2 / theta).powf(1.0 / (d * k) as f64)
}

/// KS test against Pareto(`alpha`) on `[1, inf)`.
pub fn fit_pareto_eta(etas: &[f64], alpha: f64) -> Result<GofReport> {
    if !(alpha > 0.0) {
        return Err(Error::argument("alpha must be positive"));
    }
    if let Some(v) = etas.iter().find(|v| !(**v >= 1.0)) {
        return Err(Error::data(format!("Pareto sample value {v} below 1")));
    }
    ks_one_sample(etas, move |y| 1.0 - y.powf(-alpha), format!("pareto(alpha={alpha})"))
}

fn poisson_pmf(j: usize, mean: f64) -> f64 {
    (j as f64 * mean.ln() - mean - ln_gamma(j as f64 + 1.0)).exp()
}

/// Poisson check of per-replicate counts: a 99% interval for the dispersion
/// index must cover 1 and a chi-square test against Poisson(`expected_mean`)
/// (bins pooled to expected counts of at least 5) must pass.
pub fn poisson_block_count_test(counts: &[u64], expected_mean: f64) -> Result<GofReport> {
    if counts.len() < 2 {
        return Err(Error::data("need at least two replicate counts"));
    }
    if !(expected_mean > 0.0) {
        return Err(Error::argument("expected mean must be positive"));
    }
    let n = counts.len();
    let nf = n as f64;
    let values: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
    let mean = values.iter().sum::<f64>() / nf;
    if mean == 0.0 {
        return Err(Error::data("all counts are zero"));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    let dispersion = var / mean;
    let chi = ChiSquared::new(nf - 1.0).expect("positive degrees of freedom");
    let lo = dispersion * (nf - 1.0) / chi.inverse_cdf(1.0 - SIGNIFICANCE / 2.0);
    let hi = dispersion * (nf - 1.0) / chi.inverse_cdf(SIGNIFICANCE / 2.0);

    let mut observed = Vec::new();
    let mut expected = Vec::new();
    let mut cum = 0.0;
    let mut j = 0usize;
    loop {
        let e = nf * poisson_pmf(j, expected_mean);
        let tail_after = nf * (1.0 - cum - poisson_pmf(j, expected_mean));
        if e >= 5.0 && tail_after >= 5.0 {
            observed.push(counts.iter().filter(|c| **c as usize == j).count() as f64);
            expected.push(e);
            cum += poisson_pmf(j, expected_mean);
            j += 1;
        } else {
            observed.push(counts.iter().filter(|c| **c as usize >= j).count() as f64);
            expected.push(nf * (1.0 - cum));
            break;
        }
    }
    let target = format!("poisson(mean={expected_mean})");
    let mut report = if observed.len() >= 2 {
        chi_square(&observed, &expected, 0, target)?
    } else {
        GofReport {
            statistic: 0.0,
            n,
            p_value: None,
            pass: None,
            target_law: target,
            details: Default::default(),
        }
    };
    let covers = lo <= 1.0 && 1.0 <= hi;
    report.pass = Some(report.pass.unwrap_or(true) && covers);
    report.details.insert("mean".into(), mean);
    report.details.insert("dispersion".into(), dispersion);
    report.details.insert("dispersion_lo".into(), lo);
    report.details.insert("dispersion_hi".into(), hi);
    report.details.insert("dispersion_covers_one".into(), if covers { 1.0 } else { 0.0 });
    Ok(report)
}

/// Chi-square test of uniformity on `[0, 1]^d` over a `4^d` grid of bins.
pub fn uniform_positions_test(positions: &[Vec<f64>]) -> Result<GofReport> {
    let d = positions.first().map(|p| p.len()).ok_or_else(|| Error::data("no positions"))?;
    if d == 0 || positions.iter().any(|p| p.len() != d) {
        return Err(Error::data("positions must share a positive dimension"));
    }
    let bins = 4usize.pow(d as u32);
    let mut observed = vec![0.0; bins];
    for p in positions {
        let mut idx = 0;
        for &x in p {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::data(format!("position coordinate {x} outside [0, 1]")));
            }
            idx = idx * 4 + ((x * 4.0).floor() as usize).min(3);
        }
        observed[idx] += 1.0;
    }
    let expected = vec![positions.len() as f64 / bins as f64; bins];
    chi_square(&observed, &expected, 0, format!("uniform([0,1]^{d})"))
}

/// Scalar summaries compared between pipeline clusters and exact `Q` draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClusterFunctional {
    /// Number of points with normalized score above `level`.
    CountAbove { level: f64 },
    /// Largest distance between points with normalized score above `level`.
    Diameter { level: f64 },
    /// `m~` distance to the nearest of `references` held-out `Q` draws,
    /// after dropping points with score at most `score_floor`.
    DistanceToReference { references: usize, score_floor: f64 },
}

impl ClusterFunctional {
    pub fn name(&self) -> String {
        match self {
            ClusterFunctional::CountAbove { level } => format!("count_above_{level}"),
            ClusterFunctional::Diameter { level } => format!("diameter_above_{level}"),
            ClusterFunctional::DistanceToReference { .. } => "distance_to_q".into(),
        }
    }

    pub fn eval(&self, p: &Pattern, refs: &[Pattern]) -> f64 {
        match self {
            ClusterFunctional::CountAbove { level } => p.scores().iter().filter(|s| **s > *level).count() as f64,
            ClusterFunctional::Diameter { level } => {
                let pts: Vec<&[f64]> = p.iter().filter(|(_, s)| *s > *level).map(|(t, _)| t).collect();
                let mut diam = 0.0f64;
                for i in 0..pts.len() {
                    for j in (i + 1)..pts.len() {
                        let dv: Vec<f64> = pts[i].iter().zip(pts[j]).map(|(a, b)| a - b).collect();
                        diam = diam.max(norm(&dv));
                    }
                }
                diam
            }
            ClusterFunctional::DistanceToReference { score_floor, .. } => {
                let q = p.filter(|_, s| s > *score_floor);
                refs.iter()
                    .map(|r| metric_m_tilde(&q, r, DEFAULT_SHIFT_TOL))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Two-sample KS tests, one per functional, between normalized pipeline
/// clusters and exact typical-cluster draws.
pub fn cluster_vs_q_test(
    entries: &[ClusterEntry],
    q_samples: &[TailSample],
    law: &ScalingLaw,
    functionals: &[ClusterFunctional],
) -> Result<Vec<GofReport>> {
    if entries.is_empty() || q_samples.is_empty() {
        return Err(Error::data("need pipeline clusters and typical-cluster draws"));
    }
    if q_samples.iter().any(|q| q.kind != TailKind::Q) {
        return Err(Error::argument("reference samples must be typical-cluster draws"));
    }
    let clusters: Vec<Pattern> = entries
        .iter()
        .map(|e| normalize_cluster(&e.cluster, law))
        .collect::<Result<_>>()?;
    let mut reports = Vec::with_capacity(functionals.len());
    for f in functionals {
        let (refs, pool): (Vec<Pattern>, &[TailSample]) = match f {
            ClusterFunctional::DistanceToReference { references, score_floor } => {
                if *references == 0 || *references >= q_samples.len() {
                    return Err(Error::argument("reference count must leave typical-cluster draws to compare"));
                }
                let refs = q_samples[..*references]
                    .iter()
                    .map(|q| q.config.filter(|_, s| s > *score_floor))
                    .collect();
                (refs, &q_samples[*references..])
            }
            _ => (Vec::new(), q_samples),
        };
        let a: Vec<f64> = clusters.iter().map(|c| f.eval(c, &refs)).collect();
        let b: Vec<f64> = pool.iter().map(|q| f.eval(&q.config, &refs)).collect();
        let mut r = ks_two_sample(&a, &b, format!("typical cluster: {}", f.name()))?;
        let (ma, _) = mean_and_se(&a);
        let (mb, _) = mean_and_se(&b);
        r.details.insert("mean_pipeline".into(), ma);
        r.details.insert("mean_reference".into(), mb);
        reports.push(r);
    }
    Ok(reports)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    /// Mean of `sum_{x in Phi~(0)} w(x)^alpha`.
    pub value: f64,
    pub std_error: f64,
    /// Mean of `sum_{(t, s) in W} s^alpha`.
    pub w_value: f64,
    pub w_std_error: f64,
    pub n_neighborhoods: usize,
    pub n_w: usize,
}

/// `kappa = E sum_{x in Phi~(0)} w(x)^alpha` from origin neighbourhoods
/// (positions relative to the origin), cross-checked by `E sum_W s^alpha`.
pub fn kappa_estimate(
    neighborhoods: &[Pattern],
    w_samples: &[TailSample],
    weight: &WeightFn,
    alpha: f64,
) -> Result<KappaEstimate> {
    if !(alpha > 0.0) {
        return Err(Error::argument("alpha must be positive"));
    }
    if neighborhoods.is_empty() || w_samples.is_empty() {
        return Err(Error::domain("no samples"));
    }
    if w_samples.iter().any(|s| s.kind != TailKind::W) {
        return Err(Error::argument("cross-check needs W samples"));
    }
    let primary: Vec<f64> = neighborhoods
        .iter()
        .map(|nb| nb.iter().map(|(t, _)| weight.eval(t).powf(alpha)).sum())
        .collect();
    let via_w: Vec<f64> = w_samples.iter().map(|s| power_sums(&s.config, alpha).1).collect();
    let (value, std_error) = mean_and_se(&primary);
    let (w_value, w_std_error) = mean_and_se(&via_w);
    Ok(KappaEstimate {
        value,
        std_error,
        w_value,
        w_std_error,
        n_neighborhoods: primary.len(),
        n_w: via_w.len(),
    })
}
