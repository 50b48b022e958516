//! Seeded replicate campaigns behind each experiment kind.
//!
//! Replicate `i` of campaign section `tag` draws from the random stream
//! `(tag << 32) | i` of the configured seed, so results do not depend on
//! thread count or scheduling.

use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use excl_core::cluster::{
    extract_n_tau, metric_m, metric_m0, metric_m_tilde, normalize_cluster, BlockGrid, ClusterEntry,
    DEFAULT_SHIFT_TOL,
};
use excl_core::stats::{
    cluster_vs_q_test, extremal_index_anchor, extremal_index_ratio, fit_frechet_max, fit_pareto_eta,
    fit_weibull_min_knn, mean_and_se, poisson_block_count_test, uniform_positions_test, Anchor,
    ClusterFunctional, GofReport, SIGNIFICANCE,
};
use excl_core::tail::empirical_tail_configs;
use excl_core::{MarkedPoint, Model, Pattern, RngStream};

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};

/// Exact tail draws used to estimate the extremal index when the model has
/// no closed form.
const THETA_PILOT_DRAWS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment_id: String,
    pub config_hash: String,
    pub seed: u64,
    /// Setting the metric belongs to, such as `tau=40` or `d=2`.
    pub scope: String,
    pub metric: String,
    pub value: f64,
    pub std_error: Option<f64>,
    /// Target value the check compares against.
    pub reference: Option<f64>,
    pub p_value: Option<f64>,
    /// `None` for diagnostics that carry no pass/fail decision.
    pub pass: Option<bool>,
    /// Seconds spent on the record's section. Not written to
    /// `records.jsonl`, which stays byte-identical across runs.
    #[serde(skip)]
    pub wall_time: f64,
}

/// Columns of one `*.dat` plot file.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotData {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub records: Vec<ResultRecord>,
    pub plots: Vec<PlotData>,
    /// Intermediate artifacts (relative path, contents), filled with `dump`.
    pub dumps: Vec<(PathBuf, String)>,
}

impl RunOutput {
    pub fn all_passed(&self) -> bool {
        self.records.iter().all(|r| r.pass != Some(false))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error at {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] excl_core::Error),
    #[error("thread pool: {0}")]
    Threads(String),
}

struct Campaign<'a> {
    cfg: &'a ExperimentConfig,
    id: String,
    hash: String,
    out: RunOutput,
    section_start: Instant,
    section_first: usize,
}

impl<'a> Campaign<'a> {
    fn new(cfg: &'a ExperimentConfig, kind: ExperimentKind) -> Campaign<'a> {
        let hash = cfg.config_hash();
        Campaign {
            cfg,
            id: format!("{kind}-{}", &hash[..12]),
            hash,
            out: RunOutput::default(),
            section_start: Instant::now(),
            section_first: 0,
        }
    }

    fn begin_section(&mut self) {
        self.section_start = Instant::now();
        self.section_first = self.out.records.len();
    }

    fn end_section(&mut self) {
        let secs = self.section_start.elapsed().as_secs_f64();
        for r in &mut self.out.records[self.section_first..] {
            r.wall_time = secs;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        scope: &str,
        metric: &str,
        value: f64,
        std_error: Option<f64>,
        reference: Option<f64>,
        p_value: Option<f64>,
        pass: Option<bool>,
    ) {
        self.out.records.push(ResultRecord {
            experiment_id: self.id.clone(),
            config_hash: self.hash.clone(),
            seed: self.cfg.seed,
            scope: scope.to_string(),
            metric: metric.to_string(),
            value,
            std_error: std_error.filter(|v| v.is_finite()),
            reference,
            p_value,
            pass,
            wall_time: 0.0,
        });
    }

    fn diagnostic(&mut self, scope: &str, metric: &str, value: f64) {
        self.push(scope, metric, value, None, None, None, None);
    }

    fn gof(&mut self, scope: &str, metric: &str, r: &GofReport) {
        self.push(scope, metric, r.statistic, None, None, r.p_value, r.pass);
    }

    fn dump(&mut self, path: String, contents: String) {
        if self.cfg.dump {
            self.out.dumps.push((PathBuf::from(path), contents));
        }
    }
}

fn draws<T: Send>(seed: u64, tag: u64, n: usize, f: impl Fn(&mut ChaCha8Rng) -> T + Sync) -> Vec<T> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| f(&mut RngStream::new(seed, (tag << 32) | i).rng()))
        .collect()
}

fn section_tag(section: u64, index: usize) -> u64 {
    (section << 16) | index as u64
}

fn split_failures<T>(results: Vec<excl_core::Result<T>>) -> (Vec<T>, usize) {
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = 0;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(_) => failed += 1,
        }
    }
    (ok, failed)
}

fn tau_scope(tau: f64) -> String {
    format!("tau={tau}")
}

fn within_se(value: f64, se: f64, reference: f64) -> bool {
    (value - reference).abs() <= 3.0 * se + 1e-12
}

/// Probability-probability pairs `(F(x_i), i / n)` over the sorted sample.
fn pp_rows(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter().enumerate().map(|(i, v)| vec![cdf(*v), (i + 1) as f64 / n]).collect()
}

/// Pairs of empirical distribution functions `(F_reference(v), F_sample(v))`
/// over the distinct values of both samples.
fn two_sample_pp_rows(reference: &[f64], sample: &[f64]) -> Vec<Vec<f64>> {
    let mut r = reference.to_vec();
    let mut s = sample.to_vec();
    r.sort_by(f64::total_cmp);
    s.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = r.iter().chain(&s).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let ecdf = |sorted: &[f64], v: f64| sorted.partition_point(|x| *x <= v) as f64 / sorted.len() as f64;
    grid.iter().map(|v| vec![ecdf(&r, *v), ecdf(&s, *v)]).collect()
}

/// Runs the campaign selected by `cfg.experiment`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    let kind = cfg
        .experiment
        .ok_or_else(|| ConfigError { path: "experiment".into(), message: "experiment kind not set".into() })?;
    let run = || {
        let mut c = Campaign::new(cfg, kind);
        match kind {
            ExperimentKind::TailExtract => tail_extract(&mut c)?,
            ExperimentKind::Theta => theta(&mut c)?,
            ExperimentKind::LimitLaw => limit_law(&mut c)?,
            ExperimentKind::ClusterCompare => cluster_compare(&mut c)?,
            ExperimentKind::MetricBench => metric_bench(&mut c)?,
        }
        Ok(c.out)
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Threads(e.to_string()))?
            .install(run),
        None => run(),
    }
}

fn theta(c: &mut Campaign) -> Result<(), RunError> {
    let cfg = c.cfg;
    let n = cfg.samples.unwrap_or(100_000);
    let dims = cfg.dims.clone().unwrap_or_else(|| vec![cfg.model.dim()]);
    let mut sweep = Vec::new();
    for (di, &d) in dims.iter().enumerate() {
        c.begin_section();
        let model = cfg.model.with_dim(d);
        model.validate().map_err(|e| ConfigError { path: format!("dims[{di}]"), message: e.to_string() })?;
        let scope = format!("d={d}");
        let (samples, failed) = split_failures(draws(cfg.seed, section_tag(1, di), n, |rng| model.sample_theta(rng)));
        c.diagnostic(&scope, "failed_draws", failed as f64);
        if samples.is_empty() {
            c.push(&scope, "theta_first_max", 0.0, None, None, None, Some(false));
            c.end_section();
            continue;
        }
        let law = model.law();
        let reference = model.theta_closed_form();
        let fm = extremal_index_anchor(&samples, Anchor::FirstMax)?;
        let check = |v: f64, se: f64| reference.map(|r| within_se(v, se, r));
        c.push(&scope, "theta_first_max", fm.value, Some(fm.std_error), reference, None, check(fm.value, fm.std_error));
        let (name, second) = match model {
            Model::Knn { .. } => {
                ("theta_first_exceedance", extremal_index_anchor(&samples, Anchor::FirstExceedance { alpha: law.alpha })?)
            }
            Model::MovingMax { .. } => ("theta_ratio", extremal_index_ratio(&samples, law.alpha)?),
        };
        c.push(&scope, name, second.value, Some(second.std_error), reference, None, check(second.value, second.std_error));
        sweep.push(vec![d as f64, fm.value, fm.std_error, reference.unwrap_or(f64::NAN)]);
        for (i, s) in samples.iter().enumerate() {
            c.dump(format!("theta/d{d}/{i:06}.csv"), s.to_csv());
        }
        c.end_section();
    }
    c.out.plots.push(PlotData {
        name: "theta_sweep".into(),
        columns: vec!["d".into(), "theta_hat".into(), "std_error".into(), "closed_form".into()],
        rows: sweep,
    });
    Ok(())
}

fn tail_extract(c: &mut Campaign) -> Result<(), RunError> {
    let cfg = c.cfg;
    let model = &cfg.model;
    let law = model.law();
    for (ti, &tau) in cfg.tau.iter().enumerate() {
        c.begin_section();
        let scope = tau_scope(tau);
        let u = model.a_tau(tau)?;
        let (windows, failed) = split_failures(draws(cfg.seed, section_tag(2, ti), cfg.replicates, |rng| {
            let x = model.simulate_window(tau, rng)?;
            empirical_tail_configs(&x, u, &law, None)
        }));
        c.diagnostic(&scope, "failed_replicates", failed as f64);
        c.diagnostic(&scope, "threshold", u);
        let counts: Vec<f64> = windows.iter().map(|w| w.len() as f64).collect();
        if !counts.is_empty() {
            let (mean, se) = mean_and_se(&counts);
            // tau^d P(xi > a_tau) tends to 1
            c.push(&scope, "exceedances_per_window", mean, Some(se), Some(1.0), None, None);
        }
        let etas: Vec<f64> =
            windows.iter().flatten().filter_map(|p| p.origin_index().map(|i| p.score(i))).collect();
        // mutual nearest neighbours share one score; keep one copy of each
        let mut distinct = etas.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        c.diagnostic(&scope, "exceedances", etas.len() as f64);
        c.diagnostic(&scope, "distinct_eta", distinct.len() as f64);
        if !distinct.is_empty() {
            let report = fit_pareto_eta(&distinct, law.alpha)?;
            c.gof(&scope, "eta_pareto_ks", &report);
            let alpha = law.alpha;
            c.out.plots.push(PlotData {
                name: format!("eta_pp_tau{tau}"),
                columns: vec!["pareto_cdf".into(), "empirical_cdf".into()],
                rows: pp_rows(&distinct, |y| 1.0 - y.powf(-alpha)),
            });
        }
        for (r, w) in windows.iter().enumerate() {
            for (j, p) in w.iter().enumerate() {
                c.dump(format!("tail/tau{tau}/rep{r:05}_{j:03}.csv"), p.to_csv());
            }
        }
        c.end_section();
    }
    Ok(())
}

fn block_grid(cfg: &ExperimentConfig, tau: f64, a_tau: f64) -> Result<BlockGrid, RunError> {
    let law = cfg.model.law();
    Ok(match cfg.b_tau {
        Some(b) => BlockGrid::new(tau, b, cfg.model.dim())?,
        None => BlockGrid::with_default_side(tau, a_tau, &law, cfg.model.dim())?,
    })
}

/// Closed-form extremal index, or an anchor estimate from exact draws.
fn theta_for_limits(c: &mut Campaign) -> Result<f64, RunError> {
    let model = &c.cfg.model;
    if let Some(t) = model.theta_closed_form() {
        c.push("all", "theta_used", t, None, None, None, None);
        return Ok(t);
    }
    let (samples, _) =
        split_failures(draws(c.cfg.seed, section_tag(9, 0), THETA_PILOT_DRAWS, |rng| model.sample_theta(rng)));
    let est = extremal_index_anchor(&samples, Anchor::FirstMax)?;
    c.push("all", "theta_used", est.value, Some(est.std_error), None, None, None);
    Ok(est.value)
}

fn limit_law(c: &mut Campaign) -> Result<(), RunError> {
    let cfg = c.cfg;
    let model = &cfg.model;
    let law = model.law();
    c.begin_section();
    let theta = theta_for_limits(c)?;
    c.end_section();
    for (ti, &tau) in cfg.tau.iter().enumerate() {
        c.begin_section();
        let scope = tau_scope(tau);
        let a = model.a_tau(tau)?;
        let grid = block_grid(cfg, tau, a)?;
        c.diagnostic(&scope, "a_tau", a);
        c.diagnostic(&scope, "b_tau", grid.b_tau);
        let (runs, failed) = split_failures(draws(cfg.seed, section_tag(3, ti), cfg.replicates, |rng| {
            let x = model.simulate_window(tau, rng)?;
            let entries = extract_n_tau(&x, &grid, a, &law, cfg.epsilon)?;
            Ok((x.max_score(), entries))
        }));
        c.diagnostic(&scope, "failed_replicates", failed as f64);
        let maxima: Vec<f64> = runs.iter().map(|r| r.0).collect();
        if !maxima.is_empty() {
            let frechet = fit_frechet_max(&maxima, a, theta, law.alpha)?;
            c.gof(&scope, "max_frechet_ks", &frechet);
            let alpha = law.alpha;
            c.out.plots.push(PlotData {
                name: format!("frechet_pp_tau{tau}"),
                columns: vec!["frechet_cdf".into(), "empirical_cdf".into()],
                rows: pp_rows(&maxima.iter().map(|m| m / a).collect::<Vec<_>>(), |y| {
                    if y <= 0.0 {
                        0.0
                    } else {
                        (-theta * y.powf(-alpha)).exp()
                    }
                }),
            });
        }
        if let Model::Knn { k, d } = *model {
            let minima: Vec<f64> = maxima.iter().filter(|m| **m > 0.0).map(|m| 1.0 / m).collect();
            if !minima.is_empty() {
                let weibull = fit_weibull_min_knn(&minima, a, theta, d, k)?;
                c.gof(&scope, "min_distance_weibull_ks", &weibull);
                let shape = (d * k) as f64;
                c.out.plots.push(PlotData {
                    name: format!("weibull_pp_tau{tau}"),
                    columns: vec!["weibull_cdf".into(), "empirical_cdf".into()],
                    rows: pp_rows(&minima.iter().map(|m| m * a).collect::<Vec<_>>(), |v| {
                        1.0 - (-theta * v.max(0.0).powf(shape)).exp()
                    }),
                });
            }
        }
        let counts: Vec<u64> = runs.iter().map(|r| r.1.len() as u64).collect();
        let expected = theta * cfg.epsilon.powf(-law.alpha);
        if counts.len() >= 2 {
            let as_f64: Vec<f64> = counts.iter().map(|v| *v as f64).collect();
            let (mean, se) = mean_and_se(&as_f64);
            let close = (mean - expected).abs() <= 0.1 * expected;
            c.push(&scope, "cluster_count_mean", mean, Some(se), Some(expected), None, Some(close));
            match poisson_block_count_test(&counts, expected) {
                Ok(report) => {
                    let d = &report.details;
                    let covers = d.get("dispersion_covers_one").is_some_and(|v| *v == 1.0);
                    c.push(&scope, "cluster_count_dispersion", d["dispersion"], None, Some(1.0), None, Some(covers));
                    let chi_pass = report.p_value.map(|p| p > SIGNIFICANCE);
                    c.push(&scope, "cluster_count_poisson_chi2", report.statistic, None, None, report.p_value, chi_pass);
                }
                Err(e) => c.diagnostic(&scope, &format!("cluster_count_test_skipped: {e}"), 0.0),
            }
        }
        let positions: Vec<Vec<f64>> = runs.iter().flat_map(|r| r.1.iter().map(|e| e.grid_position.clone())).collect();
        if let Ok(report) = uniform_positions_test(&positions) {
            c.gof(&scope, "grid_positions_uniform_chi2", &report);
        }
        for (r, run) in runs.iter().enumerate() {
            let lines: String = run.1.iter().map(|e| e.to_json_line(a, cfg.epsilon) + "\n").collect();
            c.dump(format!("n_tau/tau{tau}/rep{r:05}.jsonl"), lines);
        }
        c.end_section();
    }
    Ok(())
}

fn default_functionals() -> Vec<ClusterFunctional> {
    vec![ClusterFunctional::CountAbove { level: 0.5 }, ClusterFunctional::Diameter { level: 0.5 }]
}

fn cluster_compare(c: &mut Campaign) -> Result<(), RunError> {
    let cfg = c.cfg;
    let model = &cfg.model;
    let law = model.law();
    let functionals = cfg.functionals.clone().unwrap_or_else(default_functionals);
    c.begin_section();
    let (q, failed) =
        split_failures(draws(cfg.seed, section_tag(4, 0), cfg.samples.unwrap_or(5000), |rng| model.sample_q(rng)));
    c.diagnostic("all", "failed_q_draws", failed as f64);
    c.diagnostic("all", "q_draws", q.len() as f64);
    for (i, s) in q.iter().enumerate() {
        c.dump(format!("q/{i:06}.csv"), s.to_csv());
    }
    c.end_section();
    for (ti, &tau) in cfg.tau.iter().enumerate() {
        c.begin_section();
        let scope = tau_scope(tau);
        let a = model.a_tau(tau)?;
        let grid = block_grid(cfg, tau, a)?;
        let (runs, failed) = split_failures(draws(cfg.seed, section_tag(5, ti), cfg.replicates, |rng| {
            let x = model.simulate_window(tau, rng)?;
            extract_n_tau(&x, &grid, a, &law, cfg.epsilon)
        }));
        c.diagnostic(&scope, "failed_replicates", failed as f64);
        let entries: Vec<ClusterEntry> = runs.into_iter().flatten().collect();
        c.diagnostic(&scope, "clusters", entries.len() as f64);
        if entries.is_empty() || q.is_empty() {
            c.end_section();
            continue;
        }
        for (f, report) in functionals.iter().zip(cluster_vs_q_test(&entries, &q, &law, &functionals)?) {
            let name = f.name();
            c.gof(&scope, &format!("{name}_ks"), &report);
            let (mp, mr) = (report.details["mean_pipeline"], report.details["mean_reference"]);
            c.push(&scope, &format!("{name}_mean"), mp, None, Some(mr), None, None);
            if !matches!(f, ClusterFunctional::DistanceToReference { .. }) {
                let pipeline: Vec<f64> = entries
                    .iter()
                    .map(|e| normalize_cluster(&e.cluster, &law).map(|p| f.eval(&p, &[])))
                    .collect::<excl_core::Result<_>>()?;
                let reference: Vec<f64> = q.iter().map(|s| f.eval(&s.config, &[])).collect();
                c.out.plots.push(PlotData {
                    name: format!("{name}_pp_tau{tau}"),
                    columns: vec!["q_cdf".into(), "pipeline_cdf".into()],
                    rows: two_sample_pp_rows(&reference, &pipeline),
                });
            }
        }
        for (i, e) in entries.iter().enumerate() {
            c.dump(format!("clusters/tau{tau}/{i:06}.json"), e.to_json_line(a, cfg.epsilon));
        }
        c.end_section();
    }
    Ok(())
}

/// Pattern on the dyadic grid of `[0, 4)^d` with dyadic scores in `(0, 2]`,
/// so shifts by dyadic vectors are exact in floating point.
fn dyadic_pattern(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Pattern {
    let pts = (0..n)
        .map(|_| {
            let t = (0..d).map(|_| rng.random_range(0..4096) as f64 / 1024.0).collect();
            MarkedPoint::new(t, rng.random_range(1..=2048) as f64 / 1024.0)
        })
        .collect();
    Pattern::new(d, pts).expect("finite points")
}

struct MetricCase {
    m0: f64,
    m: f64,
    m_tilde: f64,
    shift_zero: bool,
    symmetric: bool,
    triangle: bool,
    ordered: bool,
}

fn metric_bench(c: &mut Campaign) -> Result<(), RunError> {
    let cfg = c.cfg;
    let d = cfg.model.dim();
    let max_points = cfg.samples.unwrap_or(5);
    c.begin_section();
    let cases: Vec<MetricCase> = draws(cfg.seed, section_tag(6, 0), cfg.replicates, |rng| {
        let n = rng.random_range(1..=max_points);
        let a = dyadic_pattern(rng, n, d);
        let nb = if rng.random::<f64>() < 0.8 { n } else { rng.random_range(1..=max_points) };
        let b = dyadic_pattern(rng, nb, d);
        let cc = dyadic_pattern(rng, n, d);
        let z: Vec<f64> = (0..d).map(|_| rng.random_range(-4096..4096) as f64 / 1024.0).collect();
        let shifted = a.shift(&z).expect("matching dimension");
        let (m0, m) = (metric_m0(&a, &b), metric_m(&a, &b));
        let m_tilde = metric_m_tilde(&a, &b, DEFAULT_SHIFT_TOL);
        MetricCase {
            m0,
            m,
            m_tilde,
            shift_zero: metric_m_tilde(&a, &shifted, DEFAULT_SHIFT_TOL) == 0.0,
            symmetric: m == metric_m(&b, &a) && m0 == metric_m0(&b, &a),
            triangle: metric_m0(&a, &cc) <= m0 + metric_m0(&b, &cc),
            ordered: (0.0..=1.0).contains(&m0) && (0.0..=1.0).contains(&m) && m_tilde <= m,
        }
    });
    let count = |f: fn(&MetricCase) -> bool| cases.iter().filter(|x| !f(x)).count() as f64;
    for (name, violations) in [
        ("shift_quotient_nonzero", count(|x| x.shift_zero)),
        ("asymmetric_pairs", count(|x| x.symmetric)),
        ("triangle_violations", count(|x| x.triangle)),
        ("range_violations", count(|x| x.ordered)),
    ] {
        c.push("all", name, violations, None, Some(0.0), None, Some(violations == 0.0));
    }
    let ms: Vec<f64> = cases.iter().map(|x| x.m).collect();
    let (mean, se) = mean_and_se(&ms);
    c.push("all", "mean_m", mean, Some(se), None, None, None);
    c.out.plots.push(PlotData {
        name: "metric_pairs".into(),
        columns: vec!["m0".into(), "m".into(), "m_tilde".into()],
        rows: cases.iter().map(|x| vec![x.m0, x.m, x.m_tilde]).collect(),
    });
    c.end_section();
    Ok(())
}
