//! Seeded generation of homogeneous Poisson configurations, i.i.d. marks
//! and Palm versions.
//!
//! All randomness flows from an [`RngStream`], a `(seed, stream)` pair that
//! selects one ChaCha8 keystream. ChaCha is counter based, so distinct
//! stream ids give independent sequences and any replicate can be rerun in
//! isolation with identical output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::Pattern;

/// Largest expected point count accepted by [`sample_poisson`].
pub const MAX_EXPECTED_POINTS: f64 = 4.0e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Torus,
    Hard,
}

/// Axis-aligned simulation window `lower + [0, sides]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimWindow {
    lower: Vec<f64>,
    sides: Vec<f64>,
    boundary: Boundary,
}

impl SimWindow {
    pub fn new(lower: Vec<f64>, sides: Vec<f64>, boundary: Boundary) -> Result<SimWindow> {
        if sides.is_empty() || lower.len() != sides.len() {
            return Err(Error::argument("window needs one lower corner and side per axis"));
        }
        if sides.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::argument(format!("window sides must be positive, got {sides:?}")));
        }
        if lower.iter().any(|x| !x.is_finite()) {
            return Err(Error::argument("window corner must be finite"));
        }
        Ok(SimWindow {
            lower,
            sides,
            boundary,
        })
    }

    /// `[0, side]^dim`.
    pub fn cube(dim: usize, side: f64, boundary: Boundary) -> Result<SimWindow> {
        SimWindow::new(vec![0.0; dim], vec![side; dim], boundary)
    }

    /// `[-side/2, side/2]^dim`.
    pub fn centered(dim: usize, side: f64, boundary: Boundary) -> Result<SimWindow> {
        SimWindow::new(vec![-side / 2.0; dim], vec![side; dim], boundary)
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        t.iter()
            .zip(self.lower.iter().zip(&self.sides))
            .all(|(x, (lo, s))| *x >= *lo && *x <= lo + s)
    }

    pub(crate) fn shifted(&self, z: &[f64]) -> SimWindow {
        SimWindow {
            lower: self.lower.iter().zip(z).map(|(a, b)| a - b).collect(),
            sides: self.sides.clone(),
            boundary: self.boundary,
        }
    }

    pub(crate) fn scaled(&self, factor: f64) -> SimWindow {
        SimWindow {
            lower: self.lower.iter().map(|x| x * factor).collect(),
            sides: self.sides.iter().map(|x| x * factor).collect(),
            boundary: self.boundary,
        }
    }

    /// Displacement from `a` to `b` along one axis under the window metric.
    #[inline]
    pub(crate) fn axis_delta(&self, axis: usize, a: f64, b: f64) -> f64 {
        let d = b - a;
        match self.boundary {
            Boundary::Hard => d,
            Boundary::Torus => {
                let l = self.sides[axis];
                d - l * (d / l).round()
            }
        }
    }

    /// Squared distance under the window metric.
    #[inline]
    pub fn distance_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (j, (x, y)) in a.iter().zip(b).enumerate() {
            let d = self.axis_delta(j, *x, *y);
            acc += d * d;
        }
        acc
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.distance_sq(a, b).sqrt()
    }

    /// Maps a position into the window (identity for hard boundaries).
    pub fn wrap(&self, t: &[f64]) -> Vec<f64> {
        match self.boundary {
            Boundary::Hard => t.to_vec(),
            Boundary::Torus => t
                .iter()
                .zip(self.lower.iter().zip(&self.sides))
                .map(|(x, (lo, l))| lo + (x - lo).rem_euclid(*l))
                .collect(),
        }
    }
}

/// Minimal-image displacement `b - a` on a torus window, plain `b - a`
/// for hard boundaries.
pub fn torus_displacement(a: &[f64], b: &[f64], w: &SimWindow) -> Result<Vec<f64>> {
    if a.len() != w.dim() || b.len() != w.dim() {
        return Err(Error::argument("positions do not match the window dimension"));
    }
    Ok((0..w.dim()).map(|j| w.axis_delta(j, a[j], b[j])).collect())
}

/// Law of the i.i.d. marks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MarkLaw {
    /// `P(zeta > u) = (u / scale)^(-alpha)` for `u >= scale`.
    Pareto { alpha: f64, scale: f64 },
    Constant { value: f64 },
    /// Quantiles at equally spaced probability levels `0, 1/m, ..., 1`,
    /// linearly interpolated.
    #[serde(rename = "table")]
    UserTable { quantiles: Vec<f64> },
}

impl MarkLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            MarkLaw::Pareto { alpha, scale } => {
                if !(*alpha > 0.0 && alpha.is_finite() && *scale > 0.0 && scale.is_finite()) {
                    return Err(Error::argument(format!(
                        "Pareto law needs alpha > 0 and scale > 0, got {alpha}, {scale}"
                    )));
                }
            }
            MarkLaw::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(Error::argument(format!("constant mark must be positive, got {value}")));
                }
            }
            MarkLaw::UserTable { quantiles } => {
                if quantiles.len() < 2 {
                    return Err(Error::argument("quantile table needs at least two entries"));
                }
                if quantiles[0] <= 0.0 || quantiles.windows(2).any(|w| !(w[1] >= w[0])) {
                    return Err(Error::argument(
                        "quantile table must be positive and nondecreasing",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MarkLaw::Pareto { alpha, scale } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                scale * u.powf(-1.0 / alpha)
            }
            MarkLaw::Constant { value } => *value,
            MarkLaw::UserTable { quantiles } => {
                let m = (quantiles.len() - 1) as f64;
                let x = rng.random::<f64>() * m;
                let i = (x.floor() as usize).min(quantiles.len() - 2);
                let frac = x - i as f64;
                quantiles[i] + frac * (quantiles[i + 1] - quantiles[i])
            }
        }
    }

    /// Survival function `P(zeta > u)`.
    pub fn survival(&self, u: f64) -> f64 {
        match self {
            MarkLaw::Pareto { alpha, scale } => {
                if u < *scale {
                    1.0
                } else {
                    (u / scale).powf(-alpha)
                }
            }
            MarkLaw::Constant { value } => {
                if u < *value {
                    1.0
                } else {
                    0.0
                }
            }
            MarkLaw::UserTable { quantiles } => {
                let m = (quantiles.len() - 1) as f64;
                if u < quantiles[0] {
                    return 1.0;
                }
                if u >= quantiles[quantiles.len() - 1] {
                    return 0.0;
                }
                let i = quantiles.partition_point(|q| *q <= u) - 1;
                let width = quantiles[i + 1] - quantiles[i];
                let frac = if width > 0.0 { (u - quantiles[i]) / width } else { 0.0 };
                1.0 - (i as f64 + frac) / m
            }
        }
    }
}

/// A reproducible random stream: one ChaCha8 keystream per `(seed, stream)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> RngStream {
        RngStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Homogeneous Poisson positions in `w`; every score is the placeholder 1.
pub fn sample_poisson<R: Rng + ?Sized>(w: &SimWindow, intensity: f64, rng: &mut R) -> Result<Pattern> {
    if !(intensity >= 0.0 && intensity.is_finite()) {
        return Err(Error::config(format!("intensity must be nonnegative, got {intensity}")));
    }
    let mean = intensity * w.volume();
    if !(mean <= MAX_EXPECTED_POINTS) {
        return Err(Error::config(format!(
            "expected point count {mean:e} exceeds {MAX_EXPECTED_POINTS:e}"
        )));
    }
    let n = if mean > 0.0 {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
    } else {
        0
    };
    let d = w.dim();
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        for j in 0..d {
            coords.push(w.lower[j] + w.sides[j] * rng.random::<f64>());
        }
    }
    Ok(Pattern::from_parts_unchecked(d, coords, vec![1.0; n]).with_domain(w.clone()))
}

/// Replaces every score by an independent draw from `law`.
pub fn sample_marks<R: Rng + ?Sized>(p: &Pattern, law: &MarkLaw, rng: &mut R) -> Result<Pattern> {
    law.validate()?;
    let scores = (0..p.len()).map(|_| law.sample(rng)).collect();
    p.with_scores(scores)
}

/// Adds a point at the origin with the given mark.
pub fn palm_augment(p: &Pattern, origin_mark: f64) -> Result<Pattern> {
    if !(origin_mark > 0.0 && origin_mark.is_finite()) {
        return Err(Error::argument(format!("origin mark must be positive, got {origin_mark}")));
    }
    if p.origin_index().is_some() {
        return Err(Error::domain("origin is already occupied"));
    }
    let mut coords = Vec::with_capacity(p.coords().len() + p.dim());
    coords.extend(std::iter::repeat_n(0.0, p.dim()));
    coords.extend_from_slice(p.coords());
    let mut scores = Vec::with_capacity(p.len() + 1);
    scores.push(origin_mark);
    scores.extend_from_slice(p.scores());
    let out = Pattern::from_parts_unchecked(p.dim(), coords, scores);
    Ok(match p.domain() {
        Some(w) => out.with_domain(w.clone()),
        None => out,
    })
}

/// Adds a point at the origin whose mark is drawn from `law`.
pub fn palm_augment_with<R: Rng + ?Sized>(p: &Pattern, law: &MarkLaw, rng: &mut R) -> Result<Pattern> {
    law.validate()?;
    palm_augment(p, law.sample(rng))
}

/// Uniform draw from the open unit ball in `R^d`.
pub fn uniform_in_ball<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut v = uniform_on_sphere(d, rng);
    let u: f64 = 1.0 - rng.random::<f64>();
    let r = u.powf(1.0 / d as f64) * (1.0 - f64::EPSILON);
    v.iter_mut().for_each(|x| *x *= r);
    v
}

/// Uniform draw from the unit sphere `dB_1` in `R^d`.
pub fn uniform_on_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = crate::pattern::norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}
