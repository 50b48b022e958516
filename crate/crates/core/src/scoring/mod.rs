//! Scoring functions `psi` and the induced map `Psi`, which re-scores
//! every point of a pattern from its geometric environment.
//!
//! Two rules are provided: the reciprocal distance to the k-th nearest
//! neighbour, and moving maxima of weighted marks over a neighbourhood.

mod grid;

pub use grid::GridIndex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{norm, Pattern};
use crate::simulate::{Boundary, SimWindow};

/// Points per rayon task when scoring large patterns.
const PAR_THRESHOLD: usize = 4096;

/// Neighbourhood `Phi(t, mu')` of a point; it always contains `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Neighborhood {
    /// `t` together with its `k` nearest neighbours.
    Knn { k: usize },
    /// All points within the closed ball of the given radius around `t`.
    Ball { radius: f64 },
}

impl Neighborhood {
    pub fn validate(&self) -> Result<()> {
        match self {
            Neighborhood::Knn { k } if *k == 0 => Err(Error::argument("k must be at least 1")),
            Neighborhood::Ball { radius } if !(*radius >= 0.0 && radius.is_finite()) => {
                Err(Error::argument(format!("ball radius must be nonnegative, got {radius}")))
            }
            _ => Ok(()),
        }
    }

    /// Minimum number of points a pattern needs for the neighbourhood to
    /// be well defined.
    pub fn min_points(&self) -> usize {
        match self {
            Neighborhood::Knn { k } => k + 1,
            Neighborhood::Ball { .. } => 1,
        }
    }
}

/// Deterministic weight `w: R^d -> [0, inf)` with `w(0) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum WeightFn {
    /// `w(0) = 1`, zero elsewhere.
    Dirac,
    Const1,
    /// `exp(-rate |t|)`.
    Exponential { rate: f64 },
    /// Radial profile, linear between `(radii[i], values[i])`, zero beyond
    /// the last radius. Requires `radii[0] = 0` and `values[0] = 1`.
    #[serde(rename = "grid")]
    UserGrid { radii: Vec<f64>, values: Vec<f64> },
}

impl WeightFn {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightFn::Exponential { rate } if !(*rate >= 0.0 && rate.is_finite()) => {
                Err(Error::argument(format!("exponential rate must be nonnegative, got {rate}")))
            }
            WeightFn::UserGrid { radii, values } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return Err(Error::argument("radial table needs matching, nonempty columns"));
                }
                if radii[0] != 0.0 || values[0] != 1.0 {
                    return Err(Error::argument("radial table must start at (0, 1)"));
                }
                if radii.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::argument("radii must be strictly increasing"));
                }
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(Error::argument("weights must be finite and nonnegative"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Weight of a displacement vector.
    pub fn eval(&self, displacement: &[f64]) -> f64 {
        match self {
            WeightFn::Dirac => {
                if displacement.iter().all(|x| *x == 0.0) {
                    1.0
                } else {
                    0.0
                }
            }
            WeightFn::Const1 => 1.0,
            WeightFn::Exponential { rate } => (-rate * norm(displacement)).exp(),
            WeightFn::UserGrid { radii, values } => radial_table(radii, values, norm(displacement)),
        }
    }

    /// `w* = sup w`.
    pub fn sup(&self) -> f64 {
        match self {
            WeightFn::UserGrid { values, .. } => values.iter().copied().fold(0.0, f64::max),
            _ => 1.0,
        }
    }
}

fn radial_table(radii: &[f64], values: &[f64], r: f64) -> f64 {
    let last = radii.len() - 1;
    if r > radii[last] {
        return 0.0;
    }
    if r == radii[last] {
        return values[last];
    }
    let i = radii.partition_point(|x| *x <= r) - 1;
    let frac = (r - radii[i]) / (radii[i + 1] - radii[i]);
    values[i] + frac * (values[i + 1] - values[i])
}

/// The scoring function `psi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ScoreRule {
    /// `psi(t) = 1 / rho_k(t)`.
    #[serde(rename = "knn")]
    KnnReciprocal { k: usize },
    /// `psi(t) = max_{x in Phi(t)} w(x - t) zeta_x`.
    #[serde(rename = "movmax")]
    MovingMax { neighborhood: Neighborhood, weight: WeightFn },
}

impl ScoreRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            ScoreRule::KnnReciprocal { k } if *k == 0 => Err(Error::argument("k must be at least 1")),
            ScoreRule::KnnReciprocal { .. } => Ok(()),
            ScoreRule::MovingMax { neighborhood, weight } => {
                neighborhood.validate()?;
                weight.validate()
            }
        }
    }

    pub fn min_points(&self) -> usize {
        match self {
            ScoreRule::KnnReciprocal { k } => k + 1,
            ScoreRule::MovingMax { neighborhood, .. } => neighborhood.min_points(),
        }
    }
}

/// Builds the grid index for `positions` (row-major) under the metric of `w`.
pub fn build_grid_index(positions: &[f64], w: &SimWindow, cell: f64) -> Result<GridIndex> {
    GridIndex::build(positions, w, cell)
}

/// Distance from `t` to its k-th nearest neighbour among `others`
/// (row-major), ignoring points located exactly at `t`.
pub fn knn_distance(t: &[f64], others: &[f64], k: usize) -> Result<f64> {
    let d = t.len();
    if d == 0 || others.len() % d != 0 {
        return Err(Error::argument("positions do not match the query dimension"));
    }
    if k == 0 {
        return Err(Error::argument("k must be at least 1"));
    }
    let mut dists: Vec<f64> = others
        .chunks_exact(d)
        .filter(|x| *x != t)
        .map(|x| x.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .collect();
    if dists.len() < k {
        return Err(Error::domain(format!(
            "{} neighbours available, k = {k}",
            dists.len()
        )));
    }
    let (_, kth, _) = dists.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(kth.sqrt())
}

/// Geometric context of one pattern: its metric and a grid index over its
/// positions.
#[derive(Clone, Debug)]
pub struct SpatialContext {
    window: SimWindow,
    grid: GridIndex,
}

impl SpatialContext {
    /// Uses the pattern's window when present and otherwise a hard window
    /// around the bounding box of its positions.
    pub fn new(p: &Pattern) -> Result<SpatialContext> {
        let window = match p.domain() {
            Some(w) => w.clone(),
            None => bounding_window(p)?,
        };
        let n = p.len().max(1) as f64;
        let cell = (window.volume() / n).powf(1.0 / p.dim() as f64);
        let grid = GridIndex::build(p.coords(), &window, cell)?;
        Ok(SpatialContext { window, grid })
    }

    pub fn window(&self) -> &SimWindow {
        &self.window
    }

    pub fn grid(&self) -> &GridIndex {
        &self.grid
    }

    /// Displacement from point `i` to point `j` under the window metric.
    pub fn displacement(&self, i: usize, j: usize) -> Vec<f64> {
        let a = self.grid.position(i);
        let b = self.grid.position(j);
        (0..a.len()).map(|k| self.window.axis_delta(k, a[k], b[k])).collect()
    }

    /// Indices of the neighbourhood of point `i`, `i` first.
    pub fn neighborhood(&self, i: usize, nb: &Neighborhood) -> Result<Vec<usize>> {
        let t = self.grid.position(i);
        match nb {
            Neighborhood::Knn { k } => {
                if self.grid.len() < k + 1 {
                    return Err(Error::domain(format!(
                        "{} points cannot supply {k} neighbours",
                        self.grid.len()
                    )));
                }
                let mut out = Vec::with_capacity(k + 1);
                out.push(i);
                out.extend(self.grid.knn(t, *k, Some(i)).into_iter().map(|(j, _)| j));
                Ok(out)
            }
            Neighborhood::Ball { radius } => {
                let mut out = vec![i];
                out.extend(self.grid.ball(t, *radius).into_iter().filter(|j| *j != i));
                Ok(out)
            }
        }
    }

    /// Distance from point `i` to its k-th nearest other point.
    pub fn knn_distance(&self, i: usize, k: usize) -> Result<f64> {
        let nn = self.grid.knn(self.grid.position(i), k, Some(i));
        if nn.len() < k {
            return Err(Error::domain(format!(
                "{} neighbours available, k = {k}",
                nn.len()
            )));
        }
        Ok(nn[k - 1].1)
    }

    fn score(&self, p: &Pattern, i: usize, rule: &ScoreRule) -> Result<f64> {
        match rule {
            ScoreRule::KnnReciprocal { k } => Ok(1.0 / self.knn_distance(i, *k)?),
            ScoreRule::MovingMax { neighborhood, weight } => {
                let nb = self.neighborhood(i, neighborhood)?;
                Ok(nb
                    .into_iter()
                    .map(|x| weight.eval(&self.displacement(i, x)) * p.score(x))
                    .fold(0.0, f64::max))
            }
        }
    }
}

fn bounding_window(p: &Pattern) -> Result<SimWindow> {
    let d = p.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (t, _) in p.iter() {
        for j in 0..d {
            lo[j] = lo[j].min(t[j]);
            hi[j] = hi[j].max(t[j]);
        }
    }
    if p.is_empty() {
        lo = vec![0.0; d];
        hi = vec![1.0; d];
    }
    let sides = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| {
            let s = b - a;
            if s > 0.0 {
                s * (1.0 + 1e-9)
            } else {
                1.0
            }
        })
        .collect();
    SimWindow::new(lo, sides, Boundary::Hard)
}

/// `Psi`: replaces every score by `psi(t, p)`. Positions are unchanged;
/// points whose new score is zero are dropped. For moving maxima the input
/// scores are the marks.
pub fn apply_scores(p: &Pattern, rule: &ScoreRule) -> Result<Pattern> {
    rule.validate()?;
    if p.len() < rule.min_points() {
        return Err(Error::domain(format!(
            "rule needs at least {} points, pattern has {}",
            rule.min_points(),
            p.len()
        )));
    }
    let ctx = SpatialContext::new(p)?;
    let scores: Result<Vec<f64>> = if p.len() >= PAR_THRESHOLD {
        (0..p.len())
            .into_par_iter()
            .map(|i| ctx.score(p, i, rule))
            .collect()
    } else {
        (0..p.len()).map(|i| ctx.score(p, i, rule)).collect()
    };
    p.with_scores(scores?)
}

/// Score `psi(0, p)` of the point at the origin of a Palm configuration.
pub fn palm_score_at_origin(p_palm: &Pattern, rule: &ScoreRule) -> Result<f64> {
    rule.validate()?;
    let o = p_palm
        .origin_index()
        .ok_or_else(|| Error::domain("Palm configuration has no point at the origin"))?;
    let dist = |x: &[f64]| -> f64 {
        match p_palm.domain() {
            Some(w) => w.distance_sq(&vec![0.0; x.len()], x),
            None => x.iter().map(|v| v * v).sum(),
        }
    };
    let disp = |x: &[f64]| -> Vec<f64> {
        match p_palm.domain() {
            Some(w) => (0..x.len()).map(|j| w.axis_delta(j, 0.0, x[j])).collect(),
            None => x.to_vec(),
        }
    };
    // (squared distance, index) of every other point, sorted with index ties
    let nearest = |k: usize| -> Result<Vec<(f64, usize)>> {
        let mut all: Vec<(f64, usize)> = (0..p_palm.len())
            .filter(|i| *i != o)
            .map(|i| (dist(p_palm.position(i)), i))
            .collect();
        if all.len() < k {
            return Err(Error::domain(format!("{} neighbours available, k = {k}", all.len())));
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, cmp);
            all.truncate(k);
        }
        all.sort_by(cmp);
        Ok(all)
    };
    match rule {
        ScoreRule::KnnReciprocal { k } => {
            let nn = nearest(*k)?;
            Ok(1.0 / nn[k - 1].0.sqrt())
        }
        ScoreRule::MovingMax { neighborhood, weight } => {
            let members: Vec<usize> = match neighborhood {
                Neighborhood::Knn { k } => nearest(*k)?.into_iter().map(|(_, i)| i).collect(),
                Neighborhood::Ball { radius } => (0..p_palm.len())
                    .filter(|i| *i != o && dist(p_palm.position(*i)) <= radius * radius)
                    .collect(),
            };
            Ok(std::iter::once(o)
                .chain(members)
                .map(|i| weight.eval(&disp(p_palm.position(i))) * p_palm.score(i))
                .fold(0.0, f64::max))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::MarkedPoint;

    fn pat(dim: usize, pts: &[(&[f64], f64)]) -> Pattern {
        Pattern::new(
            dim,
            pts.iter().map(|(t, s)| MarkedPoint::new(t.to_vec(), *s)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn knn_distance_examples() {
        assert_eq!(knn_distance(&[0.0], &[0.5], 1).unwrap(), 0.5);
        let d = knn_distance(&[0.0, 0.0], &[0.3, 0.0, 0.0, 0.4], 2).unwrap();
        assert!((d - 0.4).abs() < 1e-15);
        assert!(matches!(knn_distance(&[0.0], &[0.0, 1.0], 2), Err(Error::Domain(_))));
    }

    #[test]
    fn knn_reciprocal_pair() {
        let p = pat(1, &[(&[0.0], 1.0), (&[0.5], 1.0)]);
        let s = apply_scores(&p, &ScoreRule::KnnReciprocal { k: 1 }).unwrap();
        assert_eq!(s.scores(), &[2.0, 2.0]);
        assert!(matches!(
            apply_scores(&p, &ScoreRule::KnnReciprocal { k: 2 }),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn moving_max_dirac_returns_marks() {
        let p = pat(2, &[(&[0.0, 0.0], 1.5), (&[0.3, 0.1], 7.0), (&[2.0, 1.0], 0.2)]);
        let rule = ScoreRule::MovingMax {
            neighborhood: Neighborhood::Knn { k: 1 },
            weight: WeightFn::Dirac,
        };
        assert_eq!(apply_scores(&p, &rule).unwrap().scores(), p.scores());
    }

    #[test]
    fn moving_max_const1_ball() {
        let p = pat(1, &[(&[0.0], 1.0), (&[0.5], 5.0)]);
        let rule = ScoreRule::MovingMax {
            neighborhood: Neighborhood::Ball { radius: 1.0 },
            weight: WeightFn::Const1,
        };
        assert_eq!(apply_scores(&p, &rule).unwrap().scores(), &[5.0, 5.0]);
    }

    #[test]
    fn moving_max_drops_zero_scores() {
        // a grid weight vanishing beyond 0.1 leaves isolated points with score w(0) zeta
        let rule = ScoreRule::MovingMax {
            neighborhood: Neighborhood::Knn { k: 1 },
            weight: WeightFn::UserGrid { radii: vec![0.0, 0.1], values: vec![1.0, 0.0] },
        };
        let p = pat(1, &[(&[0.0], 2.0), (&[1.0], 3.0)]);
        let s = apply_scores(&p, &rule).unwrap();
        assert_eq!(s.scores(), &[2.0, 3.0]);
        assert_eq!(radial_table(&[0.0, 1.0, 2.0], &[1.0, 0.5, 0.25], 1.5), 0.375);
        assert_eq!(radial_table(&[0.0, 1.0], &[1.0, 0.5], 1.5), 0.0);
    }

    #[test]
    fn palm_score_examples() {
        let p = pat(2, &[(&[0.0, 0.0], 1.0), (&[1.0, 0.0], 1.0)]);
        assert_eq!(palm_score_at_origin(&p, &ScoreRule::KnnReciprocal { k: 1 }).unwrap(), 1.0);
        let q = pat(2, &[(&[0.0, 0.0], 4.5), (&[0.2, 0.0], 9.0)]);
        let dirac = ScoreRule::MovingMax {
            neighborhood: Neighborhood::Knn { k: 1 },
            weight: WeightFn::Dirac,
        };
        assert_eq!(palm_score_at_origin(&q, &dirac).unwrap(), 4.5);
        let const1 = ScoreRule::MovingMax {
            neighborhood: Neighborhood::Knn { k: 1 },
            weight: WeightFn::Const1,
        };
        assert_eq!(palm_score_at_origin(&q, &const1).unwrap(), 9.0);
        let no_origin = pat(1, &[(&[1.0], 1.0), (&[2.0], 1.0)]);
        assert!(matches!(
            palm_score_at_origin(&no_origin, &ScoreRule::KnnReciprocal { k: 1 }),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rule_config_format() {
        let r: ScoreRule = serde_json::from_str(r#"{"type": "knn", "k": 2}"#).unwrap();
        assert_eq!(r, ScoreRule::KnnReciprocal { k: 2 });
        let m: ScoreRule = serde_json::from_str(
            r#"{"type": "movmax", "neighborhood": {"type": "knn", "k": 1}, "weight": {"type": "const1"}}"#,
        )
        .unwrap();
        assert_eq!(
            m,
            ScoreRule::MovingMax {
                neighborhood: Neighborhood::Knn { k: 1 },
                weight: WeightFn::Const1
            }
        );
    }
}
