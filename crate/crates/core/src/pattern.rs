//! Finite simple counting measures on `R^d x (0, inf)`.
//!
//! A [`Pattern`] stores positions row-major in a flat buffer alongside one
//! strictly positive score per point. Patterns are immutable: every
//! operation returns a new pattern. Zero scores are dropped on construction,
//! so a pattern never carries a point with a null mark.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::SimWindow;

/// One point `(t, s)` with position `t` and score `s > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub position: Vec<f64>,
    pub score: f64,
}

impl MarkedPoint {
    pub fn new(position: Vec<f64>, score: f64) -> Self {
        MarkedPoint { position, score }
    }
}

/// The space/score scaling `T_{v,u}(t, s) = (t / v, s / u)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingMap {
    space: f64,
    score: f64,
}

impl ScalingMap {
    pub fn new(space_factor: f64, score_factor: f64) -> Result<Self> {
        if !(space_factor > 0.0 && space_factor.is_finite()) {
            return Err(Error::argument(format!(
                "space factor must be positive and finite, got {space_factor}"
            )));
        }
        if !(score_factor > 0.0 && score_factor.is_finite()) {
            return Err(Error::argument(format!(
                "score factor must be positive and finite, got {score_factor}"
            )));
        }
        Ok(ScalingMap {
            space: space_factor,
            score: score_factor,
        })
    }

    pub fn space_factor(&self) -> f64 {
        self.space
    }

    pub fn score_factor(&self) -> f64 {
        self.score
    }

    pub fn inverse(&self) -> ScalingMap {
        ScalingMap {
            space: 1.0 / self.space,
            score: 1.0 / self.score,
        }
    }
}

/// Spatial region used by [`Pattern::restrict`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region {
    All,
    /// Open Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Closed axis-aligned box.
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl Region {
    pub fn ball_at_origin(dim: usize, radius: f64) -> Region {
        Region::Ball {
            center: vec![0.0; dim],
            radius,
        }
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        match self {
            Region::All => true,
            Region::Ball { center, radius } => {
                let d2: f64 = t
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                d2 < radius * radius
            }
            Region::Box { lower, upper } => t
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi),
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        let ok = match self {
            Region::All => true,
            Region::Ball { center, radius } => center.len() == dim && *radius >= 0.0,
            Region::Box { lower, upper } => lower.len() == dim && upper.len() == dim,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::argument("region does not match the pattern dimension"))
        }
    }
}

/// Lexicographic order on `R^d`, first coordinate most significant.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(ord) => return ord,
        }
    }
    Ordering::Equal
}

pub fn is_origin(t: &[f64]) -> bool {
    t.iter().all(|x| *x == 0.0)
}

pub fn norm(t: &[f64]) -> f64 {
    t.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A finite simple marked point pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct Pattern {
    dim: usize,
    coords: Vec<f64>,
    scores: Vec<f64>,
    domain: Option<SimWindow>,
}

impl Pattern {
    pub fn empty(dim: usize) -> Pattern {
        Pattern {
            dim,
            coords: Vec::new(),
            scores: Vec::new(),
            domain: None,
        }
    }

    pub fn new(dim: usize, points: Vec<MarkedPoint>) -> Result<Pattern> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        let mut scores = Vec::with_capacity(points.len());
        for p in points {
            if p.position.len() != dim {
                return Err(Error::argument(format!(
                    "point of dimension {} in a pattern of dimension {dim}",
                    p.position.len()
                )));
            }
            coords.extend_from_slice(&p.position);
            scores.push(p.score);
        }
        Pattern::from_flat(dim, coords, scores)
    }

    /// Builds a pattern from a row-major coordinate buffer and scores.
    ///
    /// Zero scores are dropped. Negative or non-finite scores, non-finite
    /// coordinates and repeated positions are rejected.
    pub fn from_flat(dim: usize, coords: Vec<f64>, scores: Vec<f64>) -> Result<Pattern> {
        if dim == 0 {
            return Err(Error::argument("dimension must be positive"));
        }
        if coords.len() != dim * scores.len() {
            return Err(Error::argument(format!(
                "{} coordinates for {} points in dimension {dim}",
                coords.len(),
                scores.len()
            )));
        }
        if let Some(x) = coords.iter().find(|x| !x.is_finite()) {
            return Err(Error::argument(format!("non-finite coordinate {x}")));
        }
        if let Some(s) = scores.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::argument(format!(
                "scores must be finite and nonnegative, got {s}"
            )));
        }
        let pattern = Pattern::from_parts_unchecked(dim, coords, scores).drop_zero_scores();
        pattern.check_simple()?;
        Ok(pattern)
    }

    /// Assembles a pattern without validation. Callers guarantee positive
    /// finite scores and distinct positions.
    pub(crate) fn from_parts_unchecked(dim: usize, coords: Vec<f64>, scores: Vec<f64>) -> Pattern {
        debug_assert_eq!(coords.len(), dim * scores.len());
        Pattern {
            dim,
            coords,
            scores,
            domain: None,
        }
    }

    fn drop_zero_scores(self) -> Pattern {
        if self.scores.iter().all(|s| *s > 0.0) {
            return self;
        }
        let dim = self.dim;
        let mut coords = Vec::with_capacity(self.coords.len());
        let mut scores = Vec::with_capacity(self.scores.len());
        for (i, s) in self.scores.iter().enumerate() {
            if *s > 0.0 {
                coords.extend_from_slice(&self.coords[i * dim..(i + 1) * dim]);
                scores.push(*s);
            }
        }
        Pattern {
            dim,
            coords,
            scores,
            domain: self.domain,
        }
    }

    fn check_simple(&self) -> Result<()> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| lex_cmp(self.position(a), self.position(b)));
        for w in order.windows(2) {
            if self.position(w[0]) == self.position(w[1]) {
                return Err(Error::argument(format!(
                    "duplicate position {:?}",
                    self.position(w[0])
                )));
            }
        }
        Ok(())
    }

    /// Attaches a simulation window (used for torus distances).
    pub fn with_domain(mut self, domain: SimWindow) -> Pattern {
        self.domain = Some(domain);
        self
    }

    pub fn without_domain(mut self) -> Pattern {
        self.domain = None;
        self
    }

    pub fn domain(&self) -> Option<&SimWindow> {
        self.domain.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn score(&self, i: usize) -> f64 {
        self.scores[i]
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Row-major coordinates, `dim` values per point.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords
            .chunks_exact(self.dim)
            .zip(self.scores.iter().copied())
    }

    pub fn points(&self) -> Vec<MarkedPoint> {
        self.iter()
            .map(|(t, s)| MarkedPoint::new(t.to_vec(), s))
            .collect()
    }

    /// Index of the point located exactly at the origin, if any.
    pub fn origin_index(&self) -> Option<usize> {
        self.coords.chunks_exact(self.dim).position(is_origin)
    }

    /// Returns the same positions with new scores; zero scores are dropped.
    pub fn with_scores(&self, scores: Vec<f64>) -> Result<Pattern> {
        if scores.len() != self.len() {
            return Err(Error::argument(format!(
                "{} scores for {} points",
                scores.len(),
                self.len()
            )));
        }
        if let Some(s) = scores.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::argument(format!(
                "scores must be finite and nonnegative, got {s}"
            )));
        }
        Ok(Pattern {
            dim: self.dim,
            coords: self.coords.clone(),
            scores,
            domain: self.domain.clone(),
        }
        .drop_zero_scores())
    }

    /// `phi_z`: moves every point `(t, s)` to `(t - z, s)`.
    pub fn shift(&self, z: &[f64]) -> Result<Pattern> {
        if z.len() != self.dim {
            return Err(Error::argument(format!(
                "shift of dimension {} applied to a pattern of dimension {}",
                z.len(),
                self.dim
            )));
        }
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|t| t.iter().zip(z).map(|(a, b)| a - b))
            .collect();
        Ok(Pattern {
            dim: self.dim,
            coords,
            scores: self.scores.clone(),
            domain: self.domain.as_ref().map(|w| w.shifted(z)),
        })
    }

    /// `T_{v,u}`: maps `(t, s)` to `(t / v, s / u)`.
    pub fn scale(&self, m: ScalingMap) -> Pattern {
        Pattern {
            dim: self.dim,
            coords: self.coords.iter().map(|x| x / m.space).collect(),
            scores: self.scores.iter().map(|s| s / m.score).collect(),
            domain: self.domain.as_ref().map(|w| w.scaled(1.0 / m.space)),
        }
    }

    /// Keeps the points with position in `region` and score strictly above
    /// `score_floor`.
    pub fn restrict(&self, region: &Region, score_floor: f64) -> Result<Pattern> {
        region.check_dim(self.dim)?;
        Ok(self.filter(|t, s| s > score_floor && region.contains(t)))
    }

    pub(crate) fn filter(&self, mut keep: impl FnMut(&[f64], f64) -> bool) -> Pattern {
        let mut coords = Vec::new();
        let mut scores = Vec::new();
        for (t, s) in self.iter() {
            if keep(t, s) {
                coords.extend_from_slice(t);
                scores.push(s);
            }
        }
        Pattern {
            dim: self.dim,
            coords,
            scores,
            domain: self.domain.clone(),
        }
    }

    /// Largest score, `0` for the empty pattern.
    pub fn max_score(&self) -> f64 {
        self.scores.iter().copied().fold(0.0, f64::max)
    }

    /// Lexicographically smallest position among the points attaining the
    /// maximal score.
    pub fn anchor_first_max(&self) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::domain("first-maximum anchor of an empty pattern"));
        }
        let m = self.max_score();
        Ok(self.lex_min_where(|s| s == m).expect("nonempty").to_vec())
    }

    /// Lexicographically smallest position with score above `y`; the
    /// origin when there is no such point.
    pub fn anchor_first_exceedance(&self, y: f64) -> Vec<f64> {
        self.lex_min_where(|s| s > y)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; self.dim])
    }

    fn lex_min_where(&self, mut pred: impl FnMut(f64) -> bool) -> Option<&[f64]> {
        self.iter()
            .filter(|(_, s)| pred(*s))
            .map(|(t, _)| t)
            .min_by(|a, b| lex_cmp(a, b))
    }

    /// Serializes as CSV with header `x1,...,xd,score`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 1..=self.dim {
            let _ = write!(out, "x{j},");
        }
        out.push_str("score\n");
        for (t, s) in self.iter() {
            for x in t {
                let _ = write!(out, "{x:?},");
            }
            let _ = writeln!(out, "{s:?}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Pattern> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing CSV header".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let dim = cols.len().saturating_sub(1);
        let expected: Vec<String> = (1..=dim).map(|j| format!("x{j}")).collect();
        if dim == 0 || cols[dim] != "score" || cols[..dim] != expected[..] {
            return Err(Error::Parse(format!("unexpected CSV header '{header}'")));
        }
        let mut coords = Vec::new();
        let mut scores = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let values = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", lineno + 1)))?;
            if values.len() != dim + 1 {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, expected {}",
                    lineno + 1,
                    values.len(),
                    dim + 1
                )));
            }
            coords.extend_from_slice(&values[..dim]);
            scores.push(values[dim]);
        }
        Pattern::from_flat(dim, coords, scores)
    }

    /// Rows `[x1, ..., xd, score]`, the JSON array form.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter()
            .map(|(t, s)| {
                let mut row = t.to_vec();
                row.push(s);
                row
            })
            .collect()
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Pattern> {
        let mut coords = Vec::with_capacity(rows.len() * dim);
        let mut scores = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != dim + 1 {
                return Err(Error::Parse(format!(
                    "row of length {} in dimension {dim}",
                    row.len()
                )));
            }
            coords.extend_from_slice(&row[..dim]);
            scores.push(row[dim]);
        }
        Pattern::from_flat(dim, coords, scores)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_rows()).expect("finite rows serialize")
    }

    pub fn from_json(dim: usize, text: &str) -> Result<Pattern> {
        let rows: Vec<Vec<f64>> =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Pattern::from_rows(dim, &rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1(points: &[(f64, f64)]) -> Pattern {
        Pattern::new(
            1,
            points
                .iter()
                .map(|&(t, s)| MarkedPoint::new(vec![t], s))
                .collect(),
        )
        .unwrap()
    }

    fn p2(points: &[([f64; 2], f64)]) -> Pattern {
        Pattern::new(
            2,
            points
                .iter()
                .map(|&(t, s)| MarkedPoint::new(t.to_vec(), s))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn shift_moves_positions_only() {
        let p = p1(&[(0.0, 1.0), (1.0, 2.0)]);
        let q = p.shift(&[1.0]).unwrap();
        assert_eq!(q.points(), p1(&[(-1.0, 1.0), (0.0, 2.0)]).points());
        assert_eq!(p.shift(&[0.0]).unwrap().points(), p.points());
        assert_eq!(q.shift(&[-1.0]).unwrap().points(), p.points());
        assert!(matches!(p.shift(&[1.0, 2.0]), Err(Error::Argument(_))));
    }

    #[test]
    fn scale_divides_positions_and_scores() {
        let p = p1(&[(2.0, 4.0)]);
        let q = p.scale(ScalingMap::new(2.0, 4.0).unwrap());
        assert_eq!(q.points(), p1(&[(1.0, 1.0)]).points());
        assert_eq!(p.scale(ScalingMap::new(1.0, 1.0).unwrap()), p);
        assert!(ScalingMap::new(0.0, 1.0).is_err());
        assert!(ScalingMap::new(1.0, -2.0).is_err());
    }

    #[test]
    fn restrict_by_region_and_floor() {
        let p = p1(&[(0.0, 0.5), (3.0, 2.0)]);
        let ball = p.restrict(&Region::ball_at_origin(1, 1.0), 0.0).unwrap();
        assert_eq!(ball.points(), p1(&[(0.0, 0.5)]).points());
        let high = p.restrict(&Region::All, 1.0).unwrap();
        assert_eq!(high.points(), p1(&[(3.0, 2.0)]).points());
        assert!(p.restrict(&Region::All, 2.0).unwrap().is_empty());
    }

    #[test]
    fn max_score_conventions() {
        let p = p1(&[(0.0, 1.0), (1.0, 3.0)]);
        assert_eq!(p.max_score(), 3.0);
        assert_eq!(Pattern::empty(2).max_score(), 0.0);
        let m = ScalingMap::new(5.0, 2.0).unwrap();
        assert_eq!(p.scale(m).max_score(), 1.5);
    }

    #[test]
    fn first_max_anchor_breaks_ties_lexicographically() {
        let p = p2(&[([1.0, 0.0], 2.0), ([0.0, 1.0], 2.0)]);
        assert_eq!(p.anchor_first_max().unwrap(), vec![0.0, 1.0]);
        let single = p2(&[([0.3, -2.0], 0.1)]);
        assert_eq!(single.anchor_first_max().unwrap(), vec![0.3, -2.0]);
        assert!(matches!(
            Pattern::empty(2).anchor_first_max(),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn first_exceedance_anchor() {
        let p = p1(&[(2.0, 0.5), (1.0, 3.0)]);
        assert_eq!(p.anchor_first_exceedance(1.0), vec![1.0]);
        assert_eq!(p.anchor_first_exceedance(3.0), vec![0.0]);
        assert_eq!(p.anchor_first_exceedance(0.1), vec![1.0]);
    }

    #[test]
    fn construction_rejects_duplicates_and_drops_zero_scores() {
        let dup = Pattern::new(
            1,
            vec![MarkedPoint::new(vec![1.0], 1.0), MarkedPoint::new(vec![1.0], 2.0)],
        );
        assert!(matches!(dup, Err(Error::Argument(_))));
        let zero = Pattern::new(
            1,
            vec![MarkedPoint::new(vec![1.0], 0.0), MarkedPoint::new(vec![2.0], 2.0)],
        )
        .unwrap();
        assert_eq!(zero.len(), 1);
        assert!(Pattern::new(1, vec![MarkedPoint::new(vec![1.0], -1.0)]).is_err());
        assert!(Pattern::new(1, vec![MarkedPoint::new(vec![f64::NAN], 1.0)]).is_err());
        assert!(Pattern::new(2, vec![MarkedPoint::new(vec![1.0], 1.0)]).is_err());
    }

    #[test]
    fn csv_and_json_forms() {
        let p = p2(&[([0.1, -3.5e-12], 2.0), ([1e300, 7.0], 0.25)]);
        let csv = p.to_csv();
        assert!(csv.starts_with("x1,x2,score\n"));
        assert_eq!(Pattern::from_csv(&csv).unwrap(), p);
        assert_eq!(Pattern::from_json(2, &p.to_json()).unwrap(), p);
        assert_eq!(Pattern::from_json(3, "[]").unwrap().dim(), 3);
        assert!(Pattern::from_csv("a,b\n1,2\n").is_err());
        assert!(Pattern::from_json(2, "[[1.0, 2.0]]").is_err());
    }
}
