//! Block partition of `[0, tau]^d`, extraction of the extremal blocks as a
//! point process of rescaled clusters, and distances between clusters.

pub mod metric;

pub use metric::{metric_m, metric_m0, metric_m_tilde, DEFAULT_SHIFT_TOL};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{Pattern, Region, ScalingMap};
use crate::tail::ScalingLaw;

/// Cubes of side `b_tau` tiling `[0, k_tau b_tau]^d`, `k_tau = floor(tau / b_tau)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockGrid {
    pub tau: f64,
    pub b_tau: f64,
    pub k_tau: usize,
    pub dim: usize,
}

impl BlockGrid {
    pub fn new(tau: f64, b_tau: f64, dim: usize) -> Result<BlockGrid> {
        if !(tau > 0.0 && tau.is_finite() && b_tau > 0.0) || dim == 0 {
            return Err(Error::config(format!("invalid block grid tau={tau}, b={b_tau}, d={dim}")));
        }
        if b_tau > tau {
            return Err(Error::config(format!("block side {b_tau} exceeds window side {tau}")));
        }
        let k_tau = (tau / b_tau).floor() as usize;
        Ok(BlockGrid { tau, b_tau, k_tau, dim })
    }

    /// Default block side: `sqrt(tau r(a_tau))` when positions shrink
    /// (`beta < 0`), `sqrt(tau)` when they are not rescaled.
    pub fn default_side(tau: f64, a_tau: f64, law: &ScalingLaw) -> f64 {
        if law.beta < 0.0 {
            (tau * law.r(a_tau)).sqrt()
        } else {
            tau.sqrt()
        }
    }

    /// Grid with the default block side.
    pub fn with_default_side(tau: f64, a_tau: f64, law: &ScalingLaw, dim: usize) -> Result<BlockGrid> {
        BlockGrid::new(tau, BlockGrid::default_side(tau, a_tau, law), dim)
    }

    /// Default trimming width `sqrt(b_tau r(a_tau))`.
    pub fn default_trim(&self, a_tau: f64, law: &ScalingLaw) -> f64 {
        (self.b_tau * law.r(a_tau)).sqrt()
    }

    pub fn block_count(&self) -> usize {
        self.k_tau.pow(self.dim as u32)
    }

    /// Index in `{1..k_tau}^d` of the block containing `t`, or `None` when
    /// `t` lies outside `[0, k_tau b_tau]^d`. Shared faces go to the lower block.
    pub fn block_of(&self, t: &[f64]) -> Option<Vec<usize>> {
        let mut idx = Vec::with_capacity(t.len());
        for &x in t {
            if !(x >= 0.0) {
                return None;
            }
            let i = ((x / self.b_tau).ceil() as usize).max(1);
            if i > self.k_tau {
                return None;
            }
            idx.push(i);
        }
        Some(idx)
    }

    /// Corner position `i b_tau / tau` in `[0, 1]^d`.
    pub fn grid_position(&self, index: &[usize]) -> Vec<f64> {
        index.iter().map(|&i| i as f64 * self.b_tau / self.tau).collect()
    }
}

/// One point of `N_tau`: a block whose maximum exceeds `a_tau epsilon`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterEntry {
    pub index: Vec<usize>,
    pub grid_position: Vec<f64>,
    /// Block content rescaled by `T_{r(a_tau), a_tau}`.
    pub cluster: Pattern,
    /// Largest unscaled score in the block.
    pub raw_max: f64,
}

#[derive(Serialize)]
struct EntryLine<'a> {
    grid_position: &'a [f64],
    raw_max: f64,
    a_tau: f64,
    epsilon: f64,
    cluster: Vec<Vec<f64>>,
}

impl ClusterEntry {
    /// One JSON line `{grid_position, raw_max, a_tau, epsilon, cluster}`.
    pub fn to_json_line(&self, a_tau: f64, epsilon: f64) -> String {
        serde_json::to_string(&EntryLine {
            grid_position: &self.grid_position,
            raw_max: self.raw_max,
            a_tau,
            epsilon,
            cluster: self.cluster.to_rows(),
        })
        .expect("finite values serialize")
    }
}

/// Splits `x` into the nonempty blocks of `grid`, in lexicographic order of
/// block index. Points outside `[0, k_tau b_tau]^d` are dropped.
pub fn partition_blocks(x: &Pattern, grid: &BlockGrid) -> Result<Vec<(Vec<usize>, Pattern)>> {
    if x.dim() != grid.dim {
        return Err(Error::argument("pattern and block grid dimensions differ"));
    }
    let mut members: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for i in 0..x.len() {
        if let Some(idx) = grid.block_of(x.position(i)) {
            members.entry(idx).or_default().push(i);
        }
    }
    let d = x.dim();
    members
        .into_iter()
        .map(|(idx, pts)| {
            let coords = pts.iter().flat_map(|&i| x.position(i).iter().copied()).collect();
            let scores = pts.iter().map(|&i| x.score(i)).collect();
            Ok((idx, Pattern::from_flat(d, coords, scores)?))
        })
        .collect()
}

/// Restriction of a block to the box inset by `l_tau` from every face.
pub fn trim_block(block: &Pattern, index: &[usize], b_tau: f64, l_tau: f64) -> Result<Pattern> {
    if !(l_tau >= 0.0) || 2.0 * l_tau >= b_tau {
        return Err(Error::config(format!("trim width {l_tau} leaves no interior in blocks of side {b_tau}")));
    }
    if index.len() != block.dim() {
        return Err(Error::argument("block index and pattern dimensions differ"));
    }
    let lower = index.iter().map(|&i| (i as f64 - 1.0) * b_tau + l_tau).collect();
    let upper = index.iter().map(|&i| i as f64 * b_tau - l_tau).collect();
    block.restrict(&Region::Box { lower, upper }, 0.0)
}

/// `N_tau`: every block whose maximum score exceeds `a_tau epsilon`, rescaled
/// by `T_{r(a_tau), a_tau}` and placed at its corner `i b_tau / tau`.
pub fn extract_n_tau(
    x: &Pattern,
    grid: &BlockGrid,
    a_tau: f64,
    law: &ScalingLaw,
    epsilon: f64,
) -> Result<Vec<ClusterEntry>> {
    if !(a_tau > 0.0 && a_tau.is_finite()) || !(epsilon > 0.0) {
        return Err(Error::argument(format!("need a_tau > 0 and epsilon > 0, got {a_tau}, {epsilon}")));
    }
    let map = law.tail_map(a_tau)?;
    let blocks = partition_blocks(x, grid)?;
    let level = a_tau * epsilon;
    Ok(blocks
        .into_par_iter()
        .filter(|(_, b)| b.max_score() > level)
        .map(|(index, b)| ClusterEntry {
            grid_position: grid.grid_position(&index),
            raw_max: b.max_score(),
            cluster: b.scale(map),
            index,
        })
        .collect())
}

/// Normalizes a cluster by its maximum: `T_{M^beta, M}` followed by a shift
/// putting the first maximum at the origin.
pub fn normalize_cluster(cluster: &Pattern, law: &ScalingLaw) -> Result<Pattern> {
    let m = cluster.max_score();
    if !(m > 0.0) {
        return Err(Error::domain("cannot normalize an empty cluster"));
    }
    let scaled = cluster.scale(ScalingMap::new(m.powf(law.beta), m)?);
    let anchor = scaled.anchor_first_max()?;
    scaled.shift(&anchor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::MarkedPoint;

    fn line(pts: &[(f64, f64)]) -> Pattern {
        Pattern::new(1, pts.iter().map(|(t, s)| MarkedPoint::new(vec![*t], *s)).collect()).unwrap()
    }

    #[test]
    fn block_index_examples() {
        let g = BlockGrid::new(10.0, 5.0, 1).unwrap();
        assert_eq!(g.block_of(&[7.3]), Some(vec![2]));
        assert_eq!(g.block_of(&[0.0]), Some(vec![1]));
        assert_eq!(g.block_of(&[5.0]), Some(vec![1]));
        assert!(BlockGrid::new(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn single_block_is_whole_pattern() {
        let x = line(&[(0.5, 1.0), (3.0, 2.0), (9.9, 0.1)]);
        let g = BlockGrid::new(10.0, 10.0, 1).unwrap();
        let blocks = partition_blocks(&x, &g).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].1, x);
    }

    #[test]
    fn points_beyond_last_block_are_dropped() {
        let x = line(&[(0.5, 1.0), (9.5, 2.0)]);
        let g = BlockGrid::new(10.0, 3.0, 1).unwrap();
        let total: usize = partition_blocks(&x, &g).unwrap().iter().map(|(_, b)| b.len()).sum();
        assert_eq!(total, 1);
    }

    #[test]
    fn trimming() {
        let b = line(&[(5.2, 1.0), (7.0, 1.0)]);
        assert_eq!(trim_block(&b, &[2], 5.0, 0.0).unwrap(), b);
        let t = trim_block(&b, &[2], 5.0, 0.4).unwrap();
        assert_eq!(t.len(), 1);
        assert!(trim_block(&b, &[2], 5.0, 2.5).is_err());
    }

    #[test]
    fn extraction_threshold() {
        let x = line(&[(1.0, 3.0), (2.0, 1.0), (6.0, 0.5), (7.0, 9.0)]);
        let g = BlockGrid::new(10.0, 5.0, 1).unwrap();
        let law = ScalingLaw::moving_max(1.0).unwrap();
        let n = extract_n_tau(&x, &g, 2.0, &law, 1.0).unwrap();
        assert_eq!(n.len(), 2);
        assert_eq!(n[1].grid_position, vec![1.0]);
        assert_eq!(n[1].raw_max, 9.0);
        assert_eq!(n[1].cluster.max_score(), 4.5);
        assert!(extract_n_tau(&x, &g, 2.0, &law, 5.0).unwrap().is_empty());
    }
}
