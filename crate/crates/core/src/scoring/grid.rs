//! Uniform-grid spatial index answering ball and k-NN queries under a
//! window metric (Euclidean or periodic).

use crate::error::{Error, Result};
use crate::simulate::{Boundary, SimWindow};

/// Upper bound on the number of cells; the cell side is enlarged to honour it.
const MAX_CELLS: usize = 1 << 22;

#[derive(Clone, Debug)]
pub struct GridIndex {
    dim: usize,
    coords: Vec<f64>,
    window: SimWindow,
    cells_per_axis: Vec<usize>,
    cell_width: Vec<f64>,
    // CSR layout: points of cell c are items[starts[c]..starts[c + 1]]
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl GridIndex {
    /// Buckets `coords` (row-major, `window.dim()` values per point) into
    /// cells of side at least `cell`.
    pub fn build(coords: &[f64], window: &SimWindow, cell: f64) -> Result<GridIndex> {
        if !(cell > 0.0 && cell.is_finite()) {
            return Err(Error::argument(format!("cell size must be positive, got {cell}")));
        }
        let dim = window.dim();
        if coords.len() % dim != 0 {
            return Err(Error::argument("coordinate buffer does not match the window dimension"));
        }
        let n = coords.len() / dim;
        let mut cell = cell;
        let mut cells_per_axis: Vec<usize>;
        loop {
            cells_per_axis = window
                .sides()
                .iter()
                .map(|s| ((s / cell).floor() as usize).max(1))
                .collect();
            let total = cells_per_axis
                .iter()
                .try_fold(1usize, |acc, c| acc.checked_mul(*c));
            match total {
                Some(t) if t <= MAX_CELLS => break,
                _ => cell *= 2.0,
            }
        }
        let cell_width: Vec<f64> = window
            .sides()
            .iter()
            .zip(&cells_per_axis)
            .map(|(s, c)| s / *c as f64)
            .collect();
        let total: usize = cells_per_axis.iter().product();

        let mut grid = GridIndex {
            dim,
            coords: coords.to_vec(),
            window: window.clone(),
            cells_per_axis,
            cell_width,
            starts: vec![0; total + 1],
            items: vec![0; n],
        };
        let cell_of: Vec<usize> = (0..n)
            .map(|i| grid.linear(&grid.cell_coords(&coords[i * dim..(i + 1) * dim])))
            .collect();
        for &c in &cell_of {
            grid.starts[c + 1] += 1;
        }
        for c in 0..total {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        for (i, &c) in cell_of.iter().enumerate() {
            grid.items[fill[c]] = i;
            fill[c] += 1;
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn window(&self) -> &SimWindow {
        &self.window
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn cell_coords(&self, t: &[f64]) -> Vec<isize> {
        let torus = self.window.boundary() == Boundary::Torus;
        (0..self.dim)
            .map(|j| {
                let n = self.cells_per_axis[j] as isize;
                let mut x = t[j] - self.window.lower()[j];
                if torus {
                    x = x.rem_euclid(self.window.sides()[j]);
                }
                ((x / self.cell_width[j]).floor() as isize).clamp(0, n - 1)
            })
            .collect()
    }

    fn linear(&self, cell: &[isize]) -> usize {
        let mut idx = 0usize;
        for j in (0..self.dim).rev() {
            idx = idx * self.cells_per_axis[j] + cell[j] as usize;
        }
        idx
    }

    fn cell_items(&self, cell: &[isize]) -> &[usize] {
        let c = self.linear(cell);
        &self.items[self.starts[c]..self.starts[c + 1]]
    }

    /// Cells reachable along one axis within `reach` steps, with their
    /// step distance from `center`.
    fn axis_cells(&self, axis: usize, center: isize, reach: isize) -> Vec<(isize, isize)> {
        let n = self.cells_per_axis[axis] as isize;
        match self.window.boundary() {
            Boundary::Torus => {
                if 2 * reach + 1 >= n {
                    (0..n)
                        .map(|c| {
                            let d = (c - center).rem_euclid(n);
                            (c, d.min(n - d))
                        })
                        .collect()
                } else {
                    (-reach..=reach)
                        .map(|o| ((center + o).rem_euclid(n), o.abs()))
                        .collect()
                }
            }
            Boundary::Hard => (-reach..=reach)
                .filter_map(|o| {
                    let c = center + o;
                    (0..n).contains(&c).then_some((c, o.abs()))
                })
                .collect(),
        }
    }

    /// Visits every cell whose Chebyshev step distance to `center` is
    /// exactly `ring`. Returns false once no such cell exists and no
    /// farther ring can exist either.
    fn visit_ring(&self, center: &[isize], ring: isize, mut visit: impl FnMut(&[usize])) -> bool {
        let axes: Vec<Vec<(isize, isize)>> = (0..self.dim)
            .map(|j| self.axis_cells(j, center[j], ring))
            .collect();
        let any_further = axes.iter().any(|a| a.iter().any(|(_, d)| *d == ring));
        if !any_further {
            return false;
        }
        let mut odo = vec![0usize; self.dim];
        let mut cell = vec![0isize; self.dim];
        'outer: loop {
            let mut cheb = 0;
            for j in 0..self.dim {
                let (c, d) = axes[j][odo[j]];
                cell[j] = c;
                cheb = cheb.max(d);
            }
            if cheb == ring {
                visit(self.cell_items(&cell));
            }
            for j in 0..self.dim {
                odo[j] += 1;
                if odo[j] < axes[j].len() {
                    continue 'outer;
                }
                odo[j] = 0;
            }
            break;
        }
        true
    }

    /// Indices of points within distance `radius` (closed ball) of `center`,
    /// in increasing index order.
    pub fn ball(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let c = self.cell_coords(center);
        let min_w = self.cell_width.iter().copied().fold(f64::INFINITY, f64::min);
        let reach = (radius / min_w).ceil() as isize + 1;
        let r2 = radius * radius;
        let mut out = Vec::new();
        for ring in 0..=reach {
            if !self.visit_ring(&c, ring, |items| {
                for &i in items {
                    if self.window.distance_sq(center, self.position(i)) <= r2 {
                        out.push(i);
                    }
                }
            }) {
                break;
            }
        }
        out.sort_unstable();
        out
    }

    /// The `k` nearest points to `center`, skipping `exclude`, as
    /// `(index, distance)` sorted by distance and then by index.
    pub fn knn(&self, center: &[f64], k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let c = self.cell_coords(center);
        let min_w = self.cell_width.iter().copied().fold(f64::INFINITY, f64::min);
        // (squared distance, index), kept sorted
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        let mut ring = 0isize;
        loop {
            let more = self.visit_ring(&c, ring, |items| {
                for &i in items {
                    if Some(i) == exclude {
                        continue;
                    }
                    let d2 = self.window.distance_sq(center, self.position(i));
                    let cand = (d2, i);
                    if best.len() == k && !less(cand, best[k - 1]) {
                        continue;
                    }
                    let pos = best.partition_point(|b| less(*b, cand));
                    best.insert(pos, cand);
                    best.truncate(k);
                }
            });
            if !more {
                break;
            }
            if best.len() == k {
                let bound = ring as f64 * min_w;
                if best[k - 1].0 <= bound * bound {
                    break;
                }
            }
            ring += 1;
        }
        best.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect()
    }
}

#[inline]
fn less(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}
