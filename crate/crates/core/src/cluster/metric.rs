//! Distances between finite clusters: the bottleneck distance `m0` on
//! patterns of equal size, its score-threshold average `m`, and the
//! shift-quotient distance `m~`.

use crate::pattern::{norm, Pattern};

/// Default additive tolerance of [`metric_m_tilde`].
pub const DEFAULT_SHIFT_TOL: f64 = 1e-6;

fn pair_cost(a: &Pattern, i: usize, b: &Pattern, j: usize) -> f64 {
    let dt: Vec<f64> = a.position(i).iter().zip(b.position(j)).map(|(x, y)| x - y).collect();
    norm(&dt).max((a.score(i) - b.score(j)).abs()).min(1.0)
}

/// Kuhn's augmenting-path matching restricted to edges with cost <= limit.
fn has_perfect_matching(cost: &[f64], n: usize, limit: f64) -> bool {
    fn augment(u: usize, n: usize, ok: &dyn Fn(usize, usize) -> bool, seen: &mut [bool], owner: &mut [usize]) -> bool {
        for v in 0..n {
            if ok(u, v) && !seen[v] {
                seen[v] = true;
                if owner[v] == usize::MAX || augment(owner[v], n, ok, seen, owner) {
                    owner[v] = u;
                    return true;
                }
            }
        }
        false
    }
    let ok = |u: usize, v: usize| cost[u * n + v] <= limit;
    let mut owner = vec![usize::MAX; n];
    for u in 0..n {
        let mut seen = vec![false; n];
        if !augment(u, n, &ok, &mut seen, &mut owner) {
            return false;
        }
    }
    true
}

/// Bottleneck distance: 1 when the point counts differ, otherwise the
/// smallest over bijections of the largest matched cost
/// `max(|t - t'|, |s - s'|) ∧ 1`.
pub fn metric_m0(a: &Pattern, b: &Pattern) -> f64 {
    if a.len() != b.len() {
        return 1.0;
    }
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let mut cost = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            cost.push(pair_cost(a, i, b, j));
        }
    }
    let mut levels = cost.clone();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    // smallest level admitting a perfect matching; the top level (all
    // edges allowed) always does
    let (mut lo, mut hi) = (0, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if has_perfect_matching(&cost, n, levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    levels[lo]
}

/// `m(a, b) = int_0^inf m0(a^{1/u}, b^{1/u}) e^{-u} du`, where `p^{1/u}`
/// keeps the points with score above `1/u`. The integrand is constant
/// between consecutive reciprocal scores, so the integral is a finite sum.
pub fn metric_m(a: &Pattern, b: &Pattern) -> f64 {
    let mut levels: Vec<f64> = a.scores().iter().chain(b.scores()).copied().collect();
    levels.sort_by(|x, y| y.total_cmp(x));
    levels.dedup();
    let mut total = 0.0;
    for (j, &s) in levels.iter().enumerate() {
        // for u between 1/s and the next reciprocal score, the points with
        // score >= s are kept
        let ra = a.filter(|_, v| v >= s);
        let rb = b.filter(|_, v| v >= s);
        let upper = levels.get(j + 1).map_or(0.0, |v| (-1.0 / v).exp());
        let mass = (-1.0 / s).exp() - upper;
        if mass > 0.0 {
            total += metric_m0(&ra, &rb) * mass;
        }
    }
    total.min(1.0)
}

/// `m(phi_z a, b)`.
fn shifted_distance(a: &Pattern, b: &Pattern, z: &[f64]) -> f64 {
    metric_m(&a.shift(z).expect("dimension checked by caller"), b)
}

/// Distance between the shift classes of `a` and `b`, `inf_z m(phi_z a, b)`,
/// reported as an upper bound: the best shift among `0` and all
/// differences of point positions, refined by coordinate descent with step
/// halving down to `tol`.
pub fn metric_m_tilde(a: &Pattern, b: &Pattern, tol: f64) -> f64 {
    if a.dim() != b.dim() {
        return 1.0;
    }
    let d = a.dim();
    let tol = if tol > 0.0 { tol } else { DEFAULT_SHIFT_TOL };
    let mut best_z = vec![0.0; d];
    let mut best = shifted_distance(a, b, &best_z);
    if best == 0.0 {
        return 0.0;
    }
    for i in 0..a.len() {
        for j in 0..b.len() {
            let z: Vec<f64> = a.position(i).iter().zip(b.position(j)).map(|(x, y)| x - y).collect();
            let v = shifted_distance(a, b, &z);
            if v < best {
                best = v;
                best_z = z;
                if best == 0.0 {
                    return 0.0;
                }
            }
        }
    }
    let mut step = best.max(tol);
    while step >= tol {
        let mut improved = false;
        for axis in 0..d {
            for sign in [1.0, -1.0] {
                let mut z = best_z.clone();
                z[axis] += sign * step;
                let v = shifted_distance(a, b, &z);
                if v < best {
                    best = v;
                    best_z = z;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::MarkedPoint;

    fn pat(pts: &[(f64, f64)]) -> Pattern {
        Pattern::new(1, pts.iter().map(|(t, s)| MarkedPoint::new(vec![*t], *s)).collect()).unwrap()
    }

    #[test]
    fn m0_examples() {
        let a = pat(&[(0.0, 1.0)]);
        assert_eq!(metric_m0(&a, &a), 0.0);
        assert_eq!(metric_m0(&a, &pat(&[(0.3, 1.0)])), 0.3);
        assert_eq!(metric_m0(&a, &pat(&[(0.0, 1.0), (5.0, 1.0)])), 1.0);
        assert_eq!(metric_m0(&pat(&[]), &pat(&[])), 0.0);
    }

    #[test]
    fn m0_prefers_crossed_matching() {
        let a = pat(&[(0.0, 1.0), (1.0, 1.0)]);
        let b = pat(&[(1.1, 1.0), (0.05, 1.0)]);
        assert!((metric_m0(&a, &b) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn m_single_point_against_empty() {
        let a = pat(&[(0.0, 1.0)]);
        assert!((metric_m(&a, &pat(&[])) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(metric_m(&a, &a), 0.0);
    }

    #[test]
    fn m_tilde_aligns_shifted_copies() {
        let a = pat(&[(0.0, 2.0), (0.75, 1.5), (2.5, 0.5)]);
        let b = a.shift(&[-3.25]).unwrap();
        assert_eq!(metric_m_tilde(&a, &b, 1e-6), 0.0);
        assert!(metric_m_tilde(&a, &b, 1e-6) <= metric_m(&a, &b));
    }
}
