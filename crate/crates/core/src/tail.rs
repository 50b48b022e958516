//! Exact samplers for limiting cluster objects: the tail configuration `Y`,
//! its spectral part `Theta`, the typical cluster `Q`, and the moving-maxima
//! companion `W`; plus extraction of empirical tail configurations from a
//! simulated pattern.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, unit_ball_volume};
use crate::pattern::{is_origin, lex_cmp, norm, Pattern, ScalingMap};
use crate::scoring::{GridIndex, Neighborhood, ScoreRule, SpatialContext, WeightFn};
use crate::simulate::{palm_augment, sample_poisson, uniform_in_ball, uniform_on_sphere, Boundary, SimWindow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailKind {
    Y,
    Theta,
    Q,
    W,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailSample {
    pub config: Pattern,
    /// Score at the origin of a `Y` sample.
    pub eta: Option<f64>,
    pub kind: TailKind,
    /// Set when the neighbourhood of the origin reached beyond a quarter
    /// of the simulation window, so boundary effects may be present.
    pub near_boundary: bool,
}

impl TailSample {
    fn new(config: Pattern, eta: Option<f64>, kind: TailKind) -> TailSample {
        TailSample { config, eta, kind, near_boundary: false }
    }

    pub fn to_csv(&self) -> String {
        self.config.to_csv()
    }

    /// Metadata accompanying the CSV export.
    pub fn sidecar_json(&self, law: &ScalingLaw, rule: &ScoreRule, seed: u64) -> String {
        serde_json::json!({
            "kind": self.kind,
            "eta": self.eta,
            "alpha": law.alpha,
            "beta": law.beta,
            "rule": rule,
            "seed": seed,
        })
        .to_string()
    }
}

/// Regular variation indices: tail index `alpha` and scaling index `beta`
/// with `r(u) = u^beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub alpha: f64,
    pub beta: f64,
}

impl ScalingLaw {
    pub fn new(alpha: f64, beta: f64) -> Result<ScalingLaw> {
        if !(alpha > 0.0 && alpha.is_finite()) || !beta.is_finite() {
            return Err(Error::argument(format!("invalid indices alpha={alpha}, beta={beta}")));
        }
        Ok(ScalingLaw { alpha, beta })
    }

    /// Reciprocal k-NN scores: `alpha = d k`, `beta = -1`.
    pub fn knn(k: usize, d: usize) -> ScalingLaw {
        ScalingLaw { alpha: (d * k) as f64, beta: -1.0 }
    }

    /// Moving maxima: positions are not rescaled.
    pub fn moving_max(alpha: f64) -> Result<ScalingLaw> {
        ScalingLaw::new(alpha, 0.0)
    }

    pub fn r(&self, u: f64) -> f64 {
        u.powf(self.beta)
    }

    /// `T_{r(u), u}`.
    pub fn tail_map(&self, u: f64) -> Result<ScalingMap> {
        ScalingMap::new(self.r(u), u)
    }
}

/// Pareto(`alpha`) draw on `[1, inf)`.
pub fn sample_pareto_eta<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::argument(format!("alpha must be positive, got {alpha}")));
    }
    let u: f64 = 1.0 - rng.random::<f64>();
    Ok(u.powf(-1.0 / alpha))
}

fn check_kd(k: usize, d: usize) -> Result<()> {
    if k == 0 || d == 0 {
        return Err(Error::argument(format!("need k >= 1 and d >= 1, got k={k}, d={d}")));
    }
    Ok(())
}

/// Reciprocal k-NN scores of a configuration with exactly `k + 1` points,
/// where each point's k-th neighbour is its farthest companion. `pinned`
/// overrides selected pairwise distances so ties are exact.
fn small_config_scores(coords: &[f64], d: usize, pinned: &[(usize, usize, f64)]) -> Vec<f64> {
    let n = coords.len() / d;
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let a = &coords[i * d..(i + 1) * d];
            let b = &coords[j * d..(j + 1) * d];
            let v = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }
    for &(i, j, v) in pinned {
        dist[i * n + j] = v;
        dist[j * n + i] = v;
    }
    (0..n)
        .map(|i| 1.0 / dist[i * n..(i + 1) * n].iter().copied().fold(0.0, f64::max))
        .collect()
}

/// `Y = Psi({0, U_1, ..., U_k})` with `U_i` i.i.d. uniform in the unit ball.
pub fn sample_knn_tail_y<R: Rng + ?Sized>(k: usize, d: usize, rng: &mut R) -> Result<TailSample> {
    check_kd(k, d)?;
    let mut coords = vec![0.0; d];
    for _ in 0..k {
        coords.extend(uniform_in_ball(d, rng));
    }
    let scores = small_config_scores(&coords, d, &[]);
    let eta = scores[0];
    let config = Pattern::from_flat(d, coords, scores)?;
    Ok(TailSample::new(config, Some(eta), TailKind::Y))
}

/// `Theta = Psi({0, U_1, ..., U_{k-1}, U'_k})` with `U'_k` uniform on the
/// unit sphere. The origin's score is exactly 1.
pub fn sample_knn_spectral_theta<R: Rng + ?Sized>(k: usize, d: usize, rng: &mut R) -> Result<TailSample> {
    check_kd(k, d)?;
    let mut coords = vec![0.0; d];
    for _ in 0..k - 1 {
        coords.extend(uniform_in_ball(d, rng));
    }
    coords.extend(uniform_on_sphere(d, rng));
    let scores = small_config_scores(&coords, d, &[(0, k, 1.0)]);
    let config = Pattern::from_flat(d, coords, scores)?;
    Ok(TailSample::new(config, None, TailKind::Theta))
}

/// Typical cluster `Q`: `Theta` conditioned on its first maximum sitting at
/// the origin, by rejection. Also returns the number of `Theta` draws used.
pub fn sample_knn_typical_q<R: Rng + ?Sized>(k: usize, d: usize, rng: &mut R) -> Result<(TailSample, usize)> {
    check_kd(k, d)?;
    let mut draws = 0;
    loop {
        draws += 1;
        let theta = sample_knn_spectral_theta(k, d, rng)?;
        if is_origin(&theta.config.anchor_first_max()?) {
            return Ok((TailSample::new(theta.config, None, TailKind::Q), draws));
        }
    }
}

/// Scaled configuration `T_{eta^{-beta}, eta^{-1}} Theta`, the polar
/// reconstruction of `Y` from an independent Pareto `eta`.
pub fn polar_reconstruct(theta: &Pattern, eta: f64, law: &ScalingLaw) -> Result<Pattern> {
    Ok(theta.scale(ScalingMap::new(eta.powf(-law.beta), 1.0 / eta)?))
}

/// 99th percentile of the neighbourhood diameter of a point of a unit-rate
/// Poisson process.
fn neighborhood_diameter_q99(nb: &Neighborhood, d: usize) -> f64 {
    match nb {
        Neighborhood::Ball { radius } => 2.0 * radius,
        Neighborhood::Knn { k } => {
            // C_d rho_k^d is Gamma(k, 1) distributed
            let q = Gamma::new(*k as f64, 1.0).expect("positive shape").inverse_cdf(0.99);
            2.0 * (q / unit_ball_volume(d)).powf(1.0 / d as f64)
        }
    }
}

/// Default simulation window for moving-maxima samplers: a centred torus
/// with side ten times the 99th percentile neighbourhood diameter.
pub fn default_moving_max_window(nb: &Neighborhood, d: usize) -> Result<SimWindow> {
    nb.validate()?;
    let side = (10.0 * neighborhood_diameter_q99(nb, d)).max(1.0);
    SimWindow::centered(d, side, Boundary::Torus)
}

/// Unit-rate Palm configuration `P~' = P' + delta_0` on `window`, with the
/// spatial context for neighbourhood queries.
pub struct OriginNeighborhood {
    pub palm: Pattern,
    pub context: SpatialContext,
    /// Indices of `Phi~(0)`, the origin (index 0) first.
    pub members: Vec<usize>,
    /// `D(0)`: largest distance from the origin to a member.
    pub radius: f64,
}

impl OriginNeighborhood {
    /// `Phi~(0)` as a pattern of positions relative to the origin, every
    /// score set to 1.
    pub fn member_pattern(&self) -> Result<Pattern> {
        let d = self.palm.dim();
        let coords = self
            .members
            .iter()
            .flat_map(|&j| self.context.displacement(0, j))
            .collect();
        Pattern::from_flat(d, coords, vec![1.0; self.members.len()])
    }
}

fn check_window(window: &SimWindow) -> Result<()> {
    if !window.contains(&vec![0.0; window.dim()]) {
        return Err(Error::config("window must contain the origin"));
    }
    Ok(())
}

/// Samples `P~'` on `window` and the neighbourhood of its origin.
pub fn sample_origin_neighborhood<R: Rng + ?Sized>(
    nb: &Neighborhood,
    window: &SimWindow,
    rng: &mut R,
) -> Result<OriginNeighborhood> {
    nb.validate()?;
    check_window(window)?;
    loop {
        let base = sample_poisson(window, 1.0, rng)?;
        if base.origin_index().is_some() {
            continue;
        }
        let palm = palm_augment(&base, 1.0)?;
        if palm.len() < nb.min_points() {
            return Err(Error::config("window too small for the neighbourhood"));
        }
        return origin_neighborhood_of(palm, nb);
    }
}

fn origin_neighborhood_of(palm: Pattern, nb: &Neighborhood) -> Result<OriginNeighborhood> {
    let context = SpatialContext::new(&palm)?;
    let members = context.neighborhood(0, nb)?;
    let radius = members
        .iter()
        .map(|&j| norm(&context.displacement(0, j)))
        .fold(0.0, f64::max);
    Ok(OriginNeighborhood { palm, context, members, radius })
}

fn min_side(window: &SimWindow) -> f64 {
    window.sides().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Indices `t` with `target` in `Phi(t)`, searched among points within a
/// quarter window side of `target` (within the ball radius for ball
/// neighbourhoods).
fn points_reaching(ctx: &SpatialContext, target: usize, nb: &Neighborhood) -> Result<Vec<usize>> {
    let grid: &GridIndex = ctx.grid();
    let center = grid.position(target).to_vec();
    match nb {
        Neighborhood::Ball { radius } => Ok(grid.ball(&center, *radius)),
        Neighborhood::Knn { .. } => {
            let reach = min_side(ctx.window()) / 4.0;
            let mut out = Vec::new();
            for t in grid.ball(&center, reach) {
                if t == target || ctx.neighborhood(t, nb)?.contains(&target) {
                    out.push(t);
                }
            }
            Ok(out)
        }
    }
}

/// Position of point `i` relative to the origin of the window.
fn relative_position(ctx: &SpatialContext, i: usize) -> Vec<f64> {
    let t = ctx.grid().position(i);
    let w = ctx.window();
    (0..t.len()).map(|j| w.axis_delta(j, 0.0, t[j])).collect()
}

/// `W = {(t, w(-t)) : t in P~', 0 in Phi~(t)}` restricted to positive scores.
pub fn sample_moving_max_w<R: Rng + ?Sized>(
    nb: &Neighborhood,
    w: &WeightFn,
    window: &SimWindow,
    rng: &mut R,
) -> Result<TailSample> {
    w.validate()?;
    let on = sample_origin_neighborhood(nb, window, rng)?;
    let d = window.dim();
    let mut coords = Vec::new();
    let mut scores = Vec::new();
    for t in points_reaching(&on.context, 0, nb)? {
        let pos = relative_position(&on.context, t);
        let back: Vec<f64> = pos.iter().map(|x| -x).collect();
        let s = w.eval(&back);
        if s > 0.0 {
            coords.extend(pos);
            scores.push(s);
        }
    }
    let mut out = TailSample::new(Pattern::from_flat(d, coords, scores)?, None, TailKind::W);
    out.near_boundary = on.radius > min_side(window) / 4.0;
    Ok(out)
}

/// `int_{B_r} w(x)^alpha dx` for a radial weight.
pub fn ball_weight_mass(w: &WeightFn, alpha: f64, radius: f64, d: usize) -> f64 {
    let surface = d as f64 * unit_ball_volume(d);
    let radial = |rho: f64| -> f64 {
        let mut e = vec![0.0; d];
        e[0] = rho;
        rho.powi(d as i32 - 1) * w.eval(&e).powf(alpha)
    };
    let integral = match w {
        WeightFn::Dirac => 0.0,
        WeightFn::UserGrid { radii, .. } => {
            // integrate piece by piece between the table's kinks
            let mut knots: Vec<f64> = radii.iter().copied().filter(|r| *r < radius).collect();
            knots.push(radius);
            knots
                .windows(2)
                .map(|p| adaptive_simpson(&radial, p[0], p[1], 1e-12))
                .sum()
        }
        _ => adaptive_simpson(&radial, 0.0, radius, 1e-12),
    };
    surface * integral
}

/// Draws `x` in the ball of radius `radius` with density proportional to
/// `w(x)^alpha`.
fn sample_weighted_in_ball<R: Rng + ?Sized>(w: &WeightFn, alpha: f64, radius: f64, d: usize, rng: &mut R) -> Vec<f64> {
    let cap = w.sup().powf(alpha);
    loop {
        let x: Vec<f64> = uniform_in_ball(d, rng).into_iter().map(|v| v * radius).collect();
        if rng.random::<f64>() * cap < w.eval(&x).powf(alpha) {
            return x;
        }
    }
}

/// Draws `(P*, V)`: `P*` from the tilted law of `P~'` and `V` in `Phi*(0)`
/// chosen with probability proportional to `w(V)^alpha`.
fn sample_tilted<R: Rng + ?Sized>(
    nb: &Neighborhood,
    w: &WeightFn,
    alpha: f64,
    window: &SimWindow,
    rng: &mut R,
) -> Result<(OriginNeighborhood, usize)> {
    let d = window.dim();
    match nb {
        Neighborhood::Knn { k } => {
            // rejection against the envelope (k + 1) w*^alpha
            let envelope = (*k + 1) as f64 * w.sup().powf(alpha);
            loop {
                let on = sample_origin_neighborhood(nb, window, rng)?;
                let weights: Vec<f64> = on
                    .members
                    .iter()
                    .map(|&x| w.eval(&on.context.displacement(0, x)).powf(alpha))
                    .collect();
                let total: f64 = weights.iter().sum();
                if total <= 0.0 || rng.random::<f64>() * envelope >= total {
                    continue;
                }
                let mut pick = rng.random::<f64>() * total;
                let mut v = on.members[on.members.len() - 1];
                for (&x, &wt) in on.members.iter().zip(&weights) {
                    if pick < wt {
                        v = x;
                        break;
                    }
                    pick -= wt;
                }
                return Ok((on, v));
            }
        }
        Neighborhood::Ball { radius } => {
            // Mecke mixture: weight 1 keeps P~' with V = 0; weight
            // int_{B_r} w^alpha adds a point x ~ w^alpha on B_r and sets V = x
            let mass = ball_weight_mass(w, alpha, *radius, d);
            let base = loop {
                let b = sample_poisson(window, 1.0, rng)?;
                if b.origin_index().is_none() {
                    break b;
                }
            };
            let palm = palm_augment(&base, 1.0)?;
            if rng.random::<f64>() * (1.0 + mass) < 1.0 {
                return Ok((origin_neighborhood_of(palm, nb)?, 0));
            }
            let x = sample_weighted_in_ball(w, alpha, *radius, d, rng);
            let x = window.wrap(&x);
            let mut coords = palm.coords().to_vec();
            coords.extend_from_slice(&x);
            let mut scores = palm.scores().to_vec();
            scores.push(1.0);
            let tilted = Pattern::from_flat(d, coords, scores)?.with_domain(window.clone());
            let v = tilted.len() - 1;
            Ok((origin_neighborhood_of(tilted, nb)?, v))
        }
    }
}

/// Spectral configuration of moving maxima of marks with tail index `alpha`:
/// `{(t, w(V - t) / w(V)) : t in P*, V in Phi*(t)}` restricted to positive scores.
pub fn sample_moving_max_theta<R: Rng + ?Sized>(
    nb: &Neighborhood,
    w: &WeightFn,
    alpha: f64,
    window: &SimWindow,
    rng: &mut R,
) -> Result<TailSample> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::argument(format!("alpha must be positive, got {alpha}")));
    }
    nb.validate()?;
    w.validate()?;
    check_window(window)?;
    let (on, v) = sample_tilted(nb, w, alpha, window, rng)?;
    let ctx = &on.context;
    let wv = w.eval(&ctx.displacement(0, v));
    let d = window.dim();
    let mut coords = Vec::new();
    let mut scores = Vec::new();
    let mut reach = 0.0f64;
    for t in points_reaching(ctx, v, nb)? {
        let s = w.eval(&ctx.displacement(t, v)) / wv;
        if s > 0.0 {
            let pos = relative_position(ctx, t);
            reach = reach.max(norm(&pos));
            coords.extend(pos);
            // the origin's score is w(V)/w(V), kept exact
            scores.push(if t == 0 { 1.0 } else { s });
        }
    }
    let mut out = TailSample::new(Pattern::from_flat(d, coords, scores)?, None, TailKind::Theta);
    out.near_boundary = on.radius.max(reach) > min_side(window) / 4.0;
    Ok(out)
}

/// Typical cluster of moving maxima: `T_{1, M(W)} W` under the law of `W`
/// tilted by `M(W)^alpha`, shifted so its first maximum is at the origin.
/// Also returns the number of `W` draws used.
pub fn sample_moving_max_q<R: Rng + ?Sized>(
    nb: &Neighborhood,
    w: &WeightFn,
    alpha: f64,
    window: &SimWindow,
    rng: &mut R,
) -> Result<(TailSample, usize)> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::argument(format!("alpha must be positive, got {alpha}")));
    }
    let cap = w.sup().powf(alpha);
    let mut draws = 0;
    loop {
        draws += 1;
        let sample = sample_moving_max_w(nb, w, window, rng)?;
        let m = sample.config.max_score();
        if m <= 0.0 || rng.random::<f64>() * cap >= m.powf(alpha) {
            continue;
        }
        let anchor = sample.config.anchor_first_max()?;
        let q = sample.config.shift(&anchor)?.scale(ScalingMap::new(1.0, m)?);
        let mut out = TailSample::new(q, None, TailKind::Q);
        out.near_boundary = sample.near_boundary;
        return Ok((out, draws));
    }
}

/// Tail configurations seen from every exceedance of `u` in `x`: each
/// exceedance is moved to the origin, positions are divided by `r(u)`,
/// scores by `u`, and points beyond `cutoff_radius` (in scaled units) are
/// dropped. The cutoff defaults to half the scaled window side.
pub fn empirical_tail_configs(
    x: &Pattern,
    u: f64,
    law: &ScalingLaw,
    cutoff_radius: Option<f64>,
) -> Result<Vec<Pattern>> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::argument(format!("threshold must be positive, got {u}")));
    }
    let exceedances: Vec<usize> = (0..x.len()).filter(|&i| x.score(i) > u).collect();
    if exceedances.is_empty() {
        return Ok(Vec::new());
    }
    let ctx = SpatialContext::new(x)?;
    let r = law.r(u);
    let cutoff = match cutoff_radius {
        Some(c) if c > 0.0 => c,
        Some(c) => return Err(Error::argument(format!("cutoff radius must be positive, got {c}"))),
        None => min_side(ctx.window()) / 2.0 / r,
    };
    let d = x.dim();
    let mut out = Vec::with_capacity(exceedances.len());
    for i in exceedances {
        let center = x.position(i).to_vec();
        let mut near: Vec<(Vec<f64>, f64)> = ctx
            .grid()
            .ball(&center, cutoff * r)
            .into_iter()
            .map(|j| {
                let pos: Vec<f64> = ctx.displacement(i, j).iter().map(|v| v / r).collect();
                (pos, x.score(j) / u)
            })
            .filter(|(pos, _)| norm(pos) <= cutoff)
            .collect();
        near.sort_by(|a, b| lex_cmp(&a.0, &b.0));
        let coords = near.iter().flat_map(|(p, _)| p.iter().copied()).collect();
        let scores = near.iter().map(|(_, s)| *s).collect();
        out.push(Pattern::from_flat(d, coords, scores)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::RngStream;

    #[test]
    fn pareto_support() {
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..1000 {
            assert!(sample_pareto_eta(2.0, &mut rng).unwrap() >= 1.0);
        }
        assert!(sample_pareto_eta(0.0, &mut rng).is_err());
    }

    #[test]
    fn knn_y_structure() {
        let mut rng = RngStream::new(4, 0).rng();
        for _ in 0..200 {
            let y = sample_knn_tail_y(1, 2, &mut rng).unwrap();
            assert_eq!(y.config.len(), 2);
            let eta = y.eta.unwrap();
            assert!(eta > 1.0);
            assert_eq!(y.config.scores(), &[eta, eta]);
            assert!((1.0 / norm(y.config.position(1)) - eta).abs() < 1e-12 * eta);
        }
    }

    #[test]
    fn knn_theta_origin_score_is_one() {
        let mut rng = RngStream::new(5, 0).rng();
        for k in 1..4 {
            for _ in 0..200 {
                let t = sample_knn_spectral_theta(k, 2, &mut rng).unwrap();
                assert_eq!(t.config.len(), k + 1);
                let o = t.config.origin_index().unwrap();
                assert_eq!(t.config.score(o), 1.0);
            }
        }
    }

    #[test]
    fn knn_q_k1_on_half_sphere() {
        let mut rng = RngStream::new(6, 0).rng();
        for _ in 0..200 {
            let (q, _) = sample_knn_typical_q(1, 3, &mut rng).unwrap();
            assert_eq!(q.config.max_score(), 1.0);
            let other = (0..2).find(|&i| !is_origin(q.config.position(i))).unwrap();
            assert!(q.config.position(other)[0] >= 0.0);
        }
    }

    #[test]
    fn dirac_weight_gives_singletons() {
        let nb = Neighborhood::Knn { k: 1 };
        let window = SimWindow::centered(2, 8.0, Boundary::Torus).unwrap();
        let mut rng = RngStream::new(7, 0).rng();
        for _ in 0..20 {
            let w = sample_moving_max_w(&nb, &WeightFn::Dirac, &window, &mut rng).unwrap();
            assert_eq!(w.config.points(), vec![crate::MarkedPoint::new(vec![0.0, 0.0], 1.0)]);
            let th = sample_moving_max_theta(&nb, &WeightFn::Dirac, 2.0, &window, &mut rng).unwrap();
            assert_eq!(th.config.points(), vec![crate::MarkedPoint::new(vec![0.0, 0.0], 1.0)]);
        }
    }

    #[test]
    fn ball_mass_matches_closed_forms() {
        let pi = std::f64::consts::PI;
        assert!((ball_weight_mass(&WeightFn::Const1, 2.0, 1.5, 2) - pi * 2.25).abs() < 1e-10);
        // int_0^1 2 pi rho e^{-2 rho} d rho
        let exact = 2.0 * pi * (1.0 - 3.0 * (-2.0f64).exp()) / 4.0;
        let got = ball_weight_mass(&WeightFn::Exponential { rate: 1.0 }, 2.0, 1.0, 2);
        assert!((got - exact).abs() < 1e-10);
        assert_eq!(ball_weight_mass(&WeightFn::Dirac, 1.0, 1.0, 2), 0.0);
    }

    #[test]
    fn empirical_configs_are_centered_exceedances() {
        let window = SimWindow::cube(2, 10.0, Boundary::Torus).unwrap();
        let mut rng = RngStream::new(8, 0).rng();
        let p = sample_poisson(&window, 5.0, &mut rng).unwrap();
        let x = crate::scoring::apply_scores(&p, &ScoreRule::KnnReciprocal { k: 1 }).unwrap();
        let u = 4.0;
        let configs = empirical_tail_configs(&x, u, &ScalingLaw::knn(1, 2), Some(3.0)).unwrap();
        assert_eq!(configs.len(), x.scores().iter().filter(|s| **s > u).count());
        for c in &configs {
            let o = c.origin_index().unwrap();
            assert!(c.score(o) > 1.0);
        }
    }
}
