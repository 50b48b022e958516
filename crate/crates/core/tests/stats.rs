use rand::Rng;

use excl_core::scoring::{Neighborhood, WeightFn};
use excl_core::stats::{
    extremal_index_anchor, extremal_index_ratio, fit_pareto_eta, kappa_estimate, ks_one_sample, theta2_closed_form,
    Anchor,
};
use excl_core::tail::{sample_moving_max_w, sample_origin_neighborhood, sample_pareto_eta};
use excl_core::{Model, Pattern, RngStream};

const SEED: u64 = 8086;

#[test]
fn ks_test_is_calibrated_under_the_null() {
    let passes = (0..1000)
        .filter(|&i| {
            let mut rng = RngStream::new(SEED, i).rng();
            let x: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
            ks_one_sample(&x, |v| v.clamp(0.0, 1.0), "uniform").unwrap().passed()
        })
        .count();
    assert!(passes >= 980, "{passes} of 1000 passed at level 0.01");
}

#[test]
fn pareto_fit_detects_a_wrong_tail_index() {
    let mut rng = RngStream::new(SEED, 1 << 40).rng();
    let x: Vec<f64> = (0..2000).map(|_| sample_pareto_eta(2.0, &mut rng).unwrap()).collect();
    assert!(fit_pareto_eta(&x, 2.0).unwrap().passed());
    assert!(!fit_pareto_eta(&x, 3.0).unwrap().passed());
}

#[test]
fn theta2_increases_with_dimension_and_stays_above_one_third() {
    let values: Vec<f64> = (1..=6).map(|d| theta2_closed_form(d).unwrap()).collect();
    assert!(values.windows(2).all(|w| 1.0 - w[1] < 1.0 - w[0]), "{values:?}");
    assert!(values.iter().all(|v| *v > 1.0 / 3.0 && *v < 1.0));
}

#[test]
fn anchor_and_ratio_routes_agree_for_moving_maxima() {
    let model = Model::MovingMax {
        neighborhood: Neighborhood::Ball { radius: 1.0 },
        weight: WeightFn::Exponential { rate: 1.0 },
        alpha: 2.0,
        d: 2,
        mark_scale: 1.0,
        kappa: None,
    };
    let samples: Vec<_> = (0..20_000).map(|i| model.sample_theta(&mut RngStream::new(SEED, (2 << 40) | i).rng()).unwrap()).collect();
    let anchor = extremal_index_anchor(&samples, Anchor::FirstMax).unwrap();
    let ratio = extremal_index_ratio(&samples, 2.0).unwrap();
    let tol = 3.0 * (anchor.std_error.powi(2) + ratio.std_error.powi(2)).sqrt();
    assert!((anchor.value - ratio.value).abs() <= tol, "{anchor:?} vs {ratio:?}");
}

#[test]
fn kappa_of_ball_neighbourhood_matches_closed_form() {
    let (nb, w) = (Neighborhood::Ball { radius: 0.8 }, WeightFn::Exponential { rate: 2.0 });
    let model = Model::MovingMax { neighborhood: nb.clone(), weight: w.clone(), alpha: 1.5, d: 2, mark_scale: 1.0, kappa: None };
    let exact = model.kappa().unwrap();
    let window = model.sampler_window().unwrap();
    let neighborhoods: Vec<Pattern> = (0..5000)
        .map(|i| sample_origin_neighborhood(&nb, &window, &mut RngStream::new(SEED, (3 << 40) | i).rng()).unwrap().member_pattern().unwrap())
        .collect();
    let ws: Vec<_> = (0..5000)
        .map(|i| sample_moving_max_w(&nb, &w, &window, &mut RngStream::new(SEED, (4 << 40) | i).rng()).unwrap())
        .collect();
    let k = kappa_estimate(&neighborhoods, &ws, &w, 1.5).unwrap();
    assert!((k.value - exact).abs() <= 4.0 * k.std_error, "{k:?} vs {exact}");
    assert!((k.w_value - exact).abs() <= 4.0 * k.w_std_error, "{k:?} vs {exact}");
}
