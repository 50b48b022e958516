use proptest::prelude::*;

use excl_core::scoring::{apply_scores, knn_distance, Neighborhood, ScoreRule, SpatialContext, WeightFn};
use excl_core::simulate::{sample_marks, sample_poisson};
use excl_core::{Boundary, MarkLaw, Pattern, RngStream, SimWindow};

fn hard_pattern(seed: u64, side: f64, d: usize) -> Pattern {
    let w = SimWindow::centered(d, side, Boundary::Hard).unwrap();
    sample_poisson(&w, 1.0, &mut RngStream::new(seed, 0).rng()).unwrap()
}

fn brute_knn(p: &Pattern, i: usize, k: usize) -> f64 {
    let mut d: Vec<f64> = (0..p.len())
        .filter(|&j| j != i)
        .map(|j| p.position(i).iter().zip(p.position(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .collect();
    d.sort_by(f64::total_cmp);
    d[k - 1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn knn_scores_are_shift_invariant(seed in 0u64..1000, k in 1usize..4, zx in -50.0f64..50.0, zy in -50.0f64..50.0) {
        let p = hard_pattern(seed, 8.0, 2);
        prop_assume!(p.len() > k);
        let rule = ScoreRule::KnnReciprocal { k };
        let a = apply_scores(&p, &rule).unwrap();
        let b = apply_scores(&p.shift(&[zx, zy]).unwrap(), &rule).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.scores().iter().zip(b.scores()) {
            prop_assert!((x - y).abs() <= 1e-9 * x.max(1.0));
        }
    }

    #[test]
    fn exceedance_iff_ball_holds_k_points(seed in 0u64..1000, k in 1usize..4, u in 0.3f64..5.0) {
        let p = hard_pattern(seed, 6.0, 2);
        prop_assume!(p.len() > k);
        let scored = apply_scores(&p, &ScoreRule::KnnReciprocal { k }).unwrap();
        for i in 0..scored.len() {
            let t = scored.position(i);
            let inside = (0..scored.len())
                .filter(|&j| j != i)
                .filter(|&j| t.iter().zip(scored.position(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() < 1.0 / u)
                .count();
            prop_assert_eq!(scored.score(i) > u, inside >= k);
        }
    }

    #[test]
    fn grid_search_matches_brute_force(seed in 0u64..1000, k in 1usize..5, d in 1usize..4) {
        let p = hard_pattern(seed, 5.0, d);
        prop_assume!(p.len() > k);
        let ctx = SpatialContext::new(&p).unwrap();
        for i in 0..p.len() {
            let others: Vec<f64> = (0..p.len()).filter(|&j| j != i).flat_map(|j| p.position(j).to_vec()).collect();
            let brute = brute_knn(&p, i, k);
            prop_assert!((ctx.knn_distance(i, k).unwrap() - brute).abs() <= 1e-12);
            prop_assert!((knn_distance(p.position(i), &others, k).unwrap() - brute).abs() <= 1e-12);
        }
    }

    #[test]
    fn moving_max_ball_const1_is_local_mark_maximum(seed in 0u64..1000, r in 0.2f64..1.5) {
        let w = SimWindow::centered(2, 6.0, Boundary::Hard).unwrap();
        let mut rng = RngStream::new(seed, 1).rng();
        let p = sample_marks(&sample_poisson(&w, 1.0, &mut rng).unwrap(), &MarkLaw::Pareto { alpha: 2.0, scale: 1.0 }, &mut rng).unwrap();
        prop_assume!(!p.is_empty());
        let rule = ScoreRule::MovingMax { neighborhood: Neighborhood::Ball { radius: r }, weight: WeightFn::Const1 };
        let scored = apply_scores(&p, &rule).unwrap();
        prop_assert_eq!(scored.len(), p.len());
        for i in 0..p.len() {
            let t = p.position(i);
            let expected = (0..p.len())
                .filter(|&j| t.iter().zip(p.position(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() <= r)
                .map(|j| p.score(j))
                .fold(0.0, f64::max);
            prop_assert_eq!(scored.score(i), expected);
            prop_assert!(scored.score(i) >= p.score(i));
        }
    }

    #[test]
    fn moving_max_scores_bounded_by_weighted_marks(seed in 0u64..1000, rate in 0.2f64..3.0, k in 1usize..4) {
        let w = SimWindow::centered(2, 6.0, Boundary::Hard).unwrap();
        let mut rng = RngStream::new(seed, 2).rng();
        let p = sample_marks(&sample_poisson(&w, 1.0, &mut rng).unwrap(), &MarkLaw::Pareto { alpha: 2.0, scale: 1.0 }, &mut rng).unwrap();
        prop_assume!(p.len() > k);
        let weight = WeightFn::Exponential { rate };
        let rule = ScoreRule::MovingMax { neighborhood: Neighborhood::Knn { k }, weight: weight.clone() };
        let scored = apply_scores(&p, &rule).unwrap();
        let top = p.max_score();
        for s in scored.scores() {
            prop_assert!(*s > 0.0 && *s <= weight.sup() * top);
        }
    }
}
