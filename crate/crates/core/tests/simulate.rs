use excl_core::simulate::{palm_augment, sample_marks, sample_poisson};
use excl_core::stats::{fit_pareto_eta, mean_and_se, poisson_block_count_test, uniform_positions_test};
use excl_core::{Boundary, MarkLaw, RngStream, SimWindow};

const SEED: u64 = 77;

#[test]
fn poisson_counts_over_many_windows() {
    let w = SimWindow::cube(2, 3.0, Boundary::Hard).unwrap();
    let counts: Vec<u64> = (0..10_000)
        .map(|i| sample_poisson(&w, 1.0, &mut RngStream::new(SEED, i).rng()).unwrap().len() as u64)
        .collect();
    let report = poisson_block_count_test(&counts, 9.0).unwrap();
    assert!(report.passed(), "{report:?}");
}

#[test]
fn positions_are_uniform_in_the_window() {
    let w = SimWindow::new(vec![-2.0, 1.0], vec![4.0, 2.0], Boundary::Torus).unwrap();
    let mut rng = RngStream::new(SEED, 1 << 40).rng();
    let p = sample_poisson(&w, 50.0, &mut rng).unwrap();
    let unit: Vec<Vec<f64>> = p.iter().map(|(t, _)| vec![(t[0] + 2.0) / 4.0, (t[1] - 1.0) / 2.0]).collect();
    assert!(uniform_positions_test(&unit).unwrap().passed());
}

#[test]
fn marks_are_pareto_and_independent_of_positions() {
    let w = SimWindow::cube(1, 20_000.0, Boundary::Hard).unwrap();
    let mut rng = RngStream::new(SEED, 2 << 40).rng();
    let p = sample_poisson(&w, 1.0, &mut rng).unwrap();
    let marked = sample_marks(&p, &MarkLaw::Pareto { alpha: 3.0, scale: 1.0 }, &mut rng).unwrap();
    assert!(fit_pareto_eta(marked.scores(), 3.0).unwrap().passed());

    // sample correlation of position with log-mark, scaled to a z-score
    let x: Vec<f64> = marked.iter().map(|(t, _)| t[0]).collect();
    let y: Vec<f64> = marked.iter().map(|(_, s)| s.ln()).collect();
    let (mx, _) = mean_and_se(&x);
    let (my, _) = mean_and_se(&y);
    let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let z = cov / (vx * vy).sqrt() * (x.len() as f64).sqrt();
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn palm_augmentation_keeps_the_original_points() {
    let w = SimWindow::centered(2, 5.0, Boundary::Hard).unwrap();
    let p = sample_poisson(&w, 1.0, &mut RngStream::new(SEED, 3 << 40).rng()).unwrap();
    let palm = palm_augment(&p, 2.5).unwrap();
    assert_eq!(palm.len(), p.len() + 1);
    let o = palm.origin_index().unwrap();
    assert_eq!(palm.score(o), 2.5);
    for (t, _) in p.iter() {
        assert!(palm.iter().any(|(u, _)| u == t));
    }
}
