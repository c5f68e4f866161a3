//! Projection operators against independent oracles: exhaustive support
//! enumeration for the group-sparse kinds, dense random search for the linear
//! and ReLU-net ranges, and finite differences for the latent gradient.

mod common;

use gpca::generators::{
    orthonormalize_columns, project_constrained_group_sparse, project_group_sparse,
    project_linear_range, project_relu_net, GenerativeRange, GroupLayout, LatentOptConfig,
    ReluNetWeights,
};
use gpca::rng::{Rng, Seed};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn distance(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    common::l2(&(a - b))
}

#[test]
fn group_sparse_never_beaten_by_brute_force() {
    let mut rng = common::test_rng(10);
    for &(n, k) in &[(4usize, 2usize), (6, 2), (6, 3), (8, 2), (8, 4)] {
        let layout = GroupLayout::new(n, k).unwrap();
        for _ in 0..200 {
            let x = Array1::from_shape_fn(n, |_| rng.gaussian());
            let ours = project_group_sparse(x.view(), &layout).unwrap();
            let oracle = common::brute_force_group_sparse(&x, &layout);
            let d_ours = distance(&ours, &x);
            let d_oracle = distance(&oracle, &x);
            assert!(
                d_ours <= d_oracle + 1e-9,
                "brute force found a closer point: {d_ours} vs {d_oracle} (n={n}, k={k})"
            );
        }
    }
}

#[test]
fn constrained_group_sparse_never_beaten_by_grid_search() {
    let mut rng = common::test_rng(11);
    for &(n, k) in &[(4usize, 2usize), (6, 3), (8, 4)] {
        let layout = GroupLayout::new(n, k).unwrap();
        for _ in 0..100 {
            let x = Array1::from_shape_fn(n, |_| rng.gaussian());
            let ours = project_constrained_group_sparse(x.view(), &layout, 0.5).unwrap();
            let oracle = common::brute_force_constrained_group_sparse(&x, &layout, 0.5, 20_000);
            let d_ours = distance(&ours, &x);
            let d_oracle = distance(&oracle, &x);
            assert!(
                d_ours <= d_oracle + 1e-9,
                "grid search found a closer point: {d_ours} vs {d_oracle} (n={n}, k={k})"
            );
        }
    }
}

#[test]
fn linear_range_matches_dense_random_search() {
    // 10^6 random unit vectors of the range can come close to, but never
    // beat, the exact projection; and the best sample must come close to it.
    let mut rng = common::test_rng(12);
    let raw = Array2::from_shape_fn((8, 3), |_| rng.gaussian());
    let basis = orthonormalize_columns(raw).unwrap();
    let x = Array1::from_shape_fn(8, |_| rng.gaussian());
    let ours = project_linear_range(x.view(), &basis).unwrap();
    let d_ours = distance(&ours, &x);

    let mut best = f64::INFINITY;
    for _ in 0..1_000_000 {
        let z = Array1::from_shape_fn(3, |_| rng.gaussian());
        let w = basis.dot(&z);
        let norm = common::l2(&w);
        if norm == 0.0 {
            continue;
        }
        let w = w.mapv(|v| v / norm);
        best = best.min(distance(&w, &x));
    }
    assert!(
        d_ours <= best + 1e-12,
        "random search beat the projection: {d_ours} vs {best}"
    );
    assert!(
        best - d_ours <= 0.01,
        "random search should approach the projection: {best} vs {d_ours}"
    );
}

#[test]
fn relu_net_projection_beats_random_latent_search() {
    // The Adam projection must do at least as well as 10^5 random latents.
    let net = ReluNetWeights::random(64, 32, 8, Seed::new(2001, 0));
    let mut rng = common::test_rng(13);
    let x = common::random_unit(64, &mut rng);

    let mut search_best = f64::INFINITY;
    let mut search_rng = Rng::new(Seed::new(2001, 1));
    for _ in 0..100_000 {
        let z = {
            let direction = Array1::from_shape_fn(8, |_| search_rng.gaussian());
            let norm = common::l2(&direction);
            let radius = search_rng.uniform().powf(1.0 / 8.0);
            direction.mapv(|v| v * radius / norm)
        };
        if let Some(g) = net.forward(z.view()) {
            search_best = search_best.min(distance(&g, &x));
        }
    }

    let opt = LatentOptConfig {
        seed: Seed::new(2001, 2),
        ..LatentOptConfig::default()
    };
    let report = project_relu_net(x.view(), &net, &opt).unwrap();
    assert!(report.converged);
    assert!(
        report.residual <= search_best,
        "latent search beat Adam: {} vs {search_best}",
        report.residual
    );
}

#[test]
fn relu_net_gradient_matches_central_differences() {
    let net = ReluNetWeights::random(24, 16, 6, Seed::new(2002, 0));
    let mut rng = common::test_rng(14);
    let step = 1e-6;
    let mut checked = 0;
    while checked < 25 {
        let z = Array1::from_shape_fn(6, |_| rng.gaussian());
        let x = common::random_unit(24, &mut rng);
        let Some(eval) = net.latent_objective(z.view(), x.view()) else {
            continue;
        };
        // Stay away from relu kinks so the finite difference is valid.
        if net.w1().dot(&z).iter().any(|a| a.abs() < 1e-3) {
            continue;
        }
        let direction = common::random_unit(6, &mut rng);
        let plus = &z + &direction.mapv(|v| v * step);
        let minus = &z - &direction.mapv(|v| v * step);
        let (Some(f_plus), Some(f_minus)) = (
            net.latent_objective(plus.view(), x.view()),
            net.latent_objective(minus.view(), x.view()),
        ) else {
            continue;
        };
        let numeric = (f_plus.loss - f_minus.loss) / (2.0 * step);
        let analytic = eval.grad.dot(&direction);
        let scale = analytic.abs().max(numeric.abs()).max(1e-8);
        assert!(
            (numeric - analytic).abs() / scale <= 1e-5,
            "gradient mismatch: analytic {analytic}, numeric {numeric}"
        );
        checked += 1;
    }
}

#[test]
fn projection_report_residual_is_distance_to_point() {
    let range = GenerativeRange::group_sparse(8, 2).unwrap();
    let mut rng = common::test_rng(15);
    let x = Array1::from_shape_fn(8, |_| rng.gaussian());
    let report = range.project_report(x.view()).unwrap();
    assert!(report.converged);
    assert_eq!(report.restarts_used, 0);
    let expect = distance(&report.point, &x);
    assert!((report.residual - expect).abs() < 1e-12);
}

fn exact_ranges(n: usize) -> Vec<GenerativeRange> {
    let mut rng = common::test_rng(16);
    let raw = Array2::from_shape_fn((n, 3), |_| rng.gaussian());
    vec![
        GenerativeRange::sphere(n),
        GenerativeRange::group_sparse(n, 4).unwrap(),
        GenerativeRange::constrained_group_sparse(n, 4, 0.5).unwrap(),
        GenerativeRange::linear(orthonormalize_columns(raw).unwrap()).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_projections_are_unit_idempotent_and_scale_invariant(
        entries in proptest::collection::vec(-10.0f64..10.0, 12),
        scale in 1e-3f64..1e3,
    ) {
        let x = Array1::from_vec(entries);
        prop_assume!(common::l2(&x) > 1e-6);
        for range in exact_ranges(12) {
            let Ok(p) = range.project(x.view()) else { continue };
            // Unit norm within 1e-10.
            prop_assert!((common::l2(&p) - 1.0).abs() <= 1e-10);
            // Idempotence within 1e-8.
            let pp = range.project(p.view()).unwrap();
            prop_assert!(distance(&pp, &p) <= 1e-8, "{}", range.kind_name());
            // Positive-scale invariance within 1e-10.
            let scaled = x.mapv(|v| v * scale);
            let ps = range.project(scaled.view()).unwrap();
            prop_assert!(distance(&ps, &p) <= 1e-10, "{}", range.kind_name());
        }
    }
}
