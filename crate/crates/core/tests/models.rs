//! Model-level integration tests: large-sample convergence to the population
//! matrices, spectral sanity of the Wigner spike, quadrature cross-checks of
//! the truncated moments, and the binary serialization round trip.

mod common;

use gpca::linalg::frobenius_norm;
use gpca::models::{
    phase_retrieval_matrix, population_matrix, spiked_covariance_matrix, spiked_wigner_matrix,
    truncated_moments, GroundTruth,
};
use gpca::rng::Seed;
use gpca::{io, linalg};
use ndarray::{Array1, Array2};

fn unit_vector(n: usize, tag: u64) -> Array1<f64> {
    let mut rng = common::test_rng(tag);
    common::random_unit(n, &mut rng)
}

#[test]
fn covariance_large_sample_deviation_is_small() {
    // One large-m draw; the achieved deviation is ~0.0064 for this seed, well
    // under the 0.05 budget.
    let x = unit_vector(4, 1);
    let (obs, _) = spiked_covariance_matrix(&x, 2.0, 1_000_000, Seed::new(1001, 0)).unwrap();
    let expected = linalg::outer(x.view(), x.view()).mapv(|v| 2.0 * v);
    let deviation = frobenius_norm((obs.v() - &expected).view());
    assert!(deviation <= 0.05, "deviation {deviation}");
}

#[test]
fn wigner_top_eigenvector_aligns_at_high_snr() {
    // beta = 3 is far above the spectral threshold at n = 256, so the top
    // eigenvector of one draw must correlate strongly with the spike. The
    // eigenvector comes from the Jacobi oracle, not from any solver under
    // test.
    let x = unit_vector(256, 2);
    let (obs, _) = spiked_wigner_matrix(&x, 3.0, Seed::new(1002, 0)).unwrap();
    let (top_value, top_vector) = common::jacobi_top_eigenpair(obs.v());
    let cossim = top_vector.dot(&x).abs() / common::l2(&top_vector);
    assert!(top_value > 2.0, "top eigenvalue {top_value}");
    assert!(cossim >= 0.8, "cossim {cossim}");
}

#[test]
fn phase_retrieval_large_sample_deviation_is_small() {
    let x = unit_vector(4, 3);
    let params = truncated_moments(1.0, 5.0).unwrap();
    let (obs, truth) =
        phase_retrieval_matrix(&x, 200_000, &params, Seed::new(1003, 0)).unwrap();
    assert_eq!(truth.lambda1(), params.beta());
    let expected = linalg::outer(x.view(), x.view()).mapv(|v| params.beta() * v);
    let deviation = frobenius_norm((obs.v() - &expected).view());
    assert!(deviation <= 0.05, "deviation {deviation}");
}

#[test]
fn empirical_means_approach_population_on_doubling_schedule() {
    // Averaging N independently seeded draws must close in on E[V]; checked
    // per fixed seed family on N in {4, 16, 64}.
    let n = 16;
    let x = unit_vector(n, 4);
    let params = truncated_moments(1.0, 5.0).unwrap();

    type MatrixBuilder = Box<dyn Fn(u64) -> Array2<f64>>;
    let builders: Vec<(&str, MatrixBuilder, Array2<f64>)> = vec![
        (
            "spiked-covariance",
            Box::new({
                let x = x.clone();
                move |stream| {
                    spiked_covariance_matrix(&x, 1.0, 50, Seed::new(1004, stream))
                        .unwrap()
                        .0
                        .v()
                        .clone()
                }
            }),
            linalg::outer(x.view(), x.view()),
        ),
        (
            "spiked-wigner",
            Box::new({
                let x = x.clone();
                move |stream| {
                    spiked_wigner_matrix(&x, 1.0, Seed::new(1005, stream))
                        .unwrap()
                        .0
                        .v()
                        .clone()
                }
            }),
            linalg::outer(x.view(), x.view()),
        ),
        (
            "phase-retrieval",
            Box::new({
                let x = x.clone();
                move |stream| {
                    phase_retrieval_matrix(&x, 50, &params, Seed::new(1006, stream))
                        .unwrap()
                        .0
                        .v()
                        .clone()
                }
            }),
            linalg::outer(x.view(), x.view()).mapv(|v| params.beta() * v),
        ),
    ];

    for (name, build, population) in builders {
        let mut errors = Vec::new();
        for &count in &[4usize, 16, 64] {
            let mut mean = Array2::<f64>::zeros((n, n));
            for stream in 0..count {
                mean += &build(stream as u64);
            }
            mean.mapv_inplace(|v| v / count as f64);
            errors.push(frobenius_norm((&mean - &population).view()));
        }
        assert!(
            errors[0] >= errors[1] && errors[1] >= errors[2],
            "{name}: errors not non-increasing: {errors:?}"
        );
    }
}

#[test]
fn closed_form_moments_match_quadrature_on_grid() {
    for &l in &[1.1, 1.5, 2.0] {
        for &u in &[3.0, 5.0, 10.0] {
            let params = truncated_moments(l, u).unwrap();
            let gamma_q = common::gamma_by_quadrature(l, u);
            let beta_q = common::beta_by_quadrature(l, u);
            assert!(
                (params.gamma() - gamma_q).abs() <= 1e-8,
                "gamma mismatch at ({l},{u}): {} vs {gamma_q}",
                params.gamma()
            );
            assert!(
                (params.beta() - beta_q).abs() <= 1e-8,
                "beta mismatch at ({l},{u}): {} vs {beta_q}",
                params.beta()
            );
            assert!(params.beta() > 0.0);
        }
    }
}

#[test]
fn matrix_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("matrix.bin");
    let x = unit_vector(12, 5);
    let (obs, _) = spiked_covariance_matrix(&x, 1.5, 64, Seed::new(1007, 0)).unwrap();
    io::write_matrix_to_path(&path, &obs).unwrap();
    let back = io::read_matrix_from_path(&path).unwrap();
    assert_eq!(back.v().as_slice().unwrap(), obs.v().as_slice().unwrap());
    assert_eq!(back.m(), obs.m());
    assert_eq!(back.seed(), obs.seed());
    assert_eq!(back.provenance(), obs.provenance());
}

#[test]
fn population_matrix_spectrum_from_oracle() {
    let x = unit_vector(10, 6);
    let truth = GroundTruth::new(x.clone(), 2.0, 1.0).unwrap();
    let v = population_matrix(&truth);
    let (values, _) = common::jacobi_eigen(v.v());
    let mut sorted = values;
    sorted.sort_by(f64::total_cmp);
    let top = sorted[sorted.len() - 1];
    let second = sorted[sorted.len() - 2];
    assert!((top - 2.0).abs() < 1e-10, "top {top}");
    assert!((second - 1.0).abs() < 1e-10, "second {second}");
}

#[test]
#[ignore = "one-off calibration probe; run with --ignored to re-measure"]
fn print_large_sample_deviations() {
    let x = unit_vector(4, 1);
    let (obs, _) = spiked_covariance_matrix(&x, 2.0, 1_000_000, Seed::new(1001, 0)).unwrap();
    let expected = linalg::outer(x.view(), x.view()).mapv(|v| 2.0 * v);
    eprintln!(
        "covariance deviation = {}",
        frobenius_norm((obs.v() - &expected).view())
    );

    let x = unit_vector(4, 3);
    let params = truncated_moments(1.0, 5.0).unwrap();
    let (obs, _) = phase_retrieval_matrix(&x, 200_000, &params, Seed::new(1003, 0)).unwrap();
    let expected = linalg::outer(x.view(), x.view()).mapv(|v| params.beta() * v);
    eprintln!(
        "phase retrieval deviation = {}",
        frobenius_norm((obs.v() - &expected).view())
    );
}
