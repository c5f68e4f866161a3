//! Built-in property battery for `gpca props`.
//!
//! Fast deterministic spot checks of the library's core invariants; each
//! prints one `prop <name>: PASS|FAIL` line. The quadrature used to
//! cross-check the closed-form moments is implemented here, independently of
//! the library.

use std::process::ExitCode;
use std::sync::Arc;

use ndarray::{Array1, Array2};

use gpca::generators::{orthonormalize_columns, GenerativeRange, GroupLayout};
use gpca::linalg;
use gpca::metrics::check_distance_equivalence;
use gpca::models::{
    population_matrix, spiked_covariance_matrix, spiked_wigner_matrix, truncated_moments,
    GroundTruth,
};
use gpca::rng::{Rng, Seed};
use gpca::solvers::{run_solver, InitStrategy, SolverConfig};
use gpca::sweep::{run_sweep, ModelSpec, RangeSpec, SolverSpec, SweepSpec};

struct Battery {
    base_seed: u64,
    failures: usize,
}

impl Battery {
    fn check(&mut self, name: &str, outcome: Result<bool, gpca::Error>) {
        let (verdict, detail) = match outcome {
            Ok(true) => ("PASS", String::new()),
            Ok(false) => ("FAIL", String::new()),
            Err(err) => ("FAIL", format!(" ({err})")),
        };
        if verdict == "FAIL" {
            self.failures += 1;
        }
        println!("prop {name}: {verdict}{detail}");
    }

    fn rng(&self, stream: u64) -> Rng {
        Rng::new(Seed::new(self.base_seed, stream))
    }
}

fn random_unit(n: usize, rng: &mut Rng) -> Array1<f64> {
    loop {
        let v = Array1::from_shape_fn(n, |_| rng.gaussian());
        if let Ok(unit) = linalg::normalized(v.view()) {
            return unit;
        }
    }
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, depth: usize, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let coarse = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let left = (m - a) / 6.0 * (f(a) + 4.0 * f(lm) + f(m));
    let right = (b - m) / 6.0 * (f(m) + 4.0 * f(rm) + f(b));
    let fine = left + right;
    if depth == 0 || (fine - coarse).abs() <= 15.0 * tol {
        fine + (fine - coarse) / 15.0
    } else {
        simpson(f, a, m, depth - 1, tol / 2.0) + simpson(f, m, b, depth - 1, tol / 2.0)
    }
}

pub fn run(base_seed: u64) -> Result<ExitCode, gpca::Error> {
    let mut battery = Battery {
        base_seed,
        failures: 0,
    };

    battery.check("seed_reproducibility", {
        let mut rng = battery.rng(0);
        let x = random_unit(12, &mut rng);
        spiked_covariance_matrix(&x, 1.0, 30, Seed::new(base_seed, 1)).and_then(|(a, _)| {
            let (b, _) = spiked_covariance_matrix(&x, 1.0, 30, Seed::new(base_seed, 1))?;
            let (c, _) = spiked_covariance_matrix(&x, 1.0, 30, Seed::new(base_seed, 2))?;
            Ok(a.v() == b.v() && a.v() != c.v())
        })
    });

    battery.check("matrix_symmetry", {
        let mut rng = battery.rng(3);
        let x = random_unit(16, &mut rng);
        let params = truncated_moments(1.0, 5.0)?;
        let cov = spiked_covariance_matrix(&x, 1.0, 40, Seed::new(base_seed, 4))?.0;
        let wig = spiked_wigner_matrix(&x, 2.0, Seed::new(base_seed, 5))?.0;
        let pr =
            gpca::models::phase_retrieval_matrix(&x, 40, &params, Seed::new(base_seed, 6))?.0;
        Ok([cov, wig, pr]
            .iter()
            .all(|m| linalg::max_asymmetry(m.v().view()) == 0.0))
    });

    battery.check("projection_unit_idempotent_scale_invariant", {
        let mut rng = battery.rng(7);
        let raw = Array2::from_shape_fn((12, 3), |_| rng.gaussian());
        let ranges = vec![
            GenerativeRange::sphere(12),
            GenerativeRange::group_sparse(12, 4)?,
            GenerativeRange::constrained_group_sparse(12, 4, 0.5)?,
            GenerativeRange::linear(orthonormalize_columns(raw)?)?,
        ];
        let mut ok = true;
        for _ in 0..50 {
            let x = Array1::from_shape_fn(12, |_| rng.gaussian());
            for range in &ranges {
                let Ok(p) = range.project(x.view()) else {
                    continue;
                };
                let unit = (linalg::l2_norm(p.view()) - 1.0).abs() <= 1e-10;
                let pp = range.project(p.view())?;
                let idem = linalg::l2_norm((&pp - &p).view()) <= 1e-8;
                let scaled = range.project(x.mapv(|v| 17.0 * v).view())?;
                let scale_inv = linalg::l2_norm((&scaled - &p).view()) <= 1e-10;
                ok &= unit && idem && scale_inv;
            }
        }
        Ok(ok)
    });

    battery.check("group_sparse_projection_optimality", {
        let layout = GroupLayout::new(8, 4).unwrap();
        let mut rng = battery.rng(8);
        let mut ok = true;
        for _ in 0..50 {
            let x = Array1::from_shape_fn(8, |_| rng.gaussian());
            let ours = gpca::generators::project_group_sparse(x.view(), &layout)?;
            let d_ours = linalg::l2_norm((&ours - &x).view());
            // Exhaustive support enumeration (2 choices per group).
            for mask in 0..16u32 {
                let mut candidate = Array1::zeros(8);
                let mut mass = 0.0;
                for g in 0..4 {
                    let idx = 2 * g + ((mask >> g) & 1) as usize;
                    candidate[idx] = x[idx];
                    mass += x[idx] * x[idx];
                }
                if mass == 0.0 {
                    continue;
                }
                let norm = mass.sqrt();
                candidate.mapv_inplace(|v| v / norm);
                ok &= d_ours <= linalg::l2_norm((&candidate - &x).view()) + 1e-9;
            }
        }
        Ok(ok)
    });

    battery.check("q_monotone_on_psd", {
        let range = Arc::new(GenerativeRange::group_sparse(16, 4)?);
        let mut ok = true;
        for trial in 0..5u64 {
            let mut rng = battery.rng(9 + trial);
            let x = range.sample(&mut rng)?;
            let truth = GroundTruth::new(x, 1.0, 0.35)?;
            let v = population_matrix(&truth);
            let cfg = SolverConfig::ppower(25, range.clone())
                .with_init(InitStrategy::RandomUnit);
            let run = run_solver(&v, &cfg, Seed::new(base_seed, 20 + trial))?;
            ok &= run.completed();
            ok &= run.q_values.windows(2).all(|p| p[1] >= p[0] - 1e-9);
        }
        Ok(ok)
    });

    battery.check("solver_degenerations", {
        let mut rng = battery.rng(30);
        let x = random_unit(16, &mut rng);
        let (obs, _) = spiked_covariance_matrix(&x, 1.0, 40, Seed::new(base_seed, 31))?;
        let power = run_solver(&obs, &SolverConfig::power(20), Seed::new(0, 0))?;
        let sphere = run_solver(
            &obs,
            &SolverConfig::ppower(20, Arc::new(GenerativeRange::sphere(16))),
            Seed::new(0, 0),
        )?;
        let full_q = run_solver(&obs, &SolverConfig::tpower(20, 16), Seed::new(0, 0))?;
        let close = |a: &Vec<Array1<f64>>, b: &Vec<Array1<f64>>, tol: f64| {
            a.iter()
                .zip(b)
                .all(|(wa, wb)| linalg::l2_norm((wa - wb).view()) <= tol)
        };
        Ok(close(&power.iterates, &sphere.iterates, 1e-12)
            && close(&power.iterates, &full_q.iterates, 1e-12))
    });

    battery.check("distance_sandwich", {
        let mut ok = true;
        for &n in &[2usize, 8, 64] {
            let mut rng = battery.rng(40 + n as u64);
            for _ in 0..300 {
                let a = random_unit(n, &mut rng);
                let b = random_unit(n, &mut rng);
                match check_distance_equivalence(a.view(), b.view()) {
                    Ok((lhs, mid, rhs)) => ok &= lhs <= mid + 1e-12 && mid <= rhs + 1e-12,
                    Err(_) => ok = false,
                }
            }
        }
        Ok(ok)
    });

    battery.check("moments_match_quadrature", {
        let pdf = |g: f64| (-0.5 * g * g).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut ok = true;
        for &l in &[1.0, 1.1, 1.5, 2.0] {
            for &u in &[3.0, 5.0, 10.0] {
                let p = truncated_moments(l, u)?;
                let gamma_q = 2.0 * simpson(&|g| g * pdf(g), l, u, 40, 1e-12);
                let beta_q = 2.0 * simpson(&|g| (g * g * g - g) * pdf(g), l, u, 40, 1e-12);
                ok &= (p.gamma() - gamma_q).abs() <= 1e-8;
                ok &= (p.beta() - beta_q).abs() <= 1e-8;
                ok &= p.beta() > 0.0;
            }
        }
        Ok(ok)
    });

    battery.check("sweep_determinism", {
        let spec = SweepSpec {
            model: ModelSpec::SpikedCovariance { n: 24 },
            range: RangeSpec::GroupSparse { k: 4 },
            solvers: vec![SolverSpec::Power, SolverSpec::PPower],
            m_values: vec![40],
            beta_values: vec![1.0],
            trials: 3,
            restarts: 2,
            iterations: 10,
            shift: 0.0,
            project_init: true,
            base_seed,
            output: std::path::PathBuf::from("unused"),
        };
        let strip = |result: &gpca::sweep::SweepResult| {
            result
                .rows
                .iter()
                .cloned()
                .map(|mut r| {
                    r.wall_time = 0.0;
                    r
                })
                .collect::<Vec<_>>()
        };
        let a = run_sweep(&spec, 1)?;
        let b = run_sweep(&spec, 0)?;
        Ok(strip(&a) == strip(&b))
    });

    if battery.failures == 0 {
        println!("all properties passed");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{} propert(y/ies) failed", battery.failures);
        Ok(ExitCode::from(1))
    }
}
