//! Independent oracles for the integration suites.
//!
//! Everything here deliberately avoids the code paths it is used to check:
//! the eigensolver is a cyclic Jacobi sweep (no power iteration), moments are
//! integrated with adaptive Simpson (no closed forms), and projections are
//! brute-forced over supports or random candidate sets.

#![allow(dead_code)]

use gpca::generators::GroupLayout;
use gpca::rng::{Rng, Seed};
use ndarray::{Array1, Array2};

pub fn l2(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

pub fn random_unit(n: usize, rng: &mut Rng) -> Array1<f64> {
    loop {
        let v = Array1::from_shape_fn(n, |_| rng.gaussian());
        let norm = l2(&v);
        if norm > 0.0 {
            return v.mapv(|x| x / norm);
        }
    }
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns the eigenvalues (unsorted, on the rotated diagonal) and the
/// accumulated orthogonal matrix whose columns are the eigenvectors.
pub fn jacobi_eigen(matrix: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols());
    let mut a = matrix.clone();
    let mut v: Array2<f64> = Array2::eye(n);

    for _sweep in 0..60 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[[i, j]] * a[[i, j]];
            }
        }
        if off.sqrt() < 1e-12 {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = c * aip - s * aiq;
                    a[[i, q]] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[[p, i]];
                    let aqi = a[[q, i]];
                    a[[p, i]] = c * api - s * aqi;
                    a[[q, i]] = s * api + c * aqi;
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }
    let eigenvalues = (0..n).map(|i| a[[i, i]]).collect();
    (eigenvalues, v)
}

/// Top eigenpair via [`jacobi_eigen`].
pub fn jacobi_top_eigenpair(matrix: &Array2<f64>) -> (f64, Array1<f64>) {
    let (values, vectors) = jacobi_eigen(matrix);
    let (best, &value) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    (value, vectors.column(best).to_owned())
}

fn simpson_rule(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(fa, flm, fm, m - a);
    let right = simpson_rule(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson_rule(fa, fm, fb, b - a);
    simpson_recurse(&f, a, b, fa, fm, fb, whole, tol, 48)
}

fn standard_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Quadrature value of `E[|g|·1{l<|g|<u}]`.
pub fn gamma_by_quadrature(l: f64, u: f64) -> f64 {
    2.0 * adaptive_simpson(|g| g * standard_normal_pdf(g), l, u, 1e-12)
}

/// Quadrature value of `E[(|g|³−|g|)·1{l<|g|<u}]`.
pub fn beta_by_quadrature(l: f64, u: f64) -> f64 {
    2.0 * adaptive_simpson(|g| (g * g * g - g) * standard_normal_pdf(g), l, u, 1e-12)
}

/// Enumerates every one-nonzero-per-group support and returns the closest
/// unit-norm candidate to `x`; the oracle for the group-sparse projection.
pub fn brute_force_group_sparse(x: &Array1<f64>, layout: &GroupLayout) -> Array1<f64> {
    let k = layout.k();
    let size = layout.group_size();
    let mut counters = vec![0usize; k];
    let mut best: Option<(f64, Array1<f64>)> = None;
    loop {
        let mut candidate = Array1::zeros(layout.n());
        let mut mass = 0.0;
        for (g, &offset) in counters.iter().enumerate() {
            let idx = layout.group(g).start + offset;
            candidate[idx] = x[idx];
            mass += x[idx] * x[idx];
        }
        if mass > 0.0 {
            let norm = mass.sqrt();
            candidate.mapv_inplace(|v| v / norm);
            let diff = &candidate - x;
            let dist = l2(&diff);
            if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                best = Some((dist, candidate));
            }
        }
        // Advance the mixed-radix counter over supports.
        let mut g = 0;
        loop {
            if g == k {
                return best.expect("non-zero input has a best support").1;
            }
            counters[g] += 1;
            if counters[g] < size {
                break;
            }
            counters[g] = 0;
            g += 1;
        }
    }
}

/// Grid-search oracle for the floor-constrained group-sparse projection:
/// enumerates the supports of the first `k−1` groups and scans the last
/// coordinate over `[floor, 1]`.
pub fn brute_force_constrained_group_sparse(
    x: &Array1<f64>,
    layout: &GroupLayout,
    floor: f64,
    grid: usize,
) -> Array1<f64> {
    let n = layout.n();
    let k = layout.k();
    let size = layout.group_size();
    let last = n - 1;
    if k == 1 {
        let mut only = Array1::zeros(n);
        only[last] = 1.0;
        return only;
    }
    let mut counters = vec![0usize; k - 1];
    let mut best: Option<(f64, Array1<f64>)> = None;
    loop {
        let support: Vec<usize> = counters
            .iter()
            .enumerate()
            .map(|(g, &offset)| layout.group(g).start + offset)
            .collect();
        let rest_norm = support.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
        for step in 0..=grid {
            let c = floor + (1.0 - floor) * step as f64 / grid as f64;
            let scale = (1.0 - c * c).max(0.0).sqrt();
            let mut candidate = Array1::zeros(n);
            candidate[last] = c;
            if rest_norm > 0.0 {
                for &i in &support {
                    candidate[i] = x[i] / rest_norm * scale;
                }
            } else {
                candidate[support[0]] = scale;
            }
            let diff = &candidate - x;
            let dist = l2(&diff);
            if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                best = Some((dist, candidate));
            }
        }
        let mut g = 0;
        loop {
            if g == k - 1 {
                return best.expect("grid always yields a candidate").1;
            }
            counters[g] += 1;
            if counters[g] < size {
                break;
            }
            counters[g] = 0;
            g += 1;
        }
    }
}

/// Deterministic RNG for test batteries.
pub fn test_rng(tag: u64) -> Rng {
    Rng::new(Seed::new(0x5eed_0000 + tag, 0))
}
