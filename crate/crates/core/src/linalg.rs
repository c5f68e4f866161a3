//! Small dense-vector/matrix helpers used throughout the crate.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

pub fn l2_norm(v: ArrayView1<'_, f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// `v / ‖v‖₂`; errors on the zero vector.
pub fn normalized(v: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    let norm = l2_norm(v);
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(v.mapv(|x| x / norm))
}

pub fn is_unit(v: ArrayView1<'_, f64>, tol: f64) -> bool {
    (l2_norm(v) - 1.0).abs() <= tol
}

pub fn frobenius_norm(m: ArrayView2<'_, f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn outer(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Array2<f64> {
    let (n, p) = (a.len(), b.len());
    Array2::from_shape_fn((n, p), |(i, j)| a[i] * b[j])
}

/// Replace `m` by `(m + mᵀ)/2`, making it exactly symmetric.
pub fn symmetrize(m: &mut Array2<f64>) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = avg;
            m[[j, i]] = avg;
        }
    }
}

pub fn max_asymmetry(m: ArrayView2<'_, f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    worst
}

/// Canonical basis vector `e_j` in dimension `n`.
pub fn canonical(n: usize, j: usize) -> Array1<f64> {
    let mut e = Array1::zeros(n);
    e[j] = 1.0;
    e
}
