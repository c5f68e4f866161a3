//! Recovery metrics, distance equivalences, rate fitting, and the empirical
//! bilinear concentration audit.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{Rng, Seed};

/// `|⟨a, b⟩| / (‖a‖‖b‖)`; sign-invariant, in `[0, 1]`.
pub fn cosine_similarity(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64> {
    let na = linalg::l2_norm(a);
    let nb = linalg::l2_norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("cosine similarity of a zero vector"));
    }
    Ok((a.dot(&b) / (na * nb)).abs().min(1.0))
}

fn check_unit(v: ArrayView1<'_, f64>, what: &str) -> Result<()> {
    if !linalg::is_unit(v, 1e-8) {
        return Err(Error::invalid(format!(
            "{what} must be unit norm, got {}",
            linalg::l2_norm(v)
        )));
    }
    Ok(())
}

/// `‖aaᵀ − bbᵀ‖_F = √(2(1 − (aᵀb)²))` for unit vectors, the subspace
/// distance between the spanned lines. Ranges over `[0, √2]`.
pub fn outer_product_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64> {
    check_unit(a, "first vector")?;
    check_unit(b, "second vector")?;
    let dot = a.dot(&b);
    Ok((2.0 * (1.0 - dot * dot)).max(0.0).sqrt())
}

/// Sandwich between the sign-aligned vector distance and the outer-product
/// distance: returns `(d², ‖aaᵀ−bbᵀ‖_F², 2d²)` where `d = ‖a−b‖` when
/// `aᵀb ≥ 0` and `d = ‖a+b‖` otherwise, and verifies
/// `d² ≤ ‖aaᵀ−bbᵀ‖_F² ≤ 2d²` within 1e-12.
///
/// The middle term is computed from the explicit n×n matrix, not from the
/// closed form, so this doubles as an independent check of
/// [`outer_product_distance`].
pub fn check_distance_equivalence(
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
) -> Result<(f64, f64, f64)> {
    check_unit(a, "first vector")?;
    check_unit(b, "second vector")?;
    let aligned: Array1<f64> = if a.dot(&b) >= 0.0 {
        &a - &b
    } else {
        &a + &b
    };
    let d_sq = aligned.dot(&aligned);
    let gram_diff = linalg::outer(a, a) - linalg::outer(b, b);
    let mid = gram_diff.iter().map(|x| x * x).sum::<f64>();
    let lhs = d_sq;
    let rhs = 2.0 * d_sq;
    if lhs > mid + 1e-12 || mid > rhs + 1e-12 {
        return Err(Error::ContractViolation(format!(
            "distance sandwich violated: {lhs} <= {mid} <= {rhs} fails"
        )));
    }
    Ok((lhs, mid, rhs))
}

/// Least-squares fit of `log error` against `log m`.
#[derive(Debug, Clone)]
pub struct RateFit {
    /// Slope of the log-log line; an error decaying like `m^(-1/2)` gives
    /// -0.5.
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination in `[0, 1]`; 1 for an exact power law.
    pub r_squared: f64,
    /// The fitted `(log m, log error)` pairs.
    pub points: Vec<(f64, f64)>,
}

/// Ordinary least squares on `(log m, log error)`, for reading off empirical
/// error-decay exponents. Needs at least 3 pairs with positive errors.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(Error::invalid(format!(
            "rate fit needs at least 3 points, got {}",
            pairs.len()
        )));
    }
    if pairs.iter().any(|&(m, e)| m <= 0.0 || e <= 0.0) {
        return Err(Error::invalid(
            "rate fit needs positive sample counts and errors",
        ));
    }
    let points: Vec<(f64, f64)> = pairs.iter().map(|&(m, e)| (m.ln(), e.ln())).collect();
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum::<f64>();
    if sxx == 0.0 {
        return Err(Error::invalid("rate fit needs at least two distinct m values"));
    }
    let sxy = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum::<f64>();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum::<f64>();
    let ss_tot = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum::<f64>();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points,
    })
}

/// `s₁ᵀ E s₂`.
pub fn bilinear_form(
    s1: ArrayView1<'_, f64>,
    e: &Array2<f64>,
    s2: ArrayView1<'_, f64>,
) -> f64 {
    s1.dot(&e.dot(&s2))
}

/// One audit measurement: the largest normalized bilinear form over the two
/// random unit sets for one perturbation draw.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub m: usize,
    pub trial: usize,
    /// `max |s₁ᵀEs₂| / √(log(|S₁||S₂|)/m)`.
    pub max_ratio: f64,
}

/// Result table of [`audit_bilinear_concentration`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationAudit {
    pub rows: Vec<AuditRow>,
}

impl ConcentrationAudit {
    /// Largest ratio observed per grid value of `m` — the empirical constant
    /// the concentration assumption says should not grow with `m`.
    pub fn max_ratio_per_m(&self) -> Vec<(usize, f64)> {
        let mut per_m: Vec<(usize, f64)> = Vec::new();
        for row in &self.rows {
            match per_m.iter_mut().find(|(m, _)| *m == row.m) {
                Some((_, max)) => *max = max.max(row.max_ratio),
                None => per_m.push((row.m, row.max_ratio)),
            }
        }
        per_m
    }

    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "m,trial,max_ratio")?;
        for row in &self.rows {
            writeln!(out, "{},{},{}", row.m, row.trial, row.max_ratio)?;
        }
        Ok(())
    }
}

/// Measures how the restricted bilinear forms of a perturbation matrix
/// concentrate: for each `m` in the grid and each trial, draws fresh random
/// unit sets `S₁, S₂`, asks `make_e` for a perturbation realization at that
/// sample size, and records `max |s₁ᵀEs₂| / √(log(|S₁||S₂|)/m)`.
///
/// If the perturbation concentrates at the `1/√m` scale, the recorded ratios
/// stay bounded as `m` grows; their maximum is an empirical constant for the
/// concentration inequality.
pub fn audit_bilinear_concentration<F>(
    n: usize,
    make_e: F,
    s1_count: usize,
    s2_count: usize,
    m_grid: &[usize],
    trials: usize,
    seed: Seed,
) -> Result<ConcentrationAudit>
where
    F: Fn(usize, Seed) -> Result<Array2<f64>>,
{
    if m_grid.is_empty() {
        return Err(Error::invalid("audit needs a non-empty m grid"));
    }
    if s1_count == 0 || s2_count == 0 || trials == 0 || n == 0 {
        return Err(Error::invalid(
            "audit needs positive set sizes, trials, and dimension",
        ));
    }
    let log_sets = ((s1_count * s2_count) as f64).ln();
    let mut rows = Vec::with_capacity(m_grid.len() * trials);
    for (mi, &m) in m_grid.iter().enumerate() {
        if m == 0 {
            return Err(Error::invalid("audit sample sizes must be positive"));
        }
        for trial in 0..trials {
            // Side channels per (m, trial): even streams draw the sets, the
            // odd partners draw the perturbation.
            let sub = ((mi as u64) << 40) | ((trial as u64) << 8);
            let mut rng = Rng::new(Seed::new(seed.base, seed.stream ^ sub));
            let s1 = random_unit_rows(s1_count, n, &mut rng);
            let s2 = random_unit_rows(s2_count, n, &mut rng);
            let e = make_e(m, Seed::new(seed.base, seed.stream ^ (sub | 1)))?;
            if e.nrows() != n || e.ncols() != n {
                return Err(Error::invalid(format!(
                    "perturbation must be {n}x{n}, got {}x{}",
                    e.nrows(),
                    e.ncols()
                )));
            }
            // max over S1 x S2 of |s1' E s2| via one matrix sandwich.
            let sandwich = s1.dot(&e).dot(&s2.t());
            let max_abs = sandwich.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let scale = (log_sets / m as f64).sqrt();
            rows.push(AuditRow {
                m,
                trial,
                max_ratio: max_abs / scale,
            });
        }
    }
    Ok(ConcentrationAudit { rows })
}

fn random_unit_rows(count: usize, n: usize, rng: &mut Rng) -> Array2<f64> {
    let mut rows = Array2::zeros((count, n));
    for mut row in rows.rows_mut() {
        loop {
            for entry in row.iter_mut() {
                *entry = rng.gaussian();
            }
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row.mapv_inplace(|v| v / norm);
                break;
            }
        }
    }
    rows
}
