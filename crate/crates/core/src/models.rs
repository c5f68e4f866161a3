//! Observation-matrix models.
//!
//! Each constructor draws a random symmetric matrix `V` whose expectation
//! `V̄ = E[V]` has the planted vector as its top eigenvector, and returns the
//! matrix together with the [`GroundTruth`] describing that expectation. The
//! truth travels as a side channel: solvers only ever see `V`.
//!
//! Available models:
//!
//! - [`spiked_covariance_matrix`]: centered second-moment estimator of
//!   samples `xᵢ = √β uᵢ x̄ + zᵢ`, so `V = (1/m) Σᵢ (xᵢxᵢᵀ − Iₙ)` and
//!   `E[V] = β x̄x̄ᵀ`.
//! - [`spiked_wigner_matrix`]: `V = β x̄x̄ᵀ + H/√n` with symmetric Gaussian
//!   noise `H`.
//! - [`phase_retrieval_matrix`]: thresholded weighted covariance
//!   `V = (1/m) Σᵢ (yᵢ aᵢaᵢᵀ 1{l<yᵢ<u} − γ Iₙ)` built from magnitude-only
//!   measurements `yᵢ = |aᵢᵀx̄|`; its expectation is `β_pr x̄x̄ᵀ` with the
//!   truncated moments `γ`, `β_pr` of [`truncated_moments`].
//! - [`population_matrix`]: the exact expectation
//!   `(λ₁−λ₂) x̄x̄ᵀ + λ₂ Iₙ`, useful for noise-free solver studies.
//!
//! All sampling is keyed by a [`Seed`]; the same seed reproduces the same
//! matrix bit for bit. Generated matrices are symmetrized before they are
//! returned, so `v == vᵀ` holds exactly.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{Rng, Seed};

/// Model that produced an observation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    SpikedCovariance,
    SpikedWigner,
    PhaseRetrieval,
    Custom,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::SpikedCovariance => "spiked-covariance",
            Provenance::SpikedWigner => "spiked-wigner",
            Provenance::PhaseRetrieval => "phase-retrieval",
            Provenance::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "spiked-covariance" => Ok(Provenance::SpikedCovariance),
            "spiked-wigner" => Ok(Provenance::SpikedWigner),
            "phase-retrieval" => Ok(Provenance::PhaseRetrieval),
            "custom" => Ok(Provenance::Custom),
            other => Err(Error::Parse(format!("unknown provenance `{other}`"))),
        }
    }
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Planted top eigenvector with its spectral parameters.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    x_bar: Array1<f64>,
    lambda1: f64,
    lambda2: f64,
}

impl GroundTruth {
    /// Requires `‖x_bar‖₂ = 1` within 1e-12 and `lambda1 > lambda2 ≥ 0`.
    pub fn new(x_bar: Array1<f64>, lambda1: f64, lambda2: f64) -> Result<Self> {
        if !linalg::is_unit(x_bar.view(), 1e-12) {
            return Err(Error::ContractViolation(format!(
                "ground-truth vector must be unit norm, got ‖x̄‖ = {}",
                linalg::l2_norm(x_bar.view())
            )));
        }
        if !(lambda2 >= 0.0 && lambda1 > lambda2) {
            return Err(Error::invalid(format!(
                "eigenvalues must satisfy lambda1 > lambda2 >= 0, got ({lambda1}, {lambda2})"
            )));
        }
        Ok(GroundTruth {
            x_bar,
            lambda1,
            lambda2,
        })
    }

    pub fn x_bar(&self) -> &Array1<f64> {
        &self.x_bar
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn n(&self) -> usize {
        self.x_bar.len()
    }

    /// Spectral-gap ratio `λ₂/λ₁`, the contraction driver of projected power
    /// iteration.
    pub fn gap_ratio(&self) -> f64 {
        self.lambda2 / self.lambda1
    }
}

/// Symmetric data matrix fed to the solvers.
#[derive(Debug, Clone)]
pub struct ObservationMatrix {
    v: Array2<f64>,
    m: usize,
    provenance: Provenance,
    seed: Option<Seed>,
}

impl ObservationMatrix {
    /// Wraps an externally built matrix; it must be square and symmetric
    /// within 1e-10 entrywise (it is then symmetrized exactly).
    pub fn new(
        mut v: Array2<f64>,
        m: usize,
        provenance: Provenance,
        seed: Option<Seed>,
    ) -> Result<Self> {
        if v.nrows() != v.ncols() {
            return Err(Error::invalid(format!(
                "observation matrix must be square, got {}x{}",
                v.nrows(),
                v.ncols()
            )));
        }
        let skew = linalg::max_asymmetry(v.view());
        if skew > 1e-10 {
            return Err(Error::ContractViolation(format!(
                "observation matrix must be symmetric within 1e-10, max |v_ij - v_ji| = {skew}"
            )));
        }
        linalg::symmetrize(&mut v);
        Ok(ObservationMatrix {
            v,
            m,
            provenance,
            seed,
        })
    }

    pub fn v(&self) -> &Array2<f64> {
        &self.v
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    /// Sample count used to build the matrix (`n` for the Wigner model, 0 for
    /// population matrices).
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn seed(&self) -> Option<Seed> {
        self.seed
    }

    /// `V w`.
    pub fn apply(&self, w: &Array1<f64>) -> Array1<f64> {
        self.v.dot(w)
    }

    /// Rayleigh-type quadratic form `wᵀ V w`.
    pub fn quadratic_form(&self, w: &Array1<f64>) -> f64 {
        w.dot(&self.v.dot(w))
    }
}

fn check_unit_x_bar(x_bar: &Array1<f64>) -> Result<()> {
    if !linalg::is_unit(x_bar.view(), 1e-12) {
        return Err(Error::ContractViolation(format!(
            "x_bar must be unit norm, got ‖x̄‖ = {}",
            linalg::l2_norm(x_bar.view())
        )));
    }
    Ok(())
}

/// Spiked covariance matrix `V = (1/m) Σᵢ (xᵢxᵢᵀ − Iₙ)` from rank-one samples
/// `xᵢ = √β uᵢ x̄ + zᵢ`, with `uᵢ` scalar standard normal and `zᵢ` standard
/// normal in ℝⁿ. Returns the truth `(λ₁, λ₂) = (β, 0)` alongside.
pub fn spiked_covariance_matrix(
    x_bar: &Array1<f64>,
    beta: f64,
    m: usize,
    seed: Seed,
) -> Result<(ObservationMatrix, GroundTruth)> {
    spiked_covariance_matrix_with_noise_scale(x_bar, beta, m, seed, 1.0)
}

/// [`spiked_covariance_matrix`] with the additive noise channel scaled by
/// `noise_scale`. A scale of 0 silences `zᵢ` entirely, which makes degenerate
/// cases exactly assertable in tests; the RNG draw sequence is unchanged.
pub fn spiked_covariance_matrix_with_noise_scale(
    x_bar: &Array1<f64>,
    beta: f64,
    m: usize,
    seed: Seed,
    noise_scale: f64,
) -> Result<(ObservationMatrix, GroundTruth)> {
    check_unit_x_bar(x_bar)?;
    if m == 0 {
        return Err(Error::invalid("sample count m must be at least 1"));
    }
    if beta < 0.0 {
        return Err(Error::invalid(format!("beta must be nonnegative, got {beta}")));
    }
    let n = x_bar.len();
    let mut rng = Rng::new(seed);
    let sqrt_beta = beta.sqrt();

    let mut samples = Array2::<f64>::zeros((m, n));
    for mut row in samples.rows_mut() {
        let spike = sqrt_beta * rng.gaussian();
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = spike * x_bar[j] + noise_scale * rng.gaussian();
        }
    }

    let mut v = samples.t().dot(&samples);
    v.mapv_inplace(|x| x / m as f64);
    for i in 0..n {
        v[[i, i]] -= 1.0;
    }
    linalg::symmetrize(&mut v);

    // beta = 0 has no spectral gap against lambda2 = 0; report an epsilon
    // truth so the side channel stays well formed.
    let truth = if beta > 0.0 {
        GroundTruth::new(x_bar.clone(), beta, 0.0)?
    } else {
        GroundTruth {
            x_bar: x_bar.clone(),
            lambda1: 0.0,
            lambda2: 0.0,
        }
    };
    Ok((
        ObservationMatrix {
            v,
            m,
            provenance: Provenance::SpikedCovariance,
            seed: Some(seed),
        },
        truth,
    ))
}

/// Spiked Wigner matrix `V = β x̄x̄ᵀ + H/√n` with `H` symmetric and i.i.d.
/// standard normal up to symmetry. The sample count is recorded as `n`.
pub fn spiked_wigner_matrix(
    x_bar: &Array1<f64>,
    beta: f64,
    seed: Seed,
) -> Result<(ObservationMatrix, GroundTruth)> {
    spiked_wigner_matrix_with_noise_scale(x_bar, beta, seed, 1.0)
}

/// [`spiked_wigner_matrix`] with the noise matrix scaled by `noise_scale`
/// (0 disables it); a deterministic test hook like the covariance variant.
pub fn spiked_wigner_matrix_with_noise_scale(
    x_bar: &Array1<f64>,
    beta: f64,
    seed: Seed,
    noise_scale: f64,
) -> Result<(ObservationMatrix, GroundTruth)> {
    check_unit_x_bar(x_bar)?;
    let n = x_bar.len();
    if n < 2 {
        return Err(Error::invalid(format!("dimension must be at least 2, got {n}")));
    }
    if beta <= 0.0 {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    let mut rng = Rng::new(seed);
    let noise = noise_scale / (n as f64).sqrt();

    // Draw the upper triangle (diagonal included) row-major, then mirror, so
    // V is symmetric exactly, not just up to rounding.
    let mut v = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let h = rng.gaussian();
            let value = beta * x_bar[i] * x_bar[j] + noise * h;
            v[[i, j]] = value;
            v[[j, i]] = value;
        }
    }

    let truth = GroundTruth::new(x_bar.clone(), beta, 0.0)?;
    Ok((
        ObservationMatrix {
            v,
            m: n,
            provenance: Provenance::SpikedWigner,
            seed: Some(seed),
        },
        truth,
    ))
}

/// Truncated-moment constants of the thresholded phase-retrieval matrix.
///
/// For a standard normal `g`, `gamma = E[|g|·1{l<|g|<u}]` and
/// `beta = E[(|g|³−|g|)·1{l<|g|<u}]`, both in closed form via the Gaussian
/// density `φ`:
///
/// ```text
/// gamma = 2 (φ(l) − φ(u))
/// beta  = 2 ((l²+1) φ(l) − (u²+1) φ(u))
/// ```
///
/// `beta > 0` exactly when `u > l ≥ 1`, which is required for the matrix
/// expectation to have a positive spike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRetrievalParams {
    l: f64,
    u: f64,
    gamma: f64,
    beta: f64,
}

impl PhaseRetrievalParams {
    /// Alias for [`truncated_moments`].
    pub fn new(l: f64, u: f64) -> Result<Self> {
        truncated_moments(l, u)
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

fn normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Closed-form `gamma` and `beta` for thresholds `u > l ≥ 1`.
///
/// `l = 1` is the smallest admissible lower threshold: the integrand of
/// `beta` is `(g³−g)φ(g)`, nonnegative on `[1, ∞)`, so any window above 1
/// keeps `beta` positive.
pub fn truncated_moments(l: f64, u: f64) -> Result<PhaseRetrievalParams> {
    // NaN thresholds fail both checks.
    if l.is_nan() || l < 1.0 {
        return Err(Error::invalid(format!(
            "lower threshold must satisfy l >= 1, got {l}"
        )));
    }
    if u.is_nan() || u <= l {
        return Err(Error::invalid(format!(
            "thresholds must satisfy u > l, got l = {l}, u = {u}"
        )));
    }
    let gamma = 2.0 * (normal_pdf(l) - normal_pdf(u));
    let beta = 2.0 * ((l * l + 1.0) * normal_pdf(l) - (u * u + 1.0) * normal_pdf(u));
    Ok(PhaseRetrievalParams { l, u, gamma, beta })
}

/// Thresholded weighted covariance for magnitude-only measurements:
/// draws `aᵢ ~ N(0, Iₙ)`, observes `yᵢ = |aᵢᵀ x̄|`, and forms
/// `V = (1/m) Σᵢ (yᵢ aᵢaᵢᵀ 1{l<yᵢ<u} − γ Iₙ)`, whose expectation is
/// `β_pr x̄x̄ᵀ`.
pub fn phase_retrieval_matrix(
    x_bar: &Array1<f64>,
    m: usize,
    params: &PhaseRetrievalParams,
    seed: Seed,
) -> Result<(ObservationMatrix, GroundTruth)> {
    check_unit_x_bar(x_bar)?;
    if m == 0 {
        return Err(Error::invalid("sample count m must be at least 1"));
    }
    let n = x_bar.len();
    let mut rng = Rng::new(seed);

    // Rows of `weighted` are √yᵢ·aᵢ for the samples inside the window, so the
    // weighted sum of outer products is one gram-matrix product.
    let mut active: Vec<f64> = Vec::new();
    let mut sample = vec![0.0f64; n];
    for _ in 0..m {
        for entry in sample.iter_mut() {
            *entry = rng.gaussian();
        }
        let y = sample
            .iter()
            .zip(x_bar.iter())
            .map(|(a, x)| a * x)
            .sum::<f64>()
            .abs();
        if y > params.l && y < params.u {
            let w = y.sqrt();
            active.extend(sample.iter().map(|a| w * a));
        }
    }

    let mut v = if active.is_empty() {
        Array2::<f64>::zeros((n, n))
    } else {
        let rows = active.len() / n;
        let weighted = Array2::from_shape_vec((rows, n), active)
            .expect("row-major weighted sample buffer");
        weighted.t().dot(&weighted)
    };
    v.mapv_inplace(|x| x / m as f64);
    for i in 0..n {
        v[[i, i]] -= params.gamma;
    }
    linalg::symmetrize(&mut v);

    let truth = GroundTruth::new(x_bar.clone(), params.beta, 0.0)?;
    Ok((
        ObservationMatrix {
            v,
            m,
            provenance: Provenance::PhaseRetrieval,
            seed: Some(seed),
        },
        truth,
    ))
}

/// Exact population matrix `(λ₁−λ₂) x̄x̄ᵀ + λ₂ Iₙ`: PSD, top eigenpair
/// `(λ₁, x̄)`, all remaining eigenvalues `λ₂`.
pub fn population_matrix(truth: &GroundTruth) -> ObservationMatrix {
    let n = truth.n();
    let gap = truth.lambda1 - truth.lambda2;
    let x = &truth.x_bar;
    // x[i] * x[j] first: the two-operand product commutes exactly, keeping
    // the matrix symmetric to the last bit.
    let mut v = Array2::from_shape_fn((n, n), |(i, j)| gap * (x[i] * x[j]));
    for i in 0..n {
        v[[i, i]] += truth.lambda2;
    }
    ObservationMatrix {
        v,
        m: 0,
        provenance: Provenance::Custom,
        seed: None,
    }
}
