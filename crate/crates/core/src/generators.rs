//! Generative ranges and projections onto them.
//!
//! A [`GenerativeRange`] models the image of a latent ball `B₂ᵏ(r)` under a
//! map `G` whose output lies on the unit sphere of ℝⁿ. The solvers only need
//! two things from it: a projection `P_G(x) = argmin_{w ∈ Range(G)} ‖w − x‖₂`
//! and a way to sample ground-truth vectors inside the range.
//!
//! Exact projections are available for the structured kinds:
//!
//! - sphere: plain normalization;
//! - group-sparse: per-group signed argmax, then normalize (for unit-norm
//!   candidates, minimizing `‖x − w‖₂` is the same as maximizing `⟨x, w⟩`,
//!   and on a fixed support the best unit vector is `x_S/‖x_S‖`, so the best
//!   support keeps the largest entry per group);
//! - constrained group-sparse `{w ∈ W_k : w_n ≥ floor}`: the floor forces the
//!   last group's support onto coordinate `n`, and on that support the KKT
//!   conditions leave two cases — either the unconstrained maximizer already
//!   satisfies `w_n ≥ floor` and is returned as-is, or the constraint is
//!   active, `w_n` is clamped to the floor, and the remaining entries are
//!   rescaled to norm `√(1 − floor²)` along their unconstrained direction
//!   (the objective `floor·x_n + √(1−floor²)·‖x_rest‖` is increasing in
//!   `‖x_rest‖`, so the per-group argmax support stays optimal);
//! - linear range: orthogonal projection onto the column space, normalized.
//!
//! The ReLU-net kind has no closed-form projection; [`project_relu_net`]
//! minimizes `‖G(z) − x‖₂²` over the latent ball with Adam restarts, using a
//! hand-derived gradient through the normalize ∘ affine ∘ relu ∘ affine
//! chain.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{Rng, Seed};

/// Norm floor under which a normalized generator output is considered
/// undefined.
pub const R_MIN: f64 = 1e-6;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Contiguous equal-size blocks partitioning `0..n` into `k` groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupLayout {
    n: usize,
    k: usize,
}

impl GroupLayout {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || n == 0 || !n.is_multiple_of(k) {
            return Err(Error::invalid(format!(
                "group layout needs k >= 1 dividing n, got n = {n}, k = {k}"
            )));
        }
        Ok(GroupLayout { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn group_size(&self) -> usize {
        self.n / self.k
    }

    pub fn group(&self, g: usize) -> std::ops::Range<usize> {
        let size = self.group_size();
        g * size..(g + 1) * size
    }

    pub fn groups(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        (0..self.k).map(|g| self.group(g))
    }
}

/// Index of the largest-magnitude entry in `range`; ties go to the lowest
/// index.
fn signed_argmax(x: ArrayView1<'_, f64>, range: std::ops::Range<usize>) -> usize {
    let mut best = range.start;
    let mut best_abs = x[range.start].abs();
    for i in range {
        let a = x[i].abs();
        if a > best_abs {
            best = i;
            best_abs = a;
        }
    }
    best
}

/// `x / ‖x‖₂` — the projection onto the whole unit sphere.
pub fn project_sphere(x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    linalg::normalized(x)
}

/// Closest unit vector with exactly one nonzero per group: keep the signed
/// per-group argmax, zero the rest, normalize.
pub fn project_group_sparse(x: ArrayView1<'_, f64>, layout: &GroupLayout) -> Result<Array1<f64>> {
    if x.len() != layout.n() {
        return Err(Error::invalid(format!(
            "input has dimension {}, layout expects {}",
            x.len(),
            layout.n()
        )));
    }
    let mut kept = Array1::zeros(x.len());
    for group in layout.groups() {
        let idx = signed_argmax(x, group);
        kept[idx] = x[idx];
    }
    linalg::normalized(kept.view())
}

/// Exact projection onto `{w ∈ W_k : w_n ≥ floor}` for `floor ∈ (0, 1)`.
///
/// See the module docs for the clamp-and-rescale argument. The last group's
/// support is always coordinate `n` (any other choice leaves `w_n = 0`,
/// infeasible). If the constraint is active and every other selected entry is
/// zero, the residual mass goes onto the first selected coordinate.
pub fn project_constrained_group_sparse(
    x: ArrayView1<'_, f64>,
    layout: &GroupLayout,
    floor: f64,
) -> Result<Array1<f64>> {
    if x.len() != layout.n() {
        return Err(Error::invalid(format!(
            "input has dimension {}, layout expects {}",
            x.len(),
            layout.n()
        )));
    }
    if !(floor > 0.0 && floor < 1.0) {
        return Err(Error::invalid(format!(
            "floor must lie in (0, 1), got {floor}"
        )));
    }
    let n = layout.n();
    let k = layout.k();
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let last = n - 1;
    if k == 1 {
        // Unit norm plus the floor pin the single nonzero to +1 at the last
        // coordinate.
        return Ok(linalg::canonical(n, last));
    }

    let selected: Vec<usize> = layout
        .groups()
        .take(k - 1)
        .map(|group| signed_argmax(x, group))
        .collect();

    let rest_sq: f64 = selected.iter().map(|&i| x[i] * x[i]).sum();
    let norm = (rest_sq + x[last] * x[last]).sqrt();
    if norm > 0.0 && x[last] / norm >= floor {
        let mut w = Array1::zeros(n);
        for &i in &selected {
            w[i] = x[i] / norm;
        }
        w[last] = x[last] / norm;
        return Ok(w);
    }

    // Constraint active: clamp the last coordinate, rescale the rest.
    let mut w = Array1::zeros(n);
    w[last] = floor;
    let target = (1.0 - floor * floor).sqrt();
    let rest_norm = rest_sq.sqrt();
    if rest_norm > 0.0 {
        for &i in &selected {
            w[i] = x[i] / rest_norm * target;
        }
    } else {
        w[selected[0]] = target;
    }
    Ok(w)
}

/// Orthogonal projection onto the column space of `basis`, normalized.
/// `basis` must have orthonormal columns.
pub fn project_linear_range(
    x: ArrayView1<'_, f64>,
    basis: &Array2<f64>,
) -> Result<Array1<f64>> {
    check_orthonormal_columns(basis)?;
    if x.len() != basis.nrows() {
        return Err(Error::invalid(format!(
            "input has dimension {}, basis expects {}",
            x.len(),
            basis.nrows()
        )));
    }
    let coords = basis.t().dot(&x);
    let projected = basis.dot(&coords);
    let norm = linalg::l2_norm(projected.view());
    if norm < 1e-12 {
        return Err(Error::DegenerateDirection);
    }
    Ok(projected.mapv(|v| v / norm))
}

fn check_orthonormal_columns(basis: &Array2<f64>) -> Result<()> {
    let gram = basis.t().dot(basis);
    let k = gram.nrows();
    for i in 0..k {
        for j in 0..k {
            let expect = if i == j { 1.0 } else { 0.0 };
            if (gram[[i, j]] - expect).abs() > 1e-8 {
                return Err(Error::ContractViolation(format!(
                    "basis columns are not orthonormal: gram[{i},{j}] = {}",
                    gram[[i, j]]
                )));
            }
        }
    }
    Ok(())
}

/// Modified Gram-Schmidt; errors if the columns are not linearly independent.
pub fn orthonormalize_columns(mut a: Array2<f64>) -> Result<Array2<f64>> {
    let k = a.ncols();
    for j in 0..k {
        for prev in 0..j {
            let dot = a.column(prev).dot(&a.column(j));
            let prev_col = a.column(prev).to_owned();
            let mut col = a.column_mut(j);
            col.scaled_add(-dot, &prev_col);
        }
        let norm = linalg::l2_norm(a.column(j));
        if norm < 1e-10 {
            return Err(Error::invalid(
                "columns are numerically dependent; cannot orthonormalize",
            ));
        }
        a.column_mut(j).mapv_inplace(|v| v / norm);
    }
    Ok(a)
}

/// Closed-form Lipschitz constant `2 n w_max / (√k r w_c)` of the
/// group-sparse generative map; metadata for rate plots.
pub fn lipschitz_of_group_sparse_range(
    n: usize,
    k: usize,
    r: f64,
    w_max: f64,
    w_c: f64,
) -> Result<f64> {
    if n == 0 || k == 0 || r <= 0.0 || w_max <= 0.0 || w_c <= 0.0 {
        return Err(Error::invalid(
            "all arguments of the group-sparse Lipschitz constant must be positive",
        ));
    }
    Ok(2.0 * n as f64 * w_max / ((k as f64).sqrt() * r * w_c))
}

/// Two-layer ReLU network `z ↦ normalize(w2 · relu(w1 · z))`.
#[derive(Debug, Clone)]
pub struct ReluNetWeights {
    w1: Array2<f64>, // h x k
    w2: Array2<f64>, // n x h
}

/// One forward/backward evaluation of the latent objective
/// `‖G(z) − x‖₂²`.
#[derive(Debug, Clone)]
pub struct LatentEval {
    pub loss: f64,
    pub grad: Array1<f64>,
    /// `G(z)`, a unit vector.
    pub output: Array1<f64>,
}

impl ReluNetWeights {
    pub fn new(w1: Array2<f64>, w2: Array2<f64>) -> Result<Self> {
        let (h, k) = (w1.nrows(), w1.ncols());
        let n = w2.nrows();
        if h == 0 || k == 0 || n == 0 {
            return Err(Error::invalid("network dimensions must be positive"));
        }
        if w2.ncols() != h {
            return Err(Error::invalid(format!(
                "layer shapes disagree: w1 is {h}x{k}, w2 is {}x{}",
                w2.nrows(),
                w2.ncols()
            )));
        }
        if w1.iter().chain(w2.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("network weights must be finite"));
        }
        Ok(ReluNetWeights { w1, w2 })
    }

    /// Gaussian weights scaled by 1/√fan_in.
    pub fn random(n: usize, h: usize, k: usize, seed: Seed) -> Self {
        let mut rng = Rng::new(seed);
        let s1 = 1.0 / (k as f64).sqrt();
        let w1 = Array2::from_shape_fn((h, k), |_| s1 * rng.gaussian());
        let s2 = 1.0 / (h as f64).sqrt();
        let w2 = Array2::from_shape_fn((n, h), |_| s2 * rng.gaussian());
        ReluNetWeights { w1, w2 }
    }

    pub fn k(&self) -> usize {
        self.w1.ncols()
    }

    pub fn h(&self) -> usize {
        self.w1.nrows()
    }

    pub fn n(&self) -> usize {
        self.w2.nrows()
    }

    pub fn w1(&self) -> &Array2<f64> {
        &self.w1
    }

    pub fn w2(&self) -> &Array2<f64> {
        &self.w2
    }

    /// `w2 · relu(w1 · z)`, before normalization.
    pub fn pre_normalization(&self, z: ArrayView1<'_, f64>) -> Array1<f64> {
        let activated = self.w1.dot(&z).mapv(|a| a.max(0.0));
        self.w2.dot(&activated)
    }

    /// `G(z)`; `None` when the pre-normalization norm is at or below
    /// [`R_MIN`].
    pub fn forward(&self, z: ArrayView1<'_, f64>) -> Option<Array1<f64>> {
        let y = self.pre_normalization(z);
        let norm = linalg::l2_norm(y.view());
        if norm <= R_MIN {
            return None;
        }
        Some(y.mapv(|v| v / norm))
    }

    /// Loss, latent gradient, and output of `‖G(z) − x‖₂²` at `z`.
    ///
    /// The relu subgradient at 0 is taken as 0; through the normalization,
    /// `∂f/∂y = (2/ρ)(d − g(gᵀd))` with `y` the pre-normalization vector,
    /// `ρ = ‖y‖`, `g = y/ρ`, `d = g − x`.
    pub fn latent_objective(
        &self,
        z: ArrayView1<'_, f64>,
        x: ArrayView1<'_, f64>,
    ) -> Option<LatentEval> {
        let pre_activation = self.w1.dot(&z);
        let activated = pre_activation.mapv(|a| a.max(0.0));
        let y = self.w2.dot(&activated);
        let rho = linalg::l2_norm(y.view());
        if rho <= R_MIN {
            return None;
        }
        let g = y.mapv(|v| v / rho);
        let diff = &g - &x;
        let loss = diff.dot(&diff);
        let radial = g.dot(&diff);
        let df_dy = diff
            .iter()
            .zip(g.iter())
            .map(|(d, gi)| 2.0 / rho * (d - gi * radial))
            .collect::<Array1<f64>>();
        let mut df_da = self.w2.t().dot(&df_dy);
        for (grad_entry, &a) in df_da.iter_mut().zip(pre_activation.iter()) {
            if a <= 0.0 {
                *grad_entry = 0.0;
            }
        }
        let grad = self.w1.t().dot(&df_da);
        Some(LatentEval {
            loss,
            grad,
            output: g,
        })
    }
}

/// Settings for the latent-space projection optimizer.
#[derive(Debug, Clone)]
pub struct LatentOptConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub restarts: usize,
    /// Radius of the latent ball the iterates are clipped to.
    pub radius: f64,
    /// Stream for the restart initializations.
    pub seed: Seed,
    /// Optional starting latent for the first restart.
    pub warm_start: Option<Array1<f64>>,
}

impl Default for LatentOptConfig {
    fn default() -> Self {
        LatentOptConfig {
            steps: 200,
            learning_rate: 0.03,
            restarts: 10,
            radius: 1.0,
            seed: Seed::new(0, 0),
            warm_start: None,
        }
    }
}

/// Outcome of an approximate projection.
#[derive(Debug, Clone)]
pub struct ProjectionReport {
    /// Unit vector in (or near) the range.
    pub point: Array1<f64>,
    /// `‖x − point‖₂`.
    pub residual: f64,
    pub restarts_used: usize,
    /// False when every restart hit the [`R_MIN`] norm floor; the point is
    /// then a best-effort fallback.
    pub converged: bool,
}

fn clip_to_ball(z: &mut Array1<f64>, radius: f64) {
    let norm = linalg::l2_norm(z.view());
    if norm > radius {
        let scale = radius / norm;
        z.mapv_inplace(|v| v * scale);
    }
}

fn sample_latent_ball(k: usize, radius: f64, rng: &mut Rng) -> Array1<f64> {
    loop {
        let direction = Array1::from_shape_fn(k, |_| rng.gaussian());
        let norm = linalg::l2_norm(direction.view());
        if norm == 0.0 {
            continue;
        }
        let scale = radius * rng.uniform().powf(1.0 / k as f64) / norm;
        return direction.mapv(|v| v * scale);
    }
}

/// Approximate projection onto a ReLU-net range: Adam over the latent ball,
/// best result across restarts, iterates clipped back to the ball each step.
pub fn project_relu_net(
    x: ArrayView1<'_, f64>,
    weights: &ReluNetWeights,
    opt: &LatentOptConfig,
) -> Result<ProjectionReport> {
    if x.len() != weights.n() {
        return Err(Error::invalid(format!(
            "input has dimension {}, network outputs {}",
            x.len(),
            weights.n()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("projection input must be finite"));
    }
    if opt.restarts == 0 {
        return Err(Error::invalid("at least one restart is required"));
    }
    let k = weights.k();
    let mut rng = Rng::new(opt.seed);
    let mut best: Option<(f64, Array1<f64>)> = None;

    for restart in 0..opt.restarts {
        let mut z = match (&opt.warm_start, restart) {
            (Some(start), 0) => {
                let mut z = start.clone();
                clip_to_ball(&mut z, opt.radius);
                z
            }
            _ => sample_latent_ball(k, opt.radius, &mut rng),
        };
        let mut first_moment = Array1::<f64>::zeros(k);
        let mut second_moment = Array1::<f64>::zeros(k);

        for step in 1..=opt.steps {
            let Some(eval) = weights.latent_objective(z.view(), x) else {
                break;
            };
            if best.as_ref().is_none_or(|(loss, _)| eval.loss < *loss) {
                best = Some((eval.loss, eval.output));
            }
            let correction1 = 1.0 - ADAM_BETA1.powi(step as i32);
            let correction2 = 1.0 - ADAM_BETA2.powi(step as i32);
            for i in 0..k {
                let g = eval.grad[i];
                first_moment[i] = ADAM_BETA1 * first_moment[i] + (1.0 - ADAM_BETA1) * g;
                second_moment[i] = ADAM_BETA2 * second_moment[i] + (1.0 - ADAM_BETA2) * g * g;
                let m_hat = first_moment[i] / correction1;
                let v_hat = second_moment[i] / correction2;
                z[i] -= opt.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
            clip_to_ball(&mut z, opt.radius);
        }
        // Consider the final iterate too; Adam's last step may be the best.
        if let Some(eval) = weights.latent_objective(z.view(), x) {
            if best.as_ref().is_none_or(|(loss, _)| eval.loss < *loss) {
                best = Some((eval.loss, eval.output));
            }
        }
    }

    match best {
        Some((loss, point)) => Ok(ProjectionReport {
            residual: loss.sqrt(),
            point,
            restarts_used: opt.restarts,
            converged: true,
        }),
        None => {
            // Every restart stayed under the norm floor. Fall back to the
            // sphere projection of the input (or e₁ for a zero input).
            let point = linalg::normalized(x)
                .unwrap_or_else(|_| linalg::canonical(weights.n(), 0));
            let residual = {
                let diff = &point - &x;
                linalg::l2_norm(diff.view())
            };
            Ok(ProjectionReport {
                point,
                residual,
                restarts_used: opt.restarts,
                converged: false,
            })
        }
    }
}

/// The structured payload of a generative range.
#[derive(Debug, Clone)]
pub enum RangeKind {
    Sphere,
    GroupSparse(GroupLayout),
    ConstrainedGroupSparse { layout: GroupLayout, floor: f64 },
    Linear { basis: Array2<f64> },
    ReluNet {
        weights: ReluNetWeights,
        opt: LatentOptConfig,
    },
}

/// A generative range `Range(G) ⊆ Sⁿ⁻¹` with projection and truth sampling.
///
/// The Lipschitz constant and latent radius are informational metadata (used
/// in rate plots); the projection itself never consults them.
#[derive(Debug, Clone)]
pub struct GenerativeRange {
    kind: RangeKind,
    n: usize,
    k: usize,
    lipschitz: f64,
    radius: f64,
}

impl GenerativeRange {
    /// The whole unit sphere; projected power iteration degenerates to plain
    /// power iteration on this range.
    pub fn sphere(n: usize) -> Self {
        GenerativeRange {
            kind: RangeKind::Sphere,
            n,
            k: n,
            lipschitz: 1.0,
            radius: 1.0,
        }
    }

    /// Unit vectors with exactly one nonzero per contiguous group.
    ///
    /// ```
    /// use gpca::generators::GenerativeRange;
    /// use ndarray::array;
    ///
    /// let range = GenerativeRange::group_sparse(4, 2)?;
    /// let p = range.project(array![3.0, 1.0, -2.0, 5.0].view())?;
    /// let scale = 34.0_f64.sqrt();
    /// assert_eq!(p, array![3.0 / scale, 0.0, 0.0, 5.0 / scale]);
    /// # Ok::<(), gpca::Error>(())
    /// ```
    pub fn group_sparse(n: usize, k: usize) -> Result<Self> {
        let layout = GroupLayout::new(n, k)?;
        let w_c = if k > 1 { ((k - 1) as f64 / 3.0).sqrt() } else { 1.0 };
        let lipschitz = lipschitz_of_group_sparse_range(n, k, 1.0, 1.0, w_c)?;
        Ok(GenerativeRange {
            kind: RangeKind::GroupSparse(layout),
            n,
            k,
            lipschitz,
            radius: 1.0,
        })
    }

    /// Group-sparse vectors with the last coordinate at least `floor`.
    pub fn constrained_group_sparse(n: usize, k: usize, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor < 1.0) {
            return Err(Error::invalid(format!(
                "floor must lie in (0, 1), got {floor}"
            )));
        }
        let layout = GroupLayout::new(n, k)?;
        let w_c = if k > 1 {
            floor * ((k - 1) as f64 / (1.0 - floor * floor)).sqrt()
        } else {
            1.0
        };
        let lipschitz = lipschitz_of_group_sparse_range(n, k, 1.0, 1.0, w_c)?;
        Ok(GenerativeRange {
            kind: RangeKind::ConstrainedGroupSparse { layout, floor },
            n,
            k,
            lipschitz,
            radius: 1.0,
        })
    }

    /// Normalized image of a k-dimensional subspace given by an orthonormal
    /// basis (n×k).
    pub fn linear(basis: Array2<f64>) -> Result<Self> {
        check_orthonormal_columns(&basis)?;
        let (n, k) = (basis.nrows(), basis.ncols());
        if k == 0 || k > n {
            return Err(Error::invalid(format!(
                "basis must have 1..=n columns, got {k} for n = {n}"
            )));
        }
        Ok(GenerativeRange {
            kind: RangeKind::Linear { basis },
            n,
            k,
            lipschitz: 1.0,
            radius: 1.0,
        })
    }

    /// Range of a two-layer ReLU network with latent-optimization projection.
    pub fn relu_net(weights: ReluNetWeights, opt: LatentOptConfig) -> Self {
        let n = weights.n();
        let k = weights.k();
        // Crude norm-product bound over the norm floor; informational only.
        let lipschitz = linalg::frobenius_norm(weights.w1().view())
            * linalg::frobenius_norm(weights.w2().view())
            / R_MIN;
        let radius = opt.radius;
        GenerativeRange {
            kind: RangeKind::ReluNet { weights, opt },
            n,
            k,
            lipschitz,
            radius,
        }
    }

    pub fn kind(&self) -> &RangeKind {
        &self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            RangeKind::Sphere => "sphere",
            RangeKind::GroupSparse(_) => "group-sparse",
            RangeKind::ConstrainedGroupSparse { .. } => "constrained-group-sparse",
            RangeKind::Linear { .. } => "linear-range",
            RangeKind::ReluNet { .. } => "relu-net",
        }
    }

    /// True when the projection is exact (everything except the ReLU net).
    pub fn is_exact(&self) -> bool {
        !matches!(self.kind, RangeKind::ReluNet { .. })
    }

    /// `P_G(x)`.
    pub fn project(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        match &self.kind {
            RangeKind::Sphere => project_sphere(x),
            RangeKind::GroupSparse(layout) => project_group_sparse(x, layout),
            RangeKind::ConstrainedGroupSparse { layout, floor } => {
                project_constrained_group_sparse(x, layout, *floor)
            }
            RangeKind::Linear { basis } => project_linear_range(x, basis),
            RangeKind::ReluNet { weights, opt } => {
                project_relu_net(x, weights, opt).map(|report| report.point)
            }
        }
    }

    /// `P_G(x)` with diagnostics; exact kinds always converge in zero
    /// restarts.
    pub fn project_report(&self, x: ArrayView1<'_, f64>) -> Result<ProjectionReport> {
        match &self.kind {
            RangeKind::ReluNet { weights, opt } => project_relu_net(x, weights, opt),
            _ => {
                let point = self.project(x)?;
                let diff = &point - &x;
                Ok(ProjectionReport {
                    residual: linalg::l2_norm(diff.view()),
                    point,
                    restarts_used: 0,
                    converged: true,
                })
            }
        }
    }

    /// Draws a ground-truth vector uniformly over the range's natural
    /// parameterization: uniform support, Rademacher signs, and uniform
    /// magnitudes for the group-sparse kinds; a uniform latent for the
    /// others.
    pub fn sample(&self, rng: &mut Rng) -> Result<Array1<f64>> {
        match &self.kind {
            RangeKind::Sphere => {
                loop {
                    let v = Array1::from_shape_fn(self.n, |_| rng.gaussian());
                    if let Ok(unit) = linalg::normalized(v.view()) {
                        return Ok(unit);
                    }
                }
            }
            RangeKind::GroupSparse(layout) => {
                let mut v = Array1::zeros(self.n);
                for group in layout.groups() {
                    let idx = group.start + rng.index(layout.group_size());
                    v[idx] = rng.rademacher() * rng.uniform();
                }
                linalg::normalized(v.view())
            }
            RangeKind::ConstrainedGroupSparse { layout, floor } => {
                let n = self.n;
                if layout.k() == 1 {
                    return Ok(linalg::canonical(n, n - 1));
                }
                let mut v = Array1::zeros(n);
                let last_value = rng.uniform_in(*floor, 1.0);
                v[n - 1] = last_value;
                let mut rest = Array1::zeros(n);
                for group in layout.groups().take(layout.k() - 1) {
                    let idx = group.start + rng.index(layout.group_size());
                    rest[idx] = rng.rademacher() * rng.uniform();
                }
                let scale = (1.0 - last_value * last_value).sqrt()
                    / linalg::l2_norm(rest.view());
                for i in 0..n - 1 {
                    v[i] = rest[i] * scale;
                }
                Ok(v)
            }
            RangeKind::Linear { basis } => loop {
                let z = Array1::from_shape_fn(self.k, |_| rng.gaussian());
                let v = basis.dot(&z);
                if let Ok(unit) = linalg::normalized(v.view()) {
                    return Ok(unit);
                }
            },
            RangeKind::ReluNet { weights, opt } => {
                for _ in 0..64 {
                    let z = sample_latent_ball(self.k, opt.radius, rng);
                    if let Some(g) = weights.forward(z.view()) {
                        return Ok(g);
                    }
                }
                Err(Error::DegenerateDirection)
            }
        }
    }
}
