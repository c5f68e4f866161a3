//! Power iteration and its truncated and range-projected variants.
//!
//! All three solvers share the loop `w ← step(V w)`:
//!
//! - `power`: step is plain normalization, converging to the top eigenvector;
//! - `tpower`: the product is hard-thresholded to its `q` largest-magnitude
//!   entries before normalizing, the classic sparse-PCA iteration;
//! - `ppower`: the product is projected onto a [`GenerativeRange`], so every
//!   iterate stays inside the model class.
//!
//! For a PSD matrix the quadratic form `Q(w) = wᵀVw` is non-decreasing along
//! the projected iteration (projecting a point can only increase its inner
//! product with the pre-image direction), which [`SolverRun::q_values`] makes
//! observable. An optional diagonal shift `V + ρI` is available to make an
//! indefinite matrix PSD without changing its eigenvectors.

use std::sync::Arc;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::generators::GenerativeRange;
use crate::linalg;
use crate::models::ObservationMatrix;
use crate::rng::{Rng, Seed};

/// How the starting vector is chosen.
#[derive(Debug, Clone)]
pub enum InitStrategy {
    /// Normalized column of `V` whose diagonal entry is largest (ties go to
    /// the lowest index); falls back to the canonical vector when that column
    /// is zero.
    LargestDiagonalColumn,
    /// Gaussian direction drawn from the run's seed.
    RandomUnit,
    /// Caller-supplied vector, normalized on entry.
    Provided(Array1<f64>),
}

/// Iteration family plus its family-specific payload.
#[derive(Debug, Clone)]
pub enum SolverKind {
    Power,
    TPower {
        /// Number of entries kept by the hard threshold, `1 ..= n`.
        q: usize,
    },
    PPower {
        range: Arc<GenerativeRange>,
        /// Project the initial vector onto the range before iterating, so
        /// every stored iterate lies in `Range(G)`. Disable to share a raw
        /// init with the other solvers.
        project_init: bool,
    },
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Power => "power",
            SolverKind::TPower { .. } => "tpower",
            SolverKind::PPower { .. } => "ppower",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Iteration count `T >= 1`; the run stores `T + 1` iterates.
    pub iterations: usize,
    pub init: InitStrategy,
    /// Diagonal shift ρ: the iteration uses `V + ρI`. Defaults to 0.
    pub shift: f64,
}

impl SolverConfig {
    pub fn power(iterations: usize) -> Self {
        SolverConfig {
            kind: SolverKind::Power,
            iterations,
            init: InitStrategy::LargestDiagonalColumn,
            shift: 0.0,
        }
    }

    pub fn tpower(iterations: usize, q: usize) -> Self {
        SolverConfig {
            kind: SolverKind::TPower { q },
            iterations,
            init: InitStrategy::LargestDiagonalColumn,
            shift: 0.0,
        }
    }

    pub fn ppower(iterations: usize, range: Arc<GenerativeRange>) -> Self {
        SolverConfig {
            kind: SolverKind::PPower {
                range,
                project_init: true,
            },
            iterations,
            init: InitStrategy::LargestDiagonalColumn,
            shift: 0.0,
        }
    }

    pub fn with_init(mut self, init: InitStrategy) -> Self {
        self.init = init;
        self
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }
}

/// Why a run stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverFailure {
    /// Step at which the iterate degenerated.
    pub step: usize,
}

/// Full trajectory of one solver run.
#[derive(Debug, Clone)]
pub struct SolverRun {
    /// `w⁽⁰⁾ ..= w⁽ᵀ⁾` (shorter if the run aborted); every entry is unit
    /// norm.
    pub iterates: Vec<Array1<f64>>,
    /// `Q(w⁽ᵗ⁾) = w⁽ᵗ⁾ᵀ V w⁽ᵗ⁾` for each stored iterate, on the unshifted
    /// matrix.
    pub q_values: Vec<f64>,
    /// `‖Vw − P_G(Vw)‖₂` per projected step; empty for power/tpower.
    pub proj_residuals: Vec<f64>,
    /// Set when the iteration aborted on a degenerate iterate; the stored
    /// trajectory is the partial prefix.
    pub failure: Option<SolverFailure>,
}

impl SolverRun {
    pub fn final_iterate(&self) -> &Array1<f64> {
        self.iterates.last().expect("run stores at least the init")
    }

    pub fn final_q(&self) -> f64 {
        *self.q_values.last().expect("run stores at least the init")
    }

    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    /// Steps actually taken (`iterates.len() - 1`).
    pub fn steps_taken(&self) -> usize {
        self.iterates.len() - 1
    }

    /// CSV trajectory dump with columns `t,q_value,dist_to_truth,proj_residual`.
    /// The distance is the sign-invariant `min(‖w−x̄‖, ‖w+x̄‖)`; the column is
    /// empty when no truth is given, as is the residual column for
    /// unprojected solvers.
    pub fn write_csv<W: std::io::Write>(
        &self,
        out: &mut W,
        truth: Option<&Array1<f64>>,
    ) -> std::io::Result<()> {
        writeln!(out, "t,q_value,dist_to_truth,proj_residual")?;
        for (t, (w, q)) in self.iterates.iter().zip(&self.q_values).enumerate() {
            let dist = match truth {
                Some(x) => {
                    let minus = linalg::l2_norm((w - x).view());
                    let plus = linalg::l2_norm((w + x).view());
                    format!("{}", minus.min(plus))
                }
                None => String::new(),
            };
            // proj_residuals[t-1] belongs to the step that produced iterate t.
            let residual = if t >= 1 && t - 1 < self.proj_residuals.len() {
                format!("{}", self.proj_residuals[t - 1])
            } else {
                String::new()
            };
            writeln!(out, "{t},{q},{dist},{residual}")?;
        }
        Ok(())
    }
}

/// Normalized column of the largest diagonal entry; the canonical vector for
/// a zero column.
pub fn init_largest_diagonal(v: &ObservationMatrix) -> Array1<f64> {
    let matrix = v.v();
    let n = v.n();
    let mut best = 0;
    for j in 1..n {
        if matrix[[j, j]] > matrix[[best, best]] {
            best = j;
        }
    }
    let column = matrix.column(best).to_owned();
    linalg::normalized(column.view()).unwrap_or_else(|_| linalg::canonical(n, best))
}

/// One plain power step `normalize(V w)`.
pub fn power_step(v: &ObservationMatrix, w: &Array1<f64>) -> Result<Array1<f64>> {
    let product = v.apply(w);
    linalg::normalized(product.view()).map_err(|_| Error::DegenerateIterate { step: 0 })
}

/// One truncated power step: keep the `q` largest-magnitude entries of `V w`
/// (ties to the lowest index), zero the rest, normalize.
pub fn tpower_step(v: &ObservationMatrix, w: &Array1<f64>, q: usize) -> Result<Array1<f64>> {
    if q == 0 || q > v.n() {
        return Err(Error::invalid(format!(
            "truncation level must lie in 1..={}, got {q}",
            v.n()
        )));
    }
    let mut product = v.apply(w);
    truncate_to_top_q(&mut product, q);
    linalg::normalized(product.view()).map_err(|_| Error::DegenerateIterate { step: 0 })
}

/// One projected power step `P_G(V w)`.
pub fn ppower_step(
    v: &ObservationMatrix,
    w: &Array1<f64>,
    range: &GenerativeRange,
) -> Result<Array1<f64>> {
    let product = v.apply(w);
    range.project(product.view())
}

fn truncate_to_top_q(y: &mut Array1<f64>, q: usize) {
    let n = y.len();
    if q >= n {
        return;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        y[b].abs()
            .total_cmp(&y[a].abs())
            .then_with(|| a.cmp(&b))
    });
    for &idx in &order[q..] {
        y[idx] = 0.0;
    }
}

/// Runs the configured solver for `T` steps from the configured init.
///
/// Deterministic given `(v, cfg, seed)`; the seed only matters for the
/// random-unit init. A degenerate iterate does not return an error: the run
/// comes back with [`SolverRun::failure`] set and the partial trajectory
/// attached, so harnesses can account for it explicitly.
///
/// ```
/// use gpca::models::{population_matrix, GroundTruth};
/// use gpca::solvers::{run_solver, SolverConfig};
/// use gpca::Seed;
/// use ndarray::array;
///
/// let truth = GroundTruth::new(array![0.6, 0.8, 0.0], 2.0, 0.5)?;
/// let v = population_matrix(&truth);
/// let run = run_solver(&v, &SolverConfig::power(30), Seed::new(0, 0))?;
/// assert_eq!(run.iterates.len(), 31);
/// assert!(run.final_iterate().dot(truth.x_bar()).abs() > 1.0 - 1e-9);
/// # Ok::<(), gpca::Error>(())
/// ```
pub fn run_solver(v: &ObservationMatrix, cfg: &SolverConfig, seed: Seed) -> Result<SolverRun> {
    if cfg.iterations == 0 {
        return Err(Error::invalid("iteration count must be at least 1"));
    }
    if let SolverKind::TPower { q } = cfg.kind {
        if q == 0 || q > v.n() {
            return Err(Error::invalid(format!(
                "truncation level must lie in 1..={}, got {q}",
                v.n()
            )));
        }
    }
    if let SolverKind::PPower { ref range, .. } = cfg.kind {
        if range.n() != v.n() {
            return Err(Error::invalid(format!(
                "range dimension {} does not match matrix dimension {}",
                range.n(),
                v.n()
            )));
        }
    }

    let mut w = match &cfg.init {
        InitStrategy::LargestDiagonalColumn => init_largest_diagonal(v),
        InitStrategy::RandomUnit => {
            let mut rng = Rng::new(seed);
            loop {
                let candidate = Array1::from_shape_fn(v.n(), |_| rng.gaussian());
                if let Ok(unit) = linalg::normalized(candidate.view()) {
                    break unit;
                }
            }
        }
        InitStrategy::Provided(vec) => {
            if vec.len() != v.n() {
                return Err(Error::invalid(format!(
                    "provided init has dimension {}, matrix expects {}",
                    vec.len(),
                    v.n()
                )));
            }
            linalg::normalized(vec.view())?
        }
    };
    if let SolverKind::PPower {
        ref range,
        project_init: true,
    } = cfg.kind
    {
        w = range.project(w.view())?;
    }

    let mut run = SolverRun {
        iterates: Vec::with_capacity(cfg.iterations + 1),
        q_values: Vec::with_capacity(cfg.iterations + 1),
        proj_residuals: Vec::new(),
        failure: None,
    };
    run.q_values.push(v.quadratic_form(&w));
    run.iterates.push(w.clone());

    for step in 0..cfg.iterations {
        let mut product = v.apply(&w);
        if cfg.shift != 0.0 {
            product.scaled_add(cfg.shift, &w);
        }
        let next = match &cfg.kind {
            SolverKind::Power => linalg::normalized(product.view())
                .map_err(|_| Error::DegenerateIterate { step }),
            SolverKind::TPower { q } => {
                truncate_to_top_q(&mut product, *q);
                linalg::normalized(product.view())
                    .map_err(|_| Error::DegenerateIterate { step })
            }
            SolverKind::PPower { range, .. } => match range.project_report(product.view()) {
                Ok(report) => {
                    run.proj_residuals.push(report.residual);
                    Ok(report.point)
                }
                Err(Error::ZeroVector) => Err(Error::DegenerateIterate { step }),
                Err(other) => Err(other),
            },
        };
        match next {
            Ok(next) => {
                run.q_values.push(v.quadratic_form(&next));
                run.iterates.push(next.clone());
                w = next;
            }
            Err(Error::DegenerateIterate { .. }) | Err(Error::DegenerateDirection) => {
                run.failure = Some(SolverFailure { step });
                break;
            }
            Err(other) => return Err(other),
        }
    }
    Ok(run)
}
