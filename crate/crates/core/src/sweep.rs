//! Deterministic Monte-Carlo sweep harness.
//!
//! A [`SweepSpec`] fixes a data model, a generative range, a solver list, and
//! grids of sample sizes and SNR values. [`run_sweep`] then, for every grid
//! point and trial:
//!
//! 1. samples a ground truth inside the range,
//! 2. builds the observation matrix,
//! 3. runs every solver from the same initial vectors (the largest-diagonal
//!    column plus `restarts − 1` shared random units), keeping each solver's
//!    best restart by final quadratic form — an observable quantity, so the
//!    selection never peeks at the truth,
//! 4. records cosine similarity and outer-product distance against the truth.
//!
//! Every trial derives its streams from `(base_seed, grid index, trial)`, so
//! results are independent of execution order and of the `--jobs` level, and
//! re-running with fewer trials reproduces a prefix of the rows. Degenerate
//! trials are recorded with a failure flag, never dropped.
//!
//! The synthetic analog of averaging a recovery metric over a test-image set
//! is averaging over ground truths sampled from the range; summaries report
//! mean, median, and interquartile range per group.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::generators::{
    orthonormalize_columns, GenerativeRange, LatentOptConfig, ReluNetWeights,
};
use crate::io;
use crate::metrics;
use crate::models::{
    phase_retrieval_matrix, spiked_covariance_matrix, spiked_wigner_matrix, truncated_moments,
    GroundTruth, ObservationMatrix, PhaseRetrievalParams,
};
use crate::rng::{Rng, Seed};
use crate::solvers::{run_solver, InitStrategy, SolverConfig, SolverKind, SolverRun};

/// Data model of a sweep, with its model-specific parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    SpikedCovariance { n: usize },
    SpikedWigner { n: usize },
    PhaseRetrieval { n: usize, l: f64, u: f64 },
}

impl ModelSpec {
    pub fn n(&self) -> usize {
        match *self {
            ModelSpec::SpikedCovariance { n }
            | ModelSpec::SpikedWigner { n }
            | ModelSpec::PhaseRetrieval { n, .. } => n,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::SpikedCovariance { .. } => "spiked-covariance",
            ModelSpec::SpikedWigner { .. } => "spiked-wigner",
            ModelSpec::PhaseRetrieval { .. } => "phase-retrieval",
        }
    }
}

/// Generative range of a sweep. Concrete bases and network weights are
/// derived deterministically from the base seed (or loaded from a file).
#[derive(Debug, Clone, PartialEq)]
pub enum RangeSpec {
    Sphere,
    GroupSparse { k: usize },
    ConstrainedGroupSparse { k: usize, floor: f64 },
    Linear { k: usize },
    ReluNet {
        k: usize,
        hidden: usize,
        weights: Option<PathBuf>,
    },
}

impl RangeSpec {
    pub fn name(&self) -> &'static str {
        match self {
            RangeSpec::Sphere => "sphere",
            RangeSpec::GroupSparse { .. } => "group-sparse",
            RangeSpec::ConstrainedGroupSparse { .. } => "constrained-group-sparse",
            RangeSpec::Linear { .. } => "linear-range",
            RangeSpec::ReluNet { .. } => "relu-net",
        }
    }
}

/// Solver entry of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverSpec {
    Power,
    TPower { q: usize },
    PPower,
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Power => "power",
            SolverSpec::TPower { .. } => "tpower",
            SolverSpec::PPower => "ppower",
        }
    }

    /// Config-file token, e.g. `tpower:q=64`.
    pub fn to_token(self) -> String {
        match self {
            SolverSpec::TPower { q } => format!("tpower:q={q}"),
            other => other.name().to_string(),
        }
    }

    /// Parses a config-file token (`power`, `tpower:q=64`, `ppower`).
    pub fn parse_token(token: &str) -> Result<Self> {
        let token = token.trim();
        match token {
            "power" => return Ok(SolverSpec::Power),
            "ppower" => return Ok(SolverSpec::PPower),
            _ => {}
        }
        if let Some(rest) = token.strip_prefix("tpower") {
            let rest = rest.trim();
            if rest.is_empty() {
                return Err(Error::Parse(
                    "tpower needs a truncation level, e.g. `tpower:q=64`".into(),
                ));
            }
            let rest = rest
                .strip_prefix(':')
                .ok_or_else(|| Error::Parse(format!("malformed solver `{token}`")))?;
            let q = rest
                .strip_prefix("q=")
                .ok_or_else(|| Error::Parse(format!("malformed solver `{token}`")))?
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("malformed truncation level in `{token}`")))?;
            return Ok(SolverSpec::TPower { q });
        }
        Err(Error::Parse(format!("unknown solver `{token}`")))
    }
}

/// Full description of a sweep; hashable, serializable to a `key = value`
/// config file, and sufficient to reproduce every output byte (wall-clock
/// columns aside).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub model: ModelSpec,
    pub range: RangeSpec,
    pub solvers: Vec<SolverSpec>,
    /// Sample sizes; when empty, `[300]` is used.
    pub m_values: Vec<usize>,
    /// SNR values for the spiked models; when empty, `[1.0]` is used. The
    /// phase-retrieval SNR is determined by `(l, u)` instead.
    pub beta_values: Vec<f64>,
    pub trials: usize,
    /// Initial vectors per solver: the largest-diagonal column plus
    /// `restarts − 1` shared random units.
    pub restarts: usize,
    /// Power-iteration steps per run.
    pub iterations: usize,
    /// Diagonal shift applied inside the iteration (`V + shift·I`).
    pub shift: f64,
    /// Project the shared init onto the range for the projected solver.
    pub project_init: bool,
    pub base_seed: u64,
    pub output: PathBuf,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            model: ModelSpec::SpikedCovariance { n: 128 },
            range: RangeSpec::GroupSparse { k: 8 },
            solvers: vec![SolverSpec::Power, SolverSpec::PPower],
            m_values: vec![100, 200, 300],
            beta_values: vec![1.0],
            trials: 10,
            restarts: 3,
            iterations: 30,
            shift: 0.0,
            project_init: true,
            base_seed: 1234,
            output: PathBuf::from("gpca-out"),
        }
    }
}

// Stream layout: grid index in the high bits, trial in the middle, purpose in
// the low byte. Reserved streams for range construction use purpose bytes
// outside 0..=2.
const PURPOSE_TRUTH: u64 = 0;
const PURPOSE_MATRIX: u64 = 1;
const PURPOSE_INIT: u64 = 2;
const STREAM_LINEAR_BASIS: u64 = u64::MAX;
const STREAM_NET_WEIGHTS: u64 = u64::MAX - 1;
const STREAM_NET_PROJECTION: u64 = u64::MAX - 2;

fn trial_stream(grid_index: usize, trial: usize, purpose: u64) -> u64 {
    ((grid_index as u64) << 40) | ((trial as u64) << 8) | purpose
}

impl SweepSpec {
    /// Effective `(m, beta)` grid, outer loop over `m`.
    pub fn grid(&self) -> Vec<(usize, f64)> {
        let ms: Vec<usize> = if self.m_values.is_empty() {
            vec![300]
        } else {
            self.m_values.clone()
        };
        let betas: Vec<f64> = if self.beta_values.is_empty() {
            vec![1.0]
        } else {
            self.beta_values.clone()
        };
        let mut grid = Vec::with_capacity(ms.len() * betas.len());
        for &m in &ms {
            for &beta in &betas {
                grid.push((m, beta));
            }
        }
        grid
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.model.n();
        if n < 2 {
            return Err(Error::invalid("model dimension must be at least 2"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if self.solvers.is_empty() {
            return Err(Error::invalid("at least one solver is required"));
        }
        let mut names: Vec<&str> = self.solvers.iter().map(|s| s.name()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.solvers.len() {
            return Err(Error::invalid(
                "solver kinds must be unique so result rows stay unambiguous",
            ));
        }
        if self.m_values.is_empty() && self.beta_values.is_empty() {
            return Err(Error::invalid("m_values and beta_values cannot both be empty"));
        }
        if self.m_values.contains(&0) {
            return Err(Error::invalid("sample sizes must be positive"));
        }
        if self.beta_values.iter().any(|&b| b <= 0.0) {
            return Err(Error::invalid("beta values must be positive"));
        }
        if let ModelSpec::PhaseRetrieval { l, u, .. } = self.model {
            // Surfaces threshold errors at validation time.
            truncated_moments(l, u)?;
        }
        for solver in &self.solvers {
            if let SolverSpec::TPower { q } = solver {
                if *q == 0 || *q > n {
                    return Err(Error::invalid(format!(
                        "truncation level must lie in 1..={n}, got {q}"
                    )));
                }
            }
        }
        let grid_len = self.grid().len();
        if grid_len >= (1 << 24) || self.trials >= (1 << 32) {
            return Err(Error::invalid("grid or trial count exceeds the stream layout"));
        }
        Ok(())
    }

    /// Builds the concrete generative range for this sweep.
    pub fn build_range(&self) -> Result<GenerativeRange> {
        let n = self.model.n();
        match &self.range {
            RangeSpec::Sphere => Ok(GenerativeRange::sphere(n)),
            RangeSpec::GroupSparse { k } => GenerativeRange::group_sparse(n, *k),
            RangeSpec::ConstrainedGroupSparse { k, floor } => {
                GenerativeRange::constrained_group_sparse(n, *k, *floor)
            }
            RangeSpec::Linear { k } => {
                if *k == 0 || *k > n {
                    return Err(Error::invalid(format!(
                        "latent dimension must lie in 1..={n}, got {k}"
                    )));
                }
                let mut rng = Rng::new(Seed::new(self.base_seed, STREAM_LINEAR_BASIS));
                let raw = ndarray::Array2::from_shape_fn((n, *k), |_| rng.gaussian());
                GenerativeRange::linear(orthonormalize_columns(raw)?)
            }
            RangeSpec::ReluNet { k, hidden, weights } => {
                let net = match weights {
                    Some(path) => {
                        let net = io::read_relu_net_from_path(path)?;
                        if net.n() != n || net.k() != *k || net.h() != *hidden {
                            return Err(Error::invalid(format!(
                                "weights file is {}x{}x{} (k,h,n), spec wants {k}x{hidden}x{n}",
                                net.k(),
                                net.h(),
                                net.n()
                            )));
                        }
                        net
                    }
                    None => ReluNetWeights::random(
                        n,
                        *hidden,
                        *k,
                        Seed::new(self.base_seed, STREAM_NET_WEIGHTS),
                    ),
                };
                let opt = LatentOptConfig {
                    seed: Seed::new(self.base_seed, STREAM_NET_PROJECTION),
                    ..LatentOptConfig::default()
                };
                Ok(GenerativeRange::relu_net(net, opt))
            }
        }
    }

    /// Canonical `key = value` rendering; also the hashing input for the
    /// manifest.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("model = {}\n", self.model.name()));
        out.push_str(&format!("n = {}\n", self.model.n()));
        if let ModelSpec::PhaseRetrieval { l, u, .. } = self.model {
            out.push_str(&format!("l = {l}\n"));
            out.push_str(&format!("u = {u}\n"));
        }
        out.push_str(&format!("range = {}\n", self.range.name()));
        match &self.range {
            RangeSpec::Sphere => {}
            RangeSpec::GroupSparse { k } => out.push_str(&format!("k = {k}\n")),
            RangeSpec::ConstrainedGroupSparse { k, floor } => {
                out.push_str(&format!("k = {k}\n"));
                out.push_str(&format!("floor = {floor}\n"));
            }
            RangeSpec::Linear { k } => out.push_str(&format!("k = {k}\n")),
            RangeSpec::ReluNet { k, hidden, weights } => {
                out.push_str(&format!("k = {k}\n"));
                out.push_str(&format!("hidden = {hidden}\n"));
                if let Some(path) = weights {
                    out.push_str(&format!("weights = {}\n", path.display()));
                }
            }
        }
        let solver_tokens: Vec<String> =
            self.solvers.iter().map(|s| s.to_token()).collect();
        out.push_str(&format!("solvers = {}\n", solver_tokens.join(", ")));
        let m_tokens: Vec<String> = self.m_values.iter().map(|m| m.to_string()).collect();
        out.push_str(&format!("m_values = {}\n", m_tokens.join(", ")));
        let beta_tokens: Vec<String> =
            self.beta_values.iter().map(|b| b.to_string()).collect();
        out.push_str(&format!("beta_values = {}\n", beta_tokens.join(", ")));
        out.push_str(&format!("trials = {}\n", self.trials));
        out.push_str(&format!("restarts = {}\n", self.restarts));
        out.push_str(&format!("iterations = {}\n", self.iterations));
        out.push_str(&format!("shift = {}\n", self.shift));
        out.push_str(&format!("project_init = {}\n", self.project_init));
        out.push_str(&format!("base_seed = {}\n", self.base_seed));
        out.push_str(&format!("output = {}\n", self.output.display()));
        out
    }

    /// SHA-256 of the canonical config rendering.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_config_string().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Parses a `key = value` config (one pair per line, `#` comments).
    /// Omitted keys keep their [`Default`] values; the spec is validated at
    /// the end.
    pub fn from_config_str(text: &str) -> Result<SweepSpec> {
        let mut model_name: Option<String> = None;
        let mut n: Option<usize> = None;
        let mut l: Option<f64> = None;
        let mut u: Option<f64> = None;
        let mut range_name: Option<String> = None;
        let mut k: Option<usize> = None;
        let mut floor: Option<f64> = None;
        let mut hidden: Option<usize> = None;
        let mut weights: Option<PathBuf> = None;
        let mut spec = SweepSpec::default();

        for (line_no, raw_line) in text.lines().enumerate() {
            let line = match raw_line.split_once('#') {
                Some((before, _)) => before,
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected `key = value`", line_no + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let parse_err =
                |what: &str| Error::Parse(format!("line {}: bad {what} `{value}`", line_no + 1));
            match key {
                "model" => model_name = Some(value.to_string()),
                "n" => n = Some(value.parse().map_err(|_| parse_err("dimension"))?),
                "l" => l = Some(value.parse().map_err(|_| parse_err("threshold"))?),
                "u" => u = Some(value.parse().map_err(|_| parse_err("threshold"))?),
                "range" => range_name = Some(value.to_string()),
                "k" => k = Some(value.parse().map_err(|_| parse_err("latent dimension"))?),
                "floor" => floor = Some(value.parse().map_err(|_| parse_err("floor"))?),
                "hidden" => hidden = Some(value.parse().map_err(|_| parse_err("width"))?),
                "weights" => weights = Some(PathBuf::from(value)),
                "solvers" => {
                    spec.solvers = value
                        .split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(SolverSpec::parse_token)
                        .collect::<Result<Vec<_>>>()?;
                }
                "m_values" => {
                    spec.m_values = value
                        .split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| t.trim().parse().map_err(|_| parse_err("sample size")))
                        .collect::<Result<Vec<_>>>()?;
                }
                "beta_values" => {
                    spec.beta_values = value
                        .split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| t.trim().parse().map_err(|_| parse_err("beta")))
                        .collect::<Result<Vec<_>>>()?;
                }
                "trials" => spec.trials = value.parse().map_err(|_| parse_err("trials"))?,
                "restarts" => spec.restarts = value.parse().map_err(|_| parse_err("restarts"))?,
                "iterations" => {
                    spec.iterations = value.parse().map_err(|_| parse_err("iterations"))?
                }
                "shift" => spec.shift = value.parse().map_err(|_| parse_err("shift"))?,
                "project_init" => {
                    spec.project_init = value.parse().map_err(|_| parse_err("flag"))?
                }
                "base_seed" => spec.base_seed = value.parse().map_err(|_| parse_err("seed"))?,
                "output" => spec.output = PathBuf::from(value),
                other => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown key `{other}`",
                        line_no + 1
                    )))
                }
            }
        }

        let n = n.unwrap_or(spec.model.n());
        if let Some(name) = model_name {
            spec.model = match name.as_str() {
                "spiked-covariance" => ModelSpec::SpikedCovariance { n },
                "spiked-wigner" => ModelSpec::SpikedWigner { n },
                "phase-retrieval" => ModelSpec::PhaseRetrieval {
                    n,
                    l: l.unwrap_or(1.0),
                    u: u.unwrap_or(5.0),
                },
                other => return Err(Error::Parse(format!("unknown model `{other}`"))),
            };
        } else {
            spec.model = ModelSpec::SpikedCovariance { n };
        }

        let default_k = match &spec.range {
            RangeSpec::GroupSparse { k }
            | RangeSpec::ConstrainedGroupSparse { k, .. }
            | RangeSpec::Linear { k }
            | RangeSpec::ReluNet { k, .. } => *k,
            RangeSpec::Sphere => n,
        };
        let k = k.unwrap_or(default_k);
        if let Some(name) = range_name {
            spec.range = match name.as_str() {
                "sphere" => RangeSpec::Sphere,
                "group-sparse" => RangeSpec::GroupSparse { k },
                "constrained-group-sparse" => RangeSpec::ConstrainedGroupSparse {
                    k,
                    floor: floor.unwrap_or(0.5),
                },
                "linear-range" => RangeSpec::Linear { k },
                "relu-net" => RangeSpec::ReluNet {
                    k,
                    hidden: hidden.unwrap_or(2 * k),
                    weights,
                },
                other => return Err(Error::Parse(format!("unknown range `{other}`"))),
            };
        } else if let RangeSpec::GroupSparse { k: spec_k } = &mut spec.range {
            *spec_k = k;
        }

        spec.validate()?;
        Ok(spec)
    }
}

/// One result row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub model: String,
    pub solver: String,
    pub m: usize,
    pub beta: f64,
    pub trial: usize,
    pub cossim: f64,
    pub outer_frobenius: f64,
    pub iterations_run: usize,
    /// Seconds spent in this solver across its restarts. The only
    /// non-reproducible column.
    pub wall_time: f64,
    pub failed: bool,
}

const ROWS_HEADER: &str =
    "model,solver,m,beta,trial,cossim,outer_frobenius,iterations_run,wall_time,failed";

/// All rows of a sweep, in deterministic grid/trial/solver order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.failed).count()
    }

    pub fn write_rows_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{ROWS_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.model,
                r.solver,
                r.m,
                r.beta,
                r.trial,
                r.cossim,
                r.outer_frobenius,
                r.iterations_run,
                r.wall_time,
                r.failed
            )?;
        }
        Ok(())
    }

    pub fn read_rows_csv(text: &str) -> Result<SweepResult> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty rows file".into()))?;
        if header != ROWS_HEADER {
            return Err(Error::Parse(format!("unexpected header `{header}`")));
        }
        let mut rows = Vec::new();
        for (idx, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 10 {
                return Err(Error::Parse(format!(
                    "row {}: expected 10 fields, got {}",
                    idx + 2,
                    fields.len()
                )));
            }
            let parse_err = |what: &str, v: &str| {
                Error::Parse(format!("row {}: bad {what} `{v}`", idx + 2))
            };
            rows.push(SweepRow {
                model: fields[0].to_string(),
                solver: fields[1].to_string(),
                m: fields[2].parse().map_err(|_| parse_err("m", fields[2]))?,
                beta: fields[3].parse().map_err(|_| parse_err("beta", fields[3]))?,
                trial: fields[4].parse().map_err(|_| parse_err("trial", fields[4]))?,
                cossim: fields[5]
                    .parse()
                    .map_err(|_| parse_err("cossim", fields[5]))?,
                outer_frobenius: fields[6]
                    .parse()
                    .map_err(|_| parse_err("outer_frobenius", fields[6]))?,
                iterations_run: fields[7]
                    .parse()
                    .map_err(|_| parse_err("iterations_run", fields[7]))?,
                wall_time: fields[8]
                    .parse()
                    .map_err(|_| parse_err("wall_time", fields[8]))?,
                failed: fields[9]
                    .parse()
                    .map_err(|_| parse_err("failed", fields[9]))?,
            });
        }
        Ok(SweepResult { rows })
    }
}

struct TrialContext<'a> {
    spec: &'a SweepSpec,
    range: Arc<GenerativeRange>,
    pr_params: Option<PhaseRetrievalParams>,
}

#[derive(Clone, Copy)]
struct WorkItem {
    grid_index: usize,
    m: usize,
    beta: f64,
    trial: usize,
}

/// Executes the sweep. `jobs` bounds the worker threads: 0 uses the default
/// pool, 1 forces the sequential path. Without the `parallel` feature the
/// sweep always runs sequentially.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<SweepResult> {
    spec.validate()?;
    let range = Arc::new(spec.build_range()?);
    let pr_params = match spec.model {
        ModelSpec::PhaseRetrieval { l, u, .. } => Some(truncated_moments(l, u)?),
        _ => None,
    };
    let ctx = TrialContext {
        spec,
        range,
        pr_params,
    };

    let mut items = Vec::new();
    for (grid_index, &(m, beta)) in spec.grid().iter().enumerate() {
        for trial in 0..spec.trials {
            items.push(WorkItem {
                grid_index,
                m,
                beta,
                trial,
            });
        }
    }

    let groups = execute(&items, &ctx, jobs);
    Ok(SweepResult {
        rows: groups.into_iter().flatten().collect(),
    })
}

#[cfg(feature = "parallel")]
fn execute(items: &[WorkItem], ctx: &TrialContext<'_>, jobs: usize) -> Vec<Vec<SweepRow>> {
    if jobs == 1 {
        return execute_serial(items, ctx);
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool construction");
    // Indexed par_iter + collect preserves item order, so the rows come out
    // in the same order as the sequential path.
    pool.install(|| items.par_iter().map(|item| run_trial(ctx, item)).collect())
}

#[cfg(not(feature = "parallel"))]
fn execute(items: &[WorkItem], ctx: &TrialContext<'_>, _jobs: usize) -> Vec<Vec<SweepRow>> {
    execute_serial(items, ctx)
}

fn execute_serial(items: &[WorkItem], ctx: &TrialContext<'_>) -> Vec<Vec<SweepRow>> {
    items.iter().map(|item| run_trial(ctx, item)).collect()
}

fn failure_rows(ctx: &TrialContext<'_>, item: &WorkItem) -> Vec<SweepRow> {
    // Keep the beta column consistent with success rows: the phase-retrieval
    // model records its truncated-moment SNR.
    let beta = match &ctx.pr_params {
        Some(params) => params.beta(),
        None => item.beta,
    };
    ctx.spec
        .solvers
        .iter()
        .map(|solver| SweepRow {
            model: ctx.spec.model.name().to_string(),
            solver: solver.name().to_string(),
            m: item.m,
            beta,
            trial: item.trial,
            cossim: 0.0,
            outer_frobenius: 0.0,
            iterations_run: 0,
            wall_time: 0.0,
            failed: true,
        })
        .collect()
}

fn run_trial(ctx: &TrialContext<'_>, item: &WorkItem) -> Vec<SweepRow> {
    let spec = ctx.spec;
    let base = spec.base_seed;

    let mut truth_rng = Rng::new(Seed::new(
        base,
        trial_stream(item.grid_index, item.trial, PURPOSE_TRUTH),
    ));
    let Ok(truth_vec) = ctx.range.sample(&mut truth_rng) else {
        return failure_rows(ctx, item);
    };

    let matrix_seed = Seed::new(
        base,
        trial_stream(item.grid_index, item.trial, PURPOSE_MATRIX),
    );
    let built: Result<(ObservationMatrix, GroundTruth)> = match &spec.model {
        ModelSpec::SpikedCovariance { .. } => {
            spiked_covariance_matrix(&truth_vec, item.beta, item.m, matrix_seed)
        }
        ModelSpec::SpikedWigner { .. } => {
            spiked_wigner_matrix(&truth_vec, item.beta, matrix_seed)
        }
        ModelSpec::PhaseRetrieval { .. } => {
            let params = ctx.pr_params.as_ref().expect("validated phase retrieval");
            phase_retrieval_matrix(&truth_vec, item.m, params, matrix_seed)
        }
    };
    let Ok((observation, truth)) = built else {
        return failure_rows(ctx, item);
    };

    // Shared initial vectors: the deterministic largest-diagonal column plus
    // restarts-1 random units, identical across solvers.
    let mut inits = vec![InitStrategy::LargestDiagonalColumn];
    let mut init_rng = Rng::new(Seed::new(
        base,
        trial_stream(item.grid_index, item.trial, PURPOSE_INIT),
    ));
    for _ in 1..spec.restarts {
        loop {
            let candidate =
                ndarray::Array1::from_shape_fn(observation.n(), |_| init_rng.gaussian());
            if let Ok(unit) = crate::linalg::normalized(candidate.view()) {
                inits.push(InitStrategy::Provided(unit));
                break;
            }
        }
    }

    let mut rows = Vec::with_capacity(spec.solvers.len());
    for solver in &spec.solvers {
        let started = Instant::now();
        let mut best: Option<SolverRun> = None;
        for init in &inits {
            let kind = match solver {
                SolverSpec::Power => SolverKind::Power,
                SolverSpec::TPower { q } => SolverKind::TPower { q: *q },
                SolverSpec::PPower => SolverKind::PPower {
                    range: ctx.range.clone(),
                    project_init: spec.project_init,
                },
            };
            let cfg = SolverConfig {
                kind,
                iterations: spec.iterations,
                init: init.clone(),
                shift: spec.shift,
            };
            let Ok(run) = run_solver(&observation, &cfg, matrix_seed) else {
                continue;
            };
            // Best restart by final quadratic form, preferring completed runs.
            let better = match &best {
                None => true,
                Some(current) => match (run.completed(), current.completed()) {
                    (true, false) => true,
                    (false, true) => false,
                    _ => run.final_q() > current.final_q(),
                },
            };
            if better {
                best = Some(run);
            }
        }
        let wall_time = started.elapsed().as_secs_f64();
        let row = match best {
            Some(run) => {
                let final_w = run.final_iterate();
                let cossim = metrics::cosine_similarity(final_w.view(), truth.x_bar().view())
                    .unwrap_or(0.0);
                let outer = metrics::outer_product_distance(
                    final_w.view(),
                    truth.x_bar().view(),
                )
                .unwrap_or(f64::NAN);
                SweepRow {
                    model: spec.model.name().to_string(),
                    solver: solver.name().to_string(),
                    m: observation.m(),
                    beta: truth.lambda1(),
                    trial: item.trial,
                    cossim,
                    outer_frobenius: outer,
                    iterations_run: run.steps_taken(),
                    wall_time,
                    failed: !run.completed(),
                }
            }
            None => SweepRow {
                model: spec.model.name().to_string(),
                solver: solver.name().to_string(),
                m: observation.m(),
                beta: truth.lambda1(),
                trial: item.trial,
                cossim: 0.0,
                outer_frobenius: 0.0,
                iterations_run: 0,
                wall_time,
                failed: true,
            },
        };
        rows.push(row);
    }
    rows
}

/// Per-group aggregate of the two recovery metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// Values of the grouping keys, in `group_by` order.
    pub key: Vec<String>,
    pub count: usize,
    pub cossim_mean: f64,
    pub cossim_median: f64,
    pub cossim_iqr: f64,
    pub outer_mean: f64,
    pub outer_median: f64,
    pub outer_iqr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub group_by: Vec<String>,
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "{},count,cossim_mean,cossim_median,cossim_iqr,outer_frobenius_mean,outer_frobenius_median,outer_frobenius_iqr",
            self.group_by.join(",")
        )?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                row.key.join(","),
                row.count,
                row.cossim_mean,
                row.cossim_median,
                row.cossim_iqr,
                row.outer_mean,
                row.outer_median,
                row.outer_iqr
            )?;
        }
        Ok(())
    }

    /// Convenience lookup of a single-key group's median cosine similarity.
    pub fn median_cossim_for(&self, key: &[&str]) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.key.iter().map(String::as_str).eq(key.iter().copied()))
            .map(|r| r.cossim_median)
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    }
}

fn summary_stats(values: &mut [f64]) -> (f64, f64, f64) {
    values.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let median = quantile(values, 0.5);
    let iqr = quantile(values, 0.75) - quantile(values, 0.25);
    (mean, median, iqr)
}

/// Groups the non-failed rows by the given keys (any of `model`, `solver`,
/// `m`, `beta`) and reports mean/median/IQR of both metrics per group, in
/// first-appearance order.
pub fn summarize(result: &SweepResult, group_by: &[&str]) -> Result<SummaryTable> {
    for key in group_by {
        if !matches!(*key, "model" | "solver" | "m" | "beta") {
            return Err(Error::invalid(format!("unknown group key `{key}`")));
        }
    }
    let usable: Vec<&SweepRow> = result.rows.iter().filter(|r| !r.failed).collect();
    if usable.is_empty() {
        return Err(Error::invalid("no usable rows to summarize"));
    }

    let key_of = |row: &SweepRow| -> Vec<String> {
        group_by
            .iter()
            .map(|key| match *key {
                "model" => row.model.clone(),
                "solver" => row.solver.clone(),
                "m" => row.m.to_string(),
                "beta" => row.beta.to_string(),
                _ => unreachable!("keys validated above"),
            })
            .collect()
    };

    let mut order: Vec<Vec<String>> = Vec::new();
    let mut buckets: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for row in usable {
        let key = key_of(row);
        let idx = match order.iter().position(|k| *k == key) {
            Some(idx) => idx,
            None => {
                order.push(key);
                buckets.push((Vec::new(), Vec::new()));
                order.len() - 1
            }
        };
        buckets[idx].0.push(row.cossim);
        buckets[idx].1.push(row.outer_frobenius);
    }

    let rows = order
        .into_iter()
        .zip(buckets)
        .map(|(key, (mut cossims, mut outers))| {
            let count = cossims.len();
            let (cossim_mean, cossim_median, cossim_iqr) = summary_stats(&mut cossims);
            let (outer_mean, outer_median, outer_iqr) = summary_stats(&mut outers);
            SummaryRow {
                key,
                count,
                cossim_mean,
                cossim_median,
                cossim_iqr,
                outer_mean,
                outer_median,
                outer_iqr,
            }
        })
        .collect();
    Ok(SummaryTable {
        group_by: group_by.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

/// Paths written by [`emit_outputs`].
#[derive(Debug, Clone)]
pub struct EmittedFiles {
    pub rows: PathBuf,
    pub summary: PathBuf,
    pub manifest: PathBuf,
    pub plot: PathBuf,
}

/// Writes `rows.csv`, `summary.csv`, `manifest.txt`, and `plot.gp` under
/// `dir`.
pub fn emit_outputs(
    spec: &SweepSpec,
    result: &SweepResult,
    summary: &SummaryTable,
    dir: &Path,
) -> Result<EmittedFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = EmittedFiles {
        rows: dir.join("rows.csv"),
        summary: dir.join("summary.csv"),
        manifest: dir.join("manifest.txt"),
        plot: dir.join("plot.gp"),
    };

    let mut rows_buf = Vec::new();
    result
        .write_rows_csv(&mut rows_buf)
        .map_err(|e| Error::io(&paths.rows, e))?;
    std::fs::write(&paths.rows, rows_buf).map_err(|e| Error::io(&paths.rows, e))?;

    let mut summary_buf = Vec::new();
    summary
        .write_csv(&mut summary_buf)
        .map_err(|e| Error::io(&paths.summary, e))?;
    std::fs::write(&paths.summary, summary_buf).map_err(|e| Error::io(&paths.summary, e))?;

    let manifest = format!(
        "gpca sweep manifest\nspec_sha256 = {}\nbase_seed = {}\nrows = {}\nfailed_rows = {}\n--- spec ---\n{}",
        spec.content_hash(),
        spec.base_seed,
        result.rows.len(),
        result.failed_rows(),
        spec.to_config_string()
    );
    std::fs::write(&paths.manifest, manifest).map_err(|e| Error::io(&paths.manifest, e))?;

    let script = plot_script(spec, result);
    std::fs::write(&paths.plot, script).map_err(|e| Error::io(&paths.plot, e))?;

    Ok(paths)
}

/// Generates a self-contained gnuplot script with inline data blocks: median
/// cosine similarity against `m` (at the first beta) and against `beta` (at
/// the first m), one series per solver.
fn plot_script(spec: &SweepSpec, result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str("# generated by gpca sweep; render with: gnuplot plot.gp\n");
    out.push_str("set terminal pngcairo size 900,600\nset grid\nset key bottom right\n");
    out.push_str("set yrange [0:1]\nset ylabel \"median cosine similarity\"\n\n");

    let solver_names: Vec<&'static str> = spec.solvers.iter().map(|s| s.name()).collect();
    // Anchor the slice values on the rows rather than the spec grid: the
    // phase-retrieval model records its truncated-moment SNR as beta, not
    // the grid placeholder.
    let first_usable = result.rows.iter().find(|r| !r.failed);
    let first_beta = first_usable.map(|r| r.beta);
    let first_m = first_usable.map(|r| r.m);

    // (solver, m, beta) -> median cossim over non-failed trials.
    let median_for = |solver: &str, want_m: Option<usize>, want_beta: Option<f64>| -> Vec<(f64, f64)> {
        let mut series: Vec<(f64, Vec<f64>)> = Vec::new();
        for row in result.rows.iter().filter(|r| !r.failed && r.solver == solver) {
            let (x, keep) = match (want_m, want_beta) {
                (None, Some(beta)) => (row.m as f64, row.beta == beta),
                (Some(m), None) => (row.beta, row.m == m),
                _ => unreachable!(),
            };
            if !keep {
                continue;
            }
            match series.iter_mut().find(|(sx, _)| *sx == x) {
                Some((_, values)) => values.push(row.cossim),
                None => series.push((x, vec![row.cossim])),
            }
        }
        series.sort_by(|a, b| a.0.total_cmp(&b.0));
        series
            .into_iter()
            .map(|(x, mut values)| {
                values.sort_by(f64::total_cmp);
                (x, quantile(&values, 0.5))
            })
            .collect()
    };

    let emit_plot = |out: &mut String, tag: &str, xlabel: &str, png: &str,
                         series_of: &dyn Fn(&str) -> Vec<(f64, f64)>| {
        let mut with_data = Vec::new();
        for name in &solver_names {
            let series = series_of(name);
            if series.is_empty() {
                continue;
            }
            out.push_str(&format!("${}_{} << EOD\n", name, tag));
            for (x, y) in &series {
                out.push_str(&format!("{x} {y}\n"));
            }
            out.push_str("EOD\n");
            with_data.push(*name);
        }
        if with_data.is_empty() {
            out.push_str(&format!("print \"no data for {png}\"\n\n"));
            return;
        }
        out.push_str(&format!("set output \"{png}\"\nset xlabel \"{xlabel}\"\n"));
        let clauses: Vec<String> = with_data
            .iter()
            .map(|name| {
                format!("${}_{} using 1:2 with linespoints title \"{}\"", name, tag, name)
            })
            .collect();
        out.push_str(&format!("plot {}\n\n", clauses.join(", \\\n     ")));
    };

    match first_beta {
        Some(beta) => emit_plot(
            &mut out,
            "vs_m",
            "m",
            "cossim_vs_m.png",
            &|name| median_for(name, None, Some(beta)),
        ),
        None => out.push_str("print \"no data for cossim_vs_m.png\"\n\n"),
    }
    match first_m {
        Some(m) => emit_plot(
            &mut out,
            "vs_beta",
            "beta",
            "cossim_vs_beta.png",
            &|name| median_for(name, Some(m), None),
        ),
        None => out.push_str("print \"no data for cossim_vs_beta.png\"\n\n"),
    }
    out
}
