//! Principal component analysis under generative range constraints.
//!
//! The crate estimates the top eigenvector of a symmetric observation matrix
//! `V = V̄ + E` when the eigenvector is known to lie in (or near) the range of
//! a generative map `G` whose image sits inside the unit sphere. It provides:
//!
//! - [`models`]: seeded constructions of the observation matrices for the
//!   spiked covariance, spiked Wigner, and thresholded phase-retrieval data
//!   models, together with their population counterparts.
//! - [`generators`]: generative ranges (sphere, group-sparse families, linear
//!   subspaces, small ReLU networks) and the projection operators onto them —
//!   exact combinatorial projections where the structure allows, latent-space
//!   Adam optimization otherwise.
//! - [`solvers`]: power iteration, truncated power iteration, and projected
//!   power iteration with per-step diagnostics.
//! - [`metrics`]: recovery metrics, the vector/outer-product distance
//!   sandwich, log-log rate fitting, and an empirical bilinear concentration
//!   audit for the perturbation `E`.
//! - [`sweep`]: a deterministic Monte-Carlo harness that runs solver
//!   comparisons over grids of sample sizes and SNR levels and emits CSV
//!   tables plus a gnuplot script.
//!
//! Everything is deterministic given a [`rng::Seed`]; trials of a sweep only
//! differ in their stream index, so they can run in parallel (the `parallel`
//! feature, on by default) without changing any output byte.

pub mod error;
pub mod generators;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod rng;
pub mod solvers;
pub mod sweep;

pub use error::{Error, Result};
pub use rng::Seed;
