//! Variational solver for 1D scalar conservation laws
//!
//! ```text
//! w_t + H(w)_x = 0,    w(x, 0) = g'(x)
//! ```
//!
//! with a convex piecewise-linear ("polygonal") flux `H`. Solutions are
//! computed from the Hopf-Lax formula
//!
//! ```text
//! u(x, t) = min_y { t L((x - y)/t) + g(y) },    w = ∂_x u,
//! ```
//!
//! where `L` is the Legendre transform of `H` — itself polygonal, finite
//! only on the closed slope interval of `H`. Because the flux is neither
//! smooth nor strictly convex, the minimizer is generally not unique; the
//! solver selects the greatest minimizer `y*(x, t)` and evaluates
//! `w(x, t) = g'(y*(x, t))`.
//!
//! Modules:
//!
//! * [`pwl_convex`] — exact polygonal functions and their conjugates.
//! * [`initial_data`] — initial data `(g, g')`: closed form, piecewise
//!   constant derivative, sampled Brownian paths.
//! * [`variational`] — the Hopf-Lax functional, greatest-minimizer search,
//!   and the exact combinatorial solver for piecewise-constant data.
//! * [`mollify`] — smoothed uniformly convex flux approximants and the
//!   vanishing-regularization convergence harness.
//! * [`verify`] — weak-form residuals, entropy/monotonicity/BV checks.
//! * [`stochastic`] — Monte Carlo ensembles over Brownian initial data.
//! * [`cli`] — batch front end (config parsing, artifact output).

// domain guards use `!(x > 0.0)` so NaN inputs fail closed
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod extended;
pub mod initial_data;
pub mod mollify;
pub mod pwl_convex;
pub mod stochastic;
#[cfg(test)]
pub(crate) mod testutil;
pub mod variational;
pub mod verify;

pub use extended::ExtReal;
pub use initial_data::InitialData;
pub use pwl_convex::{ConjugateFn, PwlConvex};
pub use variational::{Kernel, MinimizerKind, MinimizerResult, SearchConfig, SolutionField};

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Slopes fail to be strictly increasing, or a function is otherwise not convex.
    #[error("convexity violation: {0}")]
    Convexity(String),
    /// Duplicate or unsorted break points.
    #[error("degenerate segment: {0}")]
    DegenerateSegment(String),
    /// An argument is outside the operation's domain (e.g. t <= 0).
    #[error("domain error: {0}")]
    Domain(String),
    /// The flux does not satisfy the sign assumptions required by the solver.
    #[error("flux sign assumption violated: {0}")]
    FluxSigns(String),
    /// The functional appears unbounded below on the search window.
    #[error("minimization diverged: {0}")]
    Divergence(String),
    /// Mollifier corner blends would overlap.
    #[error("blend overlap: {0}")]
    Overlap(String),
    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
