//! Root-n estimation of a non-randomized treatment effect when the score that
//! assigns treatment is partly explained by observed covariates.
//!
//! The model is
//!
//! ```text
//! Y = α₀·1{Q ≥ 0} + Xᵀβ₀ + ν,      Q = Zᵀγ₀ + η,      ν = b(η) + ε
//! ```
//!
//! with `ν` and `η` correlated. The crate estimates `α₀` by splitting the
//! sample in three, estimating `γ₀` and the derivative `b′` on two parts as
//! nuisances, and solving a stacked projected least-squares system on the third.
//! A debiased-LASSO variant covers covariates whose dimension exceeds `n`.
//!
//! Module map:
//!
//! - [`spline`]: scaled clamped cubic B-spline basis and its derivative.
//! - [`numerics`]: least squares, projection complements, coordinate-descent LASSO.
//! - [`estimator`]: the fixed-dimension pipeline (`fit`, `fit_wls`).
//! - [`highdim`]: the high-dimensional debiased pipeline (`fit_hd`).
//! - [`inference`]: pairs-bootstrap confidence intervals and coverage checks.
//! - [`simulate`]: synthetic data-generating processes and Monte Carlo summaries.
//! - [`cli`]: CSV ingestion, JSON reports and the command dispatcher used by the
//!   `scents` binary.

pub mod cli;
pub mod data;
pub mod error;
pub mod estimator;
pub mod highdim;
pub mod inference;
pub mod numerics;
pub mod seed;
pub mod simulate;
pub mod spline;
pub mod stats;

pub use data::Dataset;
pub use error::{Error, Result};
pub use estimator::{fit, fit_wls, FitConfig, FixedFit};
pub use highdim::{fit_hd, HdConfig, HighDimFit};
pub use inference::{bootstrap_ci, coverage_check, BootstrapConfig, BootstrapResult};
pub use numerics::LassoConfig;
pub use simulate::{generate, monte_carlo, BKind, DgpConfig, MonteCarloSummary};
pub use spline::SplineBasis;
