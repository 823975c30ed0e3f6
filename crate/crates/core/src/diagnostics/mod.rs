//! Convergence analysis for the chain.
//!
//! * [`fit`]: least-squares fits of `C + A exp(-B x)` to statistic traces and
//!   the relative-tolerance convergence point.
//! * [`pair_chain`]: closed-form analysis of the two-state chain of a single
//!   node pair (stationary law, spectral gap, relaxation time).
//! * [`scaling`]: iterations-to-convergence as a function of graph size.
//! * [`sweep`]: fraction of connected unconditioned graphs over a parameter
//!   grid.

pub mod fit;
pub mod pair_chain;
pub mod scaling;
pub mod sweep;

use thiserror::Error;

use crate::models::ModelError;
use crate::sampler::SamplerError;

pub use fit::{fit_exponential, iterations_to_convergence, ExponentialFit};
pub use pair_chain::{pair_chain_analysis, DeltaConvention, PairChainAnalysis};
pub use scaling::{fit_power_law, scaling_study, PowerLaw, ScalingConfig, ScalingResult, Statistic};
pub use sweep::{cochran_armitage, connectedness_sweep, SweepPoint, TrendTest};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("need at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("xs and ys differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("xs must be strictly increasing")]
    NotIncreasing,
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("relative convergence is undefined for an asymptote of zero")]
    ZeroAsymptote,
    #[error("the fit did not converge")]
    NotConverged,
    #[error("the decay rate is not identifiable from this series")]
    Unidentifiable,
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}
