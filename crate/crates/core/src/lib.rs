//! Sampling connected graphs from spatially embedded random network models.
//!
//! The crate draws graphs from `P(G | G connected)` for Waxman-type models
//! (edge probability `q * exp(-s * d)`, with the Gilbert/Erdős–Rényi model as
//! the `s = 0` case) using a single-link Metropolis-Hastings chain whose state
//! never leaves the space of connected graphs.
//!
//! Modules:
//!
//! * [`graph`]: the chain state, a labeled undirected graph with fixed node
//!   positions and hash-set adjacency.
//! * [`models`]: edge probability laws, likelihoods, unconditioned generation.
//! * [`sampler`]: the Metropolis-Hastings chain, burn-in, thinning and traces.
//! * [`diagnostics`]: exponential convergence fits, single-pair chain
//!   analytics, mixing scaling studies and connectedness sweeps.
//! * [`oracle`]: exact enumeration and rejection sampling on tiny graphs.
//! * [`io`]: the on-disk formats (edge lists, positions, traces, oracle dumps).

pub mod diagnostics;
pub mod graph;
pub mod io;
pub mod models;
pub mod oracle;
pub mod rng;
pub mod sampler;

pub use graph::{GraphError, GraphStats, NodeId, Point, SpatialGraph};
pub use models::{EdgeModel, ModelConfig, ModelError, WaxmanParams};
pub use sampler::{ChainConfig, ChainTrace, StepOutcome};
