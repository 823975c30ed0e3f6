pub mod chain;
pub mod diagnose;
pub mod generate;
pub mod scaling;
pub mod sweep;
pub mod validate;

use conngraph::models::{ModelConfig, ModelKind};
use conngraph::EdgeModel;

use crate::Failure;

/// Checks the model fields of a resolved config.
pub fn edge_model(model: ModelKind, n: usize, q: f64, s: Option<f64>, seed: u64) -> Result<EdgeModel, Failure> {
    ModelConfig { model, q, s, n, seed }
        .edge_model()
        .map_err(|e| Failure::usage(format!("invalid model: {e}")))
}

pub fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::runtime(e.to_string())
}
