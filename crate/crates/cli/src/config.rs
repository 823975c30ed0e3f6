//! Config resolution: flags over JSON file over defaults.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::Failure;

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON file with config fields; flags given on the command line win.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory; must not exist yet (or be empty).
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

/// Model flags shared by the sampling subcommands.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct ModelFlags {
    /// `waxman` or `ger`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn merge(base: &mut Map<String, Value>, over: Value, source: &str) -> Result<(), Failure> {
    match over {
        Value::Object(map) => {
            base.extend(map);
            Ok(())
        }
        Value::Null => Ok(()),
        _ => Err(Failure::usage(format!("{source} must be a JSON object"))),
    }
}

/// Layers `flags` over the file at `path` over `T::default()` and
/// deserializes the result. Errors name the offending field.
pub fn resolve<T, F>(path: Option<&Path>, flags: &F) -> Result<T, Failure>
where
    T: Serialize + DeserializeOwned + Default,
    F: Serialize,
{
    let Value::Object(mut merged) = serde_json::to_value(T::default()).expect("defaults serialize") else {
        unreachable!("configs are structs");
    };
    if let Some(path) = path {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?;
        merge(&mut merged, value, "config file")?;
    }
    merge(&mut merged, serde_json::to_value(flags).expect("flags serialize"), "flags")?;
    serde_path_to_error::deserialize(Value::Object(merged)).map_err(|e| {
        let field = e.path().to_string();
        Failure::usage(format!("invalid config field `{field}`: {}", e.inner()))
    })
}
