use std::fs;
use std::path::PathBuf;

use clap::Args;
use conngraph::io;
use conngraph::models::ModelKind;
use conngraph::sampler::Chain;
use serde::{Deserialize, Serialize};

use super::{edge_model, runtime};
use crate::config::{resolve, Common, ModelFlags};
use crate::output::{emit, Progress, Run};
use crate::Failure;

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    flags: GenerateFlags,
    /// Take burn-in and thinning from a `diagnose` report when not given.
    #[arg(long, value_name = "REPORT")]
    from_diagnose: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct GenerateFlags {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelFlags,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    burn_in: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    thinning: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub model: ModelKind,
    pub n: usize,
    pub q: f64,
    pub s: Option<f64>,
    pub seed: u64,
    pub count: usize,
    pub burn_in: Option<u64>,
    pub thinning: Option<u64>,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            model: ModelKind::Waxman,
            n: 100,
            q: 0.05,
            s: None,
            seed: 0,
            count: 1,
            burn_in: None,
            thinning: None,
        }
    }
}

#[derive(Deserialize)]
struct Recommendation {
    recommended_burn_in: Option<u64>,
    recommended_thinning: Option<u64>,
}

pub fn run(args: GenerateArgs, quiet: bool) -> Result<(), Failure> {
    let mut cfg: GenerateConfig = resolve(args.common.config.as_deref(), &args.flags)?;
    if let Some(path) = &args.from_diagnose {
        let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let rec: Recommendation = serde_json::from_str(&text)
            .map_err(|e| Failure::usage(format!("{}: not a diagnose report: {e}", path.display())))?;
        cfg.burn_in = cfg.burn_in.or(rec.recommended_burn_in);
        cfg.thinning = cfg.thinning.or(rec.recommended_thinning);
    }
    let model = edge_model(cfg.model, cfg.n, cfg.q, cfg.s, cfg.seed)?;
    let burn_in = cfg
        .burn_in
        .ok_or_else(|| Failure::usage("burn_in is required (--burn-in or --from-diagnose)"))?;
    let thinning = cfg
        .thinning
        .ok_or_else(|| Failure::usage("thinning is required (--thinning or --from-diagnose)"))?;
    if thinning == 0 {
        return Err(Failure::usage("thinning must be at least 1"));
    }
    if cfg.count == 0 {
        return Err(Failure::usage("count must be at least 1"));
    }

    let mut run = Run::start("generate", Some(cfg.seed), &cfg, args.common.out_dir.as_deref())?;
    let mut progress = Progress::new(quiet);
    let mut chain = Chain::new(model, cfg.n, cfg.seed).map_err(runtime)?;
    run.write("positions.csv", io::positions_csv_string(chain.graph().positions()))?;
    run.phase("init");

    let width = (cfg.count - 1).to_string().len().max(4);
    let mut graphs = Vec::with_capacity(cfg.count);
    chain
        .sample(burn_in, thinning, cfg.count, |g| {
            graphs.push(io::edge_list_string(g));
            progress.tick(|| format!("generate: {}/{} graphs", graphs.len(), cfg.count));
        })
        .map_err(runtime)?;
    run.phase("sample");
    for (k, text) in graphs.iter().enumerate() {
        run.write(&format!("graph-{k:0width$}.edges"), text)?;
    }
    run.phase("write");
    let dir = run.finish()?;
    emit(dir.display().to_string())?;
    Ok(())
}
