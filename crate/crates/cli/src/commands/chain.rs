use clap::Args;
use conngraph::io;
use conngraph::models::ModelKind;
use conngraph::sampler::Chain;
use conngraph::ChainConfig;
use serde::{Deserialize, Serialize};

use super::{edge_model, runtime};
use crate::config::{resolve, Common, ModelFlags};
use crate::output::{emit, Progress, Run};
use crate::Failure;

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    flags: ChainFlags,
}

#[derive(Debug, Args, Serialize)]
struct ChainFlags {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelFlags,
    /// Number of MH steps.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<u64>,
    /// Record a trace row every this many steps.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    stat_cadence: Option<u64>,
    /// Also record the average shortest-path length (all-pairs BFS per row).
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    path_length: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainCommandConfig {
    pub model: ModelKind,
    pub n: usize,
    pub q: f64,
    pub s: Option<f64>,
    pub seed: u64,
    pub iterations: u64,
    pub stat_cadence: u64,
    pub path_length: bool,
}

impl Default for ChainCommandConfig {
    fn default() -> Self {
        ChainCommandConfig {
            model: ModelKind::Waxman,
            n: 100,
            q: 0.05,
            s: None,
            seed: 0,
            iterations: 100_000,
            stat_cadence: 1_000,
            path_length: false,
        }
    }
}

pub fn run(args: ChainArgs, quiet: bool) -> Result<(), Failure> {
    let cfg: ChainCommandConfig = resolve(args.common.config.as_deref(), &args.flags)?;
    let model = edge_model(cfg.model, cfg.n, cfg.q, cfg.s, cfg.seed)?;
    let chain_cfg = ChainConfig {
        iterations: cfg.iterations,
        seed: cfg.seed,
        stat_cadence: cfg.stat_cadence,
        record_path_length: cfg.path_length,
        ..ChainConfig::default()
    };
    chain_cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;

    let mut run = Run::start("chain", Some(cfg.seed), &cfg, args.common.out_dir.as_deref())?;
    let mut progress = Progress::new(quiet);
    let mut chain = Chain::new(model, cfg.n, cfg.seed).map_err(runtime)?;
    run.write("positions.csv", io::positions_csv_string(chain.graph().positions()))?;
    run.phase("init");

    let trace = chain
        .run(&chain_cfg, |row| {
            progress.tick(|| {
                format!(
                    "chain: iteration {}/{} avg_degree {:.4} avg_edge_length {:.4}",
                    row.iteration, cfg.iterations, row.stats.avg_degree, row.stats.avg_edge_length
                )
            })
        })
        .map_err(runtime)?;
    run.phase("run");
    run.write("trace.csv", io::trace_csv_string(&trace.rows, cfg.path_length))?;
    run.write("final.edges", io::edge_list_string(chain.graph()))?;
    run.phase("write");
    let c = trace.counts;
    progress.say(format!(
        "chain: accepted {} additions, {} removals; rejected {} disconnecting, {} by ratio",
        c.acc_add, c.acc_remove, c.rej_disconnect, c.rej_ratio
    ));
    let dir = run.finish()?;
    emit(dir.display().to_string())?;
    Ok(())
}
