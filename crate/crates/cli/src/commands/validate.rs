use std::fs;
use std::path::PathBuf;

use clap::Args;
use conngraph::io::{self, OracleHeader};
use conngraph::models::{sample_positions, ModelKind};
use conngraph::oracle::{
    empirical_distribution, enumerate_conditional, homogeneity_test, rejection_sample, total_variation,
    GraphDistribution, GraphKey, HomogeneityTest, MAX_ORACLE_NODES,
};
use conngraph::rng::{stream_rng, Stream};
use conngraph::sampler::{AcceptanceRule, Chain};
use serde::{Deserialize, Serialize};

use super::{edge_model, runtime};
use crate::config::{resolve, Common, ModelFlags};
use crate::output::{emit, Progress, Run};
use crate::Failure;

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    flags: ValidateFlags,
    /// Node positions as a `node,x,y` CSV instead of seeded random ones.
    #[arg(long, value_name = "CSV")]
    positions: Option<PathBuf>,
    /// Mutation hook: swap the add and remove odds in the sampler.
    #[arg(long, hide = true)]
    swap_ratios: bool,
}

#[derive(Debug, Args, Serialize)]
struct ValidateFlags {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelFlags,
    /// Samples drawn from each sampler.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    burn_in: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    thinning: Option<u64>,
    /// Largest accepted TV distance between MCMC samples and the exact law.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tv_threshold: Option<f64>,
    /// Smallest accepted p-value of the MCMC-vs-rejection homogeneity test.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p_threshold: Option<f64>,
    /// Give up on a rejection draw after this many attempts.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_attempts: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub model: ModelKind,
    pub n: usize,
    pub q: f64,
    pub s: Option<f64>,
    pub seed: u64,
    pub samples: usize,
    pub burn_in: u64,
    pub thinning: u64,
    pub tv_threshold: f64,
    pub p_threshold: f64,
    pub max_attempts: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            model: ModelKind::Waxman,
            n: 4,
            q: 0.6,
            s: None,
            seed: 0,
            samples: 100_000,
            burn_in: 10_000,
            thinning: 50,
            tv_threshold: 0.02,
            p_threshold: 0.01,
            max_attempts: 1_000_000,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ValidateReport {
    pub n: usize,
    pub connected_graphs: usize,
    pub p_connected: f64,
    pub samples: usize,
    pub tv_mcmc_exact: f64,
    pub tv_rejection_exact: f64,
    pub tv_mcmc_rejection: f64,
    pub homogeneity: HomogeneityTest,
    pub mean_rejection_attempts: f64,
    pub tv_threshold: f64,
    pub p_threshold: f64,
    pub swapped_ratios: bool,
    pub pass: bool,
}

pub fn run(args: ValidateArgs, quiet: bool) -> Result<(), Failure> {
    let mut cfg: ValidateConfig = resolve(args.common.config.as_deref(), &args.flags)?;
    if cfg.model == ModelKind::Waxman && cfg.s.is_none() {
        cfg.s = Some(1.0);
    }
    let positions = match &args.positions {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            let pos = io::parse_positions_csv(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            cfg.n = pos.len();
            Some(pos)
        }
        None => None,
    };
    if cfg.n > MAX_ORACLE_NODES {
        return Err(Failure::usage(format!(
            "n = {} is too large for exact enumeration (at most {MAX_ORACLE_NODES})",
            cfg.n
        )));
    }
    let model = edge_model(cfg.model, cfg.n, cfg.q, cfg.s, cfg.seed)?;
    if cfg.samples == 0 || cfg.thinning == 0 || cfg.max_attempts == 0 {
        return Err(Failure::usage("samples, thinning and max_attempts must be at least 1"));
    }
    let positions = match positions {
        Some(p) => p,
        None => sample_positions(cfg.n, &mut stream_rng(cfg.seed, Stream::Positions)).map_err(runtime)?,
    };

    let mut run = Run::start("validate", Some(cfg.seed), &cfg, args.common.out_dir.as_deref())?;
    let mut progress = Progress::new(quiet);
    let exact = enumerate_conditional(&positions, &model).map_err(runtime)?;
    run.phase("enumerate");

    let rule = if args.swap_ratios {
        AcceptanceRule::SwappedRatios
    } else {
        AcceptanceRule::Exact
    };
    let mut chain = Chain::from_positions(model, positions.clone(), cfg.seed)
        .map_err(runtime)?
        .with_rule(rule);
    let mut keys = Vec::with_capacity(cfg.samples);
    let mut key_error = None;
    chain
        .sample(cfg.burn_in, cfg.thinning, cfg.samples, |g| {
            match GraphKey::from_graph(g) {
                Ok(k) => keys.push(k),
                Err(e) => key_error = Some(e),
            }
            progress.tick(|| format!("validate: {}/{} MCMC samples", keys.len(), cfg.samples));
        })
        .map_err(runtime)?;
    if let Some(e) = key_error {
        return Err(runtime(e));
    }
    let mcmc = GraphDistribution::from_keys(cfg.n, keys);
    run.phase("mcmc");

    let mut rng = stream_rng(cfg.seed, Stream::Estimate);
    let mut graphs = Vec::with_capacity(cfg.samples);
    let mut attempts = 0usize;
    for k in 0..cfg.samples {
        let draw = rejection_sample(&model, &positions, &mut rng, cfg.max_attempts).map_err(runtime)?;
        attempts += draw.attempts;
        graphs.push(draw.graph);
        progress.tick(|| format!("validate: {}/{} rejection samples", k + 1, cfg.samples));
    }
    let rejection = empirical_distribution(&graphs).map_err(runtime)?;
    run.phase("rejection");

    let tv_mcmc_exact = total_variation(&mcmc, &exact).map_err(runtime)?;
    let homogeneity = homogeneity_test(&mcmc, &rejection).map_err(runtime)?;
    let pass = tv_mcmc_exact <= cfg.tv_threshold && homogeneity.p_value >= cfg.p_threshold;
    let report = ValidateReport {
        n: cfg.n,
        connected_graphs: exact.masses.len(),
        p_connected: exact.p_connected.unwrap_or(f64::NAN),
        samples: cfg.samples,
        tv_mcmc_exact,
        tv_rejection_exact: total_variation(&rejection, &exact).map_err(runtime)?,
        tv_mcmc_rejection: total_variation(&mcmc, &rejection).map_err(runtime)?,
        homogeneity,
        mean_rejection_attempts: attempts as f64 / cfg.samples as f64,
        tv_threshold: cfg.tv_threshold,
        p_threshold: cfg.p_threshold,
        swapped_ratios: args.swap_ratios,
        pass,
    };

    run.write("positions.csv", io::positions_csv_string(&positions))?;
    run.write("oracle.csv", io::oracle_csv_string(&exact))?;
    run.write_json(
        "oracle.json",
        &OracleHeader {
            n: cfg.n,
            positions: positions.clone(),
            model: model.params(),
            p_connected: exact.p_connected,
        },
    )?;
    run.write_json("report.json", &report)?;
    run.phase("write");
    let dir = run.finish()?;
    progress.say(format!("validate: wrote {}", dir.display()));
    emit(serde_json::to_string_pretty(&report).expect("report serializes"))?;
    let verdict = format!(
        "TV(mcmc, exact) = {:.4} (threshold {}), homogeneity p = {:.3} (threshold {})",
        report.tv_mcmc_exact, cfg.tv_threshold, report.homogeneity.p_value, cfg.p_threshold
    );
    if pass {
        progress.say(format!("PASS: {verdict}"));
        Ok(())
    } else {
        Err(Failure::Validation(verdict))
    }
}
