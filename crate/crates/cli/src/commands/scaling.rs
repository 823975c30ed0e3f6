use std::fmt::Write as _;

use clap::Args;
use conngraph::diagnostics::scaling::{run_scaling_chains, scaling_from_traces, MeanTrace};
use conngraph::diagnostics::{ScalingConfig, ScalingResult, Statistic};
use serde::Serialize;

use super::runtime;
use crate::config::{resolve, Common};
use crate::output::{emit, Progress, Run};
use crate::Failure;

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    flags: ScalingFlags,
    /// Replace the chains with exact exponential traces whose decay time is n^2.
    #[arg(long, hide = true)]
    synthetic: bool,
}

#[derive(Debug, Args, Serialize)]
struct ScalingFlags {
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n_values: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    /// Expected degree (n - 1) q G(s), held fixed across sizes.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_degree: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    chains_per_n: Option<usize>,
    /// Chain length as a multiple of the number of node pairs.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations_per_pair: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    records: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    line_samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct ScalingReport {
    synthetic: bool,
    results: Vec<ScalingResult>,
}

/// Noise-free traces with `B = 1 / n^2` for degree and `1 / (2 n^2)` for
/// edge length, so the fitted exponent is 2 up to optimizer precision.
pub fn synthetic_traces(cfg: &ScalingConfig) -> Vec<MeanTrace> {
    cfg.n_values
        .iter()
        .map(|&n| {
            let n2 = (n * n) as f64;
            let span = cfg.iterations_per_pair * n2 / 2.0;
            let iterations: Vec<u64> = (0..=cfg.records)
                .map(|k| (span * k as f64 / cfg.records as f64).round() as u64)
                .collect();
            MeanTrace {
                n,
                q: 0.0,
                chains: 1,
                avg_degree: iterations.iter().map(|&x| 3.0 - (-(x as f64) / n2).exp()).collect(),
                avg_edge_length: iterations
                    .iter()
                    .map(|&x| 0.25 + 0.02 * (-(x as f64) / (2.0 * n2)).exp())
                    .collect(),
                iterations,
            }
        })
        .collect()
}

fn traces_csv(traces: &[MeanTrace]) -> String {
    let mut out = String::from("n,iteration,avg_degree,avg_edge_length\n");
    for t in traces {
        for k in 0..t.iterations.len() {
            let _ = writeln!(out, "{},{},{},{}", t.n, t.iterations[k], t.avg_degree[k], t.avg_edge_length[k]);
        }
    }
    out
}

fn fits_csv(results: &[ScalingResult]) -> String {
    let mut out = String::from("statistic,n,c,a,b,rss,converged,k_conv,excluded\n");
    for r in results {
        for f in &r.fits {
            let (c, a, b, rss, conv) = f.fit.map_or_else(
                || (String::new(), String::new(), String::new(), String::new(), String::new()),
                |x| (x.c.to_string(), x.a.to_string(), x.b.to_string(), x.rss.to_string(), x.converged.to_string()),
            );
            let k = f.k_conv.map_or_else(String::new, |k| k.to_string());
            let excluded = f.excluded.as_deref().unwrap_or("").replace([',', '\n'], ";");
            let _ = writeln!(out, "{},{},{c},{a},{b},{rss},{conv},{k},{excluded}", r.statistic.name(), f.n);
        }
    }
    out
}

pub fn run(args: ScalingArgs, quiet: bool) -> Result<(), Failure> {
    let cfg: ScalingConfig = resolve(args.common.config.as_deref(), &args.flags)?;
    if cfg.n_values.len() < 3 {
        return Err(Failure::usage("n_values needs at least three sizes"));
    }
    let mut run = Run::start("scaling", Some(cfg.seed), &cfg, args.common.out_dir.as_deref())?;
    let progress = Progress::new(quiet);
    let traces = if args.synthetic {
        synthetic_traces(&cfg)
    } else {
        progress.say(format!(
            "scaling: {} sizes x {} chains, {} x pairs steps each",
            cfg.n_values.len(),
            cfg.chains_per_n,
            cfg.iterations_per_pair
        ));
        run_scaling_chains(&cfg).map_err(|e| Failure::usage(e.to_string()))?
    };
    run.phase("chains");
    let results = Statistic::ALL
        .iter()
        .map(|&st| scaling_from_traces(&traces, st, cfg.rel_tol))
        .collect::<Result<Vec<_>, _>>()
        .map_err(runtime)?;
    run.phase("fit");
    for r in &results {
        progress.say(format!(
            "scaling: {} exponent {:.3} +/- {:.3}",
            r.statistic.name(),
            r.exponent,
            r.exponent_stderr
        ));
    }
    run.write("mean_traces.csv", traces_csv(&traces))?;
    run.write("fits.csv", fits_csv(&results))?;
    run.write_json(
        "scaling.json",
        &ScalingReport {
            synthetic: args.synthetic,
            results,
        },
    )?;
    run.phase("write");
    let dir = run.finish()?;
    emit(dir.display().to_string())?;
    Ok(())
}
