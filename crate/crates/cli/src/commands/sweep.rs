use std::fmt::Write as _;

use clap::Args;
use conngraph::diagnostics::sweep::fixed_degree_grid;
use conngraph::diagnostics::{cochran_armitage, connectedness_sweep, SweepPoint, TrendTest};
use serde::{Deserialize, Serialize};

use super::runtime;
use crate::config::{resolve, Common};
use crate::output::{emit, Progress, Run};
use crate::Failure;

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    flags: SweepFlags,
}

#[derive(Debug, Args, Serialize)]
struct SweepFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// Graphs drawn per grid point.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    s_values: Option<Vec<f64>>,
    /// Cartesian grid over these q values and `s_values`.
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with = "mean_degree")]
    #[serde(skip_serializing_if = "Option::is_none")]
    q_values: Option<Vec<f64>>,
    /// Instead of `q_values`: solve q per s for this expected degree.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_degree: Option<f64>,
    /// Monte Carlo samples for the line-picking transform.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    line_samples: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub s_values: Vec<f64>,
    pub q_values: Option<Vec<f64>>,
    pub mean_degree: Option<f64>,
    pub line_samples: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: 200,
            samples: 500,
            seed: 0,
            s_values: vec![0.0, 2.0, 4.0, 6.0, 8.0],
            q_values: None,
            mean_degree: None,
            line_samples: conngraph::models::DEFAULT_LINE_SAMPLES,
        }
    }
}

#[derive(Debug, Serialize)]
struct SweepSidecar {
    points: Vec<SweepPoint>,
    /// Trend over the varying parameter, when only one varies.
    trend: Option<Trend>,
}

#[derive(Debug, Serialize)]
struct Trend {
    over: &'static str,
    #[serde(flatten)]
    test: TrendTest,
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("q,s,samples,connected,proportion,std_error\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.q, p.s, p.samples, p.connected, p.proportion, p.std_error
        );
    }
    out
}

pub fn run(args: SweepArgs, quiet: bool) -> Result<(), Failure> {
    let cfg: SweepConfig = resolve(args.common.config.as_deref(), &args.flags)?;
    if cfg.s_values.is_empty() {
        return Err(Failure::usage("s_values must not be empty"));
    }
    if cfg.samples == 0 {
        return Err(Failure::usage("samples must be at least 1"));
    }
    let grid: Vec<(f64, f64)> = match (&cfg.q_values, cfg.mean_degree) {
        (Some(qs), None) => {
            if qs.is_empty() {
                return Err(Failure::usage("q_values must not be empty"));
            }
            qs.iter()
                .flat_map(|&q| cfg.s_values.iter().map(move |&s| (q, s)))
                .collect()
        }
        (None, Some(z)) => fixed_degree_grid(cfg.n, z, &cfg.s_values, cfg.line_samples, cfg.seed)
            .map_err(|e| Failure::usage(format!("mean_degree: {e}")))?,
        (Some(_), Some(_)) => return Err(Failure::usage("set only one of q_values and mean_degree")),
        (None, None) => return Err(Failure::usage("set either q_values or mean_degree")),
    };
    for &(q, s) in &grid {
        conngraph::WaxmanParams::new(q, s).map_err(|e| Failure::usage(format!("grid point: {e}")))?;
    }

    let mut run = Run::start("sweep", Some(cfg.seed), &cfg, args.common.out_dir.as_deref())?;
    let progress = Progress::new(quiet);
    progress.say(format!("sweep: {} grid points x {} samples at n = {}", grid.len(), cfg.samples, cfg.n));
    run.phase("grid");
    let points = connectedness_sweep(cfg.n, &grid, cfg.samples, cfg.seed).map_err(runtime)?;
    run.phase("sample");

    let trend = if cfg.mean_degree.is_some() && cfg.s_values.len() > 1 {
        Some(Trend {
            over: "s",
            test: cochran_armitage(&points, &cfg.s_values).map_err(runtime)?,
        })
    } else if cfg.s_values.len() == 1 && grid.len() > 1 {
        let qs: Vec<f64> = grid.iter().map(|&(q, _)| q).collect();
        Some(Trend {
            over: "q",
            test: cochran_armitage(&points, &qs).map_err(runtime)?,
        })
    } else {
        None
    };
    run.write("sweep.csv", sweep_csv(&points))?;
    run.write_json("sweep.json", &SweepSidecar { points, trend })?;
    run.phase("write");
    let dir = run.finish()?;
    emit(dir.display().to_string())?;
    Ok(())
}
