use std::fs;
use std::path::PathBuf;

use clap::Args;
use conngraph::diagnostics::{fit_exponential, iterations_to_convergence, ExponentialFit};
use conngraph::io;
use conngraph::sampler::TraceRow;
use serde::{Deserialize, Serialize};

use crate::config::{resolve, Common};
use crate::output::{emit, Progress, Run};
use crate::Failure;

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    flags: DiagnoseFlags,
    /// Trace CSV files written by `chain`.
    #[arg(required = true, value_name = "TRACE")]
    traces: Vec<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct DiagnoseFlags {
    /// Converged once the fitted curve is within this fraction of its asymptote.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub rel_tol: f64,
    #[serde(default)]
    pub traces: Vec<PathBuf>,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        DiagnoseConfig {
            rel_tol: 1e-3,
            traces: Vec::new(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SeriesReport {
    pub statistic: String,
    pub fit: Option<ExponentialFit>,
    pub k_conv: Option<f64>,
    pub warning: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TraceReport {
    pub path: String,
    pub rows: usize,
    pub series: Vec<SeriesReport>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub rel_tol: f64,
    pub traces: Vec<TraceReport>,
    /// Largest `k_conv` over all usable series, rounded up.
    pub recommended_burn_in: Option<u64>,
    /// Largest fitted relaxation time `1 / B`, rounded up.
    pub recommended_thinning: Option<u64>,
    pub warnings: Vec<String>,
}

fn series(rows: &[TraceRow]) -> Vec<(&'static str, Vec<f64>)> {
    let mut out = vec![
        ("avg_degree", rows.iter().map(|r| r.stats.avg_degree).collect()),
        ("avg_edge_length", rows.iter().map(|r| r.stats.avg_edge_length).collect()),
    ];
    if let Some(paths) = rows.iter().map(|r| r.stats.avg_path_length).collect::<Option<Vec<f64>>>() {
        if !paths.is_empty() {
            out.push(("avg_path_length", paths));
        }
    }
    out
}

pub fn diagnose_series(xs: &[f64], ys: &[f64], statistic: &str, rel_tol: f64) -> SeriesReport {
    let mut report = SeriesReport {
        statistic: statistic.to_owned(),
        fit: None,
        k_conv: None,
        warning: None,
    };
    let fit = match fit_exponential(xs, ys) {
        Ok(fit) => fit,
        Err(e) => {
            report.warning = Some(format!("cannot fit: {e}"));
            return report;
        }
    };
    report.fit = Some(fit);
    if !fit.b_identifiable {
        report.warning = Some("unidentifiable: the series shows no exponential trend".into());
        return report;
    }
    match iterations_to_convergence(&fit, rel_tol) {
        Ok(k) => {
            report.k_conv = Some(k);
            if let Some(&last) = xs.last() {
                if k > last {
                    report.warning = Some(format!(
                        "convergence point {k:.0} lies beyond the end of the trace ({last:.0}); run longer"
                    ));
                }
            }
        }
        Err(e) => report.warning = Some(e.to_string()),
    }
    report
}

pub fn run(args: DiagnoseArgs, quiet: bool) -> Result<(), Failure> {
    let mut cfg: DiagnoseConfig = resolve(args.common.config.as_deref(), &args.flags)?;
    cfg.traces = args.traces;
    if !(cfg.rel_tol > 0.0 && cfg.rel_tol.is_finite()) {
        return Err(Failure::usage(format!("rel_tol must be positive, got {}", cfg.rel_tol)));
    }
    let progress = Progress::new(quiet);
    let mut loaded = Vec::new();
    for path in &cfg.traces {
        let text = fs::read_to_string(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
        let rows = io::parse_trace_csv(&text).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
        loaded.push((path.display().to_string(), rows));
    }

    let mut run = Run::start("diagnose", None, &cfg, args.common.out_dir.as_deref())?;
    run.phase("read");
    let mut traces = Vec::new();
    let mut warnings = Vec::new();
    let (mut burn_in, mut thinning): (Option<f64>, Option<f64>) = (None, None);
    for (path, rows) in loaded {
        let xs: Vec<f64> = rows.iter().map(|r| r.iteration as f64).collect();
        let mut reports = Vec::new();
        for (name, ys) in series(&rows) {
            let report = diagnose_series(&xs, &ys, name, cfg.rel_tol);
            if let Some(w) = &report.warning {
                warnings.push(format!("{path}: {name}: {w}"));
            }
            if let (Some(k), Some(fit)) = (report.k_conv, report.fit) {
                burn_in = Some(burn_in.map_or(k, |b| b.max(k)));
                thinning = Some(thinning.map_or(1.0 / fit.b, |t| t.max(1.0 / fit.b)));
            }
            reports.push(report);
        }
        traces.push(TraceReport {
            path,
            rows: rows.len(),
            series: reports,
        });
    }
    if burn_in.is_none() {
        warnings.push("no series gave a usable convergence estimate".into());
    }
    let report = DiagnoseReport {
        rel_tol: cfg.rel_tol,
        traces,
        recommended_burn_in: burn_in.map(|k| k.ceil() as u64),
        recommended_thinning: thinning.map(|t| (t.ceil() as u64).max(1)),
        warnings,
    };
    run.phase("fit");
    for w in &report.warnings {
        progress.say(format!("warning: {w}"));
    }
    run.write_json("report.json", &report)?;
    let dir = run.finish()?;
    progress.say(format!("diagnose: wrote {}", dir.display()));
    emit(serde_json::to_string_pretty(&report).expect("report serializes"))?;
    Ok(())
}
