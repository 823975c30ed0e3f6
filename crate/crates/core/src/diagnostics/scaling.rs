//! How the iterations to convergence grow with the number of nodes.
//!
//! For every graph size, a batch of independent chains runs from fresh
//! initial graphs with the expected degree `(n - 1) q G(s)` held fixed. The
//! per-record statistic is averaged over chains, fitted with
//! `C + A exp(-B x)`, and the convergence iteration of each size goes into a
//! log-log regression.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_exponential, iterations_to_convergence, ExponentialFit};
use super::DiagnosticsError;
use crate::models::{laplace_line_picking, EdgeModel, DEFAULT_LINE_SAMPLES};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::sampler::{Chain, ChainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    AvgDegree,
    AvgEdgeLength,
}

impl Statistic {
    pub const ALL: [Statistic; 2] = [Statistic::AvgDegree, Statistic::AvgEdgeLength];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::AvgDegree => "avg_degree",
            Statistic::AvgEdgeLength => "avg_edge_length",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub n_values: Vec<usize>,
    pub s: f64,
    /// Expected degree `(n - 1) q G(s)`; `q` is solved per size.
    pub mean_degree: f64,
    pub chains_per_n: usize,
    /// Chain length as a multiple of the number of node pairs.
    pub iterations_per_pair: f64,
    /// Record points per chain, not counting the initial state.
    pub records: usize,
    pub rel_tol: f64,
    pub line_samples: usize,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            n_values: vec![50, 100, 200, 400],
            s: 6.0,
            mean_degree: 1.5,
            chains_per_n: 20,
            iterations_per_pair: 32.0,
            records: 400,
            rel_tol: 1e-3,
            line_samples: DEFAULT_LINE_SAMPLES,
            seed: 0,
        }
    }
}

/// Per-record chain averages for one graph size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanTrace {
    pub n: usize,
    pub q: f64,
    pub chains: usize,
    pub iterations: Vec<u64>,
    pub avg_degree: Vec<f64>,
    pub avg_edge_length: Vec<f64>,
}

impl MeanTrace {
    pub fn series(&self, statistic: Statistic) -> &[f64] {
        match statistic {
            Statistic::AvgDegree => &self.avg_degree,
            Statistic::AvgEdgeLength => &self.avg_edge_length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFit {
    pub n: usize,
    pub fit: Option<ExponentialFit>,
    pub k_conv: Option<f64>,
    /// Why this size was left out of the regression, if it was.
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub statistic: Statistic,
    /// Sizes that entered the regression.
    pub n_values: Vec<usize>,
    pub k_conv: Vec<f64>,
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub intercept: f64,
    pub fits: Vec<SeriesFit>,
}

/// Ordinary least squares of `ln k` on `ln n`; the slope's standard error
/// is the usual `sqrt(s^2 / Sxx)` with `m - 2` degrees of freedom.
pub fn fit_power_law(n_values: &[f64], k_values: &[f64]) -> Result<PowerLaw, DiagnosticsError> {
    if n_values.len() != k_values.len() {
        return Err(DiagnosticsError::LengthMismatch(n_values.len(), k_values.len()));
    }
    if n_values.len() < 3 {
        return Err(DiagnosticsError::TooFewPoints {
            min: 3,
            got: n_values.len(),
        });
    }
    if n_values.iter().chain(k_values).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(DiagnosticsError::Domain(
            "power-law fit needs positive finite values".into(),
        ));
    }
    let xs: Vec<f64> = n_values.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = k_values.iter().map(|v| v.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(DiagnosticsError::Domain("need at least two distinct sizes".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(PowerLaw {
        exponent: slope,
        exponent_stderr: (ssr / (m - 2.0) / sxx).sqrt(),
        intercept,
    })
}

fn chain_seed(master: u64, n: usize, chain: usize) -> u64 {
    derive_seed(master, ((n as u64) << 24) | chain as u64)
}

/// Runs every chain of the study and averages their records per size.
/// Chains execute on the rayon pool; results are merged by `(n, chain)` so
/// the output does not depend on scheduling.
pub fn run_scaling_chains(cfg: &ScalingConfig) -> Result<Vec<MeanTrace>, DiagnosticsError> {
    if cfg.chains_per_n == 0 || cfg.records == 0 {
        return Err(DiagnosticsError::Domain(
            "chains_per_n and records must be positive".into(),
        ));
    }
    if !(cfg.iterations_per_pair > 0.0) || !(cfg.mean_degree > 0.0) {
        return Err(DiagnosticsError::Domain(
            "iterations_per_pair and mean_degree must be positive".into(),
        ));
    }
    let g_tilde = laplace_line_picking(
        cfg.s,
        cfg.line_samples,
        &mut stream_rng(cfg.seed, Stream::Estimate),
    )?
    .value;

    let mut plans = Vec::with_capacity(cfg.n_values.len());
    for &n in &cfg.n_values {
        if n < 2 {
            return Err(DiagnosticsError::Domain(format!("graph size {n} < 2")));
        }
        let q = cfg.mean_degree / ((n - 1) as f64 * g_tilde);
        let model = EdgeModel::waxman(q, cfg.s)?;
        let pairs = (n * (n - 1) / 2) as f64;
        let cadence = ((cfg.iterations_per_pair * pairs / cfg.records as f64).ceil() as u64).max(1);
        plans.push((n, q, model, cadence));
    }

    let jobs: Vec<(usize, usize)> = (0..plans.len())
        .flat_map(|p| (0..cfg.chains_per_n).map(move |c| (p, c)))
        .collect();
    let runs: Vec<Result<(usize, Vec<(u64, f64, f64)>), DiagnosticsError>> = jobs
        .par_iter()
        .map(|&(p, c)| {
            let (n, _, model, cadence) = plans[p];
            let chain_cfg = ChainConfig {
                iterations: cadence * cfg.records as u64,
                seed: chain_seed(cfg.seed, n, c),
                stat_cadence: cadence,
                ..ChainConfig::default()
            };
            let mut chain = Chain::new(model, n, chain_cfg.seed)?;
            let trace = chain.run(&chain_cfg, |_| {})?;
            Ok((
                p,
                trace
                    .rows
                    .iter()
                    .map(|r| (r.iteration, r.stats.avg_degree, r.stats.avg_edge_length))
                    .collect(),
            ))
        })
        .collect();

    let mut out: Vec<MeanTrace> = plans
        .iter()
        .map(|&(n, q, _, cadence)| MeanTrace {
            n,
            q,
            chains: 0,
            iterations: (0..=cfg.records as u64).map(|k| k * cadence).collect(),
            avg_degree: vec![0.0; cfg.records + 1],
            avg_edge_length: vec![0.0; cfg.records + 1],
        })
        .collect();
    // `runs` is in job order, so summation order is fixed
    for run in runs {
        let (p, rows) = run?;
        let t = &mut out[p];
        t.chains += 1;
        for (k, (_, deg, len)) in rows.into_iter().enumerate() {
            t.avg_degree[k] += deg;
            t.avg_edge_length[k] += len;
        }
    }
    for t in &mut out {
        let c = t.chains as f64;
        t.avg_degree.iter_mut().for_each(|v| *v /= c);
        t.avg_edge_length.iter_mut().for_each(|v| *v /= c);
    }
    Ok(out)
}

/// Fits each size's mean trace and regresses the convergence iterations.
///
/// The least-squares fit to the chain means has the same minimizer as the
/// fit to all pooled per-chain records, since every chain is recorded at the
/// same iterations. Sizes whose fit fails are excluded and reported.
pub fn scaling_from_traces(
    traces: &[MeanTrace],
    statistic: Statistic,
    rel_tol: f64,
) -> Result<ScalingResult, DiagnosticsError> {
    let mut fits = Vec::with_capacity(traces.len());
    for t in traces {
        let xs: Vec<f64> = t.iterations.iter().map(|&i| i as f64).collect();
        let entry = match fit_exponential(&xs, t.series(statistic)) {
            Ok(fit) => match iterations_to_convergence(&fit, rel_tol) {
                Ok(k) if k > 0.0 => SeriesFit {
                    n: t.n,
                    fit: Some(fit),
                    k_conv: Some(k),
                    excluded: None,
                },
                Ok(_) => SeriesFit {
                    n: t.n,
                    fit: Some(fit),
                    k_conv: Some(0.0),
                    excluded: Some("already within tolerance at the start".into()),
                },
                Err(e) => SeriesFit {
                    n: t.n,
                    fit: Some(fit),
                    k_conv: None,
                    excluded: Some(e.to_string()),
                },
            },
            Err(e) => SeriesFit {
                n: t.n,
                fit: None,
                k_conv: None,
                excluded: Some(e.to_string()),
            },
        };
        fits.push(entry);
    }
    let kept: Vec<&SeriesFit> = fits.iter().filter(|f| f.excluded.is_none()).collect();
    let ns: Vec<f64> = kept.iter().map(|f| f.n as f64).collect();
    let ks: Vec<f64> = kept.iter().map(|f| f.k_conv.unwrap_or(0.0)).collect();
    let law = fit_power_law(&ns, &ks)?;
    Ok(ScalingResult {
        statistic,
        n_values: kept.iter().map(|f| f.n).collect(),
        k_conv: ks,
        exponent: law.exponent,
        exponent_stderr: law.exponent_stderr,
        intercept: law.intercept,
        fits,
    })
}

pub fn scaling_study(cfg: &ScalingConfig, statistic: Statistic) -> Result<ScalingResult, DiagnosticsError> {
    let distinct: std::collections::BTreeSet<usize> = cfg.n_values.iter().copied().collect();
    if distinct.len() < 3 {
        return Err(DiagnosticsError::TooFewPoints {
            min: 3,
            got: distinct.len(),
        });
    }
    let traces = run_scaling_chains(cfg)?;
    scaling_from_traces(&traces, statistic, cfg.rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic_law() {
        let ns = [50.0, 100.0, 200.0, 400.0];
        let ks: Vec<f64> = ns.iter().map(|n| 1.7 * n * n).collect();
        let law = fit_power_law(&ns, &ks).unwrap();
        assert!((law.exponent - 2.0).abs() < 1e-12);
        assert!(law.exponent_stderr < 1e-6);
        assert!((law.intercept - 1.7f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn power_law_input_checks() {
        assert!(fit_power_law(&[1.0, 2.0], &[1.0, 4.0]).is_err());
        assert!(fit_power_law(&[1.0, 2.0, 3.0], &[1.0, 0.0, 9.0]).is_err());
        assert!(fit_power_law(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn synthetic_traces() {
        let traces: Vec<MeanTrace> = [20usize, 40, 80]
            .iter()
            .map(|&n| {
                let b = 1.0 / (n * n) as f64;
                let iterations: Vec<u64> = (0..=200).map(|k| k * (n * n) as u64 / 20).collect();
                let deg = iterations.iter().map(|&x| 3.0 - 0.4 * (-b * x as f64).exp()).collect();
                let len = iterations.iter().map(|&x| 0.2 + 0.1 * (-b * x as f64).exp()).collect();
                MeanTrace {
                    n,
                    q: 0.1,
                    chains: 1,
                    iterations,
                    avg_degree: deg,
                    avg_edge_length: len,
                }
            })
            .collect();
        let r = scaling_from_traces(&traces, Statistic::AvgDegree, 1e-3).unwrap();
        assert!((r.exponent - 2.0).abs() < 1e-6, "{r:?}");
        let r = scaling_from_traces(&traces, Statistic::AvgEdgeLength, 1e-3).unwrap();
        assert!((r.exponent - 2.0).abs() < 1e-6);
    }

    #[test]
    fn small_study_runs() {
        let cfg = ScalingConfig {
            n_values: vec![12, 16, 24],
            s: 2.0,
            chains_per_n: 2,
            iterations_per_pair: 4.0,
            records: 20,
            line_samples: 10_000,
            ..ScalingConfig::default()
        };
        let a = run_scaling_chains(&cfg).unwrap();
        let b = run_scaling_chains(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert!(a.iter().all(|t| t.chains == 2 && t.avg_degree.len() == 21));
    }
}
