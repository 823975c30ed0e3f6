//! Fraction of connected unconditioned graphs across a `(q, s)` grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::DiagnosticsError;
use crate::models::{generate_graph, laplace_line_picking, sample_positions, EdgeModel};
use crate::rng::{derive_seed, stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub q: f64,
    pub s: f64,
    pub samples: usize,
    pub connected: usize,
    pub proportion: f64,
    /// Binomial standard error of `proportion`.
    pub std_error: f64,
}

/// For every grid point, draws `samples` graphs (fresh positions each) and
/// counts the connected ones. Sample `k` of point `p` always uses the same
/// derived seed, so the table is identical for any thread count.
pub fn connectedness_sweep(
    n: usize,
    grid: &[(f64, f64)],
    samples: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>, DiagnosticsError> {
    if samples == 0 {
        return Err(DiagnosticsError::Domain("need at least one sample per point".into()));
    }
    if n < 1 {
        return Err(DiagnosticsError::Domain("need at least one node".into()));
    }
    let models = grid
        .iter()
        .map(|&(q, s)| EdgeModel::waxman(q, s))
        .collect::<Result<Vec<_>, _>>()?;
    models
        .iter()
        .enumerate()
        .map(|(p, model)| {
            let connected = (0..samples)
                .into_par_iter()
                .map(|k| -> Result<usize, DiagnosticsError> {
                    let sample_seed = derive_seed(seed, ((p as u64) << 32) | k as u64);
                    let positions = sample_positions(n, &mut stream_rng(sample_seed, Stream::Positions))?;
                    let g = generate_graph(model, positions, &mut stream_rng(sample_seed, Stream::InitialGraph))?;
                    Ok(usize::from(g.is_connected()))
                })
                .try_reduce(|| 0, |a, b| Ok(a + b))?;
            let proportion = connected as f64 / samples as f64;
            Ok(SweepPoint {
                q: model.params().q(),
                s: model.params().s(),
                samples,
                connected,
                proportion,
                std_error: (proportion * (1.0 - proportion) / samples as f64).sqrt(),
            })
        })
        .collect()
}

/// `(q, s)` pairs sharing the expected degree `(n - 1) q G(s)`.
pub fn fixed_degree_grid(
    n: usize,
    mean_degree: f64,
    s_values: &[f64],
    line_samples: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>, DiagnosticsError> {
    if n < 2 {
        return Err(DiagnosticsError::Domain("need at least two nodes".into()));
    }
    s_values
        .iter()
        .map(|&s| {
            let g = laplace_line_picking(s, line_samples, &mut stream_rng(seed, Stream::Estimate))?;
            let q = mean_degree / ((n - 1) as f64 * g.value);
            if !(q > 0.0 && q <= 1.0) {
                return Err(DiagnosticsError::Domain(format!(
                    "expected degree {mean_degree} needs q = {q} at s = {s}"
                )));
            }
            Ok((q, s))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendTest {
    /// Cochran–Armitage statistic; negative means proportions fall with the score.
    pub z: f64,
    /// One-sided p-value against a decreasing trend.
    pub p_decreasing: f64,
    /// One-sided p-value against an increasing trend.
    pub p_increasing: f64,
}

/// Cochran–Armitage test for a linear trend in proportions over `scores`.
pub fn cochran_armitage(points: &[SweepPoint], scores: &[f64]) -> Result<TrendTest, DiagnosticsError> {
    if points.len() != scores.len() {
        return Err(DiagnosticsError::LengthMismatch(points.len(), scores.len()));
    }
    if points.len() < 2 {
        return Err(DiagnosticsError::TooFewPoints {
            min: 2,
            got: points.len(),
        });
    }
    let total: f64 = points.iter().map(|p| p.samples as f64).sum();
    let successes: f64 = points.iter().map(|p| p.connected as f64).sum();
    let pbar = successes / total;
    let t: f64 = points
        .iter()
        .zip(scores)
        .map(|(p, &w)| w * (p.connected as f64 - p.samples as f64 * pbar))
        .sum();
    let swt: f64 = points.iter().zip(scores).map(|(p, &w)| p.samples as f64 * w).sum();
    let swt2: f64 = points.iter().zip(scores).map(|(p, &w)| p.samples as f64 * w * w).sum();
    let var = pbar * (1.0 - pbar) * (swt2 - swt * swt / total);
    let z = if var > 0.0 { t / var.sqrt() } else { 0.0 };
    let normal = Normal::standard();
    Ok(TrendTest {
        z,
        p_decreasing: normal.cdf(z),
        p_increasing: 1.0 - normal.cdf(z),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(connected: usize, samples: usize) -> SweepPoint {
        let proportion = connected as f64 / samples as f64;
        SweepPoint {
            q: 0.5,
            s: 0.0,
            samples,
            connected,
            proportion,
            std_error: 0.0,
        }
    }

    #[test]
    fn dense_and_sparse_regimes() {
        let pts = connectedness_sweep(100, &[(0.5, 0.0), (0.005, 0.0)], 50, 1).unwrap();
        assert_eq!(pts[0].proportion, 1.0);
        assert_eq!(pts[1].proportion, 0.0);
    }

    #[test]
    fn sweep_is_deterministic() {
        let grid = [(0.05, 0.0), (0.08, 2.0)];
        let a = connectedness_sweep(60, &grid, 40, 3).unwrap();
        let b = connectedness_sweep(60, &grid, 40, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trend_signs() {
        let falling = [point(90, 100), point(60, 100), point(30, 100)];
        let t = cochran_armitage(&falling, &[0.0, 1.0, 2.0]).unwrap();
        assert!(t.z < -5.0);
        assert!(t.p_decreasing < 1e-6);
        let flat = [point(50, 100), point(50, 100), point(50, 100)];
        let t = cochran_armitage(&flat, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(t.z, 0.0);
        let all = [point(100, 100), point(100, 100)];
        assert_eq!(cochran_armitage(&all, &[0.0, 1.0]).unwrap().z, 0.0);
    }

    #[test]
    fn fixed_degree_grid_solves_q() {
        let grid = fixed_degree_grid(100, 5.0, &[0.0, 4.0], 20_000, 2).unwrap();
        assert!((grid[0].0 - 5.0 / 99.0).abs() < 1e-15);
        assert!(grid[1].0 > grid[0].0);
        assert!(fixed_degree_grid(10, 50.0, &[0.0], 10, 0).is_err());
    }
}
