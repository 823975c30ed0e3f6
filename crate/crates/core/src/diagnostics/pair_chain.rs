//! The two-state chain of a single node pair.
//!
//! Ignoring connectivity, each node pair flips between "link" and "no link"
//! independently. A step selects the pair with probability `delta` and then
//! applies the Metropolis acceptance, giving the transition matrix
//!
//! ```text
//!            link              no link
//! link     [ 1 - delta*a_r     delta*a_r     ]
//! no link  [ delta*a_a         1 - delta*a_a ]
//! ```
//!
//! with `a_a = min(1, p/(1-p))` and `a_r = min(1, (1-p)/p)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::models::{odds_add, odds_remove};
use crate::sampler::accept;

/// How the per-step selection probability of one pair is counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaConvention {
    /// `1 / (N (N - 1))`, counting ordered pairs.
    #[default]
    OrderedPairs,
    /// `2 / (N (N - 1))`, the rate the sampler actually picks a given pair.
    UnorderedPairs,
}

impl DeltaConvention {
    pub fn delta(self, n: usize) -> Result<f64, DiagnosticsError> {
        if n < 2 {
            return Err(DiagnosticsError::Domain(format!("need n >= 2, got {n}")));
        }
        let ordered = (n * (n - 1)) as f64;
        Ok(match self {
            DeltaConvention::OrderedPairs => 1.0 / ordered,
            DeltaConvention::UnorderedPairs => 2.0 / ordered,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairChainAnalysis {
    pub p: f64,
    pub alpha_add: f64,
    pub alpha_remove: f64,
    pub delta: f64,
    /// Long-run probability of the link state, `a_a / (a_a + a_r)`.
    pub stationary_p: f64,
    /// `delta * (a_r + a_a)`.
    pub spectral_gap: f64,
    pub relaxation_time: f64,
    /// `[1, 1 - spectral_gap]`.
    pub eigenvalues: [f64; 2],
    /// `1 - |lambda_2|`.
    pub absolute_gap: f64,
    /// The second eigenvalue sits at -1: the chain alternates deterministically.
    /// Only reachable with `delta = 1` and `p = 0.5`.
    pub periodic: bool,
}

impl PairChainAnalysis {
    /// Rows and columns ordered `[link, no link]`.
    pub fn transition_matrix(&self) -> [[f64; 2]; 2] {
        let r = self.delta * self.alpha_remove;
        let a = self.delta * self.alpha_add;
        [[1.0 - r, r], [a, 1.0 - a]]
    }
}

pub fn pair_chain_analysis(p: f64, delta: f64) -> Result<PairChainAnalysis, DiagnosticsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DiagnosticsError::Domain(format!(
            "edge probability must lie in (0, 1), got {p}"
        )));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(DiagnosticsError::Domain(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    let alpha_add = odds_add(p).min(1.0);
    let alpha_remove = odds_remove(p).min(1.0);
    let spectral_gap = delta * (alpha_add + alpha_remove);
    let lambda2 = 1.0 - spectral_gap;
    Ok(PairChainAnalysis {
        p,
        alpha_add,
        alpha_remove,
        delta,
        stationary_p: alpha_add / (alpha_add + alpha_remove),
        spectral_gap,
        relaxation_time: 1.0 / spectral_gap,
        eigenvalues: [1.0, lambda2],
        absolute_gap: 1.0 - lambda2.abs(),
        periodic: lambda2 <= -1.0,
    })
}

/// Simulates the single-pair chain for `steps` steps from the link state and
/// returns the fraction of steps spent in the link state. Acceptance uses the
/// sampler's own rule.
pub fn simulate_pair_chain<R: Rng + ?Sized>(
    p: f64,
    delta: f64,
    steps: u64,
    rng: &mut R,
) -> Result<f64, DiagnosticsError> {
    let analysis = pair_chain_analysis(p, delta)?;
    if steps == 0 {
        return Err(DiagnosticsError::Domain("need at least one step".into()));
    }
    let (ratio_add, ratio_remove) = (odds_add(p), odds_remove(p));
    let mut linked = true;
    let mut occupied = 0u64;
    for _ in 0..steps {
        let selected = analysis.delta >= 1.0 || rng.random::<f64>() < analysis.delta;
        if selected {
            let ratio = if linked { ratio_remove } else { ratio_add };
            if accept(ratio, rng) {
                linked = !linked;
            }
        }
        occupied += u64::from(linked);
    }
    Ok(occupied as f64 / steps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_probability_on_four_nodes() {
        let delta = DeltaConvention::OrderedPairs.delta(4).unwrap();
        assert!((delta - 1.0 / 12.0).abs() < 1e-15);
        let a = pair_chain_analysis(0.25, delta).unwrap();
        assert!((a.alpha_add - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(a.alpha_remove, 1.0);
        assert!((a.stationary_p - 0.25).abs() < 1e-15);
        assert!((a.relaxation_time - 9.0).abs() < 1e-12);
        assert!(!a.periodic);
    }

    #[test]
    fn half_probability_full_selection_is_periodic() {
        let a = pair_chain_analysis(0.5, 1.0).unwrap();
        assert_eq!(a.spectral_gap, 2.0);
        assert_eq!(a.eigenvalues, [1.0, -1.0]);
        assert_eq!(a.absolute_gap, 0.0);
        assert!(a.periodic);
    }

    #[test]
    fn eigenvalues_match_direct_computation() {
        for &(p, delta) in &[(0.1, 0.3), (0.5, 1.0), (0.25, 1.0 / 12.0), (0.8, 0.05)] {
            let a = pair_chain_analysis(p, delta).unwrap();
            let m = a.transition_matrix();
            let tr = m[0][0] + m[1][1];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let disc = (tr * tr - 4.0 * det).sqrt();
            let hi = (tr + disc) / 2.0;
            let lo = (tr - disc) / 2.0;
            assert!((hi - 1.0).abs() < 1e-12);
            assert!((lo - a.eigenvalues[1]).abs() < 1e-12);
            for row in m {
                assert!((row[0] + row[1] - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(pair_chain_analysis(0.0, 0.5).is_err());
        assert!(pair_chain_analysis(1.0, 0.5).is_err());
        assert!(pair_chain_analysis(0.5, 0.0).is_err());
        assert!(pair_chain_analysis(0.5, 1.5).is_err());
        assert!(DeltaConvention::UnorderedPairs.delta(1).is_err());
    }
}
