//! Ground truth on tiny node sets.
//!
//! With at most six nodes there are at most `2^15` labeled graphs, so the
//! conditional law `P(G | G connected)` can be enumerated exactly and compared
//! against what the chain or a rejection sampler produces.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::graph::{GraphError, NodeId, Point, SpatialGraph};
use crate::models::{generate_graph, EdgeModel, ModelError};
use crate::sampler::{move_probability, SamplerError};

pub const MAX_ORACLE_NODES: usize = 6;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("exact enumeration is limited to {MAX_ORACLE_NODES} nodes, got {0}")]
    TooLarge(usize),
    #[error("graphs of different sizes ({0} and {1}) cannot share a distribution")]
    MixedSizes(usize, usize),
    #[error("no graphs given")]
    Empty,
    #[error("no connected graph after {attempts} attempts")]
    Exhausted { attempts: usize },
    #[error("max_attempts must be at least 1")]
    NoAttempts,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// Bit index of the pair `(i, j)`, `i < j`, among the `n (n - 1) / 2` slots.
#[inline]
pub fn pair_slot(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Edge-set bitmask of a labeled graph on at most six nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GraphKey(pub u32);

impl GraphKey {
    pub fn from_graph(g: &SpatialGraph) -> Result<Self, OracleError> {
        let n = g.node_count();
        if n > MAX_ORACLE_NODES {
            return Err(OracleError::TooLarge(n));
        }
        Ok(GraphKey(
            g.edges()
                .into_iter()
                .fold(0u32, |acc, (i, j)| acc | 1 << pair_slot(i, j, n)),
        ))
    }

    pub fn edges(self, n: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.0 >> pair_slot(i, j, n) & 1 == 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn to_graph(self, positions: &[Point]) -> Result<SpatialGraph, OracleError> {
        Ok(SpatialGraph::from_edges(
            positions.to_vec(),
            self.edges(positions.len()),
        )?)
    }
}

/// Masses keyed by graph: probabilities for exact laws, counts for samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDistribution {
    pub n: usize,
    pub masses: BTreeMap<GraphKey, f64>,
    pub total_mass: f64,
    /// `P{G connected}` for enumerated distributions.
    pub p_connected: Option<f64>,
}

impl GraphDistribution {
    pub fn probability(&self, key: GraphKey) -> f64 {
        if self.total_mass == 0.0 {
            return 0.0;
        }
        self.masses.get(&key).copied().unwrap_or(0.0) / self.total_mass
    }

    pub fn from_keys(n: usize, keys: impl IntoIterator<Item = GraphKey>) -> Self {
        let mut masses = BTreeMap::new();
        let mut total = 0.0;
        for key in keys {
            *masses.entry(key).or_insert(0.0) += 1.0;
            total += 1.0;
        }
        GraphDistribution {
            n,
            masses,
            total_mass: total,
            p_connected: None,
        }
    }
}

/// Connectivity of a bitmask graph through per-node neighbor masks.
fn mask_connected(key: u32, n: usize) -> bool {
    let mut nbr = [0u32; MAX_ORACLE_NODES];
    for i in 0..n {
        for j in i + 1..n {
            if key >> pair_slot(i, j, n) & 1 == 1 {
                nbr[i] |= 1 << j;
                nbr[j] |= 1 << i;
            }
        }
    }
    let all = (1u32 << n) - 1;
    let mut seen = 1u32;
    let mut frontier = 1u32;
    while frontier != 0 {
        let mut next = 0;
        for (v, &mask) in nbr.iter().enumerate().take(n) {
            if frontier >> v & 1 == 1 {
                next |= mask;
            }
        }
        frontier = next & !seen;
        seen |= next;
    }
    seen == all
}

/// Exact `P(G | G connected)` over every labeled graph on `positions`,
/// together with `P{G connected}`.
pub fn enumerate_conditional(positions: &[Point], model: &EdgeModel) -> Result<GraphDistribution, OracleError> {
    let n = positions.len();
    if n > MAX_ORACLE_NODES {
        return Err(OracleError::TooLarge(n));
    }
    if n == 0 {
        return Err(GraphError::Empty.into());
    }
    let slots = pair_count(n);
    let mut probs = vec![0.0; slots];
    for i in 0..n {
        for j in i + 1..n {
            probs[pair_slot(i, j, n)] = model.edge_prob(positions[i].distance(&positions[j]))?;
        }
    }
    let mut masses = BTreeMap::new();
    let mut connected_mass = 0.0;
    for key in 0u32..(1u32 << slots) {
        if !mask_connected(key, n) {
            continue;
        }
        let mass: f64 = probs
            .iter()
            .enumerate()
            .map(|(k, &p)| if key >> k & 1 == 1 { p } else { 1.0 - p })
            .product();
        if mass > 0.0 {
            masses.insert(GraphKey(key), mass);
            connected_mass += mass;
        }
    }
    for m in masses.values_mut() {
        *m /= connected_mass;
    }
    Ok(GraphDistribution {
        n,
        total_mass: masses.values().sum(),
        masses,
        p_connected: Some(connected_mass),
    })
}

#[derive(Debug, Clone)]
pub struct RejectionDraw {
    pub graph: SpatialGraph,
    pub attempts: usize,
}

/// Draws unconditioned graphs until one is connected.
pub fn rejection_sample<R: Rng + ?Sized>(
    model: &EdgeModel,
    positions: &[Point],
    rng: &mut R,
    max_attempts: usize,
) -> Result<RejectionDraw, OracleError> {
    if max_attempts == 0 {
        return Err(OracleError::NoAttempts);
    }
    for attempts in 1..=max_attempts {
        let graph = generate_graph(model, positions.to_vec(), rng)?;
        if graph.is_connected() {
            return Ok(RejectionDraw { graph, attempts });
        }
    }
    Err(OracleError::Exhausted {
        attempts: max_attempts,
    })
}

pub fn empirical_distribution(graphs: &[SpatialGraph]) -> Result<GraphDistribution, OracleError> {
    let first = graphs.first().ok_or(OracleError::Empty)?;
    let n = first.node_count();
    let keys = graphs
        .iter()
        .map(|g| {
            if g.node_count() != n {
                return Err(OracleError::MixedSizes(n, g.node_count()));
            }
            GraphKey::from_graph(g)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GraphDistribution::from_keys(n, keys))
}

/// `(1/2) sum |p_a - p_b|` after normalizing both sides.
pub fn total_variation(a: &GraphDistribution, b: &GraphDistribution) -> Result<f64, OracleError> {
    if a.n != b.n {
        return Err(OracleError::MixedSizes(a.n, b.n));
    }
    let keys: std::collections::BTreeSet<GraphKey> = a.masses.keys().chain(b.masses.keys()).copied().collect();
    let sum: f64 = keys
        .into_iter()
        .map(|key| (a.probability(key) - b.probability(key)).abs())
        .sum();
    Ok((0.5 * sum).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityTest {
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Two-sample chi-square test that two count tables come from one law.
/// Cells whose pooled expected count is below 5 in either sample are merged
/// into one cell.
pub fn homogeneity_test(a: &GraphDistribution, b: &GraphDistribution) -> Result<HomogeneityTest, OracleError> {
    if a.n != b.n {
        return Err(OracleError::MixedSizes(a.n, b.n));
    }
    let (na, nb) = (a.total_mass, b.total_mass);
    if na <= 0.0 || nb <= 0.0 {
        return Err(OracleError::Empty);
    }
    let total = na + nb;
    let mut keys: Vec<GraphKey> = a.masses.keys().chain(b.masses.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for key in keys {
        let ca = a.masses.get(&key).copied().unwrap_or(0.0);
        let cb = b.masses.get(&key).copied().unwrap_or(0.0);
        let row = ca + cb;
        if row * na.min(nb) / total < 5.0 {
            pooled.0 += ca;
            pooled.1 += cb;
        } else {
            cells.push((ca, cb));
        }
    }
    if pooled.0 + pooled.1 > 0.0 {
        cells.push(pooled);
    }
    if cells.len() < 2 {
        return Ok(HomogeneityTest {
            chi2: 0.0,
            dof: 0,
            p_value: 1.0,
        });
    }
    let chi2: f64 = cells
        .iter()
        .map(|&(ca, cb)| {
            let row = ca + cb;
            let ea = row * na / total;
            let eb = row * nb / total;
            (ca - ea).powi(2) / ea + (cb - eb).powi(2) / eb
        })
        .sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    Ok(HomogeneityTest {
        chi2,
        dof,
        p_value: 1.0 - dist.cdf(chi2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetailedBalance {
    pub pairs_checked: usize,
    pub max_residual: f64,
}

/// Checks `pi(G) T(G -> G') = pi(G') T(G' -> G)` for every pair of connected
/// graphs that differ in one edge, with `pi` the enumerated conditional law
/// and `T` the pair proposal probability times the chain's move probability.
pub fn detailed_balance(positions: &[Point], model: &EdgeModel) -> Result<DetailedBalance, OracleError> {
    let exact = enumerate_conditional(positions, model)?;
    let n = positions.len();
    let proposal = 1.0 / pair_count(n) as f64;
    let mut pairs_checked = 0;
    let mut max_residual: f64 = 0.0;
    for (&key, &pi) in &exact.masses {
        let g = key.to_graph(positions)?;
        for i in 0..n {
            for j in i + 1..n {
                let other = GraphKey(key.0 ^ 1 << pair_slot(i, j, n));
                // each unordered pair of graphs once
                if other < key {
                    continue;
                }
                let Some(&pi_other) = exact.masses.get(&other) else {
                    // disconnected neighbor: the move must be impossible
                    let t = move_probability(&g, model, NodeId(i), NodeId(j))?;
                    max_residual = max_residual.max(pi * proposal * t);
                    continue;
                };
                let h = other.to_graph(positions)?;
                let forward = pi * proposal * move_probability(&g, model, NodeId(i), NodeId(j))?;
                let backward = pi_other * proposal * move_probability(&h, model, NodeId(i), NodeId(j))?;
                max_residual = max_residual.max((forward - backward).abs());
                pairs_checked += 1;
            }
        }
    }
    Ok(DetailedBalance {
        pairs_checked,
        max_residual,
    })
}
