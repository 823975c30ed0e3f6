//! Edge probability laws for spatially embedded random networks.
//!
//! The Waxman law gives every pair at distance `d` an independent edge with
//! probability `q * exp(-s * d)`, `q` in `(0, 1]`, `s >= 0`. With `s = 0` this
//! is the Gilbert/Erdős–Rényi graph with edge probability `q`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, NodeId, Point, SpatialGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("q must lie in (0, 1], got {0}")]
    InvalidQ(f64),
    #[error("s must be finite and non-negative, got {0}")]
    InvalidS(f64),
    #[error("distance must be finite and non-negative, got {0}")]
    InvalidDistance(f64),
    #[error("need at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("need at least one sample")]
    NoSamples,
    #[error("the GER model has s = 0, got s = {0}")]
    GerWithDistance(f64),
    #[error("field `s` is required for the waxman model")]
    MissingS,
    #[error("invalid model config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaxmanParams {
    q: f64,
    s: f64,
}

impl WaxmanParams {
    pub fn new(q: f64, s: f64) -> Result<Self, ModelError> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(ModelError::InvalidQ(q));
        }
        if !(s >= 0.0 && s.is_finite()) {
            return Err(ModelError::InvalidS(s));
        }
        Ok(WaxmanParams { q, s })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

/// Odds of adding an edge of probability `p`: `p / (1 - p)`, `+inf` at `p = 1`.
#[inline]
pub fn odds_add(p: f64) -> f64 {
    if p >= 1.0 {
        f64::INFINITY
    } else {
        p / (1.0 - p)
    }
}

/// Odds of removing an edge of probability `p`: `(1 - p) / p`.
#[inline]
pub fn odds_remove(p: f64) -> f64 {
    (1.0 - p) / p
}

/// Immutable edge probability law; shareable across threads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeModel {
    params: WaxmanParams,
}

impl EdgeModel {
    pub fn new(params: WaxmanParams) -> Self {
        EdgeModel { params }
    }

    pub fn waxman(q: f64, s: f64) -> Result<Self, ModelError> {
        Ok(EdgeModel::new(WaxmanParams::new(q, s)?))
    }

    pub fn ger(q: f64) -> Result<Self, ModelError> {
        EdgeModel::waxman(q, 0.0)
    }

    pub fn params(&self) -> WaxmanParams {
        self.params
    }

    pub fn edge_prob(&self, d: f64) -> Result<f64, ModelError> {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(ModelError::InvalidDistance(d));
        }
        Ok(self.prob(d))
    }

    #[inline]
    pub(crate) fn prob(&self, d: f64) -> f64 {
        if self.params.s == 0.0 {
            self.params.q
        } else {
            self.params.q * (-self.params.s * d).exp()
        }
    }

    /// Edge probability of the pair `(i, j)` in `g`.
    #[inline]
    pub fn pair_prob(&self, g: &SpatialGraph, i: NodeId, j: NodeId) -> f64 {
        self.prob(g.distance(i, j))
    }

    /// `P(G') / P(G)` when `G'` adds an edge of length `d` to `G`.
    pub fn ratio_add(&self, d: f64) -> f64 {
        debug_assert!(d >= 0.0 && d.is_finite());
        odds_add(self.prob(d))
    }

    /// `P(G') / P(G)` when `G'` removes an edge of length `d` from `G`.
    pub fn ratio_remove(&self, d: f64) -> f64 {
        debug_assert!(d >= 0.0 && d.is_finite());
        odds_remove(self.prob(d))
    }

    /// `log P(G)` under independent edges. Returns `-inf` when some absent
    /// pair has probability 1. Quadratic in the node count.
    pub fn log_likelihood(&self, g: &SpatialGraph) -> f64 {
        let n = g.node_count();
        let mut total = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let p = self.pair_prob(g, NodeId(i), NodeId(j));
                if g.contains_edge(NodeId(i), NodeId(j)) {
                    total += p.ln();
                } else {
                    total += (-p).ln_1p();
                }
            }
        }
        total
    }
}

/// `n` independent uniform points in the unit square.
pub fn sample_positions<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<Point>, ModelError> {
    if n == 0 {
        return Err(ModelError::TooFewNodes { min: 1, got: 0 });
    }
    Ok((0..n)
        .map(|_| Point::new(rng.random::<f64>(), rng.random::<f64>()))
        .collect())
}

/// Draws an unconditioned graph: every pair is an edge independently with
/// its model probability. `O(N^2)`.
pub fn generate_graph<R: Rng + ?Sized>(
    model: &EdgeModel,
    positions: Vec<Point>,
    rng: &mut R,
) -> Result<SpatialGraph, ModelError> {
    let mut g = SpatialGraph::new(positions)?;
    let n = g.node_count();
    for i in 0..n {
        for j in i + 1..n {
            let p = model.pair_prob(&g, NodeId(i), NodeId(j));
            if rng.random::<f64>() < p {
                g.add_edge(NodeId(i), NodeId(j))?;
            }
        }
    }
    Ok(g)
}

/// Joins every component to the largest one with a single edge between a
/// uniformly chosen node on each side. Returns the number of edges added,
/// which is one less than the number of components.
pub fn connect_arbitrarily<R: Rng + ?Sized>(g: &mut SpatialGraph, rng: &mut R) -> usize {
    let components = g.connected_components();
    if components.len() <= 1 {
        return 0;
    }
    // first of the largest on ties
    let giant = components
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.len().cmp(&b.len()).then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .expect("non-empty component list");
    let anchors = &components[giant];
    let mut added = 0;
    for (idx, comp) in components.iter().enumerate() {
        if idx == giant {
            continue;
        }
        let u = comp[rng.random_range(0..comp.len())];
        let v = anchors[rng.random_range(0..anchors.len())];
        g.add_edge(u, v)
            .expect("nodes in different components cannot already share an edge");
        added += 1;
    }
    added
}

/// Monte Carlo estimate of `E[exp(-s D)]`, `D` the distance between two
/// uniform points of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

pub const DEFAULT_LINE_SAMPLES: usize = 1_000_000;

/// Laplace transform of the square line-picking distance density, so that the
/// expected degree of a Waxman graph is `(n - 1) * q * value`.
pub fn laplace_line_picking<R: Rng + ?Sized>(
    s: f64,
    samples: usize,
    rng: &mut R,
) -> Result<LineEstimate, ModelError> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(ModelError::InvalidS(s));
    }
    if samples == 0 {
        return Err(ModelError::NoSamples);
    }
    if s == 0.0 {
        return Ok(LineEstimate {
            value: 1.0,
            std_error: 0.0,
            samples,
        });
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let a = Point::new(rng.random(), rng.random());
        let b = Point::new(rng.random(), rng.random());
        let v = (-s * a.distance(&b)).exp();
        sum += v;
        sum_sq += v * v;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = if samples > 1 {
        ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(LineEstimate {
        value: mean,
        std_error: (var / m).sqrt(),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Waxman,
    Ger,
}

/// The JSON model block, e.g.
/// `{"model":"waxman","q":0.01,"s":6.0,"n":1000,"seed":42}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelKind,
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    pub n: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let cfg: ModelConfig =
            serde_json::from_str(text).map_err(|e| ModelError::Config(e.to_string()))?;
        cfg.edge_model()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model config serializes")
    }

    pub fn resolved_s(&self) -> Result<f64, ModelError> {
        match (self.model, self.s) {
            (ModelKind::Ger, None) => Ok(0.0),
            (ModelKind::Ger, Some(s)) if s == 0.0 => Ok(0.0),
            (ModelKind::Ger, Some(s)) => Err(ModelError::GerWithDistance(s)),
            (ModelKind::Waxman, Some(s)) => Ok(s),
            (ModelKind::Waxman, None) => Err(ModelError::MissingS),
        }
    }

    pub fn edge_model(&self) -> Result<EdgeModel, ModelError> {
        if self.n < 2 {
            return Err(ModelError::TooFewNodes { min: 2, got: self.n });
        }
        EdgeModel::waxman(self.q, self.resolved_s()?)
    }
}
