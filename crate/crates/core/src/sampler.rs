//! Single-link Metropolis-Hastings chain over connected graphs.
//!
//! Each step picks a uniformly random unordered node pair and proposes to
//! toggle its edge. Additions are accepted with probability
//! `min(1, p / (1 - p))`. Removals are rejected outright when they would
//! disconnect the graph (checked as "is there still a path between the two
//! endpoints"), and otherwise accepted with probability `min(1, (1 - p) / p)`.
//! The proposal is symmetric, so the stationary law is the model conditioned
//! on connectivity.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, GraphStats, NodeId, Point, SpatialGraph};
use crate::models::{self, EdgeModel, ModelError};
use crate::rng::{stream_rng, Stream, StreamRng};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid chain config: {0}")]
    InvalidConfig(String),
    #[error("the starting graph must be connected")]
    NotConnected,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Above this size the per-step connectivity assertion in debug builds is
/// skipped; record points are always checked.
pub const DEBUG_FULL_CHECK_MAX_NODES: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: u64,
    pub seed: u64,
    pub burn_in: u64,
    pub thinning: u64,
    /// Record statistics every this many iterations.
    pub stat_cadence: u64,
    pub record_path_length: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            iterations: 0,
            seed: 0,
            burn_in: 0,
            thinning: 1,
            stat_cadence: 1000,
            record_path_length: false,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.thinning == 0 {
            return Err(SamplerError::InvalidConfig("thinning must be >= 1".into()));
        }
        if self.stat_cadence == 0 {
            return Err(SamplerError::InvalidConfig("stat_cadence must be >= 1".into()));
        }
        if self.burn_in > self.iterations {
            return Err(SamplerError::InvalidConfig(format!(
                "burn_in ({}) exceeds iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }

    /// Config whose iteration budget is exactly what an ensemble of `count`
    /// snapshots needs.
    pub fn for_ensemble(seed: u64, burn_in: u64, thinning: u64, count: usize) -> Self {
        ChainConfig {
            iterations: burn_in + thinning * (count.saturating_sub(1) as u64),
            seed,
            burn_in,
            thinning,
            ..ChainConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProposalKind {
    Add,
    Remove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    None,
    Disconnect,
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub proposal_kind: ProposalKind,
    pub accepted: bool,
    pub rejected_reason: RejectReason,
}

impl StepOutcome {
    fn accepted(kind: ProposalKind) -> Self {
        StepOutcome {
            proposal_kind: kind,
            accepted: true,
            rejected_reason: RejectReason::None,
        }
    }

    fn rejected(kind: ProposalKind, reason: RejectReason) -> Self {
        StepOutcome {
            proposal_kind: kind,
            accepted: false,
            rejected_reason: reason,
        }
    }
}

/// Cumulative outcome counters; they always sum to the number of steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceCounts {
    pub acc_add: u64,
    pub acc_remove: u64,
    pub rej_disconnect: u64,
    pub rej_ratio: u64,
}

impl AcceptanceCounts {
    pub fn record(&mut self, outcome: &StepOutcome) {
        match (outcome.proposal_kind, outcome.rejected_reason) {
            (ProposalKind::Add, RejectReason::None) => self.acc_add += 1,
            (ProposalKind::Remove, RejectReason::None) => self.acc_remove += 1,
            (_, RejectReason::Disconnect) => self.rej_disconnect += 1,
            (_, RejectReason::Ratio) => self.rej_ratio += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.acc_add + self.acc_remove + self.rej_disconnect + self.rej_ratio
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: u64,
    pub stats: GraphStats,
    pub counts: AcceptanceCounts,
    /// Result of a full connectivity check at this record point.
    pub connected: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub rows: Vec<TraceRow>,
    pub counts: AcceptanceCounts,
    /// Wall-clock seconds spent on each block between consecutive records.
    pub block_seconds: Vec<f64>,
}

impl ChainTrace {
    pub fn iterations(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.iteration).collect()
    }
}

/// Test hook for mutation checks against the oracle. `SwappedRatios` uses
/// the removal odds for additions and vice versa, which breaks detailed
/// balance.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AcceptanceRule {
    #[default]
    Exact,
    SwappedRatios,
}

impl AcceptanceRule {
    #[inline]
    fn ratios(self, p: f64) -> (f64, f64) {
        let add = models::odds_add(p);
        let remove = models::odds_remove(p);
        match self {
            AcceptanceRule::Exact => (add, remove),
            AcceptanceRule::SwappedRatios => (remove, add),
        }
    }
}

/// Uniform unordered pair of distinct nodes, returned as `(low, high)`.
///
/// Panics if `n < 2`.
#[inline]
pub fn propose_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (NodeId, NodeId) {
    assert!(n >= 2, "a pair needs at least two nodes");
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (NodeId(i.min(j)), NodeId(i.max(j)))
}

/// Metropolis acceptance: one uniform draw, accept iff `u < ratio`.
#[inline]
pub fn accept<R: Rng + ?Sized>(ratio: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < ratio
}

/// One chain step on a connected graph. On rejection `g` is unchanged.
pub fn mh_step<R: Rng + ?Sized>(g: &mut SpatialGraph, model: &EdgeModel, rng: &mut R) -> StepOutcome {
    mh_step_with(g, model, AcceptanceRule::Exact, rng)
}

#[doc(hidden)]
pub fn mh_step_with<R: Rng + ?Sized>(
    g: &mut SpatialGraph,
    model: &EdgeModel,
    rule: AcceptanceRule,
    rng: &mut R,
) -> StepOutcome {
    let (i, j) = propose_pair(g.node_count(), rng);
    let (ratio_add, ratio_remove) = rule.ratios(model.pair_prob(g, i, j));
    if g.contains_edge(i, j) {
        g.remove_edge(i, j).expect("edge checked present");
        if !g.path_exists(i.0, j.0) {
            g.add_edge(i, j).expect("edge was just removed");
            return StepOutcome::rejected(ProposalKind::Remove, RejectReason::Disconnect);
        }
        if accept(ratio_remove, rng) {
            StepOutcome::accepted(ProposalKind::Remove)
        } else {
            g.add_edge(i, j).expect("edge was just removed");
            StepOutcome::rejected(ProposalKind::Remove, RejectReason::Ratio)
        }
    } else if accept(ratio_add, rng) {
        g.add_edge(i, j).expect("edge checked absent");
        StepOutcome::accepted(ProposalKind::Add)
    } else {
        StepOutcome::rejected(ProposalKind::Add, RejectReason::Ratio)
    }
}

/// Probability that a step which has already proposed the pair `(i, j)`
/// moves to the toggled graph: 0 if the toggle is a removal that disconnects
/// `g`, otherwise `min(1, P(G') / P(G))`.
pub fn move_probability(g: &SpatialGraph, model: &EdgeModel, i: NodeId, j: NodeId) -> Result<f64, SamplerError> {
    let p = model.pair_prob(g, i, j);
    if g.has_edge(i, j)? {
        let mut without = g.clone();
        without.remove_edge(i, j)?;
        if !without.path_exists(i.0, j.0) {
            return Ok(0.0);
        }
        Ok(models::odds_remove(p).min(1.0))
    } else {
        Ok(models::odds_add(p).min(1.0))
    }
}

/// Draws positions, generates an unconditioned graph and connects it, all
/// from one random stream.
pub fn init_chain<R: Rng + ?Sized>(
    model: &EdgeModel,
    n: usize,
    rng: &mut R,
) -> Result<SpatialGraph, SamplerError> {
    if n < 2 {
        return Err(ModelError::TooFewNodes { min: 2, got: n }.into());
    }
    let positions = models::sample_positions(n, rng)?;
    init_from_positions(model, positions, rng)
}

pub fn init_from_positions<R: Rng + ?Sized>(
    model: &EdgeModel,
    positions: Vec<Point>,
    rng: &mut R,
) -> Result<SpatialGraph, SamplerError> {
    if positions.len() < 2 {
        return Err(ModelError::TooFewNodes { min: 2, got: positions.len() }.into());
    }
    let mut g = models::generate_graph(model, positions, rng)?;
    models::connect_arbitrarily(&mut g, rng);
    Ok(g)
}

/// A running chain: the current graph together with its model and random
/// stream.
#[derive(Debug, Clone)]
pub struct Chain {
    graph: SpatialGraph,
    model: EdgeModel,
    rng: StreamRng,
    counts: AcceptanceCounts,
    iteration: u64,
    rule: AcceptanceRule,
}

impl Chain {
    /// Positions, initial graph, connecting edges and chain moves each use
    /// their own stream of `seed`.
    pub fn new(model: EdgeModel, n: usize, seed: u64) -> Result<Self, SamplerError> {
        if n < 2 {
            return Err(ModelError::TooFewNodes { min: 2, got: n }.into());
        }
        let positions = models::sample_positions(n, &mut stream_rng(seed, Stream::Positions))?;
        Chain::from_positions(model, positions, seed)
    }

    pub fn from_positions(model: EdgeModel, positions: Vec<Point>, seed: u64) -> Result<Self, SamplerError> {
        if positions.len() < 2 {
            return Err(ModelError::TooFewNodes { min: 2, got: positions.len() }.into());
        }
        let mut g = models::generate_graph(&model, positions, &mut stream_rng(seed, Stream::InitialGraph))?;
        models::connect_arbitrarily(&mut g, &mut stream_rng(seed, Stream::Connect));
        Chain::from_graph(model, g, seed)
    }

    /// Starts from any connected graph.
    pub fn from_graph(model: EdgeModel, graph: SpatialGraph, seed: u64) -> Result<Self, SamplerError> {
        if graph.node_count() < 2 {
            return Err(ModelError::TooFewNodes { min: 2, got: graph.node_count() }.into());
        }
        if !graph.is_connected() {
            return Err(SamplerError::NotConnected);
        }
        Ok(Chain {
            graph,
            model,
            rng: stream_rng(seed, Stream::Chain),
            counts: AcceptanceCounts::default(),
            iteration: 0,
            rule: AcceptanceRule::Exact,
        })
    }

    #[doc(hidden)]
    pub fn with_rule(mut self, rule: AcceptanceRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn graph(&self) -> &SpatialGraph {
        &self.graph
    }

    pub fn into_graph(self) -> SpatialGraph {
        self.graph
    }

    pub fn model(&self) -> &EdgeModel {
        &self.model
    }

    pub fn counts(&self) -> AcceptanceCounts {
        self.counts
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn step(&mut self) -> StepOutcome {
        let outcome = mh_step_with(&mut self.graph, &self.model, self.rule, &mut self.rng);
        self.counts.record(&outcome);
        self.iteration += 1;
        if cfg!(debug_assertions) && self.graph.node_count() <= DEBUG_FULL_CHECK_MAX_NODES {
            assert!(self.graph.is_connected(), "chain left the connected space");
        }
        outcome
    }

    pub fn advance(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }

    fn record(&self, with_path_length: bool) -> TraceRow {
        let connected = self.graph.is_connected();
        assert!(connected, "chain state disconnected at iteration {}", self.iteration);
        let stats = self
            .graph
            .stats(with_path_length)
            .expect("connected graph has a path length");
        TraceRow {
            iteration: self.iteration,
            stats,
            counts: self.counts,
            connected,
        }
    }

    /// Runs `cfg.iterations` further steps, recording statistics at the
    /// start and after every `cfg.stat_cadence` steps. `observe` sees each
    /// row as it is produced.
    pub fn run(
        &mut self,
        cfg: &ChainConfig,
        mut observe: impl FnMut(&TraceRow),
    ) -> Result<ChainTrace, SamplerError> {
        cfg.validate()?;
        let mut trace = ChainTrace::default();
        let first = self.record(cfg.record_path_length);
        observe(&first);
        trace.rows.push(first);
        let mut done = 0;
        while done < cfg.iterations {
            let block = cfg.stat_cadence.min(cfg.iterations - done);
            let started = Instant::now();
            self.advance(block);
            trace.block_seconds.push(started.elapsed().as_secs_f64());
            done += block;
            if done % cfg.stat_cadence == 0 {
                let row = self.record(cfg.record_path_length);
                observe(&row);
                trace.rows.push(row);
            }
        }
        trace.counts = self.counts;
        Ok(trace)
    }

    /// Steps `burn_in` times, then hands out `count` snapshots spaced
    /// `thinning` steps apart. The first snapshot is the state right after
    /// burn-in.
    pub fn sample(
        &mut self,
        burn_in: u64,
        thinning: u64,
        count: usize,
        mut visit: impl FnMut(&SpatialGraph),
    ) -> Result<(), SamplerError> {
        if thinning == 0 {
            return Err(SamplerError::InvalidConfig("thinning must be >= 1".into()));
        }
        self.advance(burn_in);
        for k in 0..count {
            if k > 0 {
                self.advance(thinning);
            }
            assert!(self.graph.is_connected(), "emitted a disconnected graph");
            visit(&self.graph);
        }
        Ok(())
    }
}

/// Runs a full chain from a fresh initial graph.
pub fn run_chain(
    model: &EdgeModel,
    n: usize,
    cfg: &ChainConfig,
) -> Result<(SpatialGraph, ChainTrace), SamplerError> {
    cfg.validate()?;
    let mut chain = Chain::new(*model, n, cfg.seed)?;
    let trace = chain.run(cfg, |_| {})?;
    Ok((chain.into_graph(), trace))
}

/// `count` snapshots from one chain after `cfg.burn_in` steps, spaced
/// `cfg.thinning` apart. `cfg.iterations` is not consulted; the chain runs
/// exactly `burn_in + (count - 1) * thinning` steps.
pub fn sample_ensemble(
    model: &EdgeModel,
    n: usize,
    cfg: &ChainConfig,
    count: usize,
) -> Result<Vec<SpatialGraph>, SamplerError> {
    if count == 0 {
        return Err(SamplerError::InvalidConfig("count must be >= 1".into()));
    }
    let mut chain = Chain::new(*model, n, cfg.seed)?;
    let mut out = Vec::with_capacity(count);
    chain.sample(cfg.burn_in, cfg.thinning, count, |g| out.push(g.clone()))?;
    Ok(out)
}
