//! Sequential seed selection conditioned on earlier rounds.
//!
//! The objective for a candidate seed set `S` is
//!
//! ```text
//! coverage(S) = Σ_v (1 − belief[v]) · P(v influenced | S)
//! ```
//!
//! so nodes that earlier PCAs probably already reached count for little.
//! `P` comes either from exact live-edge enumeration or from one fixed
//! [`CascadeEnsemble`] (sample average approximation): every marginal gain
//! of a selection is evaluated against the same scenarios, which keeps the
//! objective monotone submodular and the greedy comparisons free of
//! sampling noise.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cascade::{exact_spread, CascadeEnsemble, CascadeError, SeedSet, EXACT_EDGE_LIMIT};
use crate::graph::{NodeId, UncertainNetwork};

/// Gains within this distance of the best are ties, resolved by label order.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// `OracleKind::Auto` enumerates exactly up to this many edges. Each exact
/// evaluation walks `2^edges` live-edge graphs and greedy makes many of them.
pub const AUTO_EXACT_EDGE_LIMIT: usize = 12;

/// Largest number of seed sets [`exhaustive_select`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("only {eligible} eligible nodes, cannot select {k}")]
    NotEnoughEligible { eligible: usize, k: usize },
    #[error("exhaustive search over {combinations} seed sets exceeds the limit of {limit}")]
    TooManyCombinations { combinations: u128, limit: u128 },
    #[error("belief has {got} entries, network has {expected} nodes")]
    BeliefSizeMismatch { expected: usize, got: usize },
    #[error("belief for node {node} is {value}, outside [0, 1]")]
    BeliefOutOfRange { node: usize, value: f64 },
    #[error(transparent)]
    Cascade(#[from] CascadeError),
}

/// Probability each node was already influenced by PCAs of earlier rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    per_node_prob: Vec<f64>,
    round_index: usize,
}

impl BeliefState {
    pub fn zero(node_count: usize) -> Self {
        BeliefState { per_node_prob: vec![0.0; node_count], round_index: 0 }
    }

    pub fn from_parts(per_node_prob: Vec<f64>, round_index: usize) -> Result<Self, SelectError> {
        if let Some((node, &value)) = per_node_prob.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(SelectError::BeliefOutOfRange { node, value });
        }
        Ok(BeliefState { per_node_prob, round_index })
    }

    pub fn get(&self, node: NodeId) -> f64 {
        self.per_node_prob[node.index()]
    }

    pub fn probs(&self) -> &[f64] {
        &self.per_node_prob
    }

    pub fn round_index(&self) -> usize {
        self.round_index
    }

    /// Expected number of nodes already influenced.
    pub fn expected_influenced(&self) -> f64 {
        self.per_node_prob.iter().sum()
    }

    fn check_size(&self, net: &UncertainNetwork) -> Result<(), SelectError> {
        if self.per_node_prob.len() != net.node_count() {
            return Err(SelectError::BeliefSizeMismatch { expected: net.node_count(), got: self.per_node_prob.len() });
        }
        Ok(())
    }

    fn residual_weights(&self) -> Vec<f64> {
        self.per_node_prob.iter().map(|b| 1.0 - b).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Exact enumeration when the network has at most
    /// [`AUTO_EXACT_EDGE_LIMIT`] edges, Monte Carlo otherwise.
    #[default]
    Auto,
    Exact,
    MonteCarlo,
}

impl OracleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleKind::Auto => "auto",
            OracleKind::Exact => "exact",
            OracleKind::MonteCarlo => "monte_carlo",
        }
    }
}

impl std::str::FromStr for OracleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(OracleKind::Auto),
            "exact" => Ok(OracleKind::Exact),
            "monte_carlo" | "montecarlo" | "mc" => Ok(OracleKind::MonteCarlo),
            other => Err(format!("unknown oracle `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    pub num_samples: usize,
    pub runs_per_sample: usize,
    pub master_seed: u64,
    pub oracle: OracleKind,
}

impl Default for SelectionParams {
    fn default() -> Self {
        SelectionParams { num_samples: 1000, runs_per_sample: 20, master_seed: 0, oracle: OracleKind::Auto }
    }
}

impl SelectionParams {
    pub fn exact() -> Self {
        SelectionParams { oracle: OracleKind::Exact, ..Self::default() }
    }
}

enum Oracle<'a> {
    Exact(&'a UncertainNetwork),
    MonteCarlo(CascadeEnsemble),
}

impl<'a> Oracle<'a> {
    fn build(net: &'a UncertainNetwork, params: &SelectionParams) -> Result<Self, SelectError> {
        let exact = match params.oracle {
            OracleKind::Exact => true,
            OracleKind::MonteCarlo => false,
            OracleKind::Auto => net.edge_count() <= AUTO_EXACT_EDGE_LIMIT,
        };
        if exact {
            if net.edge_count() > EXACT_EDGE_LIMIT {
                return Err(CascadeError::InstanceTooLarge { edges: net.edge_count(), limit: EXACT_EDGE_LIMIT }.into());
            }
            Ok(Oracle::Exact(net))
        } else {
            Ok(Oracle::MonteCarlo(CascadeEnsemble::new(
                net,
                params.num_samples,
                params.runs_per_sample,
                params.master_seed,
            )?))
        }
    }

    fn influence(&self, seeds: &SeedSet) -> Result<Vec<f64>, SelectError> {
        Ok(match self {
            Oracle::Exact(net) => exact_spread(net, seeds, net.propagation_prob())?.per_node_prob,
            Oracle::MonteCarlo(ens) => ens.estimate(seeds)?.per_node_prob,
        })
    }

    fn coverage(&self, seeds: &SeedSet, weights: &[f64]) -> Result<f64, SelectError> {
        Ok(weighted(&self.influence(seeds)?, weights))
    }
}

fn weighted(probs: &[f64], weights: &[f64]) -> f64 {
    probs.iter().zip(weights).map(|(p, w)| p * w).sum()
}

/// Coverage of the current partial selection, able to price one more node.
enum CoverageState<'o, 'a> {
    Exact { oracle: &'o Oracle<'a>, seeds: Vec<NodeId>, value: f64, weights: Vec<f64> },
    MonteCarlo { ensemble: &'o CascadeEnsemble, reached: Vec<u64>, weights: Vec<f64> },
}

impl<'o, 'a> CoverageState<'o, 'a> {
    fn new(oracle: &'o Oracle<'a>, weights: Vec<f64>) -> Self {
        match oracle {
            Oracle::Exact(_) => CoverageState::Exact { oracle, seeds: Vec::new(), value: 0.0, weights },
            Oracle::MonteCarlo(ens) => {
                CoverageState::MonteCarlo { ensemble: ens, reached: ens.reach_sets(&[]), weights }
            }
        }
    }

    fn seed_set(node_count: usize, seeds: &[NodeId], extra: NodeId) -> Result<SeedSet, SelectError> {
        Ok(SeedSet::new(node_count, seeds.iter().copied().chain([extra]))?)
    }

    fn gain(&mut self, x: NodeId) -> Result<f64, SelectError> {
        match self {
            CoverageState::Exact { oracle, seeds, value, weights } => {
                let with = Self::seed_set(weights.len(), seeds, x)?;
                Ok(oracle.coverage(&with, weights)? - *value)
            }
            CoverageState::MonteCarlo { ensemble, reached, weights } => {
                let delta = ensemble.extend_counts(reached, x, false);
                Ok(scaled_gain(&delta, weights, ensemble.scenario_count()))
            }
        }
    }

    fn commit(&mut self, x: NodeId) -> Result<(), SelectError> {
        match self {
            CoverageState::Exact { oracle, seeds, value, weights } => {
                let with = Self::seed_set(weights.len(), seeds, x)?;
                *value = oracle.coverage(&with, weights)?;
                seeds.push(x);
            }
            CoverageState::MonteCarlo { ensemble, reached, .. } => {
                ensemble.extend_counts(reached, x, true);
            }
        }
        Ok(())
    }
}

fn scaled_gain(delta: &[u64], weights: &[f64], scenarios: usize) -> f64 {
    delta.iter().zip(weights).map(|(&c, w)| c as f64 * w).sum::<f64>() / scenarios as f64
}

/// `Σ_v (1 − belief[v]) · P(v influenced | seeds)`.
pub fn coverage_objective(
    net: &UncertainNetwork,
    seeds: &SeedSet,
    belief: &BeliefState,
    params: &SelectionParams,
) -> Result<f64, SelectError> {
    belief.check_size(net)?;
    Oracle::build(net, params)?.coverage(seeds, &belief.residual_weights())
}

/// [`coverage_objective`] for several seed sets against one oracle, so the
/// values are directly comparable.
pub fn coverage_of_sets(
    net: &UncertainNetwork,
    sets: &[SeedSet],
    belief: &BeliefState,
    params: &SelectionParams,
) -> Result<Vec<f64>, SelectError> {
    belief.check_size(net)?;
    let oracle = Oracle::build(net, params)?;
    let weights = belief.residual_weights();
    sets.iter().map(|s| oracle.coverage(s, &weights)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub node: NodeId,
    pub marginal_gain: f64,
}

/// Nodes in pick order with their marginal coverage gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidates {
    pub entries: Vec<RankedCandidate>,
    pub k: usize,
    pub params: SelectionParams,
    pub excluded: Vec<NodeId>,
}

impl RankedCandidates {
    pub fn nodes(&self) -> Vec<NodeId> {
        self.entries.iter().map(|e| e.node).collect()
    }

    /// Sum of marginal gains, the coverage of the whole selection.
    pub fn total_gain(&self) -> f64 {
        self.entries.iter().map(|e| e.marginal_gain).sum()
    }
}

fn eligible_nodes(
    net: &UncertainNetwork,
    k: usize,
    belief: &BeliefState,
    exclusions: &[NodeId],
) -> Result<(Vec<NodeId>, Vec<NodeId>), SelectError> {
    if k == 0 {
        return Err(SelectError::ZeroK);
    }
    belief.check_size(net)?;
    let mut excluded: Vec<NodeId> = exclusions.to_vec();
    excluded.sort_unstable();
    excluded.dedup();
    if let Some(&bad) = excluded.iter().find(|n| n.index() >= net.node_count()) {
        return Err(CascadeError::SeedNotInNetwork(bad).into());
    }
    let eligible: Vec<NodeId> = net.nodes().filter(|v| excluded.binary_search(v).is_err()).collect();
    if eligible.len() < k {
        return Err(SelectError::NotEnoughEligible { eligible: eligible.len(), k });
    }
    Ok((eligible, excluded))
}

/// Picks the smallest node whose gain is within [`TIE_TOLERANCE`] of the best.
fn pick(fresh: &[(NodeId, f64)]) -> (NodeId, f64) {
    let best = fresh.iter().map(|f| f.1).fold(f64::NEG_INFINITY, f64::max);
    fresh
        .iter()
        .copied()
        .filter(|f| f.1 >= best - TIE_TOLERANCE)
        .min_by_key(|f| f.0)
        .expect("at least one candidate")
}

#[derive(Debug)]
struct Bound {
    gain: f64,
    node: NodeId,
    step: usize,
}

impl PartialEq for Bound {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Bound {}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    // Max-heap on gain; smaller node first on equal gains.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain.total_cmp(&other.gain).then_with(|| other.node.cmp(&self.node))
    }
}

/// Lazy greedy (CELF) maximization of [`coverage_objective`].
///
/// Gains computed in earlier steps are upper bounds on current gains, so
/// only heap entries whose bound could still reach the best fresh gain are
/// re-evaluated. Output matches [`naive_greedy_select`] exactly.
pub fn greedy_select(
    net: &UncertainNetwork,
    k: usize,
    belief: &BeliefState,
    exclusions: &[NodeId],
    params: &SelectionParams,
) -> Result<RankedCandidates, SelectError> {
    let (eligible, excluded) = eligible_nodes(net, k, belief, exclusions)?;
    let oracle = Oracle::build(net, params)?;
    let mut state = CoverageState::new(&oracle, belief.residual_weights());

    let mut heap = BinaryHeap::with_capacity(eligible.len());
    for &node in &eligible {
        heap.push(Bound { gain: state.gain(node)?, node, step: 0 });
    }
    let mut entries = Vec::with_capacity(k);
    for step in 0..k {
        let mut fresh: Vec<(NodeId, f64)> = Vec::new();
        let mut best = f64::NEG_INFINITY;
        while let Some(top) = heap.peek() {
            if !fresh.is_empty() && top.gain < best - TIE_TOLERANCE {
                break;
            }
            let top = heap.pop().expect("peeked");
            let gain = if top.step == step { top.gain } else { state.gain(top.node)? };
            best = best.max(gain);
            fresh.push((top.node, gain));
        }
        let (node, gain) = pick(&fresh);
        for &(other, g) in fresh.iter().filter(|f| f.0 != node) {
            heap.push(Bound { gain: g, node: other, step });
        }
        state.commit(node)?;
        entries.push(RankedCandidate { node, marginal_gain: gain.max(0.0) });
    }
    Ok(RankedCandidates { entries, k, params: *params, excluded })
}

/// Plain greedy: re-evaluates every eligible node at every step. Reference
/// for [`greedy_select`].
pub fn naive_greedy_select(
    net: &UncertainNetwork,
    k: usize,
    belief: &BeliefState,
    exclusions: &[NodeId],
    params: &SelectionParams,
) -> Result<RankedCandidates, SelectError> {
    let (mut remaining, excluded) = eligible_nodes(net, k, belief, exclusions)?;
    let oracle = Oracle::build(net, params)?;
    let mut state = CoverageState::new(&oracle, belief.residual_weights());
    let mut entries = Vec::with_capacity(k);
    for _ in 0..k {
        let gains = remaining.iter().map(|&v| Ok((v, state.gain(v)?))).collect::<Result<Vec<_>, SelectError>>()?;
        let (node, gain) = pick(&gains);
        remaining.retain(|&v| v != node);
        state.commit(node)?;
        entries.push(RankedCandidate { node, marginal_gain: gain.max(0.0) });
    }
    Ok(RankedCandidates { entries, k, params: *params, excluded })
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

/// True maximizer of [`coverage_objective`] under the exact oracle, by
/// enumerating every eligible `k`-set in lexicographic order; the first
/// maximizer wins ties.
pub fn exhaustive_select(
    net: &UncertainNetwork,
    k: usize,
    belief: &BeliefState,
    exclusions: &[NodeId],
) -> Result<(SeedSet, f64), SelectError> {
    let (eligible, _) = eligible_nodes(net, k, belief, exclusions)?;
    let combinations = binomial(eligible.len(), k);
    if combinations > EXHAUSTIVE_LIMIT {
        return Err(SelectError::TooManyCombinations { combinations, limit: EXHAUSTIVE_LIMIT });
    }
    let oracle = Oracle::build(net, &SelectionParams::exact())?;
    let weights = belief.residual_weights();
    let mut best: Option<(SeedSet, f64)> = None;
    for combo in eligible.into_iter().combinations(k) {
        let seeds = SeedSet::new(net.node_count(), combo)?;
        let value = oracle.coverage(&seeds, &weights)?;
        if best.as_ref().is_none_or(|(_, b)| value > b + 1e-12) {
            best = Some((seeds, value));
        }
    }
    Ok(best.expect("k <= eligible guarantees one combination"))
}

/// Folds the reach of newly trained PCAs into the belief, treating rounds as
/// independent: `1 − (1 − belief[v]) · (1 − P(v influenced | trained))`.
pub fn update_belief(
    belief: &BeliefState,
    trained: &SeedSet,
    net: &UncertainNetwork,
    params: &SelectionParams,
) -> Result<BeliefState, SelectError> {
    belief.check_size(net)?;
    let mut next = belief.per_node_prob.clone();
    if !trained.is_empty() {
        let reach = Oracle::build(net, params)?.influence(trained)?;
        for (b, p) in next.iter_mut().zip(&reach) {
            *b = (1.0 - (1.0 - *b) * (1.0 - p)).clamp(0.0, 1.0);
        }
        for t in trained.as_slice() {
            next[t.index()] = 1.0;
        }
    }
    Ok(BeliefState { per_node_prob: next, round_index: belief.round_index + 1 })
}
