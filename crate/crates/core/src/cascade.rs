//! Independent cascade propagation over sampled networks.
//!
//! A cascade attempt along arc `a` succeeds when draw `a` of the stream keyed
//! on the run seed falls below the propagation probability. Each arc is tried
//! at most once per cascade, so keying draws on the arc rather than on the
//! order of attempts gives the same distribution as sequential draws while
//! making the activated set independent of traversal order.
//!
//! [`CascadeEnsemble`] fixes `M` sampled networks and `R` run seeds per
//! sample and evaluates any seed set against those same scenarios. Because
//! the live arcs of a scenario are fixed, the activated set of `S ∪ {x}` is
//! the activated set of `S` plus whatever `x` reaches outside it, which is
//! what the incremental greedy evaluation relies on.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{sample_ensemble, GraphError, NodeId, SampledNetwork, UncertainNetwork};
use crate::rng::{bernoulli_bits, derive_seed, get_bit, set_bit, words_for, STREAM_RUNS};

/// Largest edge count [`exact_spread`] will enumerate.
pub const EXACT_EDGE_LIMIT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CascadeError {
    #[error("seed {0} is not a node of the network")]
    SeedNotInNetwork(NodeId),
    #[error("seed {0} listed twice")]
    DuplicateSeed(NodeId),
    #[error("sample count and runs per sample must both be at least 1")]
    EmptyEstimate,
    #[error("exact enumeration supports at most {limit} edges, network has {edges}")]
    InstanceTooLarge { edges: usize, limit: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Distinct nodes of one network, kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet(Vec<NodeId>);

impl SeedSet {
    pub fn new(node_count: usize, nodes: impl IntoIterator<Item = NodeId>) -> Result<Self, CascadeError> {
        let mut v: Vec<NodeId> = nodes.into_iter().collect();
        if let Some(&bad) = v.iter().find(|n| n.index() >= node_count) {
            return Err(CascadeError::SeedNotInNetwork(bad));
        }
        v.sort_unstable();
        if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
            return Err(CascadeError::DuplicateSeed(w[0]));
        }
        Ok(SeedSet(v))
    }

    pub fn empty() -> Self {
        SeedSet(Vec::new())
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.0.binary_search(&node).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EstimateSource {
    MonteCarlo { num_samples: usize, runs_per_sample: usize, master_seed: u64 },
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadEstimate {
    /// Sum of `per_node_prob`.
    pub expected_influenced: f64,
    /// Probability each node ends up influenced, indexed by [`NodeId`].
    pub per_node_prob: Vec<f64>,
    /// Standard error of `expected_influenced`, clustered by sampled network.
    /// Zero for exact results.
    pub std_error: f64,
    pub source: EstimateSource,
}

/// Bits for arcs `0..2 * edge_count` that fire under `run_seed`.
fn arc_draws(edge_count: usize, propagation_prob: f64, run_seed: u64) -> Vec<u64> {
    let mut bits = vec![0u64; words_for(2 * edge_count)];
    bernoulli_bits(run_seed, std::iter::repeat_n(propagation_prob, 2 * edge_count), &mut bits);
    bits
}

/// One breadth-order independent cascade on a sampled network. Returns the
/// activated nodes (seeds included) in ascending order.
pub fn simulate_cascade(
    sampled: &SampledNetwork,
    seeds: &SeedSet,
    propagation_prob: f64,
    run_seed: u64,
) -> Result<Vec<NodeId>, CascadeError> {
    let n = sampled.node_count();
    if let Some(&bad) = seeds.as_slice().iter().find(|s| s.index() >= n) {
        return Err(CascadeError::SeedNotInNetwork(bad));
    }
    let fires = arc_draws(sampled.uncertain_edge_count(), propagation_prob, run_seed);
    let mut active = vec![false; n];
    let mut queue: VecDeque<NodeId> = VecDeque::new();
    for &s in seeds.as_slice() {
        active[s.index()] = true;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        for &(v, arc) in sampled.arcs(u) {
            if !active[v.index()] && get_bit(&fires, arc as usize) {
                active[v.index()] = true;
                queue.push_back(v);
            }
        }
    }
    Ok((0..n as u32).map(NodeId).filter(|v| active[v.index()]).collect())
}

/// Run seed of scenario `pair = sample * R + run` under `master_seed`.
pub fn pair_run_seed(master_seed: u64, pair: u64) -> u64 {
    derive_seed(master_seed, STREAM_RUNS, pair)
}

/// A fixed set of `M × R` cascade scenarios over one uncertain network.
#[derive(Debug, Clone)]
pub struct CascadeEnsemble {
    node_count: usize,
    num_samples: usize,
    runs_per_sample: usize,
    master_seed: u64,
    offsets: Vec<usize>,
    adj: Vec<(NodeId, u32)>,
    arc_words: usize,
    // Live-arc bits of every scenario, `arc_words` per scenario.
    live: Vec<u64>,
}

/// Scenarios handled per rayon task.
const PAIR_CHUNK: usize = 64;

impl CascadeEnsemble {
    /// Samples `num_samples` networks (seeds `master_seed + i`) and derives
    /// `runs_per_sample` cascade seeds for each.
    pub fn new(
        net: &UncertainNetwork,
        num_samples: usize,
        runs_per_sample: usize,
        master_seed: u64,
    ) -> Result<Self, CascadeError> {
        if num_samples == 0 || runs_per_sample == 0 {
            return Err(CascadeError::EmptyEstimate);
        }
        let samples = sample_ensemble(net, num_samples, master_seed)?;
        let edges = net.edge_count();
        let arc_words = words_for(2 * edges);
        let pairs = num_samples * runs_per_sample;
        let mut live = vec![0u64; pairs * arc_words];
        if arc_words > 0 {
            live.par_chunks_mut(arc_words).enumerate().for_each(|(pair, out)| {
                let sample = &samples[pair / runs_per_sample];
                let fires = arc_draws(edges, net.propagation_prob(), pair_run_seed(master_seed, pair as u64));
                for e in 0..edges {
                    if sample.contains_edge(e) {
                        for arc in [2 * e, 2 * e + 1] {
                            if get_bit(&fires, arc) {
                                set_bit(out, arc);
                            }
                        }
                    }
                }
            });
        }
        debug_assert!(samples.iter().all(|s| s.presence_words().len() == words_for(edges)));

        let mut offsets = Vec::with_capacity(net.node_count() + 1);
        let mut adj = Vec::with_capacity(2 * edges);
        offsets.push(0);
        for v in net.nodes() {
            adj.extend_from_slice(net.arcs(v));
            offsets.push(adj.len());
        }
        Ok(CascadeEnsemble {
            node_count: net.node_count(),
            num_samples,
            runs_per_sample,
            master_seed,
            offsets,
            adj,
            arc_words,
            live,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn runs_per_sample(&self) -> usize {
        self.runs_per_sample
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn scenario_count(&self) -> usize {
        self.num_samples * self.runs_per_sample
    }

    pub(crate) fn node_words(&self) -> usize {
        words_for(self.node_count)
    }

    /// Marks in `reached` every node reachable from `start` over live arcs
    /// of scenario `pair`, not crossing nodes already marked. Calls `on_new`
    /// for each newly marked node.
    fn spread_from(
        &self,
        pair: usize,
        start: &[NodeId],
        reached: &mut [u64],
        stack: &mut Vec<NodeId>,
        mut on_new: impl FnMut(NodeId),
    ) {
        let live = &self.live[pair * self.arc_words..(pair + 1) * self.arc_words];
        stack.clear();
        for &s in start {
            if !get_bit(reached, s.index()) {
                set_bit(reached, s.index());
                on_new(s);
                stack.push(s);
            }
        }
        while let Some(u) = stack.pop() {
            for &(v, arc) in &self.adj[self.offsets[u.index()]..self.offsets[u.index() + 1]] {
                if !get_bit(reached, v.index()) && get_bit(live, arc as usize) {
                    set_bit(reached, v.index());
                    on_new(v);
                    stack.push(v);
                }
            }
        }
    }

    /// Per-node activation counts over all scenarios, plus the total number
    /// activated in each sampled network (summed over its runs).
    pub(crate) fn counts(&self, seeds: &[NodeId]) -> (Vec<u64>, Vec<u64>) {
        let words = self.node_words();
        let r = self.runs_per_sample;
        let per_sample: Vec<(Vec<u64>, u64)> = (0..self.num_samples)
            .into_par_iter()
            .map_init(
                || (vec![0u64; words], Vec::new()),
                |(reached, stack), m| {
                    let mut counts = vec![0u64; self.node_count];
                    let mut total = 0u64;
                    for pair in m * r..(m + 1) * r {
                        reached.iter_mut().for_each(|w| *w = 0);
                        self.spread_from(pair, seeds, reached, stack, |v| {
                            counts[v.index()] += 1;
                            total += 1;
                        });
                    }
                    (counts, total)
                },
            )
            .collect();
        let mut counts = vec![0u64; self.node_count];
        let mut totals = Vec::with_capacity(self.num_samples);
        for (c, t) in per_sample {
            counts.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
            totals.push(t);
        }
        (counts, totals)
    }

    /// Activated-set bitmaps of `seeds`, `node_words()` per scenario.
    pub(crate) fn reach_sets(&self, seeds: &[NodeId]) -> Vec<u64> {
        let words = self.node_words();
        let mut out = vec![0u64; self.scenario_count() * words];
        if words == 0 {
            return out;
        }
        out.par_chunks_mut(words).enumerate().for_each_init(Vec::new, |stack, (pair, reached)| {
            self.spread_from(pair, seeds, reached, stack, |_| {});
        });
        out
    }

    /// Activation counts of nodes that `extra` reaches outside `reached`,
    /// summed over scenarios. With `commit`, `reached` is extended in place.
    pub(crate) fn extend_counts(&self, reached: &mut [u64], extra: NodeId, commit: bool) -> Vec<u64> {
        let words = self.node_words();
        let n = self.node_count;
        let fold = |mut counts: Vec<u64>, pair: usize, reached: &mut [u64], stack: &mut Vec<NodeId>| {
            self.spread_from(pair, &[extra], reached, stack, |v| counts[v.index()] += 1);
            counts
        };
        let add = |mut a: Vec<u64>, b: Vec<u64>| {
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            a
        };
        if commit {
            reached
                .par_chunks_mut(words * PAIR_CHUNK)
                .enumerate()
                .map(|(chunk, block)| {
                    let mut stack = Vec::new();
                    let mut counts = vec![0u64; n];
                    for (i, r) in block.chunks_mut(words).enumerate() {
                        counts = fold(counts, chunk * PAIR_CHUNK + i, r, &mut stack);
                    }
                    counts
                })
                .reduce(|| vec![0u64; n], add)
        } else {
            let reached: &[u64] = reached;
            reached
                .par_chunks(words * PAIR_CHUNK)
                .enumerate()
                .map(|(chunk, block)| {
                    let mut stack = Vec::new();
                    let mut scratch = vec![0u64; words];
                    let mut counts = vec![0u64; n];
                    for (i, r) in block.chunks(words).enumerate() {
                        scratch.copy_from_slice(r);
                        counts = fold(counts, chunk * PAIR_CHUNK + i, &mut scratch, &mut stack);
                    }
                    counts
                })
                .reduce(|| vec![0u64; n], add)
        }
    }

    /// Spread estimate of `seeds` over the fixed scenarios.
    pub fn estimate(&self, seeds: &SeedSet) -> Result<SpreadEstimate, CascadeError> {
        if let Some(&bad) = seeds.as_slice().iter().find(|s| s.index() >= self.node_count) {
            return Err(CascadeError::SeedNotInNetwork(bad));
        }
        let (counts, totals) = self.counts(seeds.as_slice());
        let scenarios = self.scenario_count() as f64;
        let per_node_prob: Vec<f64> = counts.iter().map(|&c| c as f64 / scenarios).collect();
        let expected_influenced = per_node_prob.iter().sum();

        let m = self.num_samples as f64;
        let std_error = if self.num_samples > 1 {
            let means: Vec<f64> = totals.iter().map(|&t| t as f64 / self.runs_per_sample as f64).collect();
            let mean = means.iter().sum::<f64>() / m;
            let var = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
            (var / m).sqrt()
        } else {
            0.0
        };
        Ok(SpreadEstimate {
            expected_influenced,
            per_node_prob,
            std_error,
            source: EstimateSource::MonteCarlo {
                num_samples: self.num_samples,
                runs_per_sample: self.runs_per_sample,
                master_seed: self.master_seed,
            },
        })
    }
}

/// Monte Carlo spread: averages activation indicators over `num_samples`
/// sampled networks with `runs_per_sample` cascades each.
pub fn estimate_spread(
    net: &UncertainNetwork,
    seeds: &SeedSet,
    num_samples: usize,
    runs_per_sample: usize,
    master_seed: u64,
) -> Result<SpreadEstimate, CascadeError> {
    CascadeEnsemble::new(net, num_samples, runs_per_sample, master_seed)?.estimate(seeds)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Exact spread by enumerating live-edge graphs: each edge is live with
/// probability `existence_prob × propagation_prob`, and a node is influenced
/// exactly when a live path joins it to a seed.
pub fn exact_spread(
    net: &UncertainNetwork,
    seeds: &SeedSet,
    propagation_prob: f64,
) -> Result<SpreadEstimate, CascadeError> {
    let edges = net.edge_count();
    if edges > EXACT_EDGE_LIMIT {
        return Err(CascadeError::InstanceTooLarge { edges, limit: EXACT_EDGE_LIMIT });
    }
    let n = net.node_count();
    if let Some(&bad) = seeds.as_slice().iter().find(|s| s.index() >= n) {
        return Err(CascadeError::SeedNotInNetwork(bad));
    }
    let mut per_node_prob = vec![0.0f64; n];
    if !seeds.is_empty() {
        let live: Vec<f64> = net.edges().iter().map(|e| e.existence_prob * propagation_prob).collect();
        let ends: Vec<(usize, usize)> = net.edges().iter().map(|e| (e.u.index(), e.v.index())).collect();
        let mut parent = vec![0usize; n];
        let mut seeded = vec![false; n];
        for mask in 0u32..(1u32 << edges) {
            let mut weight = 1.0;
            for (i, q) in live.iter().enumerate() {
                weight *= if mask >> i & 1 == 1 { *q } else { 1.0 - q };
            }
            if weight == 0.0 {
                continue;
            }
            parent.iter_mut().enumerate().for_each(|(i, p)| *p = i);
            for (i, &(a, b)) in ends.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra != rb {
                        parent[ra] = rb;
                    }
                }
            }
            seeded.iter_mut().for_each(|s| *s = false);
            for s in seeds.as_slice() {
                let r = find(&mut parent, s.index());
                seeded[r] = true;
            }
            for (v, p) in per_node_prob.iter_mut().enumerate() {
                if seeded[find(&mut parent, v)] {
                    *p += weight;
                }
            }
        }
        for p in per_node_prob.iter_mut() {
            *p = p.clamp(0.0, 1.0);
        }
        for s in seeds.as_slice() {
            per_node_prob[s.index()] = 1.0;
        }
    }
    Ok(SpreadEstimate {
        expected_influenced: per_node_prob.iter().sum(),
        per_node_prob,
        std_error: 0.0,
        source: EstimateSource::Exact,
    })
}
