//! Uncertain friendship network and deterministic sampling of concrete
//! networks from it.
//!
//! Nodes are kept in lexicographic label order, so the dense [`NodeId`] order
//! and the label order agree. Edges are undirected and stored with `u < v`,
//! sorted by `(u, v)`; the position of an edge in that order is its canonical
//! index and keys every random draw made for it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{bernoulli_bits, get_bit, words_for};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Which observation source(s) reported an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeProvenance {
    Platform,
    Field,
    Both,
}

impl EdgeProvenance {
    pub fn merge(self, other: EdgeProvenance) -> EdgeProvenance {
        if self == other {
            self
        } else {
            EdgeProvenance::Both
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeProvenance::Platform => "platform",
            EdgeProvenance::Field => "field",
            EdgeProvenance::Both => "both",
        }
    }
}

impl fmt::Display for EdgeProvenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeProvenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "platform" => Ok(EdgeProvenance::Platform),
            "field" => Ok(EdgeProvenance::Field),
            "both" => Ok(EdgeProvenance::Both),
            other => Err(format!("unknown provenance `{other}`")),
        }
    }
}

/// Label-based edge description accepted by [`build_network`].
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub u: String,
    pub v: String,
    pub existence_prob: f64,
    pub provenance: EdgeProvenance,
}

impl EdgeSpec {
    pub fn new(u: impl Into<String>, v: impl Into<String>, existence_prob: f64, provenance: EdgeProvenance) -> Self {
        EdgeSpec { u: u.into(), v: v.into(), existence_prob, provenance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertainEdge {
    pub u: NodeId,
    pub v: NodeId,
    pub existence_prob: f64,
    pub provenance: EdgeProvenance,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("network must contain at least one node")]
    EmptyNodeList,
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("node label must be non-empty, must not start with `#`, and must not contain commas, whitespace or control characters: `{0}`")]
    InvalidLabel(String),
    #[error("edge ({u},{v}) references unknown node `{missing}`")]
    DanglingEndpoint { u: String, v: String, missing: String },
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("{what} must lie in (0, 1], got {value}")]
    ProbabilityOutOfRange { what: &'static str, value: f64 },
    #[error("ensemble size must be at least 1")]
    EmptyEnsemble,
}

/// Probability check for the half-open interval `(0, 1]`.
pub(crate) fn check_prob(what: &'static str, value: f64) -> Result<f64, GraphError> {
    if value > 0.0 && value <= 1.0 {
        Ok(value)
    } else {
        Err(GraphError::ProbabilityOutOfRange { what, value })
    }
}

/// Labels end up as CSV fields in line-oriented files, where a leading `#`
/// would turn the line into a comment.
pub(crate) fn valid_label(label: &str) -> bool {
    !label.is_empty()
        && !label.starts_with('#')
        && !label.chars().any(|c| c == ',' || c.is_whitespace() || c.is_control())
}

/// Nodes, edges annotated with existence probabilities, and one
/// network-level propagation probability.
#[derive(Debug, Clone)]
pub struct UncertainNetwork {
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
    edges: Vec<UncertainEdge>,
    propagation_prob: f64,
    // CSR adjacency: neighbours of node i are adj[offsets[i]..offsets[i + 1]],
    // each paired with the arc id used to key cascade draws.
    offsets: Vec<usize>,
    adj: Vec<(NodeId, u32)>,
}

impl PartialEq for UncertainNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
            && self.edges == other.edges
            && self.propagation_prob == other.propagation_prob
    }
}

/// Canonicalizes and validates a network.
///
/// Nodes are sorted by label. Edges are re-oriented to `u < v`, sorted, and
/// duplicates merged: provenances combine (`Platform` + `Field` = `Both`) and
/// the larger existence probability is kept.
pub fn build_network<N, E>(nodes: N, edges: E, propagation_prob: f64) -> Result<UncertainNetwork, GraphError>
where
    N: IntoIterator,
    N::Item: Into<String>,
    E: IntoIterator<Item = EdgeSpec>,
{
    check_prob("propagation probability", propagation_prob)?;
    let mut labels: Vec<String> = nodes.into_iter().map(Into::into).collect();
    if labels.is_empty() {
        return Err(GraphError::EmptyNodeList);
    }
    if let Some(bad) = labels.iter().find(|l| !valid_label(l)) {
        return Err(GraphError::InvalidLabel(bad.clone()));
    }
    labels.sort();
    if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
        return Err(GraphError::DuplicateNode(w[0].clone()));
    }
    let index: HashMap<String, NodeId> =
        labels.iter().enumerate().map(|(i, l)| (l.clone(), NodeId(i as u32))).collect();

    let mut merged: BTreeMap<(NodeId, NodeId), (f64, EdgeProvenance)> = BTreeMap::new();
    for spec in edges {
        let lookup = |label: &str| {
            index.get(label).copied().ok_or_else(|| GraphError::DanglingEndpoint {
                u: spec.u.clone(),
                v: spec.v.clone(),
                missing: label.to_string(),
            })
        };
        let a = lookup(&spec.u)?;
        let b = lookup(&spec.v)?;
        if a == b {
            return Err(GraphError::SelfLoop(spec.u));
        }
        check_prob("existence probability", spec.existence_prob)?;
        let key = (a.min(b), a.max(b));
        merged
            .entry(key)
            .and_modify(|(p, prov)| {
                *p = p.max(spec.existence_prob);
                *prov = prov.merge(spec.provenance);
            })
            .or_insert((spec.existence_prob, spec.provenance));
    }
    let edges = merged
        .into_iter()
        .map(|((u, v), (existence_prob, provenance))| UncertainEdge { u, v, existence_prob, provenance })
        .collect();
    Ok(UncertainNetwork::assemble(labels, index, edges, propagation_prob))
}

impl UncertainNetwork {
    fn assemble(
        labels: Vec<String>,
        index: HashMap<String, NodeId>,
        edges: Vec<UncertainEdge>,
        propagation_prob: f64,
    ) -> Self {
        let n = labels.len();
        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.u.index()] += 1;
            degree[e.v.index()] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets.clone();
        let mut adj = vec![(NodeId(0), 0u32); offsets[n]];
        for (i, e) in edges.iter().enumerate() {
            let (fwd, back) = (2 * i as u32, 2 * i as u32 + 1);
            adj[fill[e.u.index()]] = (e.v, fwd);
            fill[e.u.index()] += 1;
            adj[fill[e.v.index()]] = (e.u, back);
            fill[e.v.index()] += 1;
        }
        UncertainNetwork { labels, index, edges, propagation_prob, offsets, adj }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        (0..self.labels.len() as u32).map(NodeId)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, node: NodeId) -> &str {
        &self.labels[node.index()]
    }

    pub fn node(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn edges(&self) -> &[UncertainEdge] {
        &self.edges
    }

    pub fn propagation_prob(&self) -> f64 {
        self.propagation_prob
    }

    /// Same nodes and edges under a different propagation probability.
    pub fn with_propagation_prob(&self, propagation_prob: f64) -> Result<UncertainNetwork, GraphError> {
        check_prob("propagation probability", propagation_prob)?;
        let mut net = self.clone();
        net.propagation_prob = propagation_prob;
        Ok(net)
    }

    /// Neighbours of `node` with the arc id of the directed edge leaving it.
    /// Arc `2e` runs `u -> v` along canonical edge `e`; arc `2e + 1` runs back.
    pub fn arcs(&self, node: NodeId) -> &[(NodeId, u32)] {
        &self.adj[self.offsets[node.index()]..self.offsets[node.index() + 1]]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.offsets[node.index() + 1] - self.offsets[node.index()]
    }

    /// Label-level parts; feeding them back to [`build_network`] reproduces
    /// this network exactly.
    pub fn parts(&self) -> (Vec<String>, Vec<EdgeSpec>, f64) {
        let edges = self
            .edges
            .iter()
            .map(|e| EdgeSpec::new(self.label(e.u), self.label(e.v), e.existence_prob, e.provenance))
            .collect();
        (self.labels.clone(), edges, self.propagation_prob)
    }
}

/// One concrete instantiation of an [`UncertainNetwork`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledNetwork {
    node_count: usize,
    uncertain_edge_count: usize,
    present: Vec<u64>,
    adjacency: Vec<Vec<(NodeId, u32)>>,
    sample_seed: u64,
}

impl SampledNetwork {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn sample_seed(&self) -> u64 {
        self.sample_seed
    }

    /// Number of edges in the parent uncertain network; arc ids range over
    /// `0..2 * uncertain_edge_count()`.
    pub fn uncertain_edge_count(&self) -> usize {
        self.uncertain_edge_count
    }

    pub fn contains_edge(&self, edge_index: usize) -> bool {
        get_bit(&self.present, edge_index)
    }

    /// Canonical indices of the edges resolved as present.
    pub fn edge_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.uncertain_edge_count).filter(|&e| self.contains_edge(e))
    }

    /// Present neighbours of `node`, each with the leaving arc id.
    pub fn arcs(&self, node: NodeId) -> &[(NodeId, u32)] {
        &self.adjacency[node.index()]
    }

    pub(crate) fn presence_words(&self) -> &[u64] {
        &self.present
    }
}

/// Resolves every edge independently: edge `i` is present when the `i`-th
/// draw of the stream keyed on `sample_seed` falls below its existence
/// probability.
pub fn sample_network(net: &UncertainNetwork, sample_seed: u64) -> SampledNetwork {
    let mut present = vec![0u64; words_for(net.edge_count())];
    bernoulli_bits(sample_seed, net.edges.iter().map(|e| e.existence_prob), &mut present);
    let adjacency = net
        .nodes()
        .map(|v| {
            net.arcs(v)
                .iter()
                .copied()
                .filter(|&(_, arc)| get_bit(&present, (arc / 2) as usize))
                .collect()
        })
        .collect();
    SampledNetwork {
        node_count: net.node_count(),
        uncertain_edge_count: net.edge_count(),
        present,
        adjacency,
        sample_seed,
    }
}

/// `count` samples; sample `i` uses seed `master_seed + i` (wrapping).
/// Order is by sample index regardless of how many threads do the work.
pub fn sample_ensemble(net: &UncertainNetwork, count: usize, master_seed: u64) -> Result<Vec<SampledNetwork>, GraphError> {
    if count == 0 {
        return Err(GraphError::EmptyEnsemble);
    }
    Ok((0..count as u64)
        .into_par_iter()
        .map(|i| sample_network(net, master_seed.wrapping_add(i)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(u: &str, v: &str, p: f64) -> EdgeSpec {
        EdgeSpec::new(u, v, p, EdgeProvenance::Platform)
    }

    #[test]
    fn sixty_two_nodes() {
        let labels: Vec<String> = (1..=62).map(|i| format!("Y{i:02}")).collect();
        let edges = (1..62).map(|i| e(&labels[i - 1], &labels[i], 0.6));
        let net = build_network(labels.clone(), edges, 0.5).unwrap();
        assert_eq!(net.node_count(), 62);
        assert_eq!(net.edge_count(), 61);
    }

    #[test]
    fn singleton_network() {
        let net = build_network(["A"], [], 0.5).unwrap();
        assert_eq!(net.node_count(), 1);
        assert_eq!(net.edge_count(), 0);
        let s = sample_network(&net, 3);
        assert_eq!(s.edge_indices().count(), 0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(build_network(["A", "B"], [e("A", "A", 0.5)], 0.5), Err(GraphError::SelfLoop("A".into())));
        assert_eq!(build_network(["A", "A"], [], 0.5), Err(GraphError::DuplicateNode("A".into())));
        assert!(matches!(
            build_network(["A"], [e("A", "Z", 0.5)], 0.5),
            Err(GraphError::DanglingEndpoint { missing, .. }) if missing == "Z"
        ));
        assert!(matches!(
            build_network(["A", "B"], [e("A", "B", 0.0)], 0.5),
            Err(GraphError::ProbabilityOutOfRange { .. })
        ));
        assert!(matches!(build_network(["A"], [], 0.0), Err(GraphError::ProbabilityOutOfRange { .. })));
        assert!(matches!(build_network(["A"], [], f64::NAN), Err(GraphError::ProbabilityOutOfRange { .. })));
        assert_eq!(build_network(Vec::<String>::new(), [], 0.5), Err(GraphError::EmptyNodeList));
        assert!(matches!(build_network(["A,B"], [], 0.5), Err(GraphError::InvalidLabel(_))));
        assert!(matches!(build_network(["#A"], [], 0.5), Err(GraphError::InvalidLabel(_))));
        assert!(matches!(build_network(["A\u{0}"], [], 0.5), Err(GraphError::InvalidLabel(_))));
    }

    #[test]
    fn canonical_order_and_merge() {
        let net = build_network(
            ["C", "A", "B"],
            [
                EdgeSpec::new("C", "A", 0.6, EdgeProvenance::Platform),
                EdgeSpec::new("A", "C", 0.8, EdgeProvenance::Field),
                EdgeSpec::new("B", "A", 0.6, EdgeProvenance::Platform),
            ],
            0.5,
        )
        .unwrap();
        assert_eq!(net.labels(), ["A", "B", "C"]);
        let edges = net.edges();
        assert_eq!(edges.len(), 2);
        assert_eq!((edges[0].u, edges[0].v), (NodeId(0), NodeId(1)));
        assert_eq!((edges[1].u, edges[1].v), (NodeId(0), NodeId(2)));
        assert_eq!(edges[1].provenance, EdgeProvenance::Both);
        assert_eq!(edges[1].existence_prob, 0.8);
        assert_eq!(net.arcs(NodeId(0)), [(NodeId(1), 0), (NodeId(2), 2)]);
        assert_eq!(net.arcs(NodeId(2)), [(NodeId(0), 3)]);
    }

    #[test]
    fn certain_edges_always_sampled() {
        let net = build_network(["A", "B", "C"], [e("A", "B", 1.0), e("B", "C", 1.0)], 0.5).unwrap();
        for seed in 0..50 {
            assert_eq!(sample_network(&net, seed).edge_indices().collect::<Vec<_>>(), [0, 1]);
        }
    }

    #[test]
    fn near_zero_edges_stay_a_subset() {
        let net = build_network(["A", "B", "C"], [e("A", "B", 1e-9), e("B", "C", 1e-9), e("A", "C", 1e-9)], 0.5)
            .unwrap();
        let s = sample_network(&net, 12345);
        assert!(s.edge_indices().all(|i| i < 3));
    }

    #[test]
    fn single_edge_inclusion_frequency() {
        let net = build_network(["A", "B"], [e("A", "B", 0.5)], 0.5).unwrap();
        let hits = (0..10_000u64).filter(|&s| sample_network(&net, s).contains_edge(0)).count();
        let freq = hits as f64 / 10_000.0;
        assert!((freq - 0.5).abs() <= 0.02, "frequency {freq}");
    }

    #[test]
    fn ensemble_seeds_and_errors() {
        let net = build_network(["A", "B"], [e("A", "B", 0.5)], 0.5).unwrap();
        assert_eq!(sample_ensemble(&net, 0, 1), Err(GraphError::EmptyEnsemble));
        let one = sample_ensemble(&net, 1, 42).unwrap();
        assert_eq!(one, vec![sample_network(&net, 42)]);
        let many = sample_ensemble(&net, 1000, 7).unwrap();
        assert_eq!(many.len(), 1000);
        assert_eq!(many, sample_ensemble(&net, 1000, 7).unwrap());
        assert_eq!(many[10].sample_seed(), 17);
    }

    #[test]
    fn different_master_seeds_differ() {
        // 5 nodes, 4 edges at p = 0.5: two 1000-sample ensembles agree
        // everywhere with probability (2^-4)^1000, far below 1e-9.
        let net = build_network(
            ["A", "B", "C", "D", "E"],
            [e("A", "B", 0.5), e("B", "C", 0.5), e("C", "D", 0.5), e("D", "E", 0.5)],
            0.5,
        )
        .unwrap();
        let a = sample_ensemble(&net, 1000, 1).unwrap();
        let b = sample_ensemble(&net, 1000, 1_000_000).unwrap();
        assert!(a.iter().zip(&b).any(|(x, y)| x.present != y.present));
    }

    fn arb_network() -> impl Strategy<Value = (Vec<String>, Vec<EdgeSpec>)> {
        (2usize..9).prop_flat_map(|n| {
            let labels: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
            let edge = (0..n, 0..n, 0.01f64..=1.0, 0usize..3).prop_filter("no loops", |(a, b, _, _)| a != b);
            (Just(labels), proptest::collection::vec(edge, 0..16))
        })
        .prop_map(|(labels, raw)| {
            let provs = [EdgeProvenance::Platform, EdgeProvenance::Field, EdgeProvenance::Both];
            let edges = raw
                .into_iter()
                .map(|(a, b, p, k)| EdgeSpec::new(labels[a].clone(), labels[b].clone(), p, provs[k]))
                .collect();
            (labels, edges)
        })
    }

    proptest! {
        #[test]
        fn canonicalization_is_idempotent((labels, edges) in arb_network()) {
            let net = build_network(labels, edges, 0.5).unwrap();
            let (l, e, p) = net.parts();
            prop_assert_eq!(build_network(l, e, p).unwrap(), net);
        }

        #[test]
        fn samples_are_subsets_and_repeatable((labels, edges) in arb_network(), seed in any::<u64>()) {
            let net = build_network(labels, edges, 0.5).unwrap();
            let s = sample_network(&net, seed);
            prop_assert!(s.edge_indices().all(|i| i < net.edge_count()));
            for v in net.nodes() {
                for &(w, arc) in s.arcs(v) {
                    let edge = net.edges()[(arc / 2) as usize];
                    prop_assert!((edge.u == v && edge.v == w) || (edge.v == v && edge.u == w));
                }
            }
            prop_assert_eq!(s, sample_network(&net, seed));
        }
    }
}
