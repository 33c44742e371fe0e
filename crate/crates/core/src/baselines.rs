//! Centrality heuristics for comparison against greedy selection.
//!
//! These are diagnostics for the report, not selection modes: neither one
//! looks at the belief state or carries any approximation guarantee.

use std::collections::VecDeque;

use serde::Serialize;

use crate::cascade::SeedSet;
use crate::graph::{NodeId, UncertainNetwork};
use crate::selector::{coverage_of_sets, greedy_select, BeliefState, SelectError, SelectionParams};

/// Sum of existence probabilities of incident edges.
pub fn expected_degree(net: &UncertainNetwork) -> Vec<f64> {
    let mut deg = vec![0.0; net.node_count()];
    for e in net.edges() {
        deg[e.u.index()] += e.existence_prob;
        deg[e.v.index()] += e.existence_prob;
    }
    deg
}

/// Brandes betweenness on the graph of all reported edges, unweighted and
/// undirected (each pair counted once).
pub fn betweenness(net: &UncertainNetwork) -> Vec<f64> {
    let n = net.node_count();
    let mut cb = vec![0.0; n];
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        stack.clear();
        preds.iter_mut().for_each(Vec::clear);
        sigma.fill(0.0);
        dist.fill(-1);
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &(w, _) in net.arcs(NodeId(v as u32)) {
                let w = w.index();
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        delta.fill(0.0);
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    cb.iter_mut().for_each(|c| *c /= 2.0);
    cb
}

/// Top `k` non-excluded nodes by score, ties to the smaller id.
pub fn top_k(scores: &[f64], k: usize, exclusions: &[NodeId]) -> Vec<NodeId> {
    let mut order: Vec<NodeId> =
        (0..scores.len() as u32).map(NodeId).filter(|v| !exclusions.contains(v)).collect();
    order.sort_by(|a, b| scores[b.index()].total_cmp(&scores[a.index()]).then(a.cmp(b)));
    order.truncate(k);
    order
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineRow {
    pub method: &'static str,
    pub nodes: Vec<String>,
    /// Coverage objective of the set under the same oracle as greedy.
    pub coverage: f64,
}

/// Greedy, expected-degree and betweenness picks of size `k`, each scored
/// with one shared oracle.
pub fn compare_baselines(
    net: &UncertainNetwork,
    k: usize,
    belief: &BeliefState,
    exclusions: &[NodeId],
    params: &SelectionParams,
) -> Result<Vec<BaselineRow>, SelectError> {
    let greedy = greedy_select(net, k, belief, exclusions, params)?.nodes();
    let picks = [
        ("greedy", greedy),
        ("degree", top_k(&expected_degree(net), k, exclusions)),
        ("betweenness", top_k(&betweenness(net), k, exclusions)),
    ];
    let sets = picks
        .iter()
        .map(|(_, nodes)| SeedSet::new(net.node_count(), nodes.iter().copied()))
        .collect::<Result<Vec<_>, _>>()?;
    let values = coverage_of_sets(net, &sets, belief, params)?;
    Ok(picks
        .into_iter()
        .zip(values)
        .map(|((method, nodes), coverage)| BaselineRow {
            method,
            nodes: nodes.iter().map(|&v| net.label(v).to_string()).collect(),
            coverage,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_network, EdgeProvenance, EdgeSpec};

    fn net(edges: &[(&str, &str)]) -> UncertainNetwork {
        let mut nodes: Vec<&str> = edges.iter().flat_map(|e| [e.0, e.1]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        build_network(
            nodes,
            edges.iter().map(|&(u, v)| EdgeSpec::new(u, v, 0.5, EdgeProvenance::Platform)),
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn path_betweenness() {
        // a-b-c-d: b and c each sit on two shortest paths
        let g = net(&[("a", "b"), ("b", "c"), ("c", "d")]);
        assert_eq!(betweenness(&g), [0.0, 2.0, 2.0, 0.0]);
    }

    #[test]
    fn star_and_cycle() {
        let g = net(&[("h", "a"), ("h", "b"), ("h", "c"), ("h", "d")]);
        let b = betweenness(&g);
        assert_eq!(b[g.node("h").unwrap().index()], 6.0);
        // 4-cycle: each node is midpoint of one pair with two geodesics
        let c = net(&[("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")]);
        assert_eq!(betweenness(&c), [0.5; 4]);
    }

    #[test]
    fn degree_ranking() {
        let g = net(&[("h", "a"), ("h", "b"), ("a", "b"), ("c", "d")]);
        let deg = expected_degree(&g);
        assert_eq!(deg[g.node("h").unwrap().index()], 1.0);
        let top = top_k(&deg, 2, &[g.node("a").unwrap()]);
        assert_eq!(top, [g.node("b").unwrap(), g.node("h").unwrap()]);
    }

    #[test]
    fn greedy_is_never_worse_on_exact_oracle() {
        let g = net(&[("h", "a"), ("h", "b"), ("h", "c"), ("c", "d"), ("d", "e"), ("e", "f")]);
        let rows =
            compare_baselines(&g, 2, &BeliefState::zero(g.node_count()), &[], &SelectionParams::exact()).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[1..].iter().all(|r| rows[0].coverage >= r.coverage * (1.0 - 1.0 / std::f64::consts::E)));
    }
}
