//! JSON shapes shared by `--json` output and the service.

use pcaselect::baselines::BaselineRow;
use pcaselect::campaign::{CampaignState, Round, SurveyWaveTable};
use pcaselect::graph::UncertainNetwork;
use pcaselect::selector::{BeliefState, RankedCandidates};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Serialize)]
struct NodeView<'a> {
    id: &'a str,
    index: usize,
    degree: usize,
    belief: f64,
}

#[derive(Serialize)]
struct EdgeView<'a> {
    u: &'a str,
    v: &'a str,
    existence_prob: f64,
    provenance: &'static str,
}

pub fn network(net: &UncertainNetwork, belief: &BeliefState) -> Value {
    let nodes: Vec<NodeView> = net
        .nodes()
        .map(|v| NodeView { id: net.label(v), index: v.index(), degree: net.degree(v), belief: belief.get(v) })
        .collect();
    let edges: Vec<EdgeView> = net
        .edges()
        .iter()
        .map(|e| EdgeView {
            u: net.label(e.u),
            v: net.label(e.v),
            existence_prob: e.existence_prob,
            provenance: e.provenance.as_str(),
        })
        .collect();
    json!({ "propagation_prob": net.propagation_prob(), "nodes": nodes, "edges": edges })
}

pub fn round(r: &Round) -> Value {
    json!({
        "index": r.index,
        "open": r.is_open(),
        "candidates": r.candidates.iter().map(|c| json!({
            "id": c.label,
            "marginal_gain": c.marginal_gain,
            "status": c.status,
            "next": c.status.next_options(),
        })).collect::<Vec<_>>(),
        "trained": r.trained,
        "opened_at": r.opened_at,
        "closed_at": r.closed_at,
    })
}

pub fn ranked(net: &UncertainNetwork, ranked: &RankedCandidates) -> Value {
    json!({
        "k": ranked.k,
        "candidates": ranked.entries.iter().map(|e| json!({
            "id": net.label(e.node),
            "marginal_gain": e.marginal_gain,
        })).collect::<Vec<_>>(),
        "excluded": ranked.excluded.iter().map(|&v| net.label(v)).collect::<Vec<_>>(),
        "total_gain": ranked.total_gain(),
    })
}

pub fn belief(net: &UncertainNetwork, belief: &BeliefState) -> Value {
    let per_node: serde_json::Map<String, Value> =
        net.nodes().map(|v| (net.label(v).to_string(), json!(belief.get(v)))).collect();
    json!({
        "round_index": belief.round_index(),
        "expected_influenced": belief.expected_influenced(),
        "belief": per_node,
    })
}

pub fn campaign(state: &CampaignState) -> Value {
    use pcaselect::campaign::CandidateStatus::*;
    json!({
        "config": state.config(),
        "rounds": state.rounds().iter().map(round).collect::<Vec<_>>(),
        "open_round": state.open_round_ref().map(|r| r.index),
        "closed_rounds": state.closed_rounds(),
        "complete": state.is_complete(),
        "totals": {
            "selected": state.total_selected(),
            "contacted": state.total_with_status(Contacted)
                + state.total_with_status(Declined)
                + state.total_with_status(Trained),
            "declined": state.total_with_status(Declined),
            "trained": state.total_with_status(Trained),
            "unreachable": state.total_with_status(Unreachable),
        },
        "expected_influenced": state.belief().expected_influenced(),
        "events": state.log().len(),
        "state_hash": state.state_hash(),
    })
}

pub fn report(table: &SurveyWaveTable, baselines: Option<&[BaselineRow]>) -> Value {
    let mut v = serde_json::to_value(table).expect("table serializes");
    v["descriptive_only"] = json!(true);
    if let Some(rows) = baselines {
        v["baselines"] = json!(rows);
    }
    v
}
