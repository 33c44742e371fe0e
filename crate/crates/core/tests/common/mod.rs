#![allow(dead_code)]

use std::path::PathBuf;

use pcaselect::graph::{build_network, EdgeProvenance, EdgeSpec, UncertainNetwork};
use pcaselect::ingest::{
    merge_sources, read_field_log, read_platform_edges, read_roster, read_survey, ProvenancePriors, RecruitmentWindow,
    SurveyRecord,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn window() -> RecruitmentWindow {
    RecruitmentWindow::new(
        chrono::NaiveDate::from_ymd_opt(2016, 5, 1).unwrap(),
        chrono::NaiveDate::from_ymd_opt(2016, 5, 14).unwrap(),
    )
    .unwrap()
}

/// The 62-participant synthetic network at the default priors.
pub fn fixture_network() -> UncertainNetwork {
    let roster = read_roster(&fixture("roster.txt")).unwrap();
    let platform = read_platform_edges(&fixture("platform_edges.csv"), &roster).unwrap();
    let field = read_field_log(&fixture("field_log.csv"), &roster, window()).unwrap();
    merge_sources(&platform, &field, &ProvenancePriors::default(), &roster, 0.5).unwrap()
}

pub fn fixture_survey() -> Vec<SurveyRecord> {
    read_survey(&fixture("survey.csv")).unwrap()
}

/// Random simple graph on `n` nodes with `m` distinct edges (capped at the
/// complete graph), existence in `[0.2, 1]`, propagation in `[0.2, 0.9]`.
pub fn random_network(rng: &mut ChaCha8Rng, n: usize, m: usize) -> UncertainNetwork {
    let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    pairs.shuffle(rng);
    pairs.truncate(m);
    let edges: Vec<EdgeSpec> = pairs
        .iter()
        .map(|&(a, b)| {
            let p = (rng.random_range(20..=100) as f64) / 100.0;
            EdgeSpec::new(labels[a].clone(), labels[b].clone(), p, EdgeProvenance::Platform)
        })
        .collect();
    let prop = rng.random_range(20..=90) as f64 / 100.0;
    build_network(labels, edges, prop).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, PartialEq)]
enum Existence {
    Unknown,
    Present,
    Absent,
}

/// Per-node influence probability by exhaustive branching over the cascade
/// itself: whenever an active node tries an untested arc, branch on the
/// edge's existence (revealed once, shared by both directions) and on the
/// arc's own propagation coin. Independent of any live-edge argument.
pub fn branching_oracle(net: &UncertainNetwork, seeds: &[usize]) -> Vec<f64> {
    let n = net.node_count();
    let edges: Vec<(usize, usize, f64)> =
        net.edges().iter().map(|e| (e.u.index(), e.v.index(), e.existence_prob)).collect();
    let mut active = vec![false; n];
    for &s in seeds {
        active[s] = true;
    }
    let mut out = vec![0.0; n];
    let mut exist = vec![Existence::Unknown; edges.len()];
    let mut tested = vec![[false; 2]; edges.len()];
    branch(&edges, net.propagation_prob(), &mut active, &mut exist, &mut tested, 1.0, &mut out);
    out
}

fn branch(
    edges: &[(usize, usize, f64)],
    prop: f64,
    active: &mut Vec<bool>,
    exist: &mut Vec<Existence>,
    tested: &mut Vec<[bool; 2]>,
    weight: f64,
    out: &mut [f64],
) {
    // next arc from an active node to an inactive one that has not been tried
    let next = edges.iter().enumerate().find_map(|(i, &(u, v, _))| {
        if active[u] && !active[v] && !tested[i][0] {
            Some((i, 0, v))
        } else if active[v] && !active[u] && !tested[i][1] {
            Some((i, 1, u))
        } else {
            None
        }
    });
    let Some((i, dir, target)) = next else {
        for (o, &a) in out.iter_mut().zip(active.iter()) {
            if a {
                *o += weight;
            }
        }
        return;
    };
    tested[i][dir] = true;
    let outcomes: Vec<(Existence, f64)> = match exist[i] {
        Existence::Unknown => vec![(Existence::Present, edges[i].2), (Existence::Absent, 1.0 - edges[i].2)],
        known => vec![(known, 1.0)],
    };
    let before = exist[i];
    for (state, p) in outcomes {
        if p == 0.0 {
            continue;
        }
        exist[i] = state;
        if state == Existence::Present {
            active[target] = true;
            branch(edges, prop, active, exist, tested, weight * p * prop, out);
            active[target] = false;
            branch(edges, prop, active, exist, tested, weight * p * (1.0 - prop), out);
        } else {
            branch(edges, prop, active, exist, tested, weight * p, out);
        }
    }
    exist[i] = before;
    tested[i][dir] = false;
}
