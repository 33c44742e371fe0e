//! Canonical network file: a `nodes=<n> prop=<p>` header, then one
//! `u,v,prob,provenance` line per edge in canonical edge order. Floats use
//! the shortest representation that round-trips, so writing is bit-exact.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use super::{content_lines, read_text, split_fields, IngestError, IssueKind, LineIssue, Roster};
use crate::graph::{build_network, EdgeProvenance, EdgeSpec, UncertainNetwork};

pub fn write_network_file(net: &UncertainNetwork) -> String {
    let mut out = format!("nodes={} prop={}\n", net.node_count(), net.propagation_prob());
    for e in net.edges() {
        writeln!(out, "{},{},{},{}", net.label(e.u), net.label(e.v), e.existence_prob, e.provenance)
            .expect("writing to a String");
    }
    out
}

fn issue(line: usize, why: impl Into<String>) -> IngestError {
    IngestError::Invalid(vec![LineIssue { line, kind: IssueKind::Malformed(why.into()) }])
}

fn parse_header(line: usize, text: &str) -> Result<(usize, f64), IngestError> {
    let (nodes, prop) = text
        .split_once(' ')
        .ok_or_else(|| issue(line, "expected header `nodes=<n> prop=<p>`"))?;
    let n = nodes
        .strip_prefix("nodes=")
        .and_then(|n| n.parse::<usize>().ok())
        .ok_or_else(|| issue(line, format!("bad node count `{nodes}`")))?;
    let p = prop
        .strip_prefix("prop=")
        .and_then(|p| p.parse::<f64>().ok())
        .ok_or_else(|| issue(line, format!("bad propagation probability `{prop}`")))?;
    Ok((n, p))
}

/// Parses a network file. The file only names nodes that have edges; pass
/// the roster to restore isolated participants. Without a roster, the node
/// count in the header must equal the number of distinct endpoints.
pub fn parse_network_file(text: &str, roster: Option<&Roster>) -> Result<UncertainNetwork, IngestError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| issue(1, "empty network file"))?;
    let (node_count, prop) = parse_header(hline, header)?;

    let mut edges = Vec::new();
    let mut issues = Vec::new();
    for (line, content) in lines {
        let parsed = split_fields(content, 4).and_then(|f| {
            let p = f[2]
                .parse::<f64>()
                .map_err(|_| IssueKind::Malformed(format!("bad probability `{}`", f[2])))?;
            let prov = f[3].parse::<EdgeProvenance>().map_err(IssueKind::Malformed)?;
            if roster.is_some_and(|r| !r.contains(f[0])) {
                return Err(IssueKind::UnknownParticipant(f[0].to_string()));
            }
            if roster.is_some_and(|r| !r.contains(f[1])) {
                return Err(IssueKind::UnknownParticipant(f[1].to_string()));
            }
            Ok(EdgeSpec::new(f[0], f[1], p, prov))
        });
        match parsed {
            Ok(e) => edges.push(e),
            Err(kind) => issues.push(LineIssue { line, kind }),
        }
    }
    if !issues.is_empty() {
        return Err(IngestError::Invalid(issues));
    }

    let labels: Vec<String> = match roster {
        Some(r) => r.labels().to_vec(),
        None => {
            let ends: BTreeSet<&str> = edges.iter().flat_map(|e| [e.u.as_str(), e.v.as_str()]).collect();
            ends.into_iter().map(str::to_string).collect()
        }
    };
    if labels.len() != node_count {
        let why = match roster {
            Some(_) => format!("header declares {node_count} nodes, roster has {}", labels.len()),
            None => format!(
                "header declares {node_count} nodes but edges name {}; supply the roster to restore isolated nodes",
                labels.len()
            ),
        };
        return Err(issue(hline, why));
    }
    Ok(build_network(labels, edges, prop)?)
}

pub fn read_network_file(path: &Path, roster: Option<&Roster>) -> Result<UncertainNetwork, IngestError> {
    parse_network_file(&read_text(path)?, roster)
}
