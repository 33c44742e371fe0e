use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{content_lines, finish, read_text, split_fields, IngestError, IssueKind, LineIssue, Roster};
use crate::graph::{build_network, check_prob, EdgeProvenance, EdgeSpec, GraphError, UncertainNetwork};

/// Friendship reported by the platform app between two participants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlatformEdgeRecord {
    pub u_label: String,
    pub v_label: String,
}

/// Interaction observed by staff on a given day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldObservationRecord {
    pub u_label: String,
    pub v_label: String,
    pub date: NaiveDate,
}

/// Inclusive date range in which field observations may be recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecruitmentWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl RecruitmentWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Option<Self> {
        (start <= end).then_some(RecruitmentWindow { start, end })
    }

    /// Both dates as `YYYY-MM-DD`, start not after end.
    pub fn parse(start: &str, end: &str) -> Result<Self, IngestError> {
        let date = |s: &str| match NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            Ok(d) if s.len() == 10 => Ok(d),
            _ => Err(IssueKind::BadDate(s.to_string())),
        };
        let bad = |kind| IngestError::Invalid(vec![LineIssue { line: 0, kind }]);
        let (s, e) = (date(start).map_err(bad)?, date(end).map_err(bad)?);
        RecruitmentWindow::new(s, e)
            .ok_or_else(|| bad(IssueKind::Malformed(format!("window end {e} is before window start {s}"))))
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

/// Existence probability assigned to an edge by which sources reported it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProvenancePriors {
    pub p_platform: f64,
    pub p_field: f64,
    pub p_both: f64,
}

impl Default for ProvenancePriors {
    fn default() -> Self {
        ProvenancePriors { p_platform: 0.6, p_field: 0.8, p_both: 0.95 }
    }
}

impl ProvenancePriors {
    /// Each prior must lie in `(0, 1]` and `p_both` must be at least the
    /// larger single-source prior.
    pub fn new(p_platform: f64, p_field: f64, p_both: f64) -> Result<Self, GraphError> {
        check_prob("p_platform", p_platform)?;
        check_prob("p_field", p_field)?;
        check_prob("p_both", p_both)?;
        if p_both < p_platform.max(p_field) {
            return Err(GraphError::ProbabilityOutOfRange { what: "p_both (must be >= p_platform and p_field)", value: p_both });
        }
        Ok(ProvenancePriors { p_platform, p_field, p_both })
    }

    pub fn for_provenance(&self, provenance: EdgeProvenance) -> f64 {
        match provenance {
            EdgeProvenance::Platform => self.p_platform,
            EdgeProvenance::Field => self.p_field,
            EdgeProvenance::Both => self.p_both,
        }
    }
}

fn check_pair(roster: &Roster, line: usize, u: &str, v: &str, issues: &mut Vec<LineIssue>) -> bool {
    let before = issues.len();
    for label in [u, v] {
        if label.is_empty() {
            issues.push(LineIssue { line, kind: IssueKind::Malformed("empty participant label".into()) });
        } else if !roster.contains(label) {
            issues.push(LineIssue { line, kind: IssueKind::UnknownParticipant(label.to_string()) });
        }
    }
    if issues.len() == before && u == v {
        issues.push(LineIssue { line, kind: IssueKind::SelfLoop(u.to_string()) });
    }
    issues.len() == before
}

/// `u_label,v_label` lines.
pub fn parse_platform_edges(text: &str, roster: &Roster) -> Result<Vec<PlatformEdgeRecord>, IngestError> {
    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (line, content) in content_lines(text) {
        match split_fields(content, 2) {
            Err(kind) => issues.push(LineIssue { line, kind }),
            Ok(f) => {
                if check_pair(roster, line, f[0], f[1], &mut issues) {
                    records.push(PlatformEdgeRecord { u_label: f[0].to_string(), v_label: f[1].to_string() });
                }
            }
        }
    }
    finish(records, issues)
}

pub fn read_platform_edges(path: &Path, roster: &Roster) -> Result<Vec<PlatformEdgeRecord>, IngestError> {
    parse_platform_edges(&read_text(path)?, roster)
}

/// `u_label,v_label,YYYY-MM-DD` lines; dates must fall inside `window`.
pub fn parse_field_log(
    text: &str,
    roster: &Roster,
    window: RecruitmentWindow,
) -> Result<Vec<FieldObservationRecord>, IngestError> {
    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (line, content) in content_lines(text) {
        let f = match split_fields(content, 3) {
            Ok(f) => f,
            Err(kind) => {
                issues.push(LineIssue { line, kind });
                continue;
            }
        };
        let pair_ok = check_pair(roster, line, f[0], f[1], &mut issues);
        let date = match NaiveDate::parse_from_str(f[2], "%Y-%m-%d") {
            Ok(d) if f[2].len() == 10 => d,
            _ => {
                issues.push(LineIssue { line, kind: IssueKind::BadDate(f[2].to_string()) });
                continue;
            }
        };
        if !window.contains(date) {
            issues.push(LineIssue {
                line,
                kind: IssueKind::OutOfWindow {
                    date: date.to_string(),
                    start: window.start.to_string(),
                    end: window.end.to_string(),
                },
            });
            continue;
        }
        if pair_ok {
            records.push(FieldObservationRecord { u_label: f[0].to_string(), v_label: f[1].to_string(), date });
        }
    }
    finish(records, issues)
}

pub fn read_field_log(
    path: &Path,
    roster: &Roster,
    window: RecruitmentWindow,
) -> Result<Vec<FieldObservationRecord>, IngestError> {
    parse_field_log(&read_text(path)?, roster, window)
}

fn unordered(u: &str, v: &str) -> (String, String) {
    if u <= v {
        (u.to_string(), v.to_string())
    } else {
        (v.to_string(), u.to_string())
    }
}

/// One edge per unordered pair; the prior of the sources that reported it
/// becomes its existence probability. Every roster member becomes a node.
pub fn merge_sources(
    platform: &[PlatformEdgeRecord],
    field: &[FieldObservationRecord],
    priors: &ProvenancePriors,
    roster: &Roster,
    propagation_prob: f64,
) -> Result<UncertainNetwork, IngestError> {
    let mut seen: BTreeMap<(String, String), EdgeProvenance> = BTreeMap::new();
    let reports = platform
        .iter()
        .map(|r| (&r.u_label, &r.v_label, EdgeProvenance::Platform))
        .chain(field.iter().map(|r| (&r.u_label, &r.v_label, EdgeProvenance::Field)));
    for (u, v, source) in reports {
        for label in [u, v] {
            if !roster.contains(label) {
                return Err(IngestError::Invalid(vec![LineIssue {
                    line: 0,
                    kind: IssueKind::UnknownParticipant(label.clone()),
                }]));
            }
        }
        seen.entry(unordered(u, v)).and_modify(|p| *p = p.merge(source)).or_insert(source);
    }
    let edges = seen
        .into_iter()
        .map(|((u, v), prov)| EdgeSpec::new(u, v, priors.for_provenance(prov), prov));
    Ok(build_network(roster.labels().iter().cloned(), edges, propagation_prob)?)
}
