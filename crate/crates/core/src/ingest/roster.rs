use std::collections::HashSet;
use std::path::Path;

use super::{content_lines, finish, read_text, IngestError, IssueKind, LineIssue};
use crate::graph::valid_label;

/// Enrolled participants. Anything not listed here is rejected by every
/// other parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    labels: Vec<String>,
    members: HashSet<String>,
}

impl Roster {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(labels: I) -> Result<Self, IngestError> {
        let text: Vec<String> = labels.into_iter().map(Into::into).collect();
        parse_roster(&text.join("\n"))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.members.contains(label)
    }

    /// Labels in file order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// One participant label per line.
pub fn parse_roster(text: &str) -> Result<Roster, IngestError> {
    let mut labels = Vec::new();
    let mut members = HashSet::new();
    let mut issues = Vec::new();
    for (line, label) in content_lines(text) {
        if !valid_label(label) {
            issues.push(LineIssue {
                line,
                kind: IssueKind::Malformed(format!("label `{label}` contains a comma, whitespace or control character")),
            });
        } else if !members.insert(label.to_string()) {
            issues.push(LineIssue { line, kind: IssueKind::DuplicateParticipant(label.to_string()) });
        } else {
            labels.push(label.to_string());
        }
    }
    if labels.is_empty() && issues.is_empty() {
        issues.push(LineIssue { line: 1, kind: IssueKind::Malformed("roster lists no participants".into()) });
    }
    finish(Vec::<()>::new(), issues)?;
    Ok(Roster { labels, members })
}

pub fn read_roster(path: &Path) -> Result<Roster, IngestError> {
    parse_roster(&read_text(path)?)
}
