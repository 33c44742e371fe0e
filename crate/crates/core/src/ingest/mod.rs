//! Input parsing and source merging.
//!
//! All formats are line-oriented UTF-8 text. Blank lines and lines starting
//! with `#` are skipped everywhere except inside the survey header. Parsers
//! work on in-memory text; the `read_*` wrappers add file access. Problems are
//! collected per line rather than stopping at the first one, so a field
//! worker can fix a whole file in one pass.

mod network_file;
mod records;
mod roster;
mod survey;

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::graph::GraphError;

pub use network_file::{parse_network_file, read_network_file, write_network_file};
pub use records::{
    merge_sources, parse_field_log, parse_platform_edges, read_field_log, read_platform_edges,
    FieldObservationRecord, PlatformEdgeRecord, ProvenancePriors, RecruitmentWindow,
};
pub use roster::{parse_roster, read_roster, Roster};
pub use survey::{parse_survey, read_survey, SurveyRecord, Wave, SURVEY_HEADER};

#[derive(Debug, Clone, PartialEq)]
pub enum IssueKind {
    Malformed(String),
    UnknownParticipant(String),
    DuplicateParticipant(String),
    SelfLoop(String),
    BadDate(String),
    OutOfWindow { date: String, start: String, end: String },
    DuplicateSurveyRow { participant: String, wave: Wave },
    SpokeToPcaAtBaseline(String),
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IssueKind::Malformed(why) => write!(f, "malformed line: {why}"),
            IssueKind::UnknownParticipant(l) => write!(f, "unknown participant `{l}`"),
            IssueKind::DuplicateParticipant(l) => write!(f, "duplicate participant `{l}`"),
            IssueKind::SelfLoop(l) => write!(f, "self-loop on `{l}`"),
            IssueKind::BadDate(d) => write!(f, "malformed date `{d}` (expected YYYY-MM-DD)"),
            IssueKind::OutOfWindow { date, start, end } => {
                write!(f, "date {date} outside recruitment window {start}..{end}")
            }
            IssueKind::DuplicateSurveyRow { participant, wave } => {
                write!(f, "second {wave} record for `{participant}`")
            }
            IssueKind::SpokeToPcaAtBaseline(l) => write!(f, "spoke_to_pca given at baseline for `{l}`"),
        }
    }
}

/// One problem found on one input line (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct LineIssue {
    pub line: usize,
    pub kind: IssueKind,
}

impl fmt::Display for LineIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.kind)
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}", join_issues(.0))]
    Invalid(Vec<LineIssue>),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl IngestError {
    pub fn issues(&self) -> &[LineIssue] {
        match self {
            IngestError::Invalid(issues) => issues,
            _ => &[],
        }
    }
}

fn join_issues(issues: &[LineIssue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub(crate) fn read_text(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}

/// Content lines with 1-based numbers: trimmed, comments and blanks dropped.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn split_fields(line: &str, expected: usize) -> Result<Vec<&str>, IssueKind> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != expected {
        return Err(IssueKind::Malformed(format!("expected {expected} comma-separated fields, found {}", fields.len())));
    }
    Ok(fields)
}

pub(crate) fn finish<T>(items: Vec<T>, issues: Vec<LineIssue>) -> Result<Vec<T>, IngestError> {
    if issues.is_empty() {
        Ok(items)
    } else {
        Err(IngestError::Invalid(issues))
    }
}
