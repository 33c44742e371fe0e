use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{finish, read_text, split_fields, IngestError, IssueKind, LineIssue};
use crate::graph::valid_label;

pub const SURVEY_HEADER: &str = "participant,wave,hiv_test_6mo,unprotected_sex,spoke_to_pca";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Wave {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "1mo")]
    OneMonth,
    #[serde(rename = "3mo")]
    ThreeMonth,
}

impl Wave {
    pub const ALL: [Wave; 3] = [Wave::Baseline, Wave::OneMonth, Wave::ThreeMonth];

    pub fn as_str(self) -> &'static str {
        match self {
            Wave::Baseline => "baseline",
            Wave::OneMonth => "1mo",
            Wave::ThreeMonth => "3mo",
        }
    }
}

impl fmt::Display for Wave {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Wave {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Wave::Baseline),
            "1mo" => Ok(Wave::OneMonth),
            "3mo" => Ok(Wave::ThreeMonth),
            other => Err(format!("unknown wave `{other}` (expected baseline, 1mo or 3mo)")),
        }
    }
}

/// One participant's answers at one assessment wave. `None` is a missing
/// response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyRecord {
    pub participant: String,
    pub wave: Wave,
    pub hiv_test_6mo: Option<bool>,
    pub unprotected_sex: Option<bool>,
    pub spoke_to_pca: Option<bool>,
}

fn flag(cell: &str, column: &str) -> Result<Option<bool>, IssueKind> {
    match cell {
        "" => Ok(None),
        "0" => Ok(Some(false)),
        "1" => Ok(Some(true)),
        other => Err(IssueKind::Malformed(format!("{column} must be 0, 1 or empty, got `{other}`"))),
    }
}

fn parse_row(fields: &[&str]) -> Result<SurveyRecord, IssueKind> {
    let participant = fields[0];
    if !valid_label(participant) {
        return Err(IssueKind::Malformed(format!("bad participant label `{participant}`")));
    }
    let wave = fields[1].parse::<Wave>().map_err(IssueKind::Malformed)?;
    let record = SurveyRecord {
        participant: participant.to_string(),
        wave,
        hiv_test_6mo: flag(fields[2], "hiv_test_6mo")?,
        unprotected_sex: flag(fields[3], "unprotected_sex")?,
        spoke_to_pca: flag(fields[4], "spoke_to_pca")?,
    };
    if wave == Wave::Baseline && record.spoke_to_pca.is_some() {
        return Err(IssueKind::SpokeToPcaAtBaseline(record.participant));
    }
    Ok(record)
}

/// CSV with the [`SURVEY_HEADER`] header line; one row per participant and
/// wave. Participants may skip waves.
pub fn parse_survey(text: &str) -> Result<Vec<SurveyRecord>, IngestError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let header = lines.by_ref().find(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match header {
        Some((_, h)) if h == SURVEY_HEADER => {}
        Some((line, h)) => {
            return Err(IngestError::Invalid(vec![LineIssue {
                line,
                kind: IssueKind::Malformed(format!("expected header `{SURVEY_HEADER}`, found `{h}`")),
            }]))
        }
        None => {
            return Err(IngestError::Invalid(vec![LineIssue {
                line: 1,
                kind: IssueKind::Malformed(format!("missing header `{SURVEY_HEADER}`")),
            }]))
        }
    }
    let mut records = Vec::new();
    let mut issues = Vec::new();
    let mut seen = HashSet::new();
    for (line, content) in lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('#')) {
        let row = split_fields(content, 5).and_then(|f| parse_row(&f));
        match row {
            Err(kind) => issues.push(LineIssue { line, kind }),
            Ok(r) => {
                if seen.insert((r.participant.clone(), r.wave)) {
                    records.push(r);
                } else {
                    issues.push(LineIssue {
                        line,
                        kind: IssueKind::DuplicateSurveyRow { participant: r.participant, wave: r.wave },
                    });
                }
            }
        }
    }
    finish(records, issues)
}

pub fn read_survey(path: &Path) -> Result<Vec<SurveyRecord>, IngestError> {
    parse_survey(&read_text(path)?)
}
