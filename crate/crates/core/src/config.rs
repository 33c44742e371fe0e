//! `key=value` run configuration.
//!
//! ```text
//! # priors for edge existence
//! p_platform=0.6
//! p_field=0.8
//! p_both=0.95
//! propagation_prob=0.5
//! num_samples=1000
//! runs_per_sample=20
//! k_select=8
//! k_train=4
//! num_rounds=3
//! master_seed=2016
//! oracle=auto
//! window_start=2016-05-01
//! window_end=2016-05-14
//! ```
//!
//! Every key is optional; unknown or repeated keys are errors.

use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::campaign::CampaignConfig;
use crate::ingest::{IngestError, IssueKind, LineIssue, ProvenancePriors, RecruitmentWindow};
use crate::selector::OracleKind;

pub const KEYS: [&str; 13] = [
    "p_platform",
    "p_field",
    "p_both",
    "propagation_prob",
    "num_samples",
    "runs_per_sample",
    "k_select",
    "k_train",
    "num_rounds",
    "master_seed",
    "oracle",
    "window_start",
    "window_end",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub priors: ProvenancePriors,
    pub propagation_prob: f64,
    pub num_samples: usize,
    pub runs_per_sample: usize,
    pub k_select: usize,
    pub k_train: usize,
    pub num_rounds: usize,
    /// No default: a run must name its seed.
    pub master_seed: Option<u64>,
    pub oracle: OracleKind,
    pub window: Option<RecruitmentWindow>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let c = CampaignConfig::default();
        RunConfig {
            priors: ProvenancePriors::default(),
            propagation_prob: c.propagation_prob,
            num_samples: c.num_samples,
            runs_per_sample: c.runs_per_sample,
            k_select: c.k_select,
            k_train: c.k_train,
            num_rounds: c.num_rounds,
            master_seed: None,
            oracle: c.oracle,
            window: None,
        }
    }
}

impl RunConfig {
    pub fn campaign(&self, master_seed: u64) -> CampaignConfig {
        CampaignConfig {
            k_select: self.k_select,
            k_train: self.k_train,
            num_rounds: self.num_rounds,
            num_samples: self.num_samples,
            runs_per_sample: self.runs_per_sample,
            propagation_prob: self.propagation_prob,
            master_seed,
            oracle: self.oracle,
        }
    }
}

fn parse_value<T: FromStr>(value: &str, what: &str) -> Result<T, IssueKind> {
    value.parse().map_err(|_| IssueKind::Malformed(format!("bad {what} value `{value}`")))
}

fn parse_date(value: &str) -> Result<NaiveDate, IssueKind> {
    match NaiveDate::parse_from_str(value, "%Y-%m-%d") {
        Ok(d) if value.len() == 10 => Ok(d),
        _ => Err(IssueKind::BadDate(value.to_string())),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, IngestError> {
    let mut cfg = RunConfig::default();
    let (mut p_platform, mut p_field, mut p_both) = (cfg.priors.p_platform, cfg.priors.p_field, cfg.priors.p_both);
    let (mut start, mut end) = (None, None);
    let mut seen = HashSet::new();
    let mut issues = Vec::new();
    for (line, content) in crate::ingest::content_lines(text) {
        let Some((key, value)) = content.split_once('=') else {
            issues.push(LineIssue { line, kind: IssueKind::Malformed("expected key=value".into()) });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            issues.push(LineIssue { line, kind: IssueKind::Malformed(format!("unknown key `{key}`")) });
            continue;
        }
        if !seen.insert(key.to_string()) {
            issues.push(LineIssue { line, kind: IssueKind::Malformed(format!("key `{key}` given twice")) });
            continue;
        }
        let applied = match key {
            "p_platform" => parse_value(value, key).map(|v| p_platform = v),
            "p_field" => parse_value(value, key).map(|v| p_field = v),
            "p_both" => parse_value(value, key).map(|v| p_both = v),
            "propagation_prob" => parse_value(value, key).map(|v| cfg.propagation_prob = v),
            "num_samples" => parse_value(value, key).map(|v| cfg.num_samples = v),
            "runs_per_sample" => parse_value(value, key).map(|v| cfg.runs_per_sample = v),
            "k_select" => parse_value(value, key).map(|v| cfg.k_select = v),
            "k_train" => parse_value(value, key).map(|v| cfg.k_train = v),
            "num_rounds" => parse_value(value, key).map(|v| cfg.num_rounds = v),
            "master_seed" => parse_value(value, key).map(|v| cfg.master_seed = Some(v)),
            "oracle" => value.parse().map(|v| cfg.oracle = v).map_err(IssueKind::Malformed),
            "window_start" => parse_date(value).map(|d| start = Some((line, d))),
            "window_end" => parse_date(value).map(|d| end = Some((line, d))),
            _ => unreachable!("checked against KEYS"),
        };
        if let Err(kind) = applied {
            issues.push(LineIssue { line, kind });
        }
    }
    match (start, end) {
        (Some((_, s)), Some((line, e))) => match RecruitmentWindow::new(s, e) {
            Some(w) => cfg.window = Some(w),
            None => issues.push(LineIssue {
                line,
                kind: IssueKind::Malformed(format!("window_end {e} is before window_start {s}")),
            }),
        },
        (None, None) => {}
        (Some((line, _)), None) | (None, Some((line, _))) => issues.push(LineIssue {
            line,
            kind: IssueKind::Malformed("window_start and window_end must be given together".into()),
        }),
    }
    if !issues.is_empty() {
        return Err(IngestError::Invalid(issues));
    }
    cfg.priors = ProvenancePriors::new(p_platform, p_field, p_both)?;
    crate::graph::check_prob("propagation_prob", cfg.propagation_prob)?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<RunConfig, IngestError> {
    parse_config(&crate::ingest::read_text(path)?)
}
