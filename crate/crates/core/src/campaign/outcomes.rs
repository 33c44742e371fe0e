//! Per-wave survey proportions and retention.
//!
//! Descriptive only: raw proportions over non-missing responses, no model
//! and no significance tests.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::ingest::{SurveyRecord, Wave};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OutcomeError {
    #[error("no survey records to tabulate")]
    Empty,
}

/// A percentage with one decimal, stored in tenths of a percent. `None` when
/// the denominator is zero; shown as `NA`, serialized as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Percent(Option<u32>);

impl Percent {
    /// `100 · num / den` rounded to one decimal, halves away from zero.
    /// Integer arithmetic, so `22/38` is exactly `57.9`.
    pub fn of(num: usize, den: usize) -> Percent {
        if den == 0 {
            return Percent(None);
        }
        let (num, den) = (num as u64, den as u64);
        Percent(Some(((2000 * num + den) / (2 * den)) as u32))
    }

    pub fn tenths(self) -> Option<u32> {
        self.0
    }

    pub fn value(self) -> Option<f64> {
        self.0.map(|t| f64::from(t) / 10.0)
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(t) => write!(f, "{}.{}", t / 10, t % 10),
            None => f.write_str("NA"),
        }
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.value().serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Proportion {
    pub yes: usize,
    /// Non-missing responses.
    pub n: usize,
    pub percent: Percent,
}

impl Proportion {
    fn from_flags<'a>(flags: impl Iterator<Item = &'a Option<bool>>) -> Proportion {
        let (mut yes, mut n) = (0, 0);
        for f in flags.flatten() {
            n += 1;
            yes += usize::from(*f);
        }
        Proportion { yes, n, percent: Percent::of(yes, n) }
    }
}

impl fmt::Display for Proportion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}/{})", self.percent, self.yes, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WaveRow {
    pub wave: Wave,
    pub n_assessed: usize,
    pub hiv_test_6mo: Proportion,
    pub unprotected_sex: Proportion,
    /// Not asked at baseline.
    pub spoke_to_pca: Option<Proportion>,
    /// Participants assessed at this wave over those assessed at baseline,
    /// counted over all records regardless of complete-case mode.
    pub retained: usize,
    pub retention: Percent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SurveyWaveTable {
    pub complete_case: bool,
    /// Distinct participants in the analysis set.
    pub participants: usize,
    pub waves: Vec<WaveRow>,
}

/// Tabulates survey records per wave. With `complete_case`, only
/// participants observed at all three waves count toward the proportions.
/// Record order does not matter.
pub fn tabulate_outcomes(records: &[SurveyRecord], complete_case: bool) -> Result<SurveyWaveTable, OutcomeError> {
    if records.is_empty() {
        return Err(OutcomeError::Empty);
    }
    let mut by_wave: BTreeMap<Wave, Vec<&SurveyRecord>> = Wave::ALL.iter().map(|&w| (w, Vec::new())).collect();
    let mut waves_of: BTreeMap<&str, BTreeSet<Wave>> = BTreeMap::new();
    for r in records {
        by_wave.get_mut(&r.wave).expect("all waves present").push(r);
        waves_of.entry(&r.participant).or_default().insert(r.wave);
    }
    let included: BTreeSet<&str> = waves_of
        .iter()
        .filter(|(_, w)| !complete_case || w.len() == Wave::ALL.len())
        .map(|(p, _)| *p)
        .collect();
    let baseline_total = by_wave[&Wave::Baseline].len();

    let waves = Wave::ALL
        .iter()
        .map(|&wave| {
            let rows: Vec<&SurveyRecord> =
                by_wave[&wave].iter().copied().filter(|r| included.contains(r.participant.as_str())).collect();
            let retained = by_wave[&wave].len();
            WaveRow {
                wave,
                n_assessed: rows.len(),
                hiv_test_6mo: Proportion::from_flags(rows.iter().map(|r| &r.hiv_test_6mo)),
                unprotected_sex: Proportion::from_flags(rows.iter().map(|r| &r.unprotected_sex)),
                spoke_to_pca: (wave != Wave::Baseline)
                    .then(|| Proportion::from_flags(rows.iter().map(|r| &r.spoke_to_pca))),
                retained,
                retention: Percent::of(retained, baseline_total),
            }
        })
        .collect();
    Ok(SurveyWaveTable { complete_case, participants: included.len(), waves })
}

impl SurveyWaveTable {
    pub fn row(&self, wave: Wave) -> &WaveRow {
        self.waves.iter().find(|r| r.wave == wave).expect("every wave has a row")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    /// Fixed-width text table with percentages and their counts.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let scope = if self.complete_case { "complete cases" } else { "all responses" };
        let _ = writeln!(out, "Survey outcomes ({scope}, {} participants); descriptive proportions", self.participants);
        let cell = |s: String| format!("{s:<18}");
        let mut header = format!("{:<18}", "measure");
        for r in &self.waves {
            header.push_str(&cell(r.wave.to_string()));
        }
        let _ = writeln!(out, "{}", header.trim_end());
        type Column = (&'static str, fn(&WaveRow) -> String);
        let lines: [Column; 5] = [
            ("n assessed", |r| r.n_assessed.to_string()),
            ("hiv_test_6mo %", |r| r.hiv_test_6mo.to_string()),
            ("unprotected_sex %", |r| r.unprotected_sex.to_string()),
            ("spoke_to_pca %", |r| r.spoke_to_pca.map_or_else(|| "-".to_string(), |p| p.to_string())),
            ("retention", |r| format!("{} ({}%)", r.retained, r.retention)),
        ];
        for (name, f) in &lines {
            let mut line = format!("{name:<18}");
            for r in &self.waves {
                line.push_str(&cell(f(r)));
            }
            let _ = writeln!(out, "{}", line.trim_end());
        }
        out
    }
}
