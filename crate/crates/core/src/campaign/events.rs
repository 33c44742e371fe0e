//! Append-only, hash-chained event log.
//!
//! Each line is `seq,timestamp,event_type,payload,prev_hash` where `payload`
//! is compact JSON (it may itself contain commas, so the line is split on the
//! first three commas and the last one) and `prev_hash` is the lowercase hex
//! SHA-256 of the previous line without its newline. The first line chains
//! from [`GENESIS_HASH`].

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{CampaignConfig, CandidateStatus};

pub const GENESIS_HASH: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitPayload {
    pub labels: Vec<String>,
    /// Canonical network file text.
    pub network: String,
    pub config: CampaignConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub node: String,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOpenedPayload {
    pub round: usize,
    pub candidates: Vec<RankedEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusPayload {
    pub round: usize,
    pub node: String,
    pub from: CandidateStatus,
    pub to: CandidateStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundClosedPayload {
    pub round: usize,
    pub trained: Vec<String>,
    pub belief: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Init(InitPayload),
    RoundOpened(RoundOpenedPayload),
    StatusRecorded(StatusPayload),
    RoundClosed(RoundClosedPayload),
}

impl Event {
    pub fn event_type(&self) -> &'static str {
        match self {
            Event::Init(_) => "init",
            Event::RoundOpened(_) => "round_opened",
            Event::StatusRecorded(_) => "status_recorded",
            Event::RoundClosed(_) => "round_closed",
        }
    }

    pub fn payload_json(&self) -> String {
        let encoded = match self {
            Event::Init(p) => serde_json::to_string(p),
            Event::RoundOpened(p) => serde_json::to_string(p),
            Event::StatusRecorded(p) => serde_json::to_string(p),
            Event::RoundClosed(p) => serde_json::to_string(p),
        };
        encoded.expect("payloads contain only finite numbers and strings")
    }

    pub fn decode(event_type: &str, payload: &str) -> Result<Event, String> {
        let err = |e: serde_json::Error| format!("bad {event_type} payload: {e}");
        match event_type {
            "init" => serde_json::from_str(payload).map(Event::Init).map_err(err),
            "round_opened" => serde_json::from_str(payload).map(Event::RoundOpened).map_err(err),
            "status_recorded" => serde_json::from_str(payload).map(Event::StatusRecorded).map_err(err),
            "round_closed" => serde_json::from_str(payload).map(Event::RoundClosed).map_err(err),
            other => Err(format!("unknown event type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub seq: u64,
    pub timestamp: u64,
    pub event: Event,
    pub prev_hash: String,
    /// The exact serialized line, without newline.
    pub line: String,
}

impl LogEntry {
    pub fn hash(&self) -> String {
        line_hash(&self.line)
    }
}

pub fn line_hash(line: &str) -> String {
    hex::encode(Sha256::digest(line.as_bytes()))
}

pub fn encode_line(seq: u64, timestamp: u64, event: &Event, prev_hash: &str) -> String {
    format!("{seq},{timestamp},{},{},{prev_hash}", event.event_type(), event.payload_json())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("event log diverges at seq {seq} (line {line}): {detail}")]
pub struct LogError {
    pub seq: u64,
    pub line: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    entries: Vec<LogEntry>,
}

impl EventLog {
    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn head_hash(&self) -> String {
        self.entries.last().map_or_else(|| GENESIS_HASH.to_string(), LogEntry::hash)
    }

    pub fn next_seq(&self) -> u64 {
        self.entries.len() as u64
    }

    pub(crate) fn append(&mut self, timestamp: u64, event: Event) -> &LogEntry {
        let seq = self.next_seq();
        let prev_hash = self.head_hash();
        let line = encode_line(seq, timestamp, &event, &prev_hash);
        self.entries.push(LogEntry { seq, timestamp, event, prev_hash, line });
        self.entries.last().expect("just pushed")
    }

    /// The whole log as file contents, one line per entry.
    pub fn render(&self) -> String {
        self.render_from(0)
    }

    pub fn render_from(&self, start: usize) -> String {
        self.entries[start.min(self.entries.len())..].iter().map(|e| format!("{}\n", e.line)).collect()
    }
}

fn split_line(line: &str) -> Option<(&str, &str, &str, &str, &str)> {
    let mut head = line.splitn(4, ',');
    let seq = head.next()?;
    let ts = head.next()?;
    let ty = head.next()?;
    let rest = head.next()?;
    let (payload, prev) = rest.rsplit_once(',')?;
    Some((seq, ts, ty, payload, prev))
}

/// Parses log text and checks sequence numbers and the hash chain. It does
/// not check that events are legal transitions; replaying does that.
pub fn parse_event_log(text: &str) -> Result<Vec<LogEntry>, LogError> {
    let mut entries: Vec<LogEntry> = Vec::new();
    let mut prev = GENESIS_HASH.to_string();
    for (i, raw) in text.lines().enumerate() {
        let expected_seq = entries.len() as u64;
        let fail = |detail: String| LogError { seq: expected_seq, line: i + 1, detail };
        if raw.is_empty() {
            return Err(fail("blank line".into()));
        }
        let (seq, ts, ty, payload, prev_hash) =
            split_line(raw).ok_or_else(|| fail("expected seq,timestamp,event_type,payload,prev_hash".into()))?;
        let seq: u64 = seq.parse().map_err(|_| fail(format!("bad sequence number `{seq}`")))?;
        if seq != expected_seq {
            return Err(fail(format!("sequence number {seq}, expected {expected_seq}")));
        }
        let timestamp: u64 = ts.parse().map_err(|_| fail(format!("bad timestamp `{ts}`")))?;
        if prev_hash != prev {
            return Err(fail("hash chain broken".into()));
        }
        let event = Event::decode(ty, payload).map_err(fail)?;
        let line = encode_line(seq, timestamp, &event, prev_hash);
        if line != raw {
            return Err(fail("line is not in canonical form".into()));
        }
        prev = line_hash(&line);
        entries.push(LogEntry { seq, timestamp, event, prev_hash: prev_hash.to_string(), line });
    }
    Ok(entries)
}
