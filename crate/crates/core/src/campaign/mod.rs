//! The live intervention workflow.
//!
//! A campaign runs a fixed number of rounds. Each round over-selects
//! `k_select` candidates by greedy coverage, staff record what happened to
//! each one, and at most `k_train` of them are trained. Closing a round folds
//! the trained PCAs' reach into the belief state that conditions the next
//! selection.
//!
//! Every mutation is an [`Event`] appended to a hash-chained [`EventLog`];
//! the same `apply` path serves live operations and replay, so replaying a
//! log rebuilds the state exactly.

mod events;
mod outcomes;
mod simulate;
mod store;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cascade::SeedSet;
use crate::graph::{GraphError, NodeId, UncertainNetwork};
use crate::ingest::{parse_network_file, write_network_file, Roster};
use crate::rng::{derive_seed, STREAM_ROUNDS};
use crate::selector::{
    greedy_select, update_belief, BeliefState, OracleKind, RankedCandidates, SelectError, SelectionParams,
};

pub use events::{
    encode_line, line_hash, parse_event_log, Event, EventLog, InitPayload, LogEntry, LogError, RankedEntry,
    RoundClosedPayload, RoundOpenedPayload, StatusPayload, GENESIS_HASH,
};
pub use outcomes::{tabulate_outcomes, OutcomeError, Percent, Proportion, SurveyWaveTable, WaveRow};
pub use simulate::{simulate_campaign, CampaignTrajectory, RecruitBehavior, RoundOutcome};
pub use store::{CampaignStore, LOG_FILE, STATE_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateStatus {
    Selected,
    Contacted,
    Unreachable,
    Declined,
    Trained,
}

impl CandidateStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateStatus::Selected => "selected",
            CandidateStatus::Contacted => "contacted",
            CandidateStatus::Unreachable => "unreachable",
            CandidateStatus::Declined => "declined",
            CandidateStatus::Trained => "trained",
        }
    }

    /// `Selected → Contacted → {Declined, Trained}` and `Selected → Unreachable`.
    pub fn can_become(self, next: CandidateStatus) -> bool {
        use CandidateStatus::*;
        matches!((self, next), (Selected, Contacted) | (Selected, Unreachable) | (Contacted, Declined) | (Contacted, Trained))
    }

    pub fn is_terminal(self) -> bool {
        !matches!(self, CandidateStatus::Selected | CandidateStatus::Contacted)
    }

    pub fn next_options(self) -> &'static [CandidateStatus] {
        use CandidateStatus::*;
        match self {
            Selected => &[Contacted, Unreachable],
            Contacted => &[Declined, Trained],
            _ => &[],
        }
    }
}

impl fmt::Display for CandidateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CandidateStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use CandidateStatus::*;
        [Selected, Contacted, Unreachable, Declined, Trained]
            .into_iter()
            .find(|st| st.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown status `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub k_select: usize,
    pub k_train: usize,
    pub num_rounds: usize,
    pub num_samples: usize,
    pub runs_per_sample: usize,
    pub propagation_prob: f64,
    pub master_seed: u64,
    pub oracle: OracleKind,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            k_select: 8,
            k_train: 4,
            num_rounds: 3,
            num_samples: 1000,
            runs_per_sample: 20,
            propagation_prob: 0.5,
            master_seed: 0,
            oracle: OracleKind::Auto,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), CampaignError> {
        let counts = [
            ("k_select", self.k_select),
            ("k_train", self.k_train),
            ("num_rounds", self.num_rounds),
            ("num_samples", self.num_samples),
            ("runs_per_sample", self.runs_per_sample),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(CampaignError::InvalidConfig(format!("{name} must be at least 1")));
        }
        if self.k_train > self.k_select {
            return Err(CampaignError::InvalidConfig(format!(
                "k_train ({}) must not exceed k_select ({})",
                self.k_train, self.k_select
            )));
        }
        crate::graph::check_prob("propagation probability", self.propagation_prob)?;
        Ok(())
    }

    /// Selection parameters for round `round`; each round gets its own
    /// ensemble seed, shared by the selection and the belief update.
    pub fn round_params(&self, round: usize) -> SelectionParams {
        SelectionParams {
            num_samples: self.num_samples,
            runs_per_sample: self.runs_per_sample,
            master_seed: derive_seed(self.master_seed, STREAM_ROUNDS, round as u64),
            oracle: self.oracle,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Clock {
    /// Timestamp = sequence number. Reruns produce identical logs.
    #[default]
    Logical,
    /// Unix seconds.
    System,
}

impl Clock {
    fn now(self, seq: u64) -> u64 {
        match self {
            Clock::Logical => seq,
            Clock::System => std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub node: NodeId,
    pub label: String,
    pub marginal_gain: f64,
    pub status: CandidateStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub index: usize,
    pub candidates: Vec<Candidate>,
    pub trained: Vec<String>,
    pub belief_before: Vec<f64>,
    pub belief_after: Option<Vec<f64>>,
    pub opened_at: u64,
    pub closed_at: Option<u64>,
}

impl Round {
    pub fn is_open(&self) -> bool {
        self.closed_at.is_none()
    }

    pub fn count(&self, status: CandidateStatus) -> usize {
        self.candidates.iter().filter(|c| c.status == status).count()
    }

    pub fn candidate(&self, label: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.label == label)
    }
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid campaign config: {0}")]
    InvalidConfig(String),
    #[error("round {} is already open", .0 + 1)]
    RoundAlreadyOpen(usize),
    #[error("no round is open")]
    NoOpenRound,
    #[error("campaign complete: all {0} rounds have been run")]
    CampaignComplete(usize),
    #[error("`{0}` is not a candidate in the open round")]
    UnknownCandidate(String),
    #[error("illegal transition for `{node}`: {from} -> {to}")]
    IllegalTransition { node: String, from: CandidateStatus, to: CandidateStatus },
    #[error("round already has {k_train} trained PCAs")]
    TrainCapacityExceeded { k_train: usize },
    #[error("unresolved candidates: {}", .0.join(", "))]
    UnresolvedCandidates(Vec<String>),
    #[error("event does not apply: {0}")]
    InvalidEvent(String),
    #[error("campaign already exists at {0}; refusing to overwrite it")]
    AlreadyExists(String),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corrupt campaign state: replay diverges at seq {seq}: {detail}")]
    Corrupt { seq: u64, detail: String },
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Broad class of a [`CampaignError`], used for exit codes and HTTP status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Io,
    StateMachine,
}

impl CampaignError {
    pub fn class(&self) -> ErrorClass {
        match self {
            CampaignError::RoundAlreadyOpen(_)
            | CampaignError::NoOpenRound
            | CampaignError::CampaignComplete(_)
            | CampaignError::IllegalTransition { .. }
            | CampaignError::TrainCapacityExceeded { .. }
            | CampaignError::UnresolvedCandidates(_) => ErrorClass::StateMachine,
            CampaignError::Io { .. } | CampaignError::AlreadyExists(_) => ErrorClass::Io,
            CampaignError::Corrupt { .. } | CampaignError::Log(_) => ErrorClass::Io,
            CampaignError::InvalidConfig(_)
            | CampaignError::UnknownCandidate(_)
            | CampaignError::InvalidEvent(_)
            | CampaignError::Select(_)
            | CampaignError::Graph(_) => ErrorClass::Validation,
        }
    }
}

/// Serializable view of a campaign; its hash identifies the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSnapshot {
    pub labels: Vec<String>,
    pub network: String,
    pub config: CampaignConfig,
    pub rounds: Vec<Round>,
    pub belief: BeliefState,
    pub log_len: u64,
    pub log_head: String,
}

impl CampaignSnapshot {
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("snapshot serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Persistent record of a live intervention.
#[derive(Debug, Clone)]
pub struct CampaignState {
    network: UncertainNetwork,
    config: CampaignConfig,
    rounds: Vec<Round>,
    belief: BeliefState,
    log: EventLog,
    clock: Clock,
}

impl CampaignState {
    /// Starts a campaign with zero belief. The network's propagation
    /// probability is replaced by the config's.
    pub fn init(net: &UncertainNetwork, config: CampaignConfig) -> Result<Self, CampaignError> {
        config.validate()?;
        let network = net.with_propagation_prob(config.propagation_prob)?;
        let payload = InitPayload {
            labels: network.labels().to_vec(),
            network: write_network_file(&network),
            config,
        };
        let mut state = Self::from_init(&payload)?;
        state.log.append(state.clock.now(0), Event::Init(payload));
        Ok(state)
    }

    fn from_init(payload: &InitPayload) -> Result<Self, CampaignError> {
        payload.config.validate()?;
        let roster = Roster::new(payload.labels.iter().cloned())
            .map_err(|e| CampaignError::InvalidEvent(format!("init roster: {e}")))?;
        let network = parse_network_file(&payload.network, Some(&roster))
            .map_err(|e| CampaignError::InvalidEvent(format!("init network: {e}")))?;
        if network.propagation_prob() != payload.config.propagation_prob {
            return Err(CampaignError::InvalidEvent("network and config disagree on propagation probability".into()));
        }
        let belief = BeliefState::zero(network.node_count());
        Ok(CampaignState {
            network,
            config: payload.config,
            rounds: Vec::new(),
            belief,
            log: EventLog::default(),
            clock: Clock::Logical,
        })
    }

    /// Rebuilds a campaign from log text, re-validating every transition.
    pub fn replay(text: &str) -> Result<Self, CampaignError> {
        let entries = parse_event_log(text)?;
        let mut iter = entries.into_iter();
        let first = iter.next().ok_or(CampaignError::Corrupt { seq: 0, detail: "empty event log".into() })?;
        let Event::Init(payload) = &first.event else {
            return Err(CampaignError::Corrupt { seq: 0, detail: "log does not start with init".into() });
        };
        let mut state = Self::from_init(payload).map_err(|e| CampaignError::Corrupt { seq: 0, detail: e.to_string() })?;
        state.log.append(first.timestamp, first.event.clone());
        for entry in iter {
            let seq = entry.seq;
            state
                .apply(&entry.event, entry.timestamp)
                .map_err(|e| CampaignError::Corrupt { seq, detail: e.to_string() })?;
            state.log.append(entry.timestamp, entry.event);
            debug_assert_eq!(state.log.entries().last().map(|e| &e.line), Some(&entry.line));
        }
        Ok(state)
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn set_clock(&mut self, clock: Clock) {
        self.clock = clock;
    }

    pub fn network(&self) -> &UncertainNetwork {
        &self.network
    }

    pub fn config(&self) -> &CampaignConfig {
        &self.config
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn belief(&self) -> &BeliefState {
        &self.belief
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn open_round_ref(&self) -> Option<&Round> {
        self.rounds.last().filter(|r| r.is_open())
    }

    pub fn closed_rounds(&self) -> usize {
        self.rounds.iter().filter(|r| !r.is_open()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.closed_rounds() == self.config.num_rounds
    }

    pub fn total_selected(&self) -> usize {
        self.rounds.iter().map(|r| r.candidates.len()).sum()
    }

    pub fn total_with_status(&self, status: CandidateStatus) -> usize {
        self.rounds.iter().map(|r| r.count(status)).sum()
    }

    /// Nodes never to be selected again: trained or declined in any round.
    pub fn exclusions(&self) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .rounds
            .iter()
            .flat_map(|r| &r.candidates)
            .filter(|c| matches!(c.status, CandidateStatus::Trained | CandidateStatus::Declined))
            .map(|c| c.node)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn snapshot(&self) -> CampaignSnapshot {
        CampaignSnapshot {
            labels: self.network.labels().to_vec(),
            network: write_network_file(&self.network),
            config: self.config,
            rounds: self.rounds.clone(),
            belief: self.belief.clone(),
            log_len: self.log.len() as u64,
            log_head: self.log.head_hash(),
        }
    }

    pub fn state_hash(&self) -> String {
        self.snapshot().hash()
    }

    fn commit(&mut self, event: Event) -> Result<(), CampaignError> {
        let ts = self.clock.now(self.log.next_seq());
        self.apply(&event, ts)?;
        self.log.append(ts, event);
        Ok(())
    }

    /// Validates `event` against the current state, then applies it. Nothing
    /// changes when validation fails.
    fn apply(&mut self, event: &Event, ts: u64) -> Result<(), CampaignError> {
        match event {
            Event::Init(_) => Err(CampaignError::InvalidEvent("init after start".into())),
            Event::RoundOpened(p) => self.apply_open(p, ts),
            Event::StatusRecorded(p) => self.apply_status(p),
            Event::RoundClosed(p) => self.apply_close(p, ts),
        }
    }

    fn check_can_open(&self) -> Result<usize, CampaignError> {
        if let Some(r) = self.open_round_ref() {
            return Err(CampaignError::RoundAlreadyOpen(r.index));
        }
        if self.rounds.len() >= self.config.num_rounds {
            return Err(CampaignError::CampaignComplete(self.config.num_rounds));
        }
        Ok(self.rounds.len())
    }

    fn apply_open(&mut self, p: &RoundOpenedPayload, ts: u64) -> Result<(), CampaignError> {
        let index = self.check_can_open()?;
        if p.round != index {
            return Err(CampaignError::InvalidEvent(format!("opens round {}, expected {index}", p.round)));
        }
        if p.candidates.len() != self.config.k_select {
            return Err(CampaignError::InvalidEvent(format!(
                "{} candidates, expected {}",
                p.candidates.len(),
                self.config.k_select
            )));
        }
        let excluded = self.exclusions();
        let mut candidates = Vec::with_capacity(p.candidates.len());
        for entry in &p.candidates {
            let node = self
                .network
                .node(&entry.node)
                .ok_or_else(|| CampaignError::InvalidEvent(format!("unknown node `{}`", entry.node)))?;
            if excluded.binary_search(&node).is_ok() || candidates.iter().any(|c: &Candidate| c.node == node) {
                return Err(CampaignError::InvalidEvent(format!("`{}` cannot be selected", entry.node)));
            }
            candidates.push(Candidate {
                node,
                label: entry.node.clone(),
                marginal_gain: entry.gain,
                status: CandidateStatus::Selected,
            });
        }
        self.rounds.push(Round {
            index,
            candidates,
            trained: Vec::new(),
            belief_before: self.belief.probs().to_vec(),
            belief_after: None,
            opened_at: ts,
            closed_at: None,
        });
        Ok(())
    }

    fn apply_status(&mut self, p: &StatusPayload) -> Result<(), CampaignError> {
        let k_train = self.config.k_train;
        let round = self.rounds.last_mut().filter(|r| r.is_open()).ok_or(CampaignError::NoOpenRound)?;
        if p.round != round.index {
            return Err(CampaignError::InvalidEvent(format!("status for round {}, open round is {}", p.round, round.index)));
        }
        let trained = round.count(CandidateStatus::Trained);
        let cand = round
            .candidates
            .iter_mut()
            .find(|c| c.label == p.node)
            .ok_or_else(|| CampaignError::UnknownCandidate(p.node.clone()))?;
        if cand.status != p.from || !p.from.can_become(p.to) {
            return Err(CampaignError::IllegalTransition { node: p.node.clone(), from: cand.status, to: p.to });
        }
        if p.to == CandidateStatus::Trained && trained >= k_train {
            return Err(CampaignError::TrainCapacityExceeded { k_train });
        }
        cand.status = p.to;
        Ok(())
    }

    fn apply_close(&mut self, p: &RoundClosedPayload, ts: u64) -> Result<(), CampaignError> {
        let n = self.network.node_count();
        let round = self.rounds.last().filter(|r| r.is_open()).ok_or(CampaignError::NoOpenRound)?;
        if p.round != round.index {
            return Err(CampaignError::InvalidEvent(format!("closes round {}, open round is {}", p.round, round.index)));
        }
        let unresolved: Vec<String> =
            round.candidates.iter().filter(|c| !c.status.is_terminal()).map(|c| c.label.clone()).collect();
        if !unresolved.is_empty() {
            return Err(CampaignError::UnresolvedCandidates(unresolved));
        }
        let trained: Vec<String> = round
            .candidates
            .iter()
            .filter(|c| c.status == CandidateStatus::Trained)
            .map(|c| c.label.clone())
            .collect();
        if trained != p.trained {
            return Err(CampaignError::InvalidEvent("trained list does not match candidate statuses".into()));
        }
        if p.belief.len() != n {
            return Err(CampaignError::InvalidEvent(format!("belief has {} entries, expected {n}", p.belief.len())));
        }
        let belief = BeliefState::from_parts(p.belief.clone(), self.belief.round_index() + 1)?;
        if belief.probs().iter().zip(self.belief.probs()).any(|(new, old)| new < old) {
            return Err(CampaignError::InvalidEvent("belief decreased".into()));
        }
        let round = self.rounds.last_mut().expect("checked above");
        round.trained = trained;
        round.belief_after = Some(belief.probs().to_vec());
        round.closed_at = Some(ts);
        self.belief = belief;
        Ok(())
    }

    /// Selects `k_select` candidates for the next round by greedy coverage,
    /// excluding everyone trained or declined so far.
    pub fn open_round(&mut self) -> Result<&Round, CampaignError> {
        let index = self.check_can_open()?;
        let ranked = greedy_select(
            &self.network,
            self.config.k_select,
            &self.belief,
            &self.exclusions(),
            &self.config.round_params(index),
        )?;
        let candidates = ranked
            .entries
            .iter()
            .map(|e| RankedEntry { node: self.network.label(e.node).to_string(), gain: e.marginal_gain })
            .collect();
        self.commit(Event::RoundOpened(RoundOpenedPayload { round: index, candidates }))?;
        Ok(self.rounds.last().expect("just opened"))
    }

    pub fn record_status(&mut self, label: &str, status: CandidateStatus) -> Result<(), CampaignError> {
        let round = self.open_round_ref().ok_or(CampaignError::NoOpenRound)?;
        let cand = round.candidate(label).ok_or_else(|| CampaignError::UnknownCandidate(label.to_string()))?;
        let payload = StatusPayload { round: round.index, node: label.to_string(), from: cand.status, to: status };
        self.commit(Event::StatusRecorded(payload))
    }

    /// Freezes the open round and updates the belief with its trained PCAs.
    pub fn close_round(&mut self) -> Result<&Round, CampaignError> {
        let round = self.open_round_ref().ok_or(CampaignError::NoOpenRound)?;
        let unresolved: Vec<String> =
            round.candidates.iter().filter(|c| !c.status.is_terminal()).map(|c| c.label.clone()).collect();
        if !unresolved.is_empty() {
            return Err(CampaignError::UnresolvedCandidates(unresolved));
        }
        let index = round.index;
        let trained: Vec<&Candidate> =
            round.candidates.iter().filter(|c| c.status == CandidateStatus::Trained).collect();
        let seeds = SeedSet::new(self.network.node_count(), trained.iter().map(|c| c.node))
            .map_err(SelectError::from)?;
        let trained_labels = trained.iter().map(|c| c.label.clone()).collect();
        let next = update_belief(&self.belief, &seeds, &self.network, &self.config.round_params(index))?;
        self.commit(Event::RoundClosed(RoundClosedPayload {
            round: index,
            trained: trained_labels,
            belief: next.probs().to_vec(),
        }))?;
        Ok(self.rounds.last().expect("just closed"))
    }

    /// Re-ranks candidates for the open round (or the next one) with extra
    /// exclusions. Read-only.
    pub fn what_if_select(&self, extra_exclusions: &[String], k: usize) -> Result<RankedCandidates, CampaignError> {
        let mut excluded = self.exclusions();
        for label in extra_exclusions {
            let node = self.network.node(label).ok_or_else(|| CampaignError::UnknownCandidate(label.clone()))?;
            excluded.push(node);
        }
        let round = self.open_round_ref().map_or(self.rounds.len(), |r| r.index);
        Ok(greedy_select(&self.network, k, &self.belief, &excluded, &self.config.round_params(round))?)
    }
}
