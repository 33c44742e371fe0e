//! On-disk campaign: a pretty-printed `state.json` next to the append-only
//! `events.log`. The log is authoritative; the state file is a readable
//! snapshot that must agree with it.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{CampaignConfig, CampaignError, CampaignSnapshot, CampaignState, CandidateStatus, Clock, Round};
use crate::graph::UncertainNetwork;
use crate::selector::RankedCandidates;

pub const STATE_FILE: &str = "state.json";
pub const LOG_FILE: &str = "events.log";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io { path: path.display().to_string(), source }
}

#[derive(Debug)]
pub struct CampaignStore {
    dir: PathBuf,
    state: CampaignState,
}

impl CampaignStore {
    /// Initializes a campaign in `dir`, creating the directory if needed.
    /// Refuses to replace an existing campaign unless `overwrite` is set.
    pub fn create(
        dir: &Path,
        net: &UncertainNetwork,
        config: CampaignConfig,
        overwrite: bool,
    ) -> Result<Self, CampaignError> {
        Self::save(dir, CampaignState::init(net, config)?, overwrite)
    }

    /// Writes an existing campaign, such as a simulated one, to `dir`.
    pub fn save(dir: &Path, state: CampaignState, overwrite: bool) -> Result<Self, CampaignError> {
        let log_path = dir.join(LOG_FILE);
        if !overwrite && (log_path.exists() || dir.join(STATE_FILE).exists()) {
            return Err(CampaignError::AlreadyExists(dir.display().to_string()));
        }
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_atomic(&log_path, state.log().render().as_bytes())?;
        let store = CampaignStore { dir: dir.to_path_buf(), state };
        store.write_state()?;
        Ok(store)
    }

    /// Loads a campaign by replaying its log and checking the state file
    /// against the replayed state.
    pub fn open(dir: &Path) -> Result<Self, CampaignError> {
        let log_path = dir.join(LOG_FILE);
        let text = fs::read_to_string(&log_path).map_err(io_err(&log_path))?;
        let state = CampaignState::replay(&text)?;
        let state_path = dir.join(STATE_FILE);
        let stored = fs::read_to_string(&state_path).map_err(io_err(&state_path))?;
        let stored: CampaignSnapshot = serde_json::from_str(&stored).map_err(|e| CampaignError::Corrupt {
            seq: state.log().len() as u64,
            detail: format!("{STATE_FILE} is unreadable: {e}"),
        })?;
        let replayed = state.snapshot();
        if stored != replayed {
            // A truncated log diverges at the first missing event; an edited
            // final event has no successor hash to catch it, so blame it.
            let (seq, detail) = if stored.log_len != replayed.log_len {
                (
                    stored.log_len.min(replayed.log_len),
                    format!("{STATE_FILE} records {} events, {LOG_FILE} has {}", stored.log_len, replayed.log_len),
                )
            } else {
                (
                    replayed.log_len.saturating_sub(1),
                    format!("{STATE_FILE} does not match the state rebuilt from {LOG_FILE}"),
                )
            };
            return Err(CampaignError::Corrupt { seq, detail });
        }
        Ok(CampaignStore { dir: dir.to_path_buf(), state })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn state(&self) -> &CampaignState {
        &self.state
    }

    pub fn set_clock(&mut self, clock: Clock) {
        self.state.set_clock(clock);
    }

    pub fn open_round(&mut self) -> Result<&Round, CampaignError> {
        self.mutate(|s| s.open_round().map(|_| ()))?;
        Ok(self.state.rounds().last().expect("just opened"))
    }

    pub fn record_status(&mut self, label: &str, status: CandidateStatus) -> Result<(), CampaignError> {
        self.mutate(|s| s.record_status(label, status))
    }

    pub fn close_round(&mut self) -> Result<&Round, CampaignError> {
        self.mutate(|s| s.close_round().map(|_| ()))?;
        Ok(self.state.rounds().last().expect("just closed"))
    }

    pub fn what_if_select(&self, exclusions: &[String], k: usize) -> Result<RankedCandidates, CampaignError> {
        self.state.what_if_select(exclusions, k)
    }

    /// Applies `f` to a copy, persists the new log lines, then swaps the copy
    /// in. A failure at any step leaves both memory and disk unchanged,
    /// except that a failed state-file write is repaired on the next open.
    fn mutate(&mut self, f: impl FnOnce(&mut CampaignState) -> Result<(), CampaignError>) -> Result<(), CampaignError> {
        let mut next = self.state.clone();
        f(&mut next)?;
        let fresh = next.log().render_from(self.state.log().len());
        let log_path = self.dir.join(LOG_FILE);
        let mut file = OpenOptions::new().append(true).open(&log_path).map_err(io_err(&log_path))?;
        file.write_all(fresh.as_bytes()).map_err(io_err(&log_path))?;
        file.sync_all().map_err(io_err(&log_path))?;
        self.state = next;
        self.write_state()
    }

    fn write_state(&self) -> Result<(), CampaignError> {
        let json = serde_json::to_string_pretty(&self.state.snapshot()).expect("snapshot serializes");
        write_atomic(&self.dir.join(STATE_FILE), format!("{json}\n").as_bytes())
    }
}

/// Write to a sibling temp file, fsync, rename over the target.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CampaignError> {
    let tmp = path.with_extension("tmp");
    let mut file = File::create(&tmp).map_err(io_err(&tmp))?;
    file.write_all(bytes).map_err(io_err(&tmp))?;
    file.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}
