//! Closed-loop campaign runs with a stochastic recruitment model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{CampaignConfig, CampaignError, CampaignState, CandidateStatus};
use crate::graph::{check_prob, UncertainNetwork};
use crate::rng::{derive_seed, STREAM_SIMULATION};

/// Each candidate, worked through in rank order, is reached with
/// `contact_prob`; a reached candidate declines with `decline_prob` and is
/// trained otherwise. Once `k_train` are trained the remaining candidates are
/// released as unreachable without drawing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecruitBehavior {
    pub contact_prob: f64,
    pub decline_prob: f64,
}

impl RecruitBehavior {
    pub fn new(contact_prob: f64, decline_prob: f64) -> Result<Self, CampaignError> {
        for (what, p) in [("contact_prob", contact_prob), ("decline_prob", decline_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(CampaignError::InvalidConfig(format!("{what} must lie in [0, 1], got {p}")));
            }
        }
        Ok(RecruitBehavior { contact_prob, decline_prob })
    }

    /// Everyone answers and agrees.
    pub fn always() -> Self {
        RecruitBehavior { contact_prob: 1.0, decline_prob: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundOutcome {
    pub selected: Vec<String>,
    pub contacted: usize,
    pub declined: usize,
    pub trained: Vec<String>,
    pub expected_influenced: f64,
}

#[derive(Debug, Clone)]
pub struct CampaignTrajectory {
    pub rounds: Vec<RoundOutcome>,
    /// Expected number of youth influenced after the last round.
    pub final_coverage: f64,
    pub state: CampaignState,
}

impl CampaignTrajectory {
    pub fn total_selected(&self) -> usize {
        self.rounds.iter().map(|r| r.selected.len()).sum()
    }

    pub fn total_contacted(&self) -> usize {
        self.rounds.iter().map(|r| r.contacted).sum()
    }

    pub fn total_trained(&self) -> usize {
        self.rounds.iter().map(|r| r.trained.len()).sum()
    }
}

/// Runs open, record and close for every round. Deterministic given `seed`.
pub fn simulate_campaign(
    net: &UncertainNetwork,
    config: &CampaignConfig,
    behavior: RecruitBehavior,
    seed: u64,
) -> Result<CampaignTrajectory, CampaignError> {
    let behavior = RecruitBehavior::new(behavior.contact_prob, behavior.decline_prob)?;
    check_prob("propagation probability", config.propagation_prob)?;
    let mut state = CampaignState::init(net, *config)?;
    let mut rounds = Vec::with_capacity(config.num_rounds);
    for r in 0..config.num_rounds {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_SIMULATION, r as u64));
        let selected: Vec<String> = state.open_round()?.candidates.iter().map(|c| c.label.clone()).collect();
        let (mut contacted, mut declined, mut trained) = (0, 0, 0);
        for label in &selected {
            if trained == config.k_train || !rng.random_bool(behavior.contact_prob) {
                state.record_status(label, CandidateStatus::Unreachable)?;
                continue;
            }
            contacted += 1;
            state.record_status(label, CandidateStatus::Contacted)?;
            if rng.random_bool(behavior.decline_prob) {
                declined += 1;
                state.record_status(label, CandidateStatus::Declined)?;
            } else {
                trained += 1;
                state.record_status(label, CandidateStatus::Trained)?;
            }
        }
        let round = state.close_round()?;
        rounds.push(RoundOutcome {
            selected,
            contacted,
            declined,
            trained: round.trained.clone(),
            expected_influenced: state.belief().expected_influenced(),
        });
    }
    Ok(CampaignTrajectory { rounds, final_coverage: state.belief().expected_influenced(), state })
}
