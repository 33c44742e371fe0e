mod common;

use std::collections::HashSet;

use common::{fixture_network, fixture_survey};
use pcaselect::campaign::{
    simulate_campaign, tabulate_outcomes, CampaignConfig, CampaignError, CampaignState, CampaignStore,
    CandidateStatus, ErrorClass, RecruitBehavior,
};
use pcaselect::ingest::Wave;

fn cheap() -> CampaignConfig {
    CampaignConfig { num_samples: 40, runs_per_sample: 4, master_seed: 3, ..CampaignConfig::default() }
}

#[test]
fn three_rounds_on_fixture_network() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = CampaignStore::create(dir.path(), &fixture_network(), cheap(), false).unwrap();
    let mut trained_so_far: HashSet<String> = HashSet::new();
    for round in 0..3 {
        let labels: Vec<String> = store.open_round().unwrap().candidates.iter().map(|c| c.label.clone()).collect();
        assert_eq!(labels.len(), 8);
        assert!(labels.iter().all(|l| !trained_so_far.contains(l)));
        for (i, l) in labels.iter().enumerate() {
            if i % 4 == 3 {
                store.record_status(l, CandidateStatus::Unreachable).unwrap();
                continue;
            }
            store.record_status(l, CandidateStatus::Contacted).unwrap();
            let next = if i < 4 { CandidateStatus::Trained } else { CandidateStatus::Declined };
            store.record_status(l, next).unwrap();
        }
        let closed = store.close_round().unwrap();
        assert_eq!(closed.trained.len(), 3);
        trained_so_far.extend(closed.trained.iter().cloned());
        assert_eq!(store.state().belief().round_index(), round + 1);
    }
    assert_eq!(store.state().total_selected(), 24);
    assert_eq!(store.state().total_with_status(CandidateStatus::Trained), 9);
    let err = store.open_round().unwrap_err();
    assert!(matches!(err, CampaignError::CampaignComplete(3)));
    assert_eq!(err.class(), ErrorClass::StateMachine);
    let reopened = CampaignStore::open(dir.path()).unwrap();
    assert_eq!(reopened.state().state_hash(), store.state().state_hash());
}

#[test]
fn fifth_trainee_is_refused() {
    let cfg = CampaignConfig { k_train: 4, ..cheap() };
    let mut st = CampaignState::init(&fixture_network(), cfg).unwrap();
    let labels: Vec<String> = st.open_round().unwrap().candidates.iter().map(|c| c.label.clone()).collect();
    for l in &labels[..5] {
        st.record_status(l, CandidateStatus::Contacted).unwrap();
    }
    for l in &labels[..4] {
        st.record_status(l, CandidateStatus::Trained).unwrap();
    }
    assert!(matches!(
        st.record_status(&labels[4], CandidateStatus::Trained),
        Err(CampaignError::TrainCapacityExceeded { k_train: 4 })
    ));
}

#[test]
fn what_if_is_read_only() {
    let mut st = CampaignState::init(&fixture_network(), cheap()).unwrap();
    let picked: Vec<String> = st.open_round().unwrap().candidates.iter().map(|c| c.label.clone()).collect();
    let before = st.state_hash();
    let alt = st.what_if_select(&picked[..2], 8).unwrap();
    assert_eq!(st.state_hash(), before);
    let alt_labels: Vec<&str> = alt.nodes().iter().map(|&n| st.network().label(n)).collect();
    assert!(!alt_labels.contains(&picked[0].as_str()) && !alt_labels.contains(&picked[1].as_str()));
    // with no extra exclusions it reproduces the open round
    let same = st.what_if_select(&[], 8).unwrap();
    let same: Vec<&str> = same.nodes().iter().map(|&n| st.network().label(n)).collect();
    assert_eq!(same, picked.iter().map(String::as_str).collect::<Vec<_>>());
}

#[test]
fn replay_after_simulation() {
    let behavior = RecruitBehavior::new(2.0 / 3.0, 0.2).unwrap();
    let t = simulate_campaign(&fixture_network(), &cheap(), behavior, 77).unwrap();
    let replayed = CampaignState::replay(&t.state.log().render()).unwrap();
    assert_eq!(replayed.state_hash(), t.state.state_hash());
    assert_eq!(t.total_selected(), 24);
    assert!(t.total_trained() <= 12);
    let trained: Vec<&String> = t.rounds.iter().flat_map(|r| &r.trained).collect();
    let unique: HashSet<&&String> = trained.iter().collect();
    assert_eq!(unique.len(), trained.len(), "no one is trained twice");
}

/// Trained per round is `min(k_train, Bin(k_select, s))` with
/// `s = contact · (1 − decline)`, whatever the network.
fn expected_trained(k_select: u32, k_train: u32, s: f64, rounds: u32) -> f64 {
    let choose = |n: u32, k: u32| (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1));
    let per_round: f64 = (0..=k_select)
        .map(|j| choose(k_select, j) * s.powi(j as i32) * (1.0 - s).powi((k_select - j) as i32) * f64::from(j.min(k_train)))
        .sum();
    per_round * f64::from(rounds)
}

#[test]
fn recruitment_funnel_targets_eleven_trained() {
    let contact = 2.0 / 3.0;
    let decline = 0.15755;
    let oracle = expected_trained(8, 4, contact * (1.0 - decline), 3);
    assert!((oracle - 11.0).abs() < 0.01, "{oracle}");
    let net = fixture_network();
    let cfg = CampaignConfig { num_samples: 4, runs_per_sample: 1, ..cheap() };
    let behavior = RecruitBehavior::new(contact, decline).unwrap();
    let reps = 1000;
    let totals: Vec<f64> =
        (0..reps).map(|s| simulate_campaign(&net, &cfg, behavior, s).unwrap().total_trained() as f64).collect();
    let mean = totals.iter().sum::<f64>() / reps as f64;
    let sd = (totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    assert!((mean - 11.0).abs() <= 2.0, "mean trained {mean}");
    assert!((mean - oracle).abs() <= 4.0 * sd / (reps as f64).sqrt(), "mean {mean} vs {oracle}");
}

#[test]
fn table_one_from_fixture() {
    let t = tabulate_outcomes(&fixture_survey(), true).unwrap();
    assert_eq!(t.participants, 38);
    let row = |w| t.row(w);
    let hiv: Vec<String> = Wave::ALL.iter().map(|&w| row(w).hiv_test_6mo.percent.to_string()).collect();
    assert_eq!(hiv, ["57.9", "82.4", "76.3"]);
    assert_eq!(row(Wave::OneMonth).hiv_test_6mo.n, 34);
    let json: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
    assert_eq!(json["waves"][0]["spoke_to_pca"], serde_json::Value::Null);
    assert_eq!(json["waves"][1]["retention"], 77.4);
    assert!(t.render_text().contains("48 (77.4%)"));
}

#[test]
fn tabulation_ignores_record_order() {
    use rand::seq::SliceRandom;
    let mut recs = fixture_survey();
    let reference = tabulate_outcomes(&recs, false).unwrap();
    recs.shuffle(&mut common::rng(5));
    assert_eq!(tabulate_outcomes(&recs, false).unwrap(), reference);
}
