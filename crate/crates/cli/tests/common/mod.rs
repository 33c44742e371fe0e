#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use pcaselect::campaign::CandidateStatus;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn pcaselect<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = Command::new(env!("CARGO_BIN_EXE_pcaselect")).args(args).output().expect("binary runs");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn s(p: &Path) -> String {
    p.display().to_string()
}

/// Writes the fixture network and a small config into `dir`, then starts a
/// campaign in `dir/<name>`.
pub fn init_campaign(dir: &Path, name: &str) -> PathBuf {
    let net = dir.join("network.txt");
    if !net.exists() {
        let o = pcaselect([
            "ingest",
            "--roster",
            &s(&fixture("roster.txt")),
            "--platform",
            &s(&fixture("platform_edges.csv")),
            "--field",
            &s(&fixture("field_log.csv")),
            "--window-start",
            "2016-05-01",
            "--window-end",
            "2016-05-14",
            "--out",
            &s(&net),
        ]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        std::fs::write(dir.join("run.cfg"), "num_samples=200\nruns_per_sample=10\nmaster_seed=42\n").unwrap();
    }
    let campaign = dir.join(name);
    let o = pcaselect([
        "init",
        "--network",
        &s(&net),
        "--roster",
        &s(&fixture("roster.txt")),
        "--config",
        &s(&dir.join("run.cfg")),
        "--campaign",
        &s(&campaign),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    campaign
}

/// Scripted recruitment outcome for the candidate at `rank` in `round`:
/// the top four are trained, the fifth declines in the first round, and the
/// rest cannot be reached.
pub fn script(round: usize, rank: usize) -> &'static [CandidateStatus] {
    use CandidateStatus::*;
    match (round, rank) {
        (_, 0..=3) => &[Contacted, Trained],
        (0, 4) => &[Contacted, Declined],
        _ => &[Unreachable],
    }
}
