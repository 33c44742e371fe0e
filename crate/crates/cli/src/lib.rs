//! `pcaselect` command line: ingest network data, run a campaign round by
//! round, report outcomes, and serve the campaign to the dashboard.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 3 state-machine
//! violation. Failures print one line of JSON on stderr.

mod error;
pub mod service;
pub mod views;

use std::fmt::Write as _;
use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcaselect::baselines::{compare_baselines, BaselineRow};
use pcaselect::campaign::{
    simulate_campaign, tabulate_outcomes, CampaignState, CampaignStore, CandidateStatus, RecruitBehavior,
};
use pcaselect::config::{read_config, RunConfig};
use pcaselect::graph::UncertainNetwork;
use pcaselect::ingest::{
    merge_sources, read_field_log, read_network_file, read_platform_edges, read_roster, read_survey,
    write_network_file, RecruitmentWindow,
};
use pcaselect::selector::{greedy_select, BeliefState};

pub use error::{CliError, ErrorKind};

#[derive(Debug, Parser)]
#[command(name = "pcaselect", version, about = "Peer change agent selection on uncertain networks")]
pub struct Cli {
    /// Worker threads for Monte Carlo estimation (default: all cores).
    /// Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Merge roster, platform edges and field log into a network file.
    Ingest(IngestArgs),
    /// Start a campaign in a directory.
    Init(InitArgs),
    /// Rank candidates without touching any campaign.
    Select(SelectArgs),
    /// Open the next round and select its candidates.
    Open(CampaignArg),
    /// Record a candidate's recruitment status in the open round.
    Record(RecordArgs),
    /// Close the open round and update the belief.
    Close(CampaignArg),
    /// Show rounds, candidates and totals.
    Status(CampaignArg),
    /// Tabulate survey outcomes, optionally with baseline comparisons.
    Report(ReportArgs),
    /// Run a whole campaign against a random recruitment model.
    Simulate(SimulateArgs),
    /// Serve a campaign over HTTP for the dashboard.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// key=value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `master_seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        Ok(match &self.config {
            Some(p) => read_config(p)?,
            None => RunConfig::default(),
        })
    }

    fn seed(&self, cfg: &RunConfig) -> Result<u64, CliError> {
        self.seed
            .or(cfg.master_seed)
            .ok_or_else(|| CliError::validation("a seed is required: pass --seed or set master_seed in the config"))
    }
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    /// Canonical network file written by `ingest`.
    #[arg(long)]
    pub network: PathBuf,
    /// Roster the network was built from.
    #[arg(long)]
    pub roster: PathBuf,
}

impl NetworkArgs {
    fn load(&self) -> Result<UncertainNetwork, CliError> {
        let roster = read_roster(&self.roster)?;
        Ok(read_network_file(&self.network, Some(&roster))?)
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub roster: PathBuf,
    #[arg(long)]
    pub platform: PathBuf,
    #[arg(long)]
    pub field: PathBuf,
    /// First day of field observation (YYYY-MM-DD); or `window_start` in the config.
    #[arg(long)]
    pub window_start: Option<String>,
    #[arg(long)]
    pub window_end: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Where to write the network file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InitArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Campaign directory.
    #[arg(long)]
    pub campaign: PathBuf,
    /// Replace an existing campaign in that directory.
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Number of candidates (default: k_select).
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated labels to leave out.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CampaignArg {
    #[arg(long)]
    pub campaign: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    #[arg(long)]
    pub campaign: PathBuf,
    /// Candidate label.
    #[arg(long)]
    pub node: String,
    /// contacted, unreachable, declined or trained.
    #[arg(long)]
    pub status: CandidateStatus,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub survey: PathBuf,
    /// Only participants observed at every wave.
    #[arg(long)]
    pub complete_case: bool,
    /// Also compare greedy with degree and betweenness picks for this
    /// campaign's current belief.
    #[arg(long)]
    pub campaign: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub contact_prob: f64,
    #[arg(long, default_value_t = 0.15755)]
    pub decline_prob: f64,
    /// Seed for the recruitment draws (default: the master seed).
    #[arg(long)]
    pub behavior_seed: Option<u64>,
    /// Also write the simulated campaign to this directory.
    #[arg(long)]
    pub save: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub campaign: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Survey file for GET /report.
    #[arg(long)]
    pub survey: Option<PathBuf>,
}

/// Parses arguments, runs the command, prints output or a JSON error line.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.code)
        }
    }
}

pub fn run(cli: Cli) -> Result<String, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::validation("--threads must be at least 1"));
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Ingest(a) => ingest(&a),
        Command::Init(a) => init(&a),
        Command::Select(a) => select(&a),
        Command::Open(a) => {
            let mut store = CampaignStore::open(&a.campaign)?;
            let index = store.open_round()?.index;
            let state = store.state();
            Ok(if a.json { json_out(&views::round(&state.rounds()[index])) } else { round_text(state, index) })
        }
        Command::Record(a) => {
            let mut store = CampaignStore::open(&a.campaign)?;
            store.record_status(&a.node, a.status)?;
            let round = store.state().open_round_ref().expect("recording needs an open round");
            Ok(if a.json {
                json_out(&views::round(round))
            } else {
                format!("{}: {}\n", a.node, a.status)
            })
        }
        Command::Close(a) => {
            let mut store = CampaignStore::open(&a.campaign)?;
            let index = store.close_round()?.index;
            Ok(if a.json {
                json_out(&views::round(&store.state().rounds()[index]))
            } else {
                round_text(store.state(), index)
            })
        }
        Command::Status(a) => {
            let store = CampaignStore::open(&a.campaign)?;
            Ok(if a.json { json_out(&views::campaign(store.state())) } else { status_text(store.state()) })
        }
        Command::Report(a) => report(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Serve(a) => service::serve(&a.campaign, a.bind, a.survey.as_deref()),
    }
}

fn json_out(v: &serde_json::Value) -> String {
    format!("{}\n", serde_json::to_string_pretty(v).expect("value serializes"))
}

fn ingest(a: &IngestArgs) -> Result<String, CliError> {
    let cfg = match &a.config {
        Some(p) => read_config(p)?,
        None => RunConfig::default(),
    };
    let window = match (&a.window_start, &a.window_end) {
        (Some(s), Some(e)) => RecruitmentWindow::parse(s, e)?,
        (None, None) => cfg.window.ok_or_else(|| {
            CliError::validation("the field observation window is required: --window-start/--window-end or config")
        })?,
        _ => return Err(CliError::validation("--window-start and --window-end go together")),
    };
    let roster = read_roster(&a.roster)?;
    let platform = read_platform_edges(&a.platform, &roster)?;
    let field = read_field_log(&a.field, &roster, window)?;
    let net = merge_sources(&platform, &field, &cfg.priors, &roster, cfg.propagation_prob)?;
    let text = write_network_file(&net);
    match &a.out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
            Ok(format!("wrote {} nodes and {} edges to {}\n", net.node_count(), net.edge_count(), path.display()))
        }
        None => Ok(text),
    }
}

fn init(a: &InitArgs) -> Result<String, CliError> {
    let net = a.network.load()?;
    let cfg = a.config.load()?;
    let seed = a.config.seed(&cfg)?;
    let store = CampaignStore::create(&a.campaign, &net, cfg.campaign(seed), a.overwrite)?;
    let c = store.state().config();
    Ok(format!(
        "campaign initialized in {}: {} nodes, {} rounds of {} candidates ({} trained per round), seed {}\n",
        a.campaign.display(),
        net.node_count(),
        c.num_rounds,
        c.k_select,
        c.k_train,
        c.master_seed
    ))
}

fn select(a: &SelectArgs) -> Result<String, CliError> {
    let net = a.network.load()?;
    let cfg = a.config.load()?;
    let seed = a.config.seed(&cfg)?;
    let exclusions = a
        .exclude
        .iter()
        .map(|l| net.node(l).ok_or_else(|| CliError::validation(format!("unknown participant `{l}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let params = cfg.campaign(seed).round_params(0);
    let ranked = greedy_select(&net, a.k.unwrap_or(cfg.k_select), &BeliefState::zero(net.node_count()), &exclusions, &params)?;
    if a.json {
        return Ok(json_out(&views::ranked(&net, &ranked)));
    }
    let mut out = String::new();
    for (i, e) in ranked.entries.iter().enumerate() {
        let _ = writeln!(out, "{:>2}  {:<12} gain {:.4}", i + 1, net.label(e.node), e.marginal_gain);
    }
    let _ = writeln!(out, "expected coverage {:.4}", ranked.total_gain());
    Ok(out)
}

fn round_text(state: &CampaignState, index: usize) -> String {
    let r = &state.rounds()[index];
    let mut out = String::new();
    let phase = if r.is_open() { "open" } else { "closed" };
    let _ = writeln!(out, "round {} ({phase})", r.index + 1);
    for c in &r.candidates {
        let _ = writeln!(out, "  {:<12} gain {:.4}  {}", c.label, c.marginal_gain, c.status);
    }
    if !r.is_open() {
        let _ = writeln!(out, "  trained: {}", if r.trained.is_empty() { "none".into() } else { r.trained.join(" ") });
        let _ = writeln!(out, "  expected influenced after round: {:.4}", state.belief().expected_influenced());
    }
    out
}

fn status_text(state: &CampaignState) -> String {
    let c = state.config();
    let mut out = format!(
        "campaign: {} of {} rounds closed; k_select {}, k_train {}, M {}, R {}, propagation {}, seed {}\n",
        state.closed_rounds(),
        c.num_rounds,
        c.k_select,
        c.k_train,
        c.num_samples,
        c.runs_per_sample,
        c.propagation_prob,
        c.master_seed
    );
    for r in state.rounds() {
        out.push_str(&round_text(state, r.index));
    }
    let _ = writeln!(
        out,
        "totals: {} selected, {} trained, {} declined, {} unreachable",
        state.total_selected(),
        state.total_with_status(CandidateStatus::Trained),
        state.total_with_status(CandidateStatus::Declined),
        state.total_with_status(CandidateStatus::Unreachable)
    );
    let _ = writeln!(out, "expected influenced: {:.4}", state.belief().expected_influenced());
    let _ = writeln!(out, "state hash: {}", state.state_hash());
    out
}

/// Greedy against degree and betweenness for the round the campaign would
/// select next.
pub fn campaign_baselines(state: &CampaignState) -> Result<Vec<BaselineRow>, CliError> {
    let round = state.open_round_ref().map_or(state.rounds().len(), |r| r.index);
    let cfg = state.config();
    Ok(compare_baselines(state.network(), cfg.k_select, state.belief(), &state.exclusions(), &cfg.round_params(round))?)
}

fn report(a: &ReportArgs) -> Result<String, CliError> {
    let records = read_survey(&a.survey)?;
    let table = tabulate_outcomes(&records, a.complete_case)?;
    let baselines = match &a.campaign {
        Some(dir) => Some(campaign_baselines(CampaignStore::open(dir)?.state())?),
        None => None,
    };
    if a.json {
        return Ok(json_out(&views::report(&table, baselines.as_deref())));
    }
    let mut out = table.render_text();
    if let Some(rows) = baselines {
        out.push_str("\nbaseline comparison (coverage of the next selection; diagnostic only)\n");
        for r in rows {
            let _ = writeln!(out, "{:<12} {:>9.4}  {}", r.method, r.coverage, r.nodes.join(" "));
        }
    }
    Ok(out)
}

fn simulate(a: &SimulateArgs) -> Result<String, CliError> {
    let net = a.network.load()?;
    let cfg = a.config.load()?;
    let seed = a.config.seed(&cfg)?;
    let behavior = RecruitBehavior::new(a.contact_prob, a.decline_prob)?;
    let config = cfg.campaign(seed);
    let t = simulate_campaign(&net, &config, behavior, a.behavior_seed.unwrap_or(seed))?;
    if let Some(dir) = &a.save {
        CampaignStore::save(dir, t.state.clone(), false)?;
    }
    if a.json {
        return Ok(json_out(&serde_json::json!({
            "rounds": t.rounds,
            "selected": t.total_selected(),
            "contacted": t.total_contacted(),
            "trained": t.total_trained(),
            "final_coverage": t.final_coverage,
            "state_hash": t.state.state_hash(),
        })));
    }
    let mut out = String::new();
    for (i, r) in t.rounds.iter().enumerate() {
        let _ = writeln!(
            out,
            "round {}: {} selected, {} contacted, {} declined, trained [{}], expected influenced {:.4}",
            i + 1,
            r.selected.len(),
            r.contacted,
            r.declined,
            r.trained.join(" "),
            r.expected_influenced
        );
    }
    let _ = writeln!(
        out,
        "total: {} selected, {} contacted, {} trained; final coverage {:.4}",
        t.total_selected(),
        t.total_contacted(),
        t.total_trained(),
        t.final_coverage
    );
    Ok(out)
}
