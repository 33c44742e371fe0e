//! Local HTTP service for the dashboard.
//!
//! One writer: every mutation takes the store mutex, persists, then swaps a
//! fresh immutable snapshot in for readers. Reads and what-if queries never
//! wait on the writer beyond that swap.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex, PoisonError, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pcaselect::campaign::{tabulate_outcomes, CampaignError, CampaignState, CampaignStore, CandidateStatus};
use pcaselect::ingest::{read_survey, SurveyRecord};
use serde::Deserialize;
use serde_json::Value;

use crate::{campaign_baselines, views, CliError, ErrorKind};

struct AppState {
    writer: Mutex<CampaignStore>,
    snapshot: RwLock<Arc<CampaignState>>,
    survey: Option<Vec<SurveyRecord>>,
}

impl AppState {
    fn snapshot(&self) -> Arc<CampaignState> {
        self.snapshot.read().unwrap_or_else(PoisonError::into_inner).clone()
    }
}

type Shared = Arc<AppState>;

pub struct ApiError(CliError);

impl<E: Into<CliError>> From<E> for ApiError {
    fn from(e: E) -> Self {
        ApiError(e.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0.kind {
            ErrorKind::Validation => StatusCode::BAD_REQUEST,
            ErrorKind::StateMachine => StatusCode::CONFLICT,
            ErrorKind::Io => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::to_value(&self.0).expect("error serializes"))).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

pub fn router(store: CampaignStore, survey: Option<Vec<SurveyRecord>>) -> Router {
    let snapshot = RwLock::new(Arc::new(store.state().clone()));
    let app = Arc::new(AppState { writer: Mutex::new(store), snapshot, survey });
    Router::new()
        .route("/network", get(network))
        .route("/campaign", get(campaign))
        .route("/belief", get(belief))
        .route("/report", get(report))
        .route("/rounds/open", post(open_round))
        .route("/rounds/close", post(close_round))
        .route("/candidates/{id}/status", post(record_status))
        .route("/whatif/select", post(what_if))
        .with_state(app)
}

async fn mutate<F>(app: Shared, f: F) -> ApiResult
where
    F: FnOnce(&mut CampaignStore) -> Result<Value, CampaignError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || {
        let mut store = app.writer.lock().unwrap_or_else(PoisonError::into_inner);
        let out = f(&mut store)?;
        *app.snapshot.write().unwrap_or_else(PoisonError::into_inner) = Arc::new(store.state().clone());
        Ok(Json(out))
    })
    .await
    .map_err(|e| ApiError(CliError::io(format!("worker failed: {e}"))))?
}

async fn network(State(app): State<Shared>) -> ApiResult {
    let s = app.snapshot();
    Ok(Json(views::network(s.network(), s.belief())))
}

async fn campaign(State(app): State<Shared>) -> ApiResult {
    Ok(Json(views::campaign(&app.snapshot())))
}

async fn belief(State(app): State<Shared>) -> ApiResult {
    let s = app.snapshot();
    Ok(Json(views::belief(s.network(), s.belief())))
}

#[derive(Deserialize)]
struct ReportQuery {
    #[serde(default)]
    complete_case: bool,
    #[serde(default)]
    baselines: bool,
}

async fn report(State(app): State<Shared>, Query(q): Query<ReportQuery>) -> ApiResult {
    let records = app
        .survey
        .as_ref()
        .ok_or_else(|| CliError::validation("no survey loaded; start the service with --survey"))?;
    let table = tabulate_outcomes(records, q.complete_case)?;
    let baselines = if q.baselines {
        let s = app.snapshot();
        Some(tokio::task::spawn_blocking(move || campaign_baselines(&s)).await.expect("baseline worker")?)
    } else {
        None
    };
    Ok(Json(views::report(&table, baselines.as_deref())))
}

async fn open_round(State(app): State<Shared>) -> ApiResult {
    mutate(app, |store| store.open_round().map(views::round)).await
}

async fn close_round(State(app): State<Shared>) -> ApiResult {
    mutate(app, |store| store.close_round().map(views::round)).await
}

#[derive(Deserialize)]
struct StatusBody {
    status: CandidateStatus,
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(b)| b).map_err(|e| ApiError(CliError::validation(e.body_text())))
}

async fn record_status(
    State(app): State<Shared>,
    UrlPath(id): UrlPath<String>,
    payload: Result<Json<StatusBody>, JsonRejection>,
) -> ApiResult {
    let status = body(payload)?.status;
    mutate(app, move |store| {
        store.record_status(&id, status)?;
        Ok(views::round(store.state().open_round_ref().expect("recorded into the open round")))
    })
    .await
}

#[derive(Deserialize)]
struct WhatIfBody {
    #[serde(default)]
    exclusions: Vec<String>,
    k: Option<usize>,
}

async fn what_if(State(app): State<Shared>, payload: Result<Json<WhatIfBody>, JsonRejection>) -> ApiResult {
    let req = body(payload)?;
    let s = app.snapshot();
    tokio::task::spawn_blocking(move || {
        let k = req.k.unwrap_or(s.config().k_select);
        let ranked = s.what_if_select(&req.exclusions, k)?;
        Ok(Json(views::ranked(s.network(), &ranked)))
    })
    .await
    .map_err(|e| ApiError(CliError::io(format!("worker failed: {e}"))))?
}

/// Runs the service until Ctrl-C. Every mutation is already fsynced when
/// its response is sent, so shutdown has nothing left to flush.
pub fn serve(dir: &Path, bind: SocketAddr, survey: Option<&Path>) -> Result<String, CliError> {
    let store = CampaignStore::open(dir)?;
    let survey = survey.map(read_survey).transpose()?;
    if !bind.ip().is_loopback() {
        eprintln!("warning: serving on non-loopback address {bind}; the service has no authentication");
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .map_err(|e| CliError::io(format!("cannot bind {bind}: {e}")))?;
        eprintln!("serving {} on http://{}", dir.display(), listener.local_addr().unwrap_or(bind));
        axum::serve(listener, router(store, survey))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::io(format!("server error: {e}")))
    })?;
    Ok(String::new())
}
