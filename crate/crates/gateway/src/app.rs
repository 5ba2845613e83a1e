//! HTTP handlers and the front middleware (auth, routing, logging).

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Extension, Json, Router};
use chrono::Utc;
use payroll_cache::{history_key, statement_key, Cache, CacheStats};
use payroll_core::{
    apply_employee_change, verify_timecard, ChangeRequest, CompensationModel, EarningStatement,
    Employee, EmployeeId, PayPeriod, PayrollRun, QuarterHours, RuleSetCatalog, RunId, TimeCard,
    Update, FIG2_NG,
};
use payroll_datastore::{Store, StoreError};
use payroll_taskqueue::{JobId, JobKind, JobQueue, QueueMetrics, RunPayrollPayload};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::auth::{Principal, TokenTable};
use crate::error::ApiError;
use crate::reqlog::{RequestLog, RequestRecord};
use crate::routing::{TrafficTable, VersionWeights};
use crate::versions::{AppVersion, VersionRegistry};

pub const HEADER_VERSION: &str = "x-app-version";
pub const HEADER_CACHE: &str = "x-cache";
/// Sticky routing key; the bearer token is used when absent.
pub const HEADER_CLIENT: &str = "x-client-id";

pub struct AppState {
    pub store: Arc<Store>,
    pub cache: Arc<Cache>,
    pub queue: Arc<JobQueue>,
    pub catalog: Arc<RuleSetCatalog>,
    pub tokens: TokenTable,
    pub traffic: TrafficTable,
    pub versions: VersionRegistry,
    pub log: RequestLog,
    pub requests: RequestCounters,
}

#[derive(Debug, Default)]
pub struct RequestCounters {
    inner: Mutex<RequestCounts>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestCounts {
    pub total: u64,
    pub by_version: BTreeMap<String, u64>,
}

impl RequestCounters {
    fn record(&self, version: Option<&str>) {
        let mut c = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        c.total += 1;
        if let Some(v) = version {
            *c.by_version.entry(v.to_string()).or_default() += 1;
        }
    }

    pub fn snapshot(&self) -> RequestCounts {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

/// The app version picked for a request.
#[derive(Clone)]
pub struct Selected(pub Arc<dyn AppVersion>);

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/employees", post(create_employee))
        .route("/v1/employees/{id}", get(get_employee).patch(change_employee))
        .route("/v1/employees/{id}/statements/{period}", get(get_statement))
        .route("/v1/employees/{id}/history", get(get_history))
        .route("/v1/timecards", post(submit_timecard))
        .route("/v1/payroll/runs", post(start_run))
        .route("/v1/payroll/runs/{run_id}", get(get_run))
        .route("/v1/jobs/{id}", get(get_job))
        .route("/v1/admin/traffic", put(set_traffic).get(get_traffic))
        .route("/v1/metrics", get(metrics))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .layer(middleware::from_fn_with_state(state.clone(), front))
        .with_state(state)
}

async fn front(State(state): State<Arc<AppState>>, mut req: Request, next: Next) -> Response {
    let method = req.method().to_string();
    let path = req.uri().path().to_string();
    let mut role = "anonymous".to_string();
    let mut version: Option<String> = None;

    let response = if path == "/healthz" {
        next.run(req).await
    } else {
        let header = req.headers().get("authorization").and_then(|h| h.to_str().ok());
        match state.tokens.authenticate_header(header) {
            Err(e) => ApiError::from(e).into_response(),
            Ok(principal) => {
                role = principal.role.label().to_string();
                let client = req
                    .headers()
                    .get(HEADER_CLIENT)
                    .and_then(|h| h.to_str().ok())
                    .or(header)
                    .unwrap_or_default()
                    .to_string();
                let weights = state.traffic.snapshot();
                let picked = weights
                    .route(&client)
                    .map_err(ApiError::from)
                    .and_then(|label| {
                        state.versions.get(label).ok_or_else(|| {
                            ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "NoVersions", "version not registered")
                        })
                    });
                match picked {
                    Err(e) => e.into_response(),
                    Ok(app) => {
                        let label = app.label().to_string();
                        req.extensions_mut().insert(principal);
                        req.extensions_mut().insert(Selected(app));
                        let mut resp = next.run(req).await;
                        if let Ok(v) = HeaderValue::from_str(&label) {
                            resp.headers_mut().insert(HEADER_VERSION, v);
                        }
                        version = Some(label);
                        resp
                    }
                }
            }
        }
    };

    let cache = response
        .headers()
        .get(HEADER_CACHE)
        .and_then(|h| h.to_str().ok())
        .map(str::to_string);
    state.requests.record(version.as_deref());
    state.log.write(&RequestRecord {
        ts: RequestRecord::timestamp(Utc::now()),
        role,
        method,
        path,
        status: response.status().as_u16(),
        version,
        cache,
    });
    response
}

fn parse_json<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

fn employee_id(raw: &str) -> Result<EmployeeId, ApiError> {
    EmployeeId::new(raw).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string()))
}

fn period(raw: &str) -> Result<PayPeriod, ApiError> {
    raw.parse().map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "InvalidPeriod", format!("{raw:?}: {e}")))
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NewEmployee {
    pub id: EmployeeId,
    pub name: String,
    pub compensation: CompensationModel,
}

async fn create_employee(
    State(s): State<Arc<AppState>>,
    Extension(p): Extension<Principal>,
    body: Bytes,
) -> Result<(StatusCode, Json<Employee>), ApiError> {
    p.require_admin()?;
    let req: NewEmployee = parse_json(&body)?;
    let emp = Employee::new(req.id, req.name, req.compensation)?;
    s.store.put_employee(&emp)?;
    Ok((StatusCode::CREATED, Json(emp)))
}

async fn get_employee(
    State(s): State<Arc<AppState>>,
    Extension(p): Extension<Principal>,
    Path(id): Path<String>,
) -> Result<Json<Employee>, ApiError> {
    let id = employee_id(&id)?;
    p.may_read_employee(&id)?;
    Ok(Json(s.store.get_employee(&id)?))
}

/// PATCH body: the version the caller last saw plus the change.
#[derive(Debug, Serialize, Deserialize)]
pub struct EmployeePatch {
    pub version: u64,
    pub effective_period: PayPeriod,
    pub description: String,
    pub update: Update,
}

async fn change_employee(
    State(s): State<Arc<AppState>>,
    Extension(p): Extension<Principal>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Employee>, ApiError> {
    p.require_admin()?;
    let id = employee_id(&id)?;
    let patch: EmployeePatch = parse_json(&body)?;
    let current = s.store.get_employee(&id)?;
    if current.version != patch.version {
        return Err(StoreError::VersionConflict {
            id,
            stored: current.version,
            submitted: patch.version,
        }
        .into());
    }
    let next = apply_employee_change(
        &current,
        ChangeRequest {
            effective_period: patch.effective_period,
            description: patch.description,
            update: patch.update,
        },
    )?;
    s.store.put_employee(&next)?;
    Ok(Json(next))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NewTimeCard {
    pub employee_id: EmployeeId,
    pub period: PayPeriod,
    /// Decimal hours in quarter steps, e.g. `"45.00"` or `"7.25"`.
    pub hours: String,
    pub approved: bool,
}

async fn submit_timecard(
    State(s): State<Arc<AppState>>,
    Extension(p): Extension<Principal>,
    body: Bytes,
) -> Result<(StatusCode, Json<TimeCard>), ApiError> {
    p.require_admin()?;
    let req: NewTimeCard = parse_json(&body)?;
    let hours: QuarterHours = req.hours.parse().map_err(|e| {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidHours", format!("{:?}: {e}", req.hours))
    })?;
    let card = TimeCard {
        employee_id: req.employee_id,
        period: req.period,
        hours,
        approved: req.approved,
        verified: false,
    };
    let card = verify_timecard(&card, &s.store.employees(), &s.store.timecards_for(card.period))?;
    s.store.put_timecard(&card)?;
    Ok((StatusCode::CREATED, Json(card)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunRequest {
    pub period: PayPeriod,
    #[serde(default = "default_ruleset")]
    pub ruleset_id: String,
    /// Replace the period's current run.
    #[serde(default)]
    pub supersede: bool,
}

fn default_ruleset() -> String {
    FIG2_NG.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunAccepted {
    pub job_id: JobId,
    pub run_id: RunId,
}

async fn start_run(
    State(s): State<Arc<AppState>>,
    Extension(p): Extension<Principal>,
    body: Bytes,
) -> Result<(StatusCode, Json<RunAccepted>), ApiError> {
    p.require_admin()?;
    let req: RunRequest = parse_json(&body)?;
    if s.catalog.get(&req.ruleset_id).is_none() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "UnknownRuleset",
            format!("no rule set {:?}", req.ruleset_id),
        ));
    }
    if !req.supersede {
        if let Some(existing) = s.store.current_run(req.period) {
            return Err(StoreError::RunExists { period: req.period, existing: existing.run_id.clone() }.into());
        }
    }
    let run_id = RunId::new(format!("run-{}", uuid::Uuid::new_v4()));
    let job_id = s.queue.enqueue(
        JobKind::RunPayroll,
        RunPayrollPayload {
            period: req.period,
            ruleset_id: req.ruleset_id,
            run_id: run_id.clone(),
            supersede: req.supersede,
        },
    )?;
    Ok((StatusCode::ACCEPTED, Json(RunAccepted { job_id, run_id })))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunView {
    #[serde(flatten)]
    pub run: PayrollRun,
    pub superseded: bool,
}

async fn get_run(
    State(s): State<Arc<AppState>>,
    Extension(p): Extension<Principal>,
    Path(run_id): Path<String>,
) -> Result<Json<RunView>, ApiError> {
    p.require_admin()?;
    let run_id = RunId::new(run_id);
    let run = s.store.get_run(&run_id)?;
    Ok(Json(RunView { run: (*run).clone(), superseded: s.store.is_superseded(&run_id) }))
}

async fn get_job(
    State(s): State<Arc<AppState>>,
    Extension(p): Extension<Principal>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    p.require_admin()?;
    Ok(Json(s.queue.poll_status(&JobId::new(id))?).into_response())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementResponse {
    pub version: String,
    pub statement: EarningStatement,
    /// Statement text in the selected version's format.
    pub text: String,
}

fn with_cache_marker(body: Vec<u8>, lookup: payroll_cache::Lookup) -> Response {
    let mut headers = HeaderMap::new();
    headers.insert("content-type", HeaderValue::from_static("application/json"));
    headers.insert(HEADER_CACHE, HeaderValue::from_static(lookup.as_str()));
    (headers, body).into_response()
}

async fn get_statement(
    State(s): State<Arc<AppState>>,
    Extension(p): Extension<Principal>,
    Extension(Selected(app)): Extension<Selected>,
    Path((id, raw_period)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let id = employee_id(&id)?;
    p.may_read_employee(&id)?;
    let period = period(&raw_period)?;
    let key = statement_key(&period.to_string(), id.as_str());
    let (bytes, lookup) = s.cache.get_or_load(&key, || {
        let stmt = s.store.statement(&id, period)?;
        Ok::<_, ApiError>(Bytes::from(serde_json::to_vec(&stmt).expect("statement serializes")))
    })?;
    let statement: EarningStatement =
        serde_json::from_slice(&bytes).expect("cache holds serialized statements");
    let body = StatementResponse {
        version: app.label().to_string(),
        text: app.render(&statement),
        statement,
    };
    Ok(with_cache_marker(serde_json::to_vec(&body).expect("response serializes"), lookup))
}

#[derive(Debug, Deserialize)]
pub struct HistoryQuery {
    pub from: Option<String>,
    pub to: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryResponse {
    pub employee_id: EmployeeId,
    pub from: PayPeriod,
    pub to: PayPeriod,
    pub statements: Vec<EarningStatement>,
}

async fn get_history(
    State(s): State<Arc<AppState>>,
    Extension(p): Extension<Principal>,
    Path(id): Path<String>,
    Query(q): Query<HistoryQuery>,
) -> Result<Response, ApiError> {
    let id = employee_id(&id)?;
    p.may_read_employee(&id)?;
    let (Some(from), Some(to)) = (q.from, q.to) else {
        return Err(ApiError::bad_request("history needs from=YYYY-MM and to=YYYY-MM"));
    };
    let (from, to) = (period(&from)?, period(&to)?);
    let key = history_key(id.as_str(), &from.to_string(), &to.to_string());
    let (bytes, lookup) = s.cache.get_or_load(&key, || {
        let statements = s.store.get_history(&id, from, to)?;
        let body = HistoryResponse { employee_id: id.clone(), from, to, statements };
        Ok::<_, ApiError>(Bytes::from(serde_json::to_vec(&body).expect("history serializes")))
    })?;
    Ok(with_cache_marker(bytes.to_vec(), lookup))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficBody {
    pub weights: VersionWeights,
}

async fn set_traffic(
    State(s): State<Arc<AppState>>,
    Extension(p): Extension<Principal>,
    body: Bytes,
) -> Result<Json<TrafficBody>, ApiError> {
    p.require_admin()?;
    let req: TrafficBody = parse_json(&body)?;
    req.weights.validate(s.versions.labels())?;
    let applied = s.traffic.set(req.weights);
    Ok(Json(TrafficBody { weights: (*applied).clone() }))
}

async fn get_traffic(
    State(s): State<Arc<AppState>>,
    Extension(p): Extension<Principal>,
) -> Result<Json<TrafficBody>, ApiError> {
    p.require_admin()?;
    Ok(Json(TrafficBody { weights: (*s.traffic.snapshot()).clone() }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheMetrics {
    pub hits: u64,
    pub misses: u64,
    pub entries: usize,
}

impl From<CacheStats> for CacheMetrics {
    fn from(s: CacheStats) -> Self {
        CacheMetrics { hits: s.hits, misses: s.misses, entries: s.entries }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub queue: QueueMetrics,
    pub cache: CacheMetrics,
    pub requests: RequestCounts,
    pub traffic: VersionWeights,
}

async fn metrics(
    State(s): State<Arc<AppState>>,
    Extension(p): Extension<Principal>,
) -> Result<Json<Metrics>, ApiError> {
    p.require_admin()?;
    Ok(Json(Metrics {
        queue: s.queue.metrics(),
        cache: s.cache.stats().into(),
        requests: s.requests.snapshot(),
        traffic: (*s.traffic.snapshot()).clone(),
    }))
}
