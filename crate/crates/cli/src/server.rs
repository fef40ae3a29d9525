//! HTTP API consumed by the review front end.

use std::fs::OpenOptions;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use room_audit_core::report::{set_issue_status, ScanReport, StatusError};
use room_audit_core::rubric::{Issue, IssueCategory, IssueStatus, Source};
use room_audit_core::units::inches_to_cm;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::RwLock;
use tower_http::services::ServeDir;

use crate::commands::{load_report, status_name, summary, write_atomic};
use crate::CliError;

/// Exclusive claim on a report file, held for the life of the server.
/// Dropping it removes the lock file.
#[derive(Debug)]
pub struct ReportLock {
    path: PathBuf,
}

impl ReportLock {
    pub fn acquire(report: &Path) -> Result<Self, CliError> {
        let mut name = report.as_os_str().to_owned();
        name.push(".lock");
        let path = PathBuf::from(name);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(ReportLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::validation(format!(
                "{} is locked by another server (remove {} if that server is gone)",
                report.display(),
                path.display()
            ))),
            Err(e) => Err(CliError::io(&path, e)),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Drop for ReportLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

pub struct AppState {
    report: RwLock<ScanReport>,
    path: PathBuf,
}

pub type SharedState = Arc<AppState>;

pub fn load_state(report_path: &Path) -> Result<SharedState, CliError> {
    let report = load_report(report_path)?;
    Ok(Arc::new(AppState {
        report: RwLock::new(report),
        path: report_path.to_path_buf(),
    }))
}

/// Builds the router. Requests outside `/api` fall through to `assets`
/// when given.
pub fn router(state: SharedState, assets: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/report", get(get_report))
        .route("/api/scene", get(get_scene))
        .route("/api/rubrics", get(get_rubrics))
        .route("/api/summary", get(get_summary))
        .route("/api/issues", get(list_issues))
        .route("/api/issues/{id}", get(get_issue))
        .route("/api/issues/{id}/confirm", post(confirm))
        .route("/api/issues/{id}/dismiss", post(dismiss))
        .with_state(state);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(report: &Path, host: &str, port: u16, assets: Option<&Path>) -> Result<(), CliError> {
    let lock = ReportLock::acquire(report)?;
    let state = load_state(report)?;
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| CliError::validation(format!("bad listen address {host}:{port}: {e}")))?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| CliError::io(Path::new(&addr.to_string()), e))?;
    let local = listener.local_addr().map_err(|e| CliError::io(report, e))?;
    eprintln!("serving {} on http://{local}", report.display());
    axum::serve(listener, router(state, assets))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::io(report, e))?;
    drop(lock);
    Ok(())
}

struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": {"code": self.code, "message": self.message}}))).into_response()
    }
}

impl From<StatusError> for ApiError {
    fn from(e: StatusError) -> Self {
        match e {
            StatusError::UnknownIssue(_) => ApiError {
                status: StatusCode::NOT_FOUND,
                code: "not_found",
                message: e.to_string(),
            },
            StatusError::IllegalTransition { .. } => ApiError {
                status: StatusCode::CONFLICT,
                code: "conflict",
                message: e.to_string(),
            },
        }
    }
}

fn not_found(id: &str) -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        code: "not_found",
        message: format!("no issue `{id}`"),
    }
}

/// An issue joined with the guidance text of its rubric.
#[derive(Debug, Serialize)]
struct IssueView<'a> {
    #[serde(flatten)]
    issue: &'a Issue,
    description: &'a str,
    suggestions: &'a [String],
    sources: &'a [Source],
    measured_cm: Option<f64>,
}

fn view<'a>(report: &'a ScanReport, issue: &'a Issue) -> IssueView<'a> {
    let rubric = report.rubric(&issue.rubric_id);
    IssueView {
        issue,
        description: rubric.map_or("", |r| r.description.as_str()),
        suggestions: rubric.map_or(&[], |r| r.suggestions.as_slice()),
        sources: rubric.map_or(&[], |r| r.sources.as_slice()),
        measured_cm: issue.measured.map(|m| inches_to_cm(m.value)),
    }
}

async fn get_report(State(s): State<SharedState>) -> Json<ScanReport> {
    Json(s.report.read().await.clone())
}

async fn get_scene(State(s): State<SharedState>) -> Json<Value> {
    Json(json!(s.report.read().await.scene))
}

async fn get_rubrics(State(s): State<SharedState>) -> Json<Value> {
    Json(json!(s.report.read().await.rubrics))
}

async fn get_summary(State(s): State<SharedState>) -> Json<Value> {
    Json(summary(&*s.report.read().await))
}

#[derive(Debug, Deserialize)]
struct IssueFilter {
    status: Option<IssueStatus>,
    category: Option<IssueCategory>,
}

async fn list_issues(State(s): State<SharedState>, Query(f): Query<IssueFilter>) -> Json<Value> {
    let report = s.report.read().await;
    let views: Vec<IssueView> = report
        .issues
        .iter()
        .filter(|i| f.status.is_none_or(|st| i.status == st))
        .filter(|i| f.category.is_none_or(|c| i.category == c))
        .map(|i| view(&report, i))
        .collect();
    Json(json!(views))
}

async fn get_issue(State(s): State<SharedState>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let report = s.report.read().await;
    let issue = report.issue(&id).ok_or_else(|| not_found(&id))?;
    Ok(Json(json!(view(&report, issue))))
}

async fn transition(s: &AppState, id: &str, to: IssueStatus) -> Result<Json<Value>, ApiError> {
    let mut report = s.report.write().await;
    let mut updated = report.clone();
    let changed = set_issue_status(&mut updated, id, to)?;
    if changed {
        // Persist before acknowledging; on failure the in-memory copy is untouched.
        write_atomic(&s.path, updated.to_json().as_bytes()).map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "io",
            message: e.message,
        })?;
        *report = updated;
    }
    let issue = report.issue(id).ok_or_else(|| not_found(id))?;
    Ok(Json(json!({"changed": changed, "status": status_name(to), "issue": view(&report, issue)})))
}

async fn confirm(State(s): State<SharedState>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    transition(&s, &id, IssueStatus::Confirmed).await
}

async fn dismiss(State(s): State<SharedState>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    transition(&s, &id, IssueStatus::Dismissed).await
}
