//! HTTP/JSON front end for a [`Platform`].
//!
//! Callers identify themselves with the `X-User` header; the name is mapped
//! to a wallet through the configured wallet file.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use licensechain::codescan::ScanError;
use licensechain::contracts::{ContractError, ProjectId};
use licensechain::ledger::LedgerError;
use licensechain::licensing::{parse_license_id, LicenseError, LicenseId, LicenseInfo};
use licensechain::registry::ProjectRecord;
use licensechain::service::{Platform, ServiceError, UploadRequest, UploadVerdict};

pub const USER_HEADER: &str = "x-user";
pub const AGREEMENT_HEADER: &str = "x-agreement-block";

/// Upper bound on an upload request body.
pub const MAX_UPLOAD_BYTES: usize = 256 * 1024 * 1024;

pub fn router(platform: Arc<Platform>) -> Router {
    Router::new()
        .route("/api/projects", get(list_projects).post(upload))
        .route("/api/projects/{id}", get(get_project))
        .route("/api/projects/{id}/download", post(download))
        .route("/api/licenses", get(list_licenses))
        .route("/api/licenses/{id}/compatible", get(compatible))
        .route("/api/chain", get(chain))
        .route("/api/chain/verify", get(verify))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(platform)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(status = %self.status, "{}", self.message);
        }
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::Auth(_) => StatusCode::UNAUTHORIZED,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::InvalidInput(_) => StatusCode::BAD_REQUEST,
            ServiceError::Scan(ScanError::Archive(_)) => StatusCode::BAD_REQUEST,
            ServiceError::Scan(ScanError::ResourceLimit(_)) => StatusCode::PAYLOAD_TOO_LARGE,
            ServiceError::Contract(ContractError::NotFound(_) | ContractError::UnknownParent(_)) => {
                StatusCode::NOT_FOUND
            }
            ServiceError::Contract(ContractError::Ledger(LedgerError::ConsensusRejected { .. }))
            | ServiceError::Ledger(LedgerError::ConsensusRejected { .. }) => StatusCode::SERVICE_UNAVAILABLE,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<LicenseError> for ApiError {
    fn from(e: LicenseError) -> Self {
        ApiError::bad_request(e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs blocking platform work off the async executor.
async fn blocking<T, F>(platform: &Arc<Platform>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Platform) -> Result<T, ServiceError> + Send + 'static,
{
    let platform = platform.clone();
    tokio::task::spawn_blocking(move || f(&platform))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

fn caller(headers: &HeaderMap) -> ApiResult<String> {
    headers
        .get(USER_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(|s| s.trim().to_owned())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "missing X-User header"))
}

fn project_id(raw: &str) -> ApiResult<ProjectId> {
    raw.parse().map_err(|_| ApiError::new(StatusCode::NOT_FOUND, format!("project {raw} not found")))
}

#[derive(Debug, Deserialize)]
struct SearchParams {
    #[serde(default)]
    query: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ProjectSummary {
    pub project_id: ProjectId,
    pub name: String,
    pub description: String,
    pub uploader: String,
    pub license: LicenseId,
}

impl From<ProjectRecord> for ProjectSummary {
    fn from(r: ProjectRecord) -> Self {
        ProjectSummary {
            project_id: r.project_id,
            name: r.name,
            description: r.description,
            uploader: r.uploader,
            license: r.license,
        }
    }
}

async fn list_projects(
    State(p): State<Arc<Platform>>,
    Query(params): Query<SearchParams>,
) -> ApiResult<Json<Vec<ProjectSummary>>> {
    let records = blocking(&p, move |p| p.search_projects(&params.query)).await?;
    Ok(Json(records.into_iter().map(ProjectSummary::from).collect()))
}

async fn get_project(State(p): State<Arc<Platform>>, Path(id): Path<String>) -> ApiResult<Json<ProjectRecord>> {
    let id = project_id(&id)?;
    Ok(Json(blocking(&p, move |p| p.get_project(&id)).await?))
}

async fn upload(State(p): State<Arc<Platform>>, headers: HeaderMap, mut form: Multipart) -> ApiResult<Response> {
    let username = caller(&headers)?;
    let mut archive: Option<Bytes> = None;
    let mut name = None;
    let mut description = String::new();
    let mut license = None;
    let mut parents = Vec::new();
    while let Some(field) = form.next_field().await.map_err(|e| ApiError::bad_request(e.body_text()))? {
        let field_name = field.name().unwrap_or_default().to_owned();
        if field_name == "archive" {
            archive = Some(field.bytes().await.map_err(|e| ApiError::bad_request(e.body_text()))?);
            continue;
        }
        let text = field.text().await.map_err(|e| ApiError::bad_request(e.body_text()))?;
        match field_name.as_str() {
            "name" => name = Some(text),
            "description" => description = text,
            "license" => license = Some(parse_license_id(&text)?),
            "parents" | "parents[]" => {
                if !text.trim().is_empty() {
                    parents.push(text.trim().parse::<ProjectId>().map_err(|e| ApiError::bad_request(e.to_string()))?);
                }
            }
            other => return Err(ApiError::bad_request(format!("unexpected form field {other:?}"))),
        }
    }
    let request = UploadRequest {
        username,
        archive: archive.ok_or_else(|| ApiError::bad_request("missing archive field"))?.to_vec(),
        name: name.ok_or_else(|| ApiError::bad_request("missing name field"))?,
        description,
        license: license.ok_or_else(|| ApiError::bad_request("missing license field"))?,
        parents,
    };
    let verdict = blocking(&p, move |p| p.upload_workflow(request)).await?;
    let status = match verdict {
        UploadVerdict::Accepted { .. } => StatusCode::CREATED,
        UploadVerdict::Conflict { .. } => StatusCode::CONFLICT,
    };
    Ok((status, Json(verdict)).into_response())
}

async fn download(State(p): State<Arc<Platform>>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Response> {
    let username = caller(&headers)?;
    let id = project_id(&id)?;
    let d = blocking(&p, move |p| p.download_workflow(&username, &id)).await?;
    let disposition = format!("attachment; filename=\"{}.zip\"", d.project_id);
    let mut response = d.archive.into_response();
    let h = response.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/zip"));
    h.insert(header::CONTENT_DISPOSITION, HeaderValue::from_str(&disposition).expect("ascii id"));
    h.insert(AGREEMENT_HEADER, HeaderValue::from(d.agreement_block));
    h.insert("x-license", HeaderValue::from_static(d.license.as_str()));
    Ok(response)
}

async fn list_licenses() -> Json<Vec<LicenseInfo>> {
    Json(LicenseId::ALL.iter().map(|l| l.info()).collect())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CompatibleSet {
    pub origin: LicenseId,
    pub compatible: Vec<LicenseId>,
}

async fn compatible(State(p): State<Arc<Platform>>, Path(id): Path<String>) -> ApiResult<Json<CompatibleSet>> {
    let origin = parse_license_id(&id)?;
    Ok(Json(CompatibleSet { origin, compatible: p.matrix().compatible_with(origin).into_iter().collect() }))
}

async fn chain(State(p): State<Arc<Platform>>) -> ApiResult<Response> {
    let body =
        blocking(&p, |p| Ok(serde_json::to_vec(p.contracts().chain().blocks()).expect("blocks serialize"))).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

async fn verify(State(p): State<Arc<Platform>>) -> ApiResult<Response> {
    let report = blocking(&p, |p| p.verify_chain()).await?;
    Ok(Json(report).into_response())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn service_errors_map_to_statuses() {
        let status = |e: ServiceError| ApiError::from(e).status;
        assert_eq!(status(ServiceError::Auth("x".into())), StatusCode::UNAUTHORIZED);
        assert_eq!(status(ServiceError::NotFound(ProjectId::numbered(1))), StatusCode::NOT_FOUND);
        assert_eq!(status(ServiceError::Scan(ScanError::ResourceLimit("big".into()))), StatusCode::PAYLOAD_TOO_LARGE);
        let rejected = LedgerError::ConsensusRejected { approvals: 1, threshold: 2, node_count: 3 };
        assert_eq!(status(ServiceError::Ledger(rejected)), StatusCode::SERVICE_UNAVAILABLE);
        assert_eq!(status(ServiceError::ArchiveMissing(ProjectId::numbered(1))), StatusCode::INTERNAL_SERVER_ERROR);
    }

    #[test]
    fn caller_header_is_required_and_trimmed() {
        let mut h = HeaderMap::new();
        assert_eq!(caller(&h).unwrap_err().status, StatusCode::UNAUTHORIZED);
        h.insert(USER_HEADER, HeaderValue::from_static("  "));
        assert!(caller(&h).is_err());
        h.insert(USER_HEADER, HeaderValue::from_static(" bob "));
        assert_eq!(caller(&h).unwrap(), "bob");
    }
}
