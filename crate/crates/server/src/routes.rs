use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use beliefminer_core::api::{
    AlterationRequest, CloseCohortRequest, CohortState, CompletionReceipt, ConfidenceRequest,
    DemographicsRequest, Envelope, ErrorBody, ErrorDetail, LinkRequest, ReviewDecisionRequest,
    UsabilityRequest,
};
use beliefminer_core::collection::{
    CohortReport, LinkOutcome, SassyProfile, SessionError, SessionView, TestOutcome,
};
use beliefminer_core::formats::{LinkRef, NetworkRecord};
use beliefminer_core::network::Side;
use beliefminer_core::qualitycontrol::{QcError, ReviewRecord};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::store::{Store, StoreError};

pub type AppState = Arc<Store>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: ErrorDetail {
                    code: code.into(),
                    message: message.into(),
                    detail: None,
                },
            },
        }
    }

    fn with_detail(mut self, detail: serde_json::Value) -> Self {
        self.body.error.detail = Some(detail);
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let msg = e.to_string();
        match e {
            StoreError::NotFound(_) => Self::new(StatusCode::NOT_FOUND, "not_found", msg),
            StoreError::UnknownCohort(_) => Self::new(StatusCode::NOT_FOUND, "unknown_cohort", msg),
            StoreError::CohortClosed => Self::new(StatusCode::CONFLICT, "cohort_closed", msg),
            StoreError::CohortOpen(_) => Self::new(StatusCode::CONFLICT, "cohort_open", msg),
            StoreError::Session(se) => {
                let status = match se {
                    SessionError::WrongStage { .. } | SessionError::Incomplete(_) => StatusCode::CONFLICT,
                    _ => StatusCode::UNPROCESSABLE_ENTITY,
                };
                let detail = serde_json::to_value(&se).ok();
                let err = Self::new(status, se.code(), msg);
                match detail {
                    Some(d) => err.with_detail(d),
                    None => err,
                }
            }
            StoreError::Qc(q) => match q {
                QcError::UnknownWorker(_) => Self::new(StatusCode::NOT_FOUND, "not_found", msg),
                QcError::AlreadyDecided { .. } => Self::new(StatusCode::CONFLICT, "already_decided", msg),
                QcError::InvalidDecision => {
                    Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_decision", msg)
                }
                _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", msg),
            },
            StoreError::Journal(_) | StoreError::Corrupt { .. } => {
                tracing::error!(error = %msg, "storage failure");
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", "storage failure")
            }
        }
    }
}

/// JSON body whose parse errors use the API error format.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Self(v)),
            Err(rejection) => Err(bad_body(rejection)),
        }
    }
}

fn bad_body(rejection: JsonRejection) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, "bad_request", rejection.body_text())
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/catalog", get(catalog))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/test", post(submit_test))
        .route("/sessions/{id}/demographics", post(submit_demographics))
        .route("/sessions/{id}/links", post(submit_link))
        .route("/sessions/{id}/alteration", post(submit_alteration))
        .route("/sessions/{id}/confidence", post(submit_confidence))
        .route("/sessions/{id}/usability", post(submit_usability))
        .route("/sessions/{id}/complete", post(complete))
        .route("/admin/cohorts", get(cohort_state))
        .route("/admin/cohorts/close", post(close_cohort))
        .route("/admin/cohorts/{n}", get(cohort_report))
        .route("/admin/reviews", get(list_reviews))
        .route("/admin/reviews/{worker_id}", post(decide_review))
        .route("/admin/networks", get(list_networks))
        .with_state(state)
}

async fn catalog(State(store): State<AppState>) -> Response {
    (
        [(axum::http::header::CONTENT_TYPE, "application/json")],
        store.protocol().catalog.to_json(),
    )
        .into_response()
}

async fn create_session(State(store): State<AppState>) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    Ok((StatusCode::CREATED, Json(store.create_session()?)))
}

async fn get_session(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionView> {
    Ok(Json(store.view(&id).await?))
}

fn envelope<T>((result, session): (T, SessionView)) -> Json<Envelope<T>> {
    Json(Envelope { result, session })
}

async fn submit_test(
    State(store): State<AppState>,
    Path(id): Path<String>,
    ApiJson(answer): ApiJson<LinkRef>,
) -> ApiResult<Envelope<TestOutcome>> {
    Ok(envelope(store.mutate(&id, |s, p| s.submit_test(p, &answer)).await?))
}

async fn submit_demographics(
    State(store): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<DemographicsRequest>,
) -> ApiResult<Envelope<SassyProfile>> {
    Ok(envelope(
        store
            .mutate(&id, |s, p| s.submit_demographics(p, req.answers, req.sassy))
            .await?,
    ))
}

async fn submit_link(
    State(store): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<LinkRequest>,
) -> ApiResult<Envelope<LinkOutcome>> {
    let link = LinkRef {
        cause: req.cause,
        effect: req.effect,
    };
    let first: Option<Side> = req.first_side;
    Ok(envelope(store.mutate(&id, |s, p| s.submit_link(p, &link, first)).await?))
}

async fn submit_alteration(
    State(store): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<AlterationRequest>,
) -> ApiResult<Envelope<()>> {
    Ok(envelope(
        store.mutate(&id, |s, p| s.submit_alteration(p, &req.actions)).await?,
    ))
}

async fn submit_confidence(
    State(store): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<ConfidenceRequest>,
) -> ApiResult<Envelope<()>> {
    Ok(envelope(
        store.mutate(&id, |s, _| s.submit_confidence(req.confidence)).await?,
    ))
}

async fn submit_usability(
    State(store): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<UsabilityRequest>,
) -> ApiResult<Envelope<()>> {
    Ok(envelope(
        store.mutate(&id, |s, p| s.submit_usability(p, &req.ratings)).await?,
    ))
}

async fn complete(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Envelope<CompletionReceipt>> {
    Ok(envelope(store.complete(&id).await?))
}

async fn cohort_state(State(store): State<AppState>) -> Json<CohortState> {
    Json(store.cohort_state())
}

async fn close_cohort(
    State(store): State<AppState>,
    body: Bytes,
) -> ApiResult<CohortState> {
    // the body is optional here
    let req: CloseCohortRequest = if body.iter().all(u8::is_ascii_whitespace) {
        CloseCohortRequest::default()
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))?
    };
    Ok(Json(store.close_cohort(req.stop)?))
}

async fn cohort_report(State(store): State<AppState>, Path(n): Path<u32>) -> ApiResult<CohortReport> {
    Ok(Json(store.cohort_report(n).await?))
}

#[derive(Debug, Deserialize)]
struct ReviewFilter {
    #[serde(default)]
    pending: bool,
}

async fn list_reviews(
    State(store): State<AppState>,
    Query(filter): Query<ReviewFilter>,
) -> Json<Vec<ReviewRecord>> {
    Json(store.reviews(filter.pending))
}

async fn decide_review(
    State(store): State<AppState>,
    Path(worker_id): Path<String>,
    ApiJson(req): ApiJson<ReviewDecisionRequest>,
) -> ApiResult<ReviewRecord> {
    Ok(Json(store.decide(&worker_id, req.decision, &req.note)?))
}

async fn list_networks(State(store): State<AppState>) -> Json<Vec<NetworkRecord>> {
    Json(store.networks().iter().map(NetworkRecord::from).collect())
}
