//! Async client for the beliefminer collection service.
//!
//! ```no_run
//! # async fn demo() -> Result<(), beliefminer_client::ClientError> {
//! let client = beliefminer_client::Client::new("http://127.0.0.1:8080")?;
//! let session = client.create_session().await?;
//! let outcome = client
//!     .submit_test(&session.id, "increasing emissions", "increasing CO2")
//!     .await?;
//! assert!(outcome.result.passed);
//! # Ok(())
//! # }
//! ```

use beliefminer_core::api::{
    AlterationRequest, CloseCohortRequest, CohortState, CompletionReceipt, ConfidenceRequest,
    DemographicsRequest, Envelope, ErrorBody, LinkRequest, ReviewDecisionRequest, UsabilityRequest,
};
use beliefminer_core::collection::{
    CohortReport, LinkOutcome, NetworkAlteration, SassyProfile, SessionView, TestOutcome,
};
use beliefminer_core::formats::{LinkRef, NetworkRecord};
use beliefminer_core::network::Side;
use beliefminer_core::qualitycontrol::{Decision, ReviewRecord};
use beliefminer_core::AttributeCatalog;
use reqwest::{Method, StatusCode, Url};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("invalid base URL {0:?}")]
    BaseUrl(String),
    /// The service answered with an error body.
    #[error("{status}: {} ({})", body.error.message, body.error.code)]
    Api { status: StatusCode, body: ErrorBody },
    #[error("HTTP error: {0}")]
    Http(#[from] reqwest::Error),
    #[error("unexpected response ({status}): {message}")]
    Decode { status: StatusCode, message: String },
}

impl ClientError {
    /// Machine-readable error code for API errors.
    pub fn code(&self) -> Option<&str> {
        match self {
            Self::Api { body, .. } => Some(&body.error.code),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: Url,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base_url: &str) -> Result<Self, ClientError> {
        Self::with_http(base_url, reqwest::Client::new())
    }

    pub fn with_http(base_url: &str, http: reqwest::Client) -> Result<Self, ClientError> {
        let mut base = Url::parse(base_url).map_err(|_| ClientError::BaseUrl(base_url.into()))?;
        if base.cannot_be_a_base() {
            return Err(ClientError::BaseUrl(base_url.into()));
        }
        if !base.path().ends_with('/') {
            let path = format!("{}/", base.path());
            base.set_path(&path);
        }
        Ok(Self { base, http })
    }

    pub fn base_url(&self) -> &Url {
        &self.base
    }

    fn url(&self, path: &str) -> Result<Url, ClientError> {
        self.base
            .join(path.trim_start_matches('/'))
            .map_err(|_| ClientError::BaseUrl(format!("{}{path}", self.base)))
    }

    async fn send<B: Serialize + ?Sized, T: DeserializeOwned>(
        &self,
        method: Method,
        path: &str,
        body: Option<&B>,
    ) -> Result<T, ClientError> {
        let text = self.send_text(method, path, body).await?;
        serde_json::from_str(&text.1).map_err(|e| ClientError::Decode {
            status: text.0,
            message: e.to_string(),
        })
    }

    async fn send_text<B: Serialize + ?Sized>(
        &self,
        method: Method,
        path: &str,
        body: Option<&B>,
    ) -> Result<(StatusCode, String), ClientError> {
        let mut req = self.http.request(method, self.url(path)?);
        if let Some(b) = body {
            req = req.json(b);
        }
        let resp = req.send().await?;
        let status = resp.status();
        let text = resp.text().await?;
        if status.is_success() {
            return Ok((status, text));
        }
        match serde_json::from_str::<ErrorBody>(&text) {
            Ok(body) => Err(ClientError::Api { status, body }),
            Err(_) => Err(ClientError::Decode {
                status,
                message: text,
            }),
        }
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        self.send::<(), T>(Method::GET, path, None).await
    }

    async fn post<B: Serialize + ?Sized, T: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<T, ClientError> {
        self.send(Method::POST, path, Some(body)).await
    }

    pub async fn health(&self) -> Result<(), ClientError> {
        self.send_text::<()>(Method::GET, "health", None).await.map(|_| ())
    }

    pub async fn catalog(&self) -> Result<AttributeCatalog, ClientError> {
        let (status, text) = self.send_text::<()>(Method::GET, "catalog", None).await?;
        AttributeCatalog::from_json(&text).map_err(|e| ClientError::Decode {
            status,
            message: e.to_string(),
        })
    }

    pub async fn create_session(&self) -> Result<SessionView, ClientError> {
        self.send::<(), _>(Method::POST, "sessions", None).await
    }

    pub async fn session(&self, id: &str) -> Result<SessionView, ClientError> {
        self.get(&format!("sessions/{id}")).await
    }

    pub async fn submit_test(
        &self,
        id: &str,
        cause: &str,
        effect: &str,
    ) -> Result<Envelope<TestOutcome>, ClientError> {
        let answer = LinkRef {
            cause: cause.into(),
            effect: effect.into(),
        };
        self.post(&format!("sessions/{id}/test"), &answer).await
    }

    pub async fn submit_demographics(
        &self,
        id: &str,
        answers: Vec<Option<String>>,
        sassy: Vec<u8>,
    ) -> Result<Envelope<SassyProfile>, ClientError> {
        let req = DemographicsRequest { answers, sassy };
        self.post(&format!("sessions/{id}/demographics"), &req).await
    }

    pub async fn submit_link(
        &self,
        id: &str,
        cause: &str,
        effect: &str,
        first_side: Option<Side>,
    ) -> Result<Envelope<LinkOutcome>, ClientError> {
        let req = LinkRequest {
            cause: cause.into(),
            effect: effect.into(),
            first_side,
        };
        self.post(&format!("sessions/{id}/links"), &req).await
    }

    pub async fn submit_alteration(
        &self,
        id: &str,
        actions: Vec<NetworkAlteration>,
    ) -> Result<Envelope<()>, ClientError> {
        let req = AlterationRequest { actions };
        self.post(&format!("sessions/{id}/alteration"), &req).await
    }

    pub async fn submit_confidence(&self, id: &str, confidence: i64) -> Result<Envelope<()>, ClientError> {
        let req = ConfidenceRequest { confidence };
        self.post(&format!("sessions/{id}/confidence"), &req).await
    }

    pub async fn submit_usability(&self, id: &str, ratings: Vec<i64>) -> Result<Envelope<()>, ClientError> {
        let req = UsabilityRequest { ratings };
        self.post(&format!("sessions/{id}/usability"), &req).await
    }

    pub async fn complete(&self, id: &str) -> Result<Envelope<CompletionReceipt>, ClientError> {
        self.send::<(), _>(Method::POST, &format!("sessions/{id}/complete"), None)
            .await
    }

    pub async fn cohort_state(&self) -> Result<CohortState, ClientError> {
        self.get("admin/cohorts").await
    }

    pub async fn close_cohort(&self, stop: bool) -> Result<CohortState, ClientError> {
        self.post("admin/cohorts/close", &CloseCohortRequest { stop }).await
    }

    pub async fn cohort_report(&self, cohort: u32) -> Result<CohortReport, ClientError> {
        self.get(&format!("admin/cohorts/{cohort}")).await
    }

    pub async fn reviews(&self, pending_only: bool) -> Result<Vec<ReviewRecord>, ClientError> {
        self.get(if pending_only {
            "admin/reviews?pending=true"
        } else {
            "admin/reviews"
        })
        .await
    }

    pub async fn decide(
        &self,
        worker_id: &str,
        decision: Decision,
        note: &str,
    ) -> Result<ReviewRecord, ClientError> {
        let req = ReviewDecisionRequest {
            decision,
            note: note.into(),
        };
        self.post(&format!("admin/reviews/{worker_id}"), &req).await
    }

    pub async fn networks(&self) -> Result<Vec<NetworkRecord>, ClientError> {
        self.get("admin/networks").await
    }
}
