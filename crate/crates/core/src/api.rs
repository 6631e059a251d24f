//! Request and response bodies of the collection service's HTTP API.

use serde::{Deserialize, Serialize};

use crate::collection::{NetworkAlteration, SessionView};
use crate::network::Side;
use crate::qualitycontrol::Decision;

/// Body of `POST /sessions/{id}/demographics`. `null` answers are declines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemographicsRequest {
    pub answers: Vec<Option<String>>,
    pub sassy: Vec<u8>,
}

/// Body of `POST /sessions/{id}/links`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRequest {
    pub cause: String,
    pub effect: String,
    /// Drop-down filled first, when the client tracks it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_side: Option<Side>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AlterationRequest {
    #[serde(default)]
    pub actions: Vec<NetworkAlteration>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfidenceRequest {
    pub confidence: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsabilityRequest {
    pub ratings: Vec<i64>,
}

/// Result of a session mutation together with the updated session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub result: T,
    pub session: SessionView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionReceipt {
    pub verification_code: String,
    pub worker_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecisionRequest {
    pub decision: Decision,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CloseCohortRequest {
    /// Stop the study instead of opening the next cohort.
    #[serde(default)]
    pub stop: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortState {
    /// Cohort new sessions join; after a stop, the last cohort.
    pub current: u32,
    pub stopped: bool,
}

impl Default for CohortState {
    fn default() -> Self {
        Self {
            current: 1,
            stopped: false,
        }
    }
}

impl CohortState {
    pub fn is_closed(&self, cohort: u32) -> bool {
        cohort < self.current || (self.stopped && cohort == self.current)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    /// Stable machine-readable code, e.g. `wrong_stage` or `both_endpoints_new`.
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}
