//! Flagging of low-credibility networks and the manual review queue.

use std::collections::BTreeMap;
use std::io::{self, BufRead};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::formats::LinkRef;
use crate::groundtruth::CredibilityMap;
use crate::network::{NetworkStatus, WorkerNetwork};

/// Zero-credibility links that flag a network of `links` links: ceil(3L/5).
pub fn flag_threshold_for(links: usize) -> usize {
    (3 * links).div_ceil(5)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QcError {
    #[error("no credibility score for {0}")]
    MissingCredibility(String),
    #[error("review for {worker_id} is already decided ({decision:?})")]
    AlreadyDecided { worker_id: String, decision: Decision },
    #[error("a review can only be decided as accept or reject")]
    InvalidDecision,
    #[error("no review record for {0}")]
    UnknownWorker(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    #[default]
    Pending,
    Accept,
    Reject,
}

impl Decision {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pending" => Some(Self::Pending),
            "accept" | "accepted" => Some(Self::Accept),
            "reject" | "rejected" => Some(Self::Reject),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub worker_id: String,
    pub links: Vec<LinkRef>,
    pub zero_cs_count: usize,
    pub auto_flagged: bool,
    pub decision: Decision,
    #[serde(default)]
    pub reviewer_note: String,
    /// Unix milliseconds of the last decision; absent for automatic outcomes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decided_at_ms: Option<u64>,
}

impl ReviewRecord {
    /// Network status implied by this record.
    pub fn network_status(&self) -> NetworkStatus {
        match self.decision {
            Decision::Accept => NetworkStatus::Accepted,
            Decision::Reject => NetworkStatus::Rejected,
            Decision::Pending if self.auto_flagged => NetworkStatus::Flagged,
            Decision::Pending => NetworkStatus::Pending,
        }
    }
}

/// Scores one network against the credibility map.
pub fn flag_network(
    net: &WorkerNetwork,
    cred: &CredibilityMap,
    threshold: usize,
) -> Result<ReviewRecord, QcError> {
    let mut zero = 0;
    for l in net.links() {
        match cred.score(l) {
            Some(0) => zero += 1,
            Some(_) => {}
            None => return Err(QcError::MissingCredibility(l.to_string())),
        }
    }
    let auto_flagged = zero >= threshold;
    Ok(ReviewRecord {
        worker_id: net.worker_id.clone(),
        links: net.links().iter().map(LinkRef::from).collect(),
        zero_cs_count: zero,
        auto_flagged,
        decision: if auto_flagged {
            Decision::Pending
        } else {
            Decision::Accept
        },
        reviewer_note: String::new(),
        decided_at_ms: None,
    })
}

/// One record per network, in input order. Unflagged networks are accepted
/// automatically; flagged ones wait for review.
pub fn flag_networks<'a>(
    nets: impl IntoIterator<Item = &'a WorkerNetwork>,
    cred: &CredibilityMap,
    threshold: usize,
) -> Result<Vec<ReviewRecord>, QcError> {
    nets.into_iter()
        .map(|n| flag_network(n, cred, threshold))
        .collect()
}

/// Decides a pending record. Only Pending -> Accept | Reject is allowed.
pub fn apply_review(
    record: &ReviewRecord,
    decision: Decision,
    note: &str,
    now_ms: u64,
) -> Result<ReviewRecord, QcError> {
    if decision == Decision::Pending {
        return Err(QcError::InvalidDecision);
    }
    if record.decision != Decision::Pending {
        return Err(QcError::AlreadyDecided {
            worker_id: record.worker_id.clone(),
            decision: record.decision,
        });
    }
    Ok(ReviewRecord {
        decision,
        reviewer_note: note.to_string(),
        decided_at_ms: Some(now_ms),
        ..record.clone()
    })
}

/// Sets each network's status from its record; networks without a record
/// keep their status.
pub fn apply_statuses(nets: &mut [WorkerNetwork], records: &BTreeMap<String, ReviewRecord>) {
    for n in nets {
        if let Some(r) = records.get(&n.worker_id) {
            n.status = r.network_status();
        }
    }
}

/// Shared review queue. Decisions on different workers do not contend;
/// each record's transition is a compare-and-set under its own lock.
#[derive(Debug, Default)]
pub struct ReviewQueue {
    records: RwLock<BTreeMap<String, Arc<Mutex<ReviewRecord>>>>,
}

impl ReviewQueue {
    pub fn new(records: impl IntoIterator<Item = ReviewRecord>) -> Self {
        let q = Self::default();
        for r in records {
            q.upsert(r);
        }
        q
    }

    /// Inserts or replaces the record for its worker.
    pub fn upsert(&self, record: ReviewRecord) {
        let mut map = self.records.write().expect("review queue poisoned");
        map.insert(record.worker_id.clone(), Arc::new(Mutex::new(record)));
    }

    pub fn get(&self, worker_id: &str) -> Option<ReviewRecord> {
        let slot = self.slot(worker_id)?;
        let r = slot.lock().expect("review record poisoned").clone();
        Some(r)
    }

    fn slot(&self, worker_id: &str) -> Option<Arc<Mutex<ReviewRecord>>> {
        self.records
            .read()
            .expect("review queue poisoned")
            .get(worker_id)
            .cloned()
    }

    /// Snapshot of all records, ordered by worker id.
    pub fn list(&self) -> Vec<ReviewRecord> {
        let slots: Vec<_> = self
            .records
            .read()
            .expect("review queue poisoned")
            .values()
            .cloned()
            .collect();
        slots
            .iter()
            .map(|s| s.lock().expect("review record poisoned").clone())
            .collect()
    }

    pub fn pending(&self) -> Vec<ReviewRecord> {
        self.list()
            .into_iter()
            .filter(|r| r.decision == Decision::Pending)
            .collect()
    }

    pub fn decide(
        &self,
        worker_id: &str,
        decision: Decision,
        note: &str,
        now_ms: u64,
    ) -> Result<ReviewRecord, QcError> {
        let slot = self
            .slot(worker_id)
            .ok_or_else(|| QcError::UnknownWorker(worker_id.to_string()))?;
        let mut current = slot.lock().expect("review record poisoned");
        let next = apply_review(&current, decision, note, now_ms)?;
        *current = next.clone();
        Ok(next)
    }

    pub fn statuses(&self) -> BTreeMap<String, ReviewRecord> {
        self.list()
            .into_iter()
            .map(|r| (r.worker_id.clone(), r))
            .collect()
    }
}

pub fn record_to_json_line(r: &ReviewRecord) -> String {
    serde_json::to_string(r).expect("review record serializes")
}

/// Reads a review log; the last line for a worker wins.
pub fn read_reviews_jsonl<R: BufRead>(reader: R) -> Result<BTreeMap<String, ReviewRecord>, ReadError> {
    let mut out = BTreeMap::new();
    for (i, text) in reader.lines().enumerate() {
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let r: ReviewRecord = serde_json::from_str(&text).map_err(|e| QcError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.insert(r.worker_id.clone(), r);
    }
    Ok(out)
}

pub fn write_reviews_jsonl<'a, W: io::Write>(
    mut writer: W,
    records: impl IntoIterator<Item = &'a ReviewRecord>,
) -> io::Result<()> {
    for r in records {
        writeln!(writer, "{}", record_to_json_line(r))?;
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Qc(#[from] QcError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Confidence;
    use crate::test_support::{catalog, link};

    #[test]
    fn thresholds() {
        assert_eq!(flag_threshold_for(5), 3);
        assert_eq!(flag_threshold_for(1), 1);
        assert_eq!(flag_threshold_for(3), 2);
        assert_eq!(flag_threshold_for(10), 6);
        assert_eq!(flag_threshold_for(0), 0);
    }

    fn net_with_zero_links(zero: usize) -> (WorkerNetwork, CredibilityMap) {
        let links = vec![
            link("increasing emissions", "increasing CO2"),
            link("increasing CO2", "more trapped heat"),
            link("more trapped heat", "increasing temperature"),
            link("increasing temperature", "melting sea ice"),
            link("increasing temperature", "more drought"),
        ];
        let scores = links.iter().skip(zero).map(|l| (l.clone(), 2));
        let cred = CredibilityMap::from_scores(&catalog(), scores).unwrap();
        let net = WorkerNetwork::new("w", links, Confidence::new(3).unwrap()).unwrap();
        (net, cred)
    }

    #[test]
    fn boundary_two_and_three() {
        let (net, cred) = net_with_zero_links(2);
        let r = flag_network(&net, &cred, 3).unwrap();
        assert_eq!((r.zero_cs_count, r.auto_flagged, r.decision), (2, false, Decision::Accept));
        let (net, cred) = net_with_zero_links(3);
        let r = flag_network(&net, &cred, 3).unwrap();
        assert_eq!((r.zero_cs_count, r.auto_flagged, r.decision), (3, true, Decision::Pending));
        assert_eq!(r.network_status(), NetworkStatus::Flagged);
    }

    #[test]
    fn review_transitions() {
        let (net, cred) = net_with_zero_links(4);
        let r = flag_network(&net, &cred, 3).unwrap();
        let accepted = apply_review(&r, Decision::Accept, "coherent", 7).unwrap();
        assert_eq!(accepted.network_status(), NetworkStatus::Accepted);
        assert_eq!(accepted.decided_at_ms, Some(7));
        assert!(matches!(
            apply_review(&accepted, Decision::Accept, "", 8),
            Err(QcError::AlreadyDecided { .. })
        ));
        assert_eq!(apply_review(&r, Decision::Pending, "", 8), Err(QcError::InvalidDecision));
    }

    #[test]
    fn queue_is_compare_and_set() {
        let (net, cred) = net_with_zero_links(5);
        let q = ReviewQueue::new([flag_network(&net, &cred, 3).unwrap()]);
        assert_eq!(q.pending().len(), 1);
        let results: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..8)
                .map(|i| {
                    let q = &q;
                    s.spawn(move || {
                        let d = if i % 2 == 0 { Decision::Accept } else { Decision::Reject };
                        q.decide("w", d, "", i)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert_eq!(results.iter().filter(|r| r.is_ok()).count(), 1);
        assert!(q.pending().is_empty());
        assert!(matches!(q.decide("nobody", Decision::Accept, "", 0), Err(QcError::UnknownWorker(_))));
    }

    #[test]
    fn jsonl_last_line_wins() {
        let (net, cred) = net_with_zero_links(3);
        let r = flag_network(&net, &cred, 3).unwrap();
        let decided = apply_review(&r, Decision::Reject, "random", 1).unwrap();
        let mut buf = Vec::new();
        write_reviews_jsonl(&mut buf, [&r, &decided]).unwrap();
        let map = read_reviews_jsonl(buf.as_slice()).unwrap();
        assert_eq!(map["w"], decided);
        let mut nets = vec![net];
        apply_statuses(&mut nets, &map);
        assert_eq!(nets[0].status, NetworkStatus::Rejected);
    }
}
