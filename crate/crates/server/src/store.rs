//! Session store with a JSON-lines journal.
//!
//! Every accepted change appends a full snapshot of the affected session,
//! review record or cohort state to `journal.jsonl`; on start-up the journal
//! is replayed and the last snapshot of each entity wins.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use beliefminer_core::api::{CohortState, CompletionReceipt};
use beliefminer_core::collection::{
    cohort_report, generate_verification_code, CohortReport, Protocol, Session, SessionError,
    SessionView,
};
use beliefminer_core::groundtruth::CredibilityMap;
use beliefminer_core::qualitycontrol::{
    flag_network, Decision, QcError, ReviewQueue, ReviewRecord,
};
use beliefminer_core::formats::LinkRef;
use beliefminer_core::WorkerNetwork;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const JOURNAL_FILE: &str = "journal.jsonl";
const SESSION_ID_LEN: usize = 22;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("no session {0}")]
    NotFound(String),
    #[error("the study is closed to new sessions")]
    CohortClosed,
    #[error("cohort {0} is still open")]
    CohortOpen(u32),
    #[error("cohort {0} does not exist")]
    UnknownCohort(u32),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Qc(#[from] QcError),
    #[error("journal write failed: {0}")]
    Journal(#[from] io::Error),
    #[error("journal line {line} is corrupt: {message}")]
    Corrupt { line: usize, message: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Event {
    Session { at_ms: u64, session: Session },
    Review { at_ms: u64, record: ReviewRecord },
    Cohorts { at_ms: u64, state: CohortState },
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

struct Journal {
    path: PathBuf,
    file: Mutex<File>,
}

impl Journal {
    fn append(&self, event: &Event) -> io::Result<()> {
        let mut line = serde_json::to_string(event).map_err(io::Error::other)?;
        line.push('\n');
        let mut f = self.file.lock().expect("journal poisoned");
        f.write_all(line.as_bytes())?;
        f.flush()
    }
}

type SessionSlot = Arc<tokio::sync::Mutex<Session>>;

pub struct Store {
    protocol: Arc<Protocol>,
    credibility: Option<CredibilityMap>,
    epsilon: f64,
    sessions: RwLock<HashMap<String, SessionSlot>>,
    codes: Mutex<HashSet<String>>,
    networks: RwLock<BTreeMap<String, WorkerNetwork>>,
    reviews: ReviewQueue,
    cohorts: Mutex<CohortState>,
    journal: Option<Journal>,
}

fn random_token<R: Rng + ?Sized>(rng: &mut R, len: usize) -> String {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char)
        .collect()
}

impl Store {
    /// Opens the store, replaying `data_dir/journal.jsonl` when a directory
    /// is given. A truncated final line (interrupted write) is ignored.
    pub fn open(
        protocol: Protocol,
        credibility: Option<CredibilityMap>,
        epsilon: f64,
        data_dir: Option<&Path>,
    ) -> Result<Self, StoreError> {
        let mut store = Self {
            protocol: Arc::new(protocol),
            credibility,
            epsilon,
            sessions: RwLock::default(),
            codes: Mutex::default(),
            networks: RwLock::default(),
            reviews: ReviewQueue::default(),
            cohorts: Mutex::default(),
            journal: None,
        };
        let Some(dir) = data_dir else {
            return Ok(store);
        };
        std::fs::create_dir_all(dir)?;
        let path = dir.join(JOURNAL_FILE);
        if path.exists() {
            store.replay(&path)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        store.journal = Some(Journal {
            path,
            file: Mutex::new(file),
        });
        Ok(store)
    }

    fn replay(&mut self, path: &Path) -> Result<(), StoreError> {
        let text = std::fs::read_to_string(path)?;
        let complete_tail = text.ends_with('\n');
        let lines: Vec<&str> = text.lines().collect();
        let mut sessions: BTreeMap<String, Session> = BTreeMap::new();
        let mut reviews: BTreeMap<String, ReviewRecord> = BTreeMap::new();
        let last = lines.len();
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let event: Event = match serde_json::from_str(line) {
                Ok(e) => e,
                Err(_) if i + 1 == last && !complete_tail => {
                    tracing::warn!(line = i + 1, "ignoring truncated journal tail");
                    break;
                }
                Err(e) => {
                    return Err(StoreError::Corrupt {
                        line: i + 1,
                        message: e.to_string(),
                    })
                }
            };
            match event {
                Event::Session { session, .. } => {
                    sessions.insert(session.id.clone(), session);
                }
                Event::Review { record, .. } => {
                    reviews.insert(record.worker_id.clone(), record);
                }
                Event::Cohorts { state, .. } => {
                    *self.cohorts.get_mut().expect("fresh lock") = state;
                }
            }
        }
        for s in sessions.values() {
            if let Some(code) = &s.verification_code {
                self.codes.get_mut().expect("fresh lock").insert(code.clone());
                for n in s.finalized_networks(&self.protocol)? {
                    self.networks
                        .get_mut()
                        .expect("fresh lock")
                        .insert(n.worker_id.clone(), n);
                }
            }
        }
        for r in reviews.into_values() {
            self.reviews.upsert(r);
        }
        let map = self.sessions.get_mut().expect("fresh lock");
        for (id, s) in sessions {
            map.insert(id, Arc::new(tokio::sync::Mutex::new(s)));
        }
        Ok(())
    }

    pub fn protocol(&self) -> &Protocol {
        &self.protocol
    }

    pub fn journal_path(&self) -> Option<&Path> {
        self.journal.as_ref().map(|j| j.path.as_path())
    }

    fn log(&self, event: Event) -> Result<(), StoreError> {
        if let Some(j) = &self.journal {
            j.append(&event)?;
        }
        Ok(())
    }

    fn slot(&self, id: &str) -> Result<SessionSlot, StoreError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    pub fn create_session(&self) -> Result<SessionView, StoreError> {
        let cohort = {
            let state = self.cohorts.lock().expect("cohort lock poisoned");
            if state.stopped {
                return Err(StoreError::CohortClosed);
            }
            state.current
        };
        let mut rng = rand::rng();
        let session = {
            let mut map = self.sessions.write().expect("session map poisoned");
            let id = loop {
                let id = random_token(&mut rng, SESSION_ID_LEN);
                if !map.contains_key(&id) {
                    break id;
                }
            };
            let session = Session::new(id.clone(), cohort, &self.protocol, &mut rng);
            map.insert(id, Arc::new(tokio::sync::Mutex::new(session.clone())));
            session
        };
        self.log(Event::Session {
            at_ms: now_ms(),
            session: session.clone(),
        })?;
        Ok(session.view(&self.protocol))
    }

    pub async fn view(&self, id: &str) -> Result<SessionView, StoreError> {
        let slot = self.slot(id)?;
        let s = slot.lock().await;
        Ok(s.view(&self.protocol))
    }

    pub async fn session_snapshot(&self, id: &str) -> Result<Session, StoreError> {
        Ok(self.slot(id)?.lock().await.clone())
    }

    /// Runs one transition under the session's lock. The change is journaled
    /// before it becomes visible.
    pub async fn mutate<T>(
        &self,
        id: &str,
        op: impl FnOnce(&mut Session, &Protocol) -> Result<T, SessionError>,
    ) -> Result<(T, SessionView), StoreError> {
        let slot = self.slot(id)?;
        let mut guard = slot.lock().await;
        let mut next = guard.clone();
        let out = op(&mut next, &self.protocol)?;
        if next != *guard {
            self.log(Event::Session {
                at_ms: now_ms(),
                session: next.clone(),
            })?;
            *guard = next;
        }
        Ok((out, guard.view(&self.protocol)))
    }

    /// Issues a unique verification code and hands the session's networks to
    /// quality control.
    pub async fn complete(&self, id: &str) -> Result<(CompletionReceipt, SessionView), StoreError> {
        let slot = self.slot(id)?;
        let mut guard = slot.lock().await;
        let code = {
            let mut codes = self.codes.lock().expect("code set poisoned");
            let mut rng = rand::rng();
            loop {
                let c = generate_verification_code(&mut rng);
                if codes.insert(c.clone()) {
                    break c;
                }
            }
        };
        let mut next = guard.clone();
        let nets = match next.complete(&self.protocol, code.clone()) {
            Ok(n) => n,
            Err(e) => {
                self.codes.lock().expect("code set poisoned").remove(&code);
                return Err(e.into());
            }
        };
        self.log(Event::Session {
            at_ms: now_ms(),
            session: next.clone(),
        })?;
        *guard = next;
        let mut worker_ids = Vec::new();
        for net in nets {
            let record = self.initial_review(&net)?;
            self.log(Event::Review {
                at_ms: now_ms(),
                record: record.clone(),
            })?;
            self.reviews.upsert(record);
            worker_ids.push(net.worker_id.clone());
            self.networks
                .write()
                .expect("network map poisoned")
                .insert(net.worker_id.clone(), net);
        }
        let receipt = CompletionReceipt {
            verification_code: code,
            worker_ids,
        };
        Ok((receipt, guard.view(&self.protocol)))
    }

    /// With a credibility map, networks are flagged automatically; without
    /// one, every network waits for manual review.
    fn initial_review(&self, net: &WorkerNetwork) -> Result<ReviewRecord, StoreError> {
        match &self.credibility {
            Some(cred) => Ok(flag_network(net, cred, self.protocol.profile.flag_threshold())?),
            None => Ok(ReviewRecord {
                worker_id: net.worker_id.clone(),
                links: net.links().iter().map(LinkRef::from).collect(),
                zero_cs_count: 0,
                auto_flagged: false,
                decision: Decision::Pending,
                reviewer_note: String::new(),
                decided_at_ms: None,
            }),
        }
    }

    pub fn cohort_state(&self) -> CohortState {
        self.cohorts.lock().expect("cohort lock poisoned").clone()
    }

    /// Closes the current cohort and opens the next one, or stops the study.
    pub fn close_cohort(&self, stop: bool) -> Result<CohortState, StoreError> {
        let mut state = self.cohorts.lock().expect("cohort lock poisoned");
        if state.stopped {
            return Err(StoreError::CohortClosed);
        }
        let next = if stop {
            CohortState {
                stopped: true,
                ..state.clone()
            }
        } else {
            CohortState {
                current: state.current + 1,
                stopped: false,
            }
        };
        self.log(Event::Cohorts {
            at_ms: now_ms(),
            state: next.clone(),
        })?;
        *state = next.clone();
        Ok(next)
    }

    /// Networks with their review outcome applied.
    pub fn networks(&self) -> Vec<WorkerNetwork> {
        let statuses = self.reviews.statuses();
        self.networks
            .read()
            .expect("network map poisoned")
            .values()
            .map(|n| {
                let mut n = n.clone();
                if let Some(r) = statuses.get(&n.worker_id) {
                    n.status = r.network_status();
                }
                n
            })
            .collect()
    }

    pub async fn cohort_report(&self, cohort: u32) -> Result<CohortReport, StoreError> {
        let state = self.cohort_state();
        if cohort == 0 || cohort > state.current {
            return Err(StoreError::UnknownCohort(cohort));
        }
        if !state.is_closed(cohort) {
            return Err(StoreError::CohortOpen(cohort));
        }
        let networks = self.networks();
        let slots: Vec<SessionSlot> = self
            .sessions
            .read()
            .expect("session map poisoned")
            .values()
            .cloned()
            .collect();
        let mut sessions = Vec::with_capacity(slots.len());
        for s in slots {
            sessions.push(s.lock().await.clone());
        }
        Ok(cohort_report(
            cohort,
            &networks,
            &sessions,
            &self.protocol.catalog,
            self.epsilon,
        ))
    }

    pub fn reviews(&self, pending_only: bool) -> Vec<ReviewRecord> {
        if pending_only {
            self.reviews.pending()
        } else {
            self.reviews.list()
        }
    }

    pub fn decide(&self, worker_id: &str, decision: Decision, note: &str) -> Result<ReviewRecord, StoreError> {
        let record = self.reviews.decide(worker_id, decision, note, now_ms())?;
        self.log(Event::Review {
            at_ms: now_ms(),
            record: record.clone(),
        })?;
        Ok(record)
    }

    /// Canonical JSON of every session, keyed by id.
    pub async fn canonical_sessions(&self) -> BTreeMap<String, String> {
        let slots: Vec<(String, SessionSlot)> = self
            .sessions
            .read()
            .expect("session map poisoned")
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let mut out = BTreeMap::new();
        for (id, slot) in slots {
            out.insert(id, slot.lock().await.to_canonical_json());
        }
        out
    }
}
