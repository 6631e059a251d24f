//! Participant session state machine.
//!
//! Stages run Instructions -> Test -> Demographics -> Creation -> Alteration
//! -> Evaluation -> Usability -> Complete. Every transition works on a copy
//! of the session and commits only on success, so a refused call leaves the
//! session exactly as it was.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attribute::{AttributeCatalog, CatalogError};
use crate::formats::LinkRef;
use crate::illusion::dot_quote;
use crate::metrics::{aggregate, exploration_stats, saturation, ExplorationStats, Saturation};
use crate::narrative::generate_narrative;
use crate::network::{
    alter_links, check_first_choice, nodes_in_order, validate_next_link, AlterationAction,
    AlterationError, CausalLink, Confidence, LinkViolation, NetworkStatus, Side, WorkerNetwork,
};
use crate::profile::{ProfileName, ProtocolProfile};

pub const VERIFICATION_CODE_LEN: usize = 12;
const CODE_ALPHABET: &[u8; 64] =
    b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

/// Random code of [`VERIFICATION_CODE_LEN`] URL-safe characters. Use a
/// cryptographically secure `rng` in production.
pub fn generate_verification_code<R: Rng + ?Sized>(rng: &mut R) -> String {
    (0..VERIFICATION_CODE_LEN)
        .map(|_| CODE_ALPHABET[rng.random_range(0..CODE_ALPHABET.len())] as char)
        .collect()
}

pub fn is_valid_verification_code(code: &str) -> bool {
    code.len() == VERIFICATION_CODE_LEN && code.bytes().all(|b| CODE_ALPHABET.contains(&b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Instructions,
    Test,
    Demographics,
    Creation,
    Alteration,
    Evaluation,
    Usability,
    Complete,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Instructions,
        Stage::Test,
        Stage::Demographics,
        Stage::Creation,
        Stage::Alteration,
        Stage::Evaluation,
        Stage::Usability,
        Stage::Complete,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SassySegment {
    Alarmed,
    Concerned,
    Cautious,
    Disengaged,
    Doubtful,
    Dismissive,
}

impl SassySegment {
    pub const ALL: [SassySegment; 6] = [
        SassySegment::Alarmed,
        SassySegment::Concerned,
        SassySegment::Cautious,
        SassySegment::Disengaged,
        SassySegment::Doubtful,
        SassySegment::Dismissive,
    ];
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot parse configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

fn read_config(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SassyItem {
    pub id: String,
    pub min: u8,
    pub max: u8,
}

/// `null` entries in a pattern match any answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SassyRule {
    pub pattern: Vec<Option<u8>>,
    pub segment: SassySegment,
}

/// Answer-pattern to segment table; the first matching rule wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SassyTable {
    pub version: String,
    pub items: Vec<SassyItem>,
    pub rules: Vec<SassyRule>,
}

impl SassyTable {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let t: Self = serde_json::from_str(text)?;
        t.check()?;
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_json(&read_config(path.as_ref())?)
    }

    /// Stand-in table for development and tests. It is not the published
    /// scoring instrument.
    pub fn placeholder() -> Self {
        Self::from_json(include_str!("../data/sassy_placeholder.json"))
            .expect("bundled table is valid")
    }

    fn check(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.items.is_empty() {
            return bad("scoring table has no items".into());
        }
        if let Some(i) = self.items.iter().find(|i| i.min > i.max) {
            return bad(format!("item {} has min > max", i.id));
        }
        for (n, rule) in self.rules.iter().enumerate() {
            if rule.pattern.len() != self.items.len() {
                return bad(format!("rule {n} has {} entries", rule.pattern.len()));
            }
            for (v, item) in rule.pattern.iter().zip(&self.items) {
                if let Some(v) = v {
                    if !(item.min..=item.max).contains(v) {
                        return bad(format!("rule {n} value {v} outside item {}", item.id));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn classify(&self, answers: &[u8]) -> Result<SassySegment, SessionError> {
        if answers.len() != self.items.len() {
            return Err(SessionError::MalformedAnswers(format!(
                "expected {} survey answers, got {}",
                self.items.len(),
                answers.len()
            )));
        }
        for (a, item) in answers.iter().zip(&self.items) {
            if !(item.min..=item.max).contains(a) {
                return Err(SessionError::OutOfRange {
                    field: format!("sassy.{}", item.id),
                    value: *a as i64,
                });
            }
        }
        self.rules
            .iter()
            .find(|r| r.pattern.iter().zip(answers).all(|(p, a)| p.is_none_or(|p| p == *a)))
            .map(|r| r.segment)
            .ok_or_else(|| SessionError::MalformedAnswers("no scoring rule matches".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SassyProfile {
    pub answers: Vec<u8>,
    pub segment: SassySegment,
}

/// Survey wording shown by the client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyConfig {
    pub version: String,
    pub demographic_questions: Vec<String>,
    pub usability_statements: Vec<String>,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        serde_json::from_str(include_str!("../data/survey.json")).expect("bundled survey is valid")
    }
}

pub const MIN_RATING: i64 = 1;
pub const MAX_RATING: i64 = 5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum SessionError {
    #[error("operation not allowed at stage {actual:?}")]
    WrongStage { allowed: Vec<Stage>, actual: Stage },
    #[error("malformed answers: {0}")]
    MalformedAnswers(String),
    #[error("{field} value {value} out of range")]
    OutOfRange { field: String, value: i64 },
    #[error("{0}")]
    Link(LinkViolation),
    #[error("{0}")]
    Alteration(String),
    #[error("{0} must be submitted first")]
    Incomplete(String),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::WrongStage { .. } => "wrong_stage",
            Self::MalformedAnswers(_) => "malformed_answers",
            Self::OutOfRange { .. } => "out_of_range",
            Self::Link(v) => v.code(),
            Self::Alteration(_) => "invalid_alteration",
            Self::Incomplete(_) => "incomplete",
        }
    }
}

impl From<LinkViolation> for SessionError {
    fn from(v: LinkViolation) -> Self {
        Self::Link(v)
    }
}

impl From<AlterationError> for SessionError {
    fn from(e: AlterationError) -> Self {
        Self::Alteration(e.to_string())
    }
}

/// Everything a session needs besides its own state.
#[derive(Debug, Clone)]
pub struct Protocol {
    pub catalog: AttributeCatalog,
    pub profile: ProtocolProfile,
    pub sassy: SassyTable,
    pub survey: SurveyConfig,
    /// Link a participant must reproduce to pass the instructions test.
    pub gate: LinkRef,
}

pub const DEFAULT_GATE: (&str, &str) = ("increasing emissions", "increasing CO2");

impl Protocol {
    pub fn new(
        catalog: AttributeCatalog,
        profile: ProtocolProfile,
        sassy: SassyTable,
        survey: SurveyConfig,
        gate: LinkRef,
    ) -> Result<Self, ConfigError> {
        gate.resolve(&catalog)?;
        Ok(Self {
            catalog,
            profile,
            sassy,
            survey,
            gate,
        })
    }

    /// Bundled catalog for `profile`, placeholder scoring table, default gate.
    pub fn bundled(profile: ProtocolProfile) -> Self {
        let catalog = match profile.name {
            ProfileName::Final => AttributeCatalog::final_study(),
            ProfileName::Formative => AttributeCatalog::formative_study(),
        };
        let gate = LinkRef {
            cause: DEFAULT_GATE.0.into(),
            effect: DEFAULT_GATE.1.into(),
        };
        Self::new(catalog, profile, SassyTable::placeholder(), SurveyConfig::default(), gate)
            .expect("bundled protocol is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkAlteration {
    /// Index of the network within the session; 0 for single-network profiles.
    #[serde(default)]
    pub network: usize,
    #[serde(flatten)]
    pub action: AlterationAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub cohort: u32,
    pub profile: ProfileName,
    pub stage: Stage,
    pub attribute_order: Vec<String>,
    pub test_attempts: u32,
    pub demographics: Option<Vec<Option<String>>>,
    pub sassy: Option<SassyProfile>,
    pub networks: Vec<Vec<LinkRef>>,
    pub alterations: Vec<NetworkAlteration>,
    pub confidence: Option<u8>,
    pub usability: Option<Vec<u8>>,
    pub verification_code: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub passed: bool,
    pub attempts: u32,
    pub stage: Stage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkOutcome {
    pub network: usize,
    pub links_in_network: usize,
    pub remaining_rounds: usize,
    pub stage: Stage,
}

impl Session {
    /// Fresh session at Instructions. Attribute order is shuffled when the
    /// profile asks for it, otherwise catalog order.
    pub fn new<R: Rng + ?Sized>(id: impl Into<String>, cohort: u32, protocol: &Protocol, rng: &mut R) -> Self {
        let mut order: Vec<String> = protocol
            .catalog
            .attributes()
            .iter()
            .map(|a| a.display().to_string())
            .collect();
        if protocol.profile.randomize_order {
            order.shuffle(rng);
        }
        Self {
            id: id.into(),
            cohort,
            profile: protocol.profile.name,
            stage: Stage::Instructions,
            attribute_order: order,
            test_attempts: 0,
            demographics: None,
            sassy: None,
            networks: vec![Vec::new()],
            alterations: Vec::new(),
            confidence: None,
            usability: None,
            verification_code: None,
        }
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("session serializes")
    }

    fn guard(&self, allowed: &[Stage]) -> Result<(), SessionError> {
        if allowed.contains(&self.stage) {
            Ok(())
        } else {
            Err(SessionError::WrongStage {
                allowed: allowed.to_vec(),
                actual: self.stage,
            })
        }
    }

    fn transact<T>(
        &mut self,
        allowed: &[Stage],
        f: impl FnOnce(&mut Session) -> Result<T, SessionError>,
    ) -> Result<T, SessionError> {
        self.guard(allowed)?;
        let mut next = self.clone();
        let out = f(&mut next)?;
        *self = next;
        Ok(out)
    }

    /// A submission at Instructions enters the test stage; failing keeps the
    /// session at Test for another try.
    pub fn submit_test(&mut self, p: &Protocol, answer: &LinkRef) -> Result<TestOutcome, SessionError> {
        self.transact(&[Stage::Instructions, Stage::Test], |s| {
            s.test_attempts += 1;
            let passed = *answer == p.gate;
            s.stage = if passed { Stage::Demographics } else { Stage::Test };
            Ok(TestOutcome {
                passed,
                attempts: s.test_attempts,
                stage: s.stage,
            })
        })
    }

    /// `None` answers mean the participant declined the question.
    pub fn submit_demographics(
        &mut self,
        p: &Protocol,
        answers: Vec<Option<String>>,
        sassy: Vec<u8>,
    ) -> Result<SassyProfile, SessionError> {
        self.transact(&[Stage::Demographics], |s| {
            let expected = p.survey.demographic_questions.len();
            if answers.len() != expected {
                return Err(SessionError::MalformedAnswers(format!(
                    "expected {expected} demographic answers, got {}",
                    answers.len()
                )));
            }
            let segment = p.sassy.classify(&sassy)?;
            let profile = SassyProfile {
                answers: sassy,
                segment,
            };
            s.demographics = Some(answers);
            s.sassy = Some(profile.clone());
            s.stage = Stage::Creation;
            Ok(profile)
        })
    }

    fn resolve(refs: &[LinkRef], catalog: &AttributeCatalog) -> Result<Vec<CausalLink>, SessionError> {
        refs.iter()
            .map(|r| {
                let cause = catalog
                    .get(&r.cause)
                    .ok_or_else(|| LinkViolation::CatalogMiss(r.cause.clone()))?;
                let effect = catalog
                    .get(&r.effect)
                    .ok_or_else(|| LinkViolation::CatalogMiss(r.effect.clone()))?;
                Ok(CausalLink::new(cause.clone(), effect.clone())?)
            })
            .collect()
    }

    /// Appends a link to the network under construction. `first_side` is the
    /// drop-down the participant filled first, when the client reports it.
    pub fn submit_link(
        &mut self,
        p: &Protocol,
        candidate: &LinkRef,
        first_side: Option<Side>,
    ) -> Result<LinkOutcome, SessionError> {
        self.transact(&[Stage::Creation], |s| {
            let link = Self::resolve(std::slice::from_ref(candidate), &p.catalog)?.remove(0);
            let index = s.networks.len() - 1;
            let current = Self::resolve(&s.networks[index], &p.catalog)?;
            let per_network = p.profile.links_per_network;
            validate_next_link(&p.catalog, &current, &link, per_network)?;
            if let Some(side) = first_side {
                check_first_choice(&current, &link, side)?;
            }
            s.networks[index].push(candidate.clone());
            let len = s.networks[index].len();
            if len == per_network {
                if s.networks.len() < p.profile.networks_per_session {
                    s.networks.push(Vec::new());
                } else {
                    s.stage = Stage::Alteration;
                }
            }
            Ok(LinkOutcome {
                network: index,
                links_in_network: len,
                remaining_rounds: per_network - len,
                stage: s.stage,
            })
        })
    }

    /// Applies all alteration choices at once (an empty list keeps every
    /// link) and moves on to evaluation.
    pub fn submit_alteration(
        &mut self,
        p: &Protocol,
        actions: &[NetworkAlteration],
    ) -> Result<(), SessionError> {
        self.transact(&[Stage::Alteration], |s| {
            for a in actions {
                let refs = s.networks.get(a.network).ok_or_else(|| {
                    SessionError::Alteration(format!("no network with index {}", a.network))
                })?;
                let links = alter_links(&Self::resolve(refs, &p.catalog)?, a.action, &p.profile)?;
                s.networks[a.network] = links.iter().map(LinkRef::from).collect();
            }
            s.alterations.extend_from_slice(actions);
            s.stage = Stage::Evaluation;
            Ok(())
        })
    }

    pub fn submit_confidence(&mut self, value: i64) -> Result<(), SessionError> {
        self.transact(&[Stage::Evaluation], |s| {
            let c = u8::try_from(value)
                .ok()
                .and_then(Confidence::new)
                .ok_or_else(|| SessionError::OutOfRange {
                    field: "confidence".into(),
                    value,
                })?;
            s.confidence = Some(c.get());
            s.stage = Stage::Usability;
            Ok(())
        })
    }

    /// Stores the ratings; may be resubmitted until the session completes.
    pub fn submit_usability(&mut self, p: &Protocol, ratings: &[i64]) -> Result<(), SessionError> {
        self.transact(&[Stage::Usability], |s| {
            let expected = p.survey.usability_statements.len();
            if ratings.len() != expected {
                return Err(SessionError::MalformedAnswers(format!(
                    "expected {expected} usability ratings, got {}",
                    ratings.len()
                )));
            }
            if let Some(&bad) = ratings.iter().find(|r| !(MIN_RATING..=MAX_RATING).contains(r)) {
                return Err(SessionError::OutOfRange {
                    field: "usability".into(),
                    value: bad,
                });
            }
            s.usability = Some(ratings.iter().map(|&r| r as u8).collect());
            Ok(())
        })
    }

    /// Finishes the session with `code` and returns its networks, ready for
    /// quality control.
    pub fn complete(&mut self, p: &Protocol, code: String) -> Result<Vec<WorkerNetwork>, SessionError> {
        self.transact(&[Stage::Usability], |s| {
            if s.usability.is_none() {
                return Err(SessionError::Incomplete("usability ratings".into()));
            }
            s.verification_code = Some(code);
            s.stage = Stage::Complete;
            s.finalized_networks(p)
        })
    }

    /// Networks of a completed session with status Pending. Empty networks
    /// are dropped; with several networks the worker id gets a `-k` suffix.
    pub fn finalized_networks(&self, p: &Protocol) -> Result<Vec<WorkerNetwork>, SessionError> {
        self.guard(&[Stage::Complete])?;
        let confidence = self
            .confidence
            .and_then(Confidence::new)
            .ok_or_else(|| SessionError::Incomplete("confidence".into()))?;
        let many = self.networks.len() > 1;
        let mut out = Vec::new();
        for (k, refs) in self.networks.iter().enumerate() {
            if refs.is_empty() {
                continue;
            }
            let id = if many {
                format!("{}-{}", self.id, k + 1)
            } else {
                self.id.clone()
            };
            let net = WorkerNetwork::new(id, Self::resolve(refs, &p.catalog)?, confidence)?
                .with_status(NetworkStatus::Pending)
                .with_cohort(self.cohort);
            out.push(net);
        }
        Ok(out)
    }

    pub fn view(&self, p: &Protocol) -> SessionView {
        let index = self.networks.len() - 1;
        let links = Self::resolve(&self.networks[index], &p.catalog).unwrap_or_default();
        let selected: Vec<String> = nodes_in_order(&links)
            .into_iter()
            .map(|a| a.display().to_string())
            .collect();
        let taken: BTreeSet<&str> = selected.iter().map(String::as_str).collect();
        let new_nodes = self
            .attribute_order
            .iter()
            .filter(|a| !taken.contains(a.as_str()))
            .cloned()
            .collect();
        let remaining = if self.stage == Stage::Creation {
            p.profile.links_per_network - links.len()
        } else {
            0
        };
        SessionView {
            id: self.id.clone(),
            stage: self.stage,
            cohort: self.cohort,
            profile: self.profile,
            attribute_order: self.attribute_order.clone(),
            network: index,
            links: self.networks[index].clone(),
            networks: self.networks.clone(),
            selected_nodes: selected,
            new_nodes,
            remaining_rounds: remaining,
            narrative: generate_narrative(&links).ok(),
            dot: network_dot(&links),
            test_attempts: self.test_attempts,
            sassy_segment: self.sassy.as_ref().map(|s| s.segment),
            confidence: self.confidence,
            usability: self.usability.clone(),
            verification_code: self.verification_code.clone(),
            demographic_questions: p.survey.demographic_questions.clone(),
            usability_statements: p.survey.usability_statements.clone(),
            allow_delete: p.profile.allow_delete,
        }
    }
}

/// What a client needs to render the current stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub stage: Stage,
    pub cohort: u32,
    pub profile: ProfileName,
    pub attribute_order: Vec<String>,
    /// Index of the network under construction.
    pub network: usize,
    pub links: Vec<LinkRef>,
    pub networks: Vec<Vec<LinkRef>>,
    pub selected_nodes: Vec<String>,
    pub new_nodes: Vec<String>,
    pub remaining_rounds: usize,
    pub narrative: Option<String>,
    pub dot: String,
    pub test_attempts: u32,
    pub sassy_segment: Option<SassySegment>,
    pub confidence: Option<u8>,
    pub usability: Option<Vec<u8>>,
    pub verification_code: Option<String>,
    pub demographic_questions: Vec<String>,
    pub usability_statements: Vec<String>,
    pub allow_delete: bool,
}

/// DOT digraph of a worker network, edges in insertion order.
pub fn network_dot(links: &[CausalLink]) -> String {
    let mut out = String::from("digraph network {\n");
    for l in links {
        writeln!(
            out,
            "  {} -> {};",
            dot_quote(l.cause().display()),
            dot_quote(l.effect().display())
        )
        .expect("write to string");
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkVotes {
    pub cause: String,
    pub effect: String,
    pub votes: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub cohort: u32,
    /// Networks of cohorts up to and including this one, any status.
    pub networks: usize,
    pub accepted_networks: usize,
    pub total_votes: u64,
    pub votes: Vec<LinkVotes>,
    /// `None` when there is no earlier cohort with votes to compare against.
    pub saturation: Option<Saturation>,
    pub exploration: ExplorationStats,
    pub sassy_histogram: BTreeMap<SassySegment, usize>,
    pub all_segments_present: bool,
}

/// Cumulative report over cohorts `1..=cohort`, compared with `1..cohort`.
pub fn cohort_report<'a>(
    cohort: u32,
    networks: &[WorkerNetwork],
    sessions: impl IntoIterator<Item = &'a Session>,
    catalog: &AttributeCatalog,
    epsilon: f64,
) -> CohortReport {
    let upto = |n: u32| networks.iter().filter(move |w| w.cohort.is_some_and(|c| c <= n));
    let current = aggregate(upto(cohort));
    let saturation = (cohort > 1)
        .then(|| saturation(&aggregate(upto(cohort - 1)), &current, epsilon, catalog).ok())
        .flatten();
    let mut sassy_histogram: BTreeMap<SassySegment, usize> =
        SassySegment::ALL.iter().map(|s| (*s, 0)).collect();
    for s in sessions {
        if s.cohort <= cohort && s.stage == Stage::Complete {
            if let Some(p) = &s.sassy {
                *sassy_histogram.entry(p.segment).or_default() += 1;
            }
        }
    }
    CohortReport {
        cohort,
        networks: upto(cohort).count(),
        accepted_networks: current.contributing_networks(),
        total_votes: current.total_votes(),
        votes: current
            .voted_links()
            .map(|(l, v)| LinkVotes {
                cause: l.cause().display().to_string(),
                effect: l.effect().display().to_string(),
                votes: v,
            })
            .collect(),
        saturation,
        exploration: exploration_stats(upto(cohort), catalog),
        all_segments_present: sassy_histogram.values().all(|&n| n > 0),
        sassy_histogram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::AlterationKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lr(c: &str, e: &str) -> LinkRef {
        LinkRef {
            cause: c.into(),
            effect: e.into(),
        }
    }

    fn setup() -> (Protocol, Session) {
        let p = Protocol::bundled(ProtocolProfile::final_study());
        let s = Session::new("s1", 1, &p, &mut ChaCha8Rng::seed_from_u64(1));
        (p, s)
    }

    fn to_creation(p: &Protocol, s: &mut Session) {
        s.submit_test(p, &p.gate.clone()).unwrap();
        s.submit_demographics(p, vec![None; 8], vec![4, 4, 4, 3]).unwrap();
    }

    const LINKS: [(&str, &str); 5] = [
        ("more fossil fuel burning", "increasing emissions"),
        ("increasing emissions", "increasing CO2"),
        ("increasing CO2", "more trapped heat"),
        ("more trapped heat", "increasing temperature"),
        ("increasing temperature", "melting sea ice"),
    ];

    #[test]
    fn gate_test_retries() {
        let (p, mut s) = setup();
        let wrong = lr("increasing CO2", "increasing emissions");
        let out = s.submit_test(&p, &wrong).unwrap();
        assert_eq!((out.passed, out.stage, out.attempts), (false, Stage::Test, 1));
        let out = s.submit_test(&p, &p.gate).unwrap();
        assert_eq!((out.passed, out.stage), (true, Stage::Demographics));
        assert!(matches!(s.submit_test(&p, &p.gate), Err(SessionError::WrongStage { .. })));
    }

    #[test]
    fn demographics_validation() {
        let (p, mut s) = setup();
        s.submit_test(&p, &p.gate).unwrap();
        let before = s.clone();
        assert!(matches!(
            s.submit_demographics(&p, vec![None; 8], vec![4, 4, 4]),
            Err(SessionError::MalformedAnswers(_))
        ));
        assert!(matches!(
            s.submit_demographics(&p, vec![None; 7], vec![4, 4, 4, 3]),
            Err(SessionError::MalformedAnswers(_))
        ));
        assert!(matches!(
            s.submit_demographics(&p, vec![None; 8], vec![9, 4, 4, 3]),
            Err(SessionError::OutOfRange { .. })
        ));
        assert_eq!(s, before);
        let profile = s.submit_demographics(&p, vec![None; 8], vec![4, 1, 4, 3]).unwrap();
        assert_eq!(profile.segment, SassySegment::Alarmed);
    }

    #[test]
    fn full_session() {
        let (p, mut s) = setup();
        to_creation(&p, &mut s);
        for (i, (c, e)) in LINKS.iter().enumerate() {
            let out = s.submit_link(&p, &lr(c, e), Some(Side::Cause)).unwrap();
            assert_eq!(out.remaining_rounds, 4 - i);
        }
        assert_eq!(s.stage, Stage::Alteration);
        assert!(matches!(
            s.submit_link(&p, &lr("more drought", "increasing wildfires"), None),
            Err(SessionError::WrongStage { .. })
        ));
        let delete = NetworkAlteration {
            network: 0,
            action: AlterationAction::new(0, AlterationKind::Delete),
        };
        assert!(s.submit_alteration(&p, &[delete]).is_err());
        let flip = NetworkAlteration {
            network: 0,
            action: AlterationAction::new(4, AlterationKind::ChangeDirection),
        };
        s.submit_alteration(&p, &[flip]).unwrap();
        assert_eq!(s.networks[0][4], lr("melting sea ice", "increasing temperature"));
        assert!(matches!(s.submit_confidence(6), Err(SessionError::OutOfRange { .. })));
        s.submit_confidence(5).unwrap();
        assert_eq!(s.stage, Stage::Usability);
        assert!(matches!(
            s.complete(&p, "x".into()),
            Err(SessionError::Incomplete(_))
        ));
        assert!(s.submit_usability(&p, &[3; 6]).is_err());
        assert!(s.submit_usability(&p, &[3, 3, 3, 3, 3, 3, 0]).is_err());
        s.submit_usability(&p, &[3; 7]).unwrap();
        let code = generate_verification_code(&mut ChaCha8Rng::seed_from_u64(3));
        assert!(is_valid_verification_code(&code));
        let nets = s.complete(&p, code.clone()).unwrap();
        assert_eq!(nets.len(), 1);
        assert!(nets[0].is_tree());
        assert_eq!(nets[0].status, NetworkStatus::Pending);
        assert_eq!(s.verification_code, Some(code));
        assert!(s.complete(&p, "again".into()).is_err());
    }

    #[test]
    fn round_two_rules() {
        let (p, mut s) = setup();
        to_creation(&p, &mut s);
        s.submit_link(&p, &lr(LINKS[0].0, LINKS[0].1), None).unwrap();
        let before = s.clone();
        let err = s
            .submit_link(&p, &lr("more drought", "increasing wildfires"), None)
            .unwrap_err();
        assert_eq!(err.code(), "both_endpoints_new");
        let err = s
            .submit_link(&p, &lr("more drought", "increasing emissions"), Some(Side::Cause))
            .unwrap_err();
        assert_eq!(err.code(), "first_choice_not_selected");
        let err = s.submit_link(&p, &lr("more unicorns", "increasing emissions"), None).unwrap_err();
        assert_eq!(err.code(), "catalog_miss");
        assert_eq!(s, before);
        let v = s.view(&p);
        assert_eq!(v.selected_nodes, vec![LINKS[0].0, LINKS[0].1]);
        assert_eq!(v.new_nodes.len(), p.catalog.len() - 2);
        assert_eq!(v.remaining_rounds, 4);
        assert!(v.narrative.is_some());
    }

    #[test]
    fn formative_profile_builds_three_networks() {
        let p = Protocol::bundled(ProtocolProfile::formative_study());
        let mut s = Session::new("f", 1, &p, &mut ChaCha8Rng::seed_from_u64(2));
        let order: Vec<&str> = p.catalog.attributes().iter().map(|a| a.display()).collect();
        assert_eq!(s.attribute_order, order);
        to_creation(&p, &mut s);
        for _ in 0..3 {
            for (c, e) in LINKS {
                s.submit_link(&p, &lr(c, e), None).unwrap();
            }
        }
        assert_eq!(s.stage, Stage::Alteration);
        let delete = NetworkAlteration {
            network: 2,
            action: AlterationAction::new(4, AlterationKind::Delete),
        };
        s.submit_alteration(&p, &[delete]).unwrap();
        s.submit_confidence(2).unwrap();
        s.submit_usability(&p, &[1; 7]).unwrap();
        let nets = s.complete(&p, "c".repeat(12)).unwrap();
        let ids: Vec<&str> = nets.iter().map(|n| n.worker_id.as_str()).collect();
        assert_eq!(ids, vec!["f-1", "f-2", "f-3"]);
        assert_eq!(nets[2].links().len(), 4);
    }

    #[test]
    fn canonical_json_round_trip() {
        let (p, mut s) = setup();
        to_creation(&p, &mut s);
        s.submit_link(&p, &lr(LINKS[0].0, LINKS[0].1), None).unwrap();
        let json = s.to_canonical_json();
        let back: Session = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_canonical_json(), json);
        assert_eq!(back, s);
    }

    #[test]
    fn sassy_table_validation() {
        let t = SassyTable::placeholder();
        assert_eq!(t.classify(&[1, 1, 1, 1]).unwrap(), SassySegment::Dismissive);
        assert_eq!(t.classify(&[2, 2, 2, 2]).unwrap(), SassySegment::Disengaged);
        let bad = r#"{"version":"x","items":[{"id":"a","min":1,"max":2}],"rules":[{"pattern":[3],"segment":"alarmed"}]}"#;
        assert!(SassyTable::from_json(bad).is_err());
        let none = r#"{"version":"x","items":[{"id":"a","min":1,"max":2}],"rules":[{"pattern":[1],"segment":"alarmed"}]}"#;
        let t = SassyTable::from_json(none).unwrap();
        assert!(matches!(t.classify(&[2]), Err(SessionError::MalformedAnswers(_))));
    }
}
