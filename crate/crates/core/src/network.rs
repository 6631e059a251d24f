//! Causal links, worker networks, the round rule and link alteration.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::attribute::{AttributeCatalog, TrendedAttribute};
use crate::profile::ProtocolProfile;

/// Default number of links per worker network.
pub const LINKS_PER_NETWORK: usize = 5;

/// Reasons a candidate link is refused during network creation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[serde(tag = "code", content = "detail", rename_all = "snake_case")]
pub enum LinkViolation {
    #[error("link {0} already exists in the network")]
    DuplicateLink(String),
    #[error("the reverse of link {0} already exists in the network")]
    ReverseDuplicate(String),
    #[error("cause and effect share the base attribute {0:?}")]
    SelfBase(String),
    #[error("both endpoints are new; one must already be in the network")]
    BothEndpointsNew,
    #[error("both endpoints are already in the network; one must be new")]
    BothEndpointsOld,
    #[error("attribute {0:?} is not in the catalog")]
    CatalogMiss(String),
    #[error("the first-chosen {0} must be an already selected node")]
    FirstChoiceNotSelected(String),
    #[error("the network already has {0} links")]
    NetworkFull(usize),
}

impl LinkViolation {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Self::DuplicateLink(_) => "duplicate_link",
            Self::ReverseDuplicate(_) => "reverse_duplicate",
            Self::SelfBase(_) => "self_base",
            Self::BothEndpointsNew => "both_endpoints_new",
            Self::BothEndpointsOld => "both_endpoints_old",
            Self::CatalogMiss(_) => "catalog_miss",
            Self::FirstChoiceNotSelected(_) => "first_choice_not_selected",
            Self::NetworkFull(_) => "network_full",
        }
    }
}

/// A directed cause -> effect relation between two attributes of different bases.
///
/// Ordered lexicographically by (cause display, effect display).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CausalLink {
    cause: TrendedAttribute,
    effect: TrendedAttribute,
}

impl CausalLink {
    pub fn new(cause: TrendedAttribute, effect: TrendedAttribute) -> Result<Self, LinkViolation> {
        if cause.base() == effect.base() {
            return Err(LinkViolation::SelfBase(cause.base().to_string()));
        }
        Ok(Self { cause, effect })
    }

    pub(crate) fn new_unchecked(cause: TrendedAttribute, effect: TrendedAttribute) -> Self {
        debug_assert_ne!(cause.base(), effect.base());
        Self { cause, effect }
    }

    pub fn cause(&self) -> &TrendedAttribute {
        &self.cause
    }

    pub fn effect(&self) -> &TrendedAttribute {
        &self.effect
    }

    pub fn reversed(&self) -> Self {
        Self {
            cause: self.effect.clone(),
            effect: self.cause.clone(),
        }
    }

    pub fn touches(&self, attr: &TrendedAttribute) -> bool {
        &self.cause == attr || &self.effect == attr
    }
}

impl fmt::Display for CausalLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.cause, self.effect)
    }
}

/// Self-reported confidence on a 1..=5 Likert scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Confidence(u8);

impl Confidence {
    pub fn new(value: u8) -> Option<Self> {
        (1..=5).contains(&value).then_some(Self(value))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Confidence {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Self::new(value).ok_or_else(|| format!("confidence {value} outside 1..=5"))
    }
}

impl From<Confidence> for u8 {
    fn from(c: Confidence) -> u8 {
        c.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkStatus {
    #[default]
    Pending,
    Accepted,
    Rejected,
    Flagged,
}

/// One worker's small causal network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerNetwork {
    pub worker_id: String,
    links: Vec<CausalLink>,
    pub confidence: Confidence,
    pub status: NetworkStatus,
    pub cohort: Option<u32>,
}

impl WorkerNetwork {
    /// Builds a network after checking the per-link invariants (no same-base
    /// links, no duplicates, no pair in both directions).
    pub fn new(
        worker_id: impl Into<String>,
        links: Vec<CausalLink>,
        confidence: Confidence,
    ) -> Result<Self, LinkViolation> {
        check_link_set(&links)?;
        Ok(Self {
            worker_id: worker_id.into(),
            links,
            confidence,
            status: NetworkStatus::Pending,
            cohort: None,
        })
    }

    pub fn with_status(mut self, status: NetworkStatus) -> Self {
        self.status = status;
        self
    }

    pub fn with_cohort(mut self, cohort: u32) -> Self {
        self.cohort = Some(cohort);
        self
    }

    pub fn links(&self) -> &[CausalLink] {
        &self.links
    }

    pub fn contains(&self, link: &CausalLink) -> bool {
        self.links.contains(link)
    }

    /// Distinct nodes in order of first appearance.
    pub fn nodes(&self) -> Vec<&TrendedAttribute> {
        nodes_in_order(&self.links)
    }

    pub fn is_tree(&self) -> bool {
        is_tree(&self.links)
    }
}

fn check_link_set(links: &[CausalLink]) -> Result<(), LinkViolation> {
    let mut seen = BTreeSet::new();
    for link in links {
        if link.cause.base() == link.effect.base() {
            return Err(LinkViolation::SelfBase(link.cause.base().to_string()));
        }
        if seen.contains(&link.reversed()) {
            return Err(LinkViolation::ReverseDuplicate(link.to_string()));
        }
        if !seen.insert(link.clone()) {
            return Err(LinkViolation::DuplicateLink(link.to_string()));
        }
    }
    Ok(())
}

pub fn nodes_in_order(links: &[CausalLink]) -> Vec<&TrendedAttribute> {
    let mut nodes: Vec<&TrendedAttribute> = Vec::new();
    for link in links {
        for attr in [&link.cause, &link.effect] {
            if !nodes.contains(&attr) {
                nodes.push(attr);
            }
        }
    }
    nodes
}

/// True when `links` form a tree over their endpoints: node count equals
/// link count + 1 and the undirected skeleton is connected.
pub fn is_tree(links: &[CausalLink]) -> bool {
    if links.is_empty() {
        return true;
    }
    let nodes = nodes_in_order(links);
    if nodes.len() != links.len() + 1 {
        return false;
    }
    let index: HashMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, a)| (a.display(), i))
        .collect();
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for link in links {
        let a = find(&mut parent, index[link.cause.display()]);
        let b = find(&mut parent, index[link.effect.display()]);
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

/// Which drop-down the participant filled first in a creation round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Cause,
    Effect,
}

/// Checks whether `candidate` may be appended to `current` under the round rule.
///
/// Round 1 takes any valid link; later rounds need exactly one endpoint that is
/// already part of the network.
pub fn validate_next_link(
    catalog: &AttributeCatalog,
    current: &[CausalLink],
    candidate: &CausalLink,
    max_links: usize,
) -> Result<(), LinkViolation> {
    for attr in [&candidate.cause, &candidate.effect] {
        if !catalog.contains(attr) {
            return Err(LinkViolation::CatalogMiss(attr.display().to_string()));
        }
    }
    if candidate.cause.base() == candidate.effect.base() {
        return Err(LinkViolation::SelfBase(candidate.cause.base().to_string()));
    }
    if current.len() >= max_links {
        return Err(LinkViolation::NetworkFull(current.len()));
    }
    if current.contains(candidate) {
        return Err(LinkViolation::DuplicateLink(candidate.to_string()));
    }
    if current.contains(&candidate.reversed()) {
        return Err(LinkViolation::ReverseDuplicate(candidate.to_string()));
    }
    if current.is_empty() {
        return Ok(());
    }
    let cause_old = current.iter().any(|l| l.touches(&candidate.cause));
    let effect_old = current.iter().any(|l| l.touches(&candidate.effect));
    match (cause_old, effect_old) {
        (false, false) => Err(LinkViolation::BothEndpointsNew),
        (true, true) => Err(LinkViolation::BothEndpointsOld),
        _ => Ok(()),
    }
}

/// Drop-down population rule: in rounds two and later the side chosen first
/// lists only already selected nodes.
pub fn check_first_choice(
    current: &[CausalLink],
    candidate: &CausalLink,
    first: Side,
) -> Result<(), LinkViolation> {
    if current.is_empty() {
        return Ok(());
    }
    let (attr, label) = match first {
        Side::Cause => (&candidate.cause, "cause"),
        Side::Effect => (&candidate.effect, "effect"),
    };
    if current.iter().any(|l| l.touches(attr)) {
        Ok(())
    } else {
        Err(LinkViolation::FirstChoiceNotSelected(label.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlterationKind {
    ChangeDirection,
    Delete,
    NoOp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlterationAction {
    pub link_index: usize,
    pub action: AlterationKind,
}

impl AlterationAction {
    pub fn new(link_index: usize, action: AlterationKind) -> Self {
        Self { link_index, action }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlterationError {
    #[error("link index {index} out of range for {len} links")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{0:?} is disabled by the active protocol profile")]
    ActionDisabledByProfile(AlterationKind),
}

/// Applies one alteration to a link list, leaving the other links untouched.
pub fn alter_links(
    links: &[CausalLink],
    alteration: AlterationAction,
    profile: &ProtocolProfile,
) -> Result<Vec<CausalLink>, AlterationError> {
    if alteration.action == AlterationKind::Delete && !profile.allow_delete {
        return Err(AlterationError::ActionDisabledByProfile(AlterationKind::Delete));
    }
    if alteration.link_index >= links.len() {
        return Err(AlterationError::IndexOutOfRange {
            index: alteration.link_index,
            len: links.len(),
        });
    }
    let mut out = links.to_vec();
    match alteration.action {
        AlterationKind::ChangeDirection => {
            out[alteration.link_index] = links[alteration.link_index].reversed();
            debug_assert!(!is_tree(links) || is_tree(&out));
        }
        AlterationKind::Delete => {
            out.remove(alteration.link_index);
        }
        AlterationKind::NoOp => {}
    }
    Ok(out)
}

/// Applies one alteration to a whole worker network.
pub fn apply_alteration(
    net: &WorkerNetwork,
    alteration: AlterationAction,
    profile: &ProtocolProfile,
) -> Result<WorkerNetwork, AlterationError> {
    let links = alter_links(&net.links, alteration, profile)?;
    Ok(WorkerNetwork {
        links,
        ..net.clone()
    })
}
