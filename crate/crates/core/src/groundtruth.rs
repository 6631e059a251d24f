//! Expert ground truth: merging expert networks into credibility scores.
//!
//! Links drawn by every expert get credibility 3, links drawn by none get 0,
//! and everything in between goes to a deliberation worklist where the
//! experts settle on 1 or 2 (more mediators between cause and effect means
//! a weaker link).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::io;

use serde::{Deserialize, Serialize};

use crate::attribute::{AttributeCatalog, CatalogError};
use crate::network::CausalLink;

/// Fewest expert networks the merge accepts.
pub const MIN_EXPERTS: usize = 3;

pub const MAX_CREDIBILITY: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum GroundTruthError {
    #[error("at least {MIN_EXPERTS} expert networks are required, got {0}")]
    TooFewExperts(usize),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("link {0} is not on the deliberation worklist")]
    NotOnWorklist(String),
    #[error("{} worklist link(s) have no deliberated score", .0.len())]
    MissingDecision(Vec<CausalLink>),
    #[error("score {score} for {link} is outside 0..=3")]
    ScoreOutOfRange { link: String, score: u8 },
    #[error("credibility file has no score for {0}")]
    NotTotal(String),
    #[error("credibility entry for {0} appears twice")]
    DuplicateEntry(String),
    #[error("malformed record: {0}")]
    Parse(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    AbsentAll,
    PresentAll,
    Deliberated,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AbsentAll => "absent_all",
            Self::PresentAll => "present_all",
            Self::Deliberated => "deliberated",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "absent_all" => Some(Self::AbsentAll),
            "present_all" => Some(Self::PresentAll),
            "deliberated" => Some(Self::Deliberated),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExpertNetwork {
    pub expert_id: String,
    pub links: BTreeSet<CausalLink>,
    pub references: BTreeMap<CausalLink, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ExpertLinkRecord {
    cause: String,
    effect: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ExpertFile {
    expert_id: String,
    links: Vec<ExpertLinkRecord>,
}

impl ExpertNetwork {
    pub fn new(expert_id: impl Into<String>, links: impl IntoIterator<Item = CausalLink>) -> Self {
        Self {
            expert_id: expert_id.into(),
            links: links.into_iter().collect(),
            references: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str, catalog: &AttributeCatalog) -> Result<Self, GroundTruthError> {
        let file: ExpertFile = serde_json::from_str(text)?;
        let mut net = Self::new(file.expert_id, []);
        for rec in file.links {
            let link = catalog.link(&rec.cause, &rec.effect)?;
            if let Some(r) = rec.reference {
                net.references.insert(link.clone(), r);
            }
            net.links.insert(link);
        }
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        let file = ExpertFile {
            expert_id: self.expert_id.clone(),
            links: self
                .links
                .iter()
                .map(|l| ExpertLinkRecord {
                    cause: l.cause().display().to_string(),
                    effect: l.effect().display().to_string(),
                    reference: self.references.get(l).cloned(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("expert network serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credibility {
    pub score: u8,
    pub provenance: Provenance,
}

/// Credibility score for every ordered attribute pair of a catalog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CredibilityMap {
    entries: BTreeMap<CausalLink, Credibility>,
}

impl CredibilityMap {
    /// Builds a total map from explicit scores; unspecified pairs score 0.
    /// Provenance follows the score (0 absent, 3 present, otherwise deliberated).
    pub fn from_scores(
        catalog: &AttributeCatalog,
        scores: impl IntoIterator<Item = (CausalLink, u8)>,
    ) -> Result<Self, GroundTruthError> {
        let mut entries: BTreeMap<CausalLink, Credibility> = catalog
            .pair_universe()
            .into_iter()
            .map(|l| {
                (
                    l,
                    Credibility {
                        score: 0,
                        provenance: Provenance::AbsentAll,
                    },
                )
            })
            .collect();
        for (link, score) in scores {
            if score > MAX_CREDIBILITY {
                return Err(GroundTruthError::ScoreOutOfRange {
                    link: link.to_string(),
                    score,
                });
            }
            let provenance = match score {
                0 => Provenance::AbsentAll,
                MAX_CREDIBILITY => Provenance::PresentAll,
                _ => Provenance::Deliberated,
            };
            let slot = entries
                .get_mut(&link)
                .ok_or_else(|| CatalogError::InvalidLink(link.to_string()))?;
            *slot = Credibility { score, provenance };
        }
        Ok(Self { entries })
    }

    pub fn get(&self, link: &CausalLink) -> Option<Credibility> {
        self.entries.get(link).copied()
    }

    pub fn score(&self, link: &CausalLink) -> Option<u8> {
        self.entries.get(link).map(|c| c.score)
    }

    /// Entries in (cause, effect) display order.
    pub fn iter(&self) -> impl Iterator<Item = (&CausalLink, Credibility)> {
        self.entries.iter().map(|(l, c)| (l, *c))
    }

    pub fn links(&self) -> impl Iterator<Item = &CausalLink> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes `cause,effect,cs,provenance` rows sorted by (cause, effect).
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), GroundTruthError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["cause", "effect", "cs", "provenance"])?;
        for (link, c) in &self.entries {
            w.write_record([
                link.cause().display(),
                link.effect().display(),
                &c.score.to_string(),
                c.provenance.as_str(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8 csv")
    }

    /// Reads a credibility CSV; every pair of the catalog must be present.
    pub fn read_csv<R: io::Read>(
        reader: R,
        catalog: &AttributeCatalog,
    ) -> Result<Self, GroundTruthError> {
        let mut r = csv::Reader::from_reader(reader);
        let mut entries = BTreeMap::new();
        for row in r.records() {
            let row = row?;
            if row.len() != 4 {
                return Err(GroundTruthError::Parse(format!("expected 4 fields: {row:?}")));
            }
            let link = catalog.link(&row[0], &row[1])?;
            let score: u8 = row[2]
                .trim()
                .parse()
                .map_err(|_| GroundTruthError::Parse(format!("bad score {:?}", &row[2])))?;
            if score > MAX_CREDIBILITY {
                return Err(GroundTruthError::ScoreOutOfRange {
                    link: link.to_string(),
                    score,
                });
            }
            let provenance = Provenance::parse(row[3].trim())
                .ok_or_else(|| GroundTruthError::Parse(format!("bad provenance {:?}", &row[3])))?;
            if entries
                .insert(link.clone(), Credibility { score, provenance })
                .is_some()
            {
                return Err(GroundTruthError::DuplicateEntry(link.to_string()));
            }
        }
        if let Some(missing) = catalog
            .pair_universe()
            .into_iter()
            .find(|l| !entries.contains_key(l))
        {
            return Err(GroundTruthError::NotTotal(missing.to_string()));
        }
        Ok(Self { entries })
    }
}

/// One link that appears in some but not all expert networks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WorklistEntry {
    pub cause: String,
    pub effect: String,
    pub appearances: usize,
}

/// Result of phase-one merging: 0/3 scores fixed, the rest awaiting deliberation.
#[derive(Debug, Clone)]
pub struct DraftCredibility {
    universe: Vec<CausalLink>,
    fixed: BTreeMap<CausalLink, Credibility>,
    worklist: BTreeMap<CausalLink, usize>,
    expert_count: usize,
}

impl DraftCredibility {
    pub fn fixed(&self) -> &BTreeMap<CausalLink, Credibility> {
        &self.fixed
    }

    pub fn worklist(&self) -> impl Iterator<Item = (&CausalLink, usize)> {
        self.worklist.iter().map(|(l, n)| (l, *n))
    }

    pub fn worklist_entries(&self) -> Vec<WorklistEntry> {
        self.worklist
            .iter()
            .map(|(l, n)| WorklistEntry {
                cause: l.cause().display().to_string(),
                effect: l.effect().display().to_string(),
                appearances: *n,
            })
            .collect()
    }

    pub fn is_on_worklist(&self, link: &CausalLink) -> bool {
        self.worklist.contains_key(link)
    }

    pub fn expert_count(&self) -> usize {
        self.expert_count
    }

    /// Suggested deliberation score from the union expert graph: 2 when the
    /// shortest mediated path has one mediator, 1 otherwise (including when
    /// there is no mediated path at all).
    pub fn suggest_score(
        &self,
        link: &CausalLink,
        experts: &[ExpertNetwork],
    ) -> Result<u8, GroundTruthError> {
        if !self.is_on_worklist(link) {
            return Err(GroundTruthError::NotOnWorklist(link.to_string()));
        }
        Ok(match mediator_count(link, experts) {
            Some(1) => 2,
            _ => 1,
        })
    }

    /// Completes the map with the deliberated scores. Decisions may also
    /// override fixed 0/3 scores; such links are recorded as deliberated.
    pub fn apply_deliberations(
        &self,
        decisions: &BTreeMap<CausalLink, u8>,
    ) -> Result<CredibilityMap, GroundTruthError> {
        for (link, &score) in decisions {
            if score > MAX_CREDIBILITY {
                return Err(GroundTruthError::ScoreOutOfRange {
                    link: link.to_string(),
                    score,
                });
            }
            if !self.fixed.contains_key(link) && !self.worklist.contains_key(link) {
                return Err(CatalogError::InvalidLink(link.to_string()).into());
            }
        }
        let missing: Vec<CausalLink> = self
            .worklist
            .keys()
            .filter(|l| !decisions.contains_key(*l))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(GroundTruthError::MissingDecision(missing));
        }
        let entries = self
            .universe
            .iter()
            .map(|link| {
                let c = match decisions.get(link) {
                    Some(&score) => Credibility {
                        score,
                        provenance: Provenance::Deliberated,
                    },
                    None => self.fixed[link],
                };
                (link.clone(), c)
            })
            .collect();
        Ok(CredibilityMap { entries })
    }
}

/// Phase one of the ground-truth protocol.
pub fn merge_expert_networks(
    experts: &[ExpertNetwork],
    catalog: &AttributeCatalog,
) -> Result<DraftCredibility, GroundTruthError> {
    if experts.len() < MIN_EXPERTS {
        return Err(GroundTruthError::TooFewExperts(experts.len()));
    }
    let mut appearances: HashMap<&CausalLink, usize> = HashMap::new();
    for expert in experts {
        for link in &expert.links {
            for attr in [link.cause(), link.effect()] {
                if !catalog.contains(attr) {
                    return Err(CatalogError::Miss(attr.display().to_string()).into());
                }
            }
            *appearances.entry(link).or_default() += 1;
        }
    }
    let universe = catalog.pair_universe();
    let mut fixed = BTreeMap::new();
    let mut worklist = BTreeMap::new();
    for link in &universe {
        match appearances.get(link).copied().unwrap_or(0) {
            0 => {
                fixed.insert(
                    link.clone(),
                    Credibility {
                        score: 0,
                        provenance: Provenance::AbsentAll,
                    },
                );
            }
            n if n == experts.len() => {
                fixed.insert(
                    link.clone(),
                    Credibility {
                        score: MAX_CREDIBILITY,
                        provenance: Provenance::PresentAll,
                    },
                );
            }
            n => {
                worklist.insert(link.clone(), n);
            }
        }
    }
    Ok(DraftCredibility {
        universe,
        fixed,
        worklist,
        expert_count: experts.len(),
    })
}

/// Number of mediators on the shortest directed cause -> effect path in the
/// union of the expert graphs, ignoring the direct link. `None` if no such path.
pub fn mediator_count(link: &CausalLink, experts: &[ExpertNetwork]) -> Option<usize> {
    let mut adjacency: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    for l in experts.iter().flat_map(|e| e.links.iter()) {
        if l == link {
            continue;
        }
        adjacency
            .entry(l.cause().display())
            .or_default()
            .insert(l.effect().display());
    }
    let start = link.cause().display();
    let goal = link.effect().display();
    let mut dist: HashMap<&str, usize> = HashMap::from([(start, 0)]);
    let mut queue = VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        let d = dist[node];
        for &next in adjacency.get(node).into_iter().flatten() {
            if dist.contains_key(next) {
                continue;
            }
            if next == goal {
                return Some(d);
            }
            dist.insert(next, d + 1);
            queue.push_back(next);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deliberation {
    pub score: u8,
    pub note: String,
}

/// Reads `cause,effect,score,note` deliberation records.
pub fn read_deliberations<R: io::Read>(
    reader: R,
    catalog: &AttributeCatalog,
) -> Result<BTreeMap<CausalLink, Deliberation>, GroundTruthError> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let mut out = BTreeMap::new();
    for row in r.records() {
        let row = row?;
        if row.len() < 3 {
            return Err(GroundTruthError::Parse(format!(
                "expected cause,effect,score[,note]: {row:?}"
            )));
        }
        let link = catalog.link(&row[0], &row[1])?;
        let score: u8 = row[2]
            .trim()
            .parse()
            .map_err(|_| GroundTruthError::Parse(format!("bad score {:?}", &row[2])))?;
        let note = row.get(3).unwrap_or("").to_string();
        if out.insert(link.clone(), Deliberation { score, note }).is_some() {
            return Err(GroundTruthError::DuplicateEntry(link.to_string()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{catalog, link};

    fn experts_with(shared: &[(&str, &str)], partial: &[(&str, &str)], n: usize, k: usize) -> Vec<ExpertNetwork> {
        (0..n)
            .map(|i| {
                let mut links: Vec<CausalLink> = shared.iter().map(|(c, e)| link(c, e)).collect();
                if i < k {
                    links.extend(partial.iter().map(|(c, e)| link(c, e)));
                }
                ExpertNetwork::new(format!("e{i}"), links)
            })
            .collect()
    }

    #[test]
    fn appearance_rule() {
        let cat = catalog();
        let experts = experts_with(
            &[("more fossil fuel burning", "increasing CO2")],
            &[("increasing CO2", "increasing temperature")],
            5,
            2,
        );
        let draft = merge_expert_networks(&experts, &cat).unwrap();
        let all = link("more fossil fuel burning", "increasing CO2");
        assert_eq!(
            draft.fixed()[&all],
            Credibility {
                score: 3,
                provenance: Provenance::PresentAll
            }
        );
        let none = link("more drought", "increasing CO2");
        assert_eq!(draft.fixed()[&none].score, 0);
        assert_eq!(draft.fixed()[&none].provenance, Provenance::AbsentAll);
        let some = link("increasing CO2", "increasing temperature");
        assert!(draft.is_on_worklist(&some));
        assert_eq!(draft.worklist().count(), 1);
        assert_eq!(draft.worklist_entries()[0].appearances, 2);
    }

    #[test]
    fn too_few_experts() {
        let cat = catalog();
        let experts = experts_with(&[], &[], 2, 0);
        assert!(matches!(
            merge_expert_networks(&experts, &cat),
            Err(GroundTruthError::TooFewExperts(2))
        ));
    }

    #[test]
    fn suggestions_follow_mediator_count() {
        let cat = catalog();
        let a = "more fossil fuel burning";
        let m1 = "increasing emissions";
        let m2 = "increasing CO2";
        let b = "increasing temperature";
        // A->B only in one expert; A->M->B in all.
        let one_mediator = experts_with(&[(a, m1), (m1, b)], &[(a, b)], 3, 1);
        let draft = merge_expert_networks(&one_mediator, &cat).unwrap();
        assert_eq!(draft.suggest_score(&link(a, b), &one_mediator).unwrap(), 2);

        let two_mediators = experts_with(&[(a, m1), (m1, m2), (m2, b)], &[(a, b)], 3, 1);
        let draft = merge_expert_networks(&two_mediators, &cat).unwrap();
        assert_eq!(draft.suggest_score(&link(a, b), &two_mediators).unwrap(), 1);

        let unmediated = experts_with(&[], &[(a, b)], 3, 1);
        let draft = merge_expert_networks(&unmediated, &cat).unwrap();
        assert_eq!(draft.suggest_score(&link(a, b), &unmediated).unwrap(), 1);
        assert!(matches!(
            draft.suggest_score(&link(m1, b), &unmediated),
            Err(GroundTruthError::NotOnWorklist(_))
        ));
    }

    #[test]
    fn deliberation_completes_map() {
        let cat = catalog();
        let target = ("increasing CO2", "increasing temperature");
        let experts = experts_with(&[], &[target], 3, 1);
        let draft = merge_expert_networks(&experts, &cat).unwrap();
        let l = link(target.0, target.1);

        let missing = draft.apply_deliberations(&BTreeMap::new()).unwrap_err();
        assert!(matches!(missing, GroundTruthError::MissingDecision(ref v) if v == &vec![l.clone()]));

        let bad = BTreeMap::from([(l.clone(), 5)]);
        assert!(matches!(
            draft.apply_deliberations(&bad),
            Err(GroundTruthError::ScoreOutOfRange { score: 5, .. })
        ));

        let map = draft
            .apply_deliberations(&BTreeMap::from([(l.clone(), 2)]))
            .unwrap();
        assert_eq!(map.score(&l), Some(2));
        assert_eq!(map.get(&l).unwrap().provenance, Provenance::Deliberated);
        assert_eq!(map.len(), cat.pair_universe().len());
    }

    #[test]
    fn override_of_fixed_score_is_deliberated() {
        let cat = catalog();
        let shared = ("more fossil fuel burning", "increasing CO2");
        let experts = experts_with(&[shared], &[], 3, 0);
        let draft = merge_expert_networks(&experts, &cat).unwrap();
        let l = link(shared.0, shared.1);
        let map = draft
            .apply_deliberations(&BTreeMap::from([(l.clone(), 2)]))
            .unwrap();
        assert_eq!(
            map.get(&l),
            Some(Credibility {
                score: 2,
                provenance: Provenance::Deliberated
            })
        );
    }

    #[test]
    fn csv_round_trip_and_order() {
        let cat = catalog();
        let map = CredibilityMap::from_scores(
            &cat,
            [
                (link("more fossil fuel burning", "increasing CO2"), 3),
                (link("increasing CO2", "increasing temperature"), 2),
            ],
        )
        .unwrap();
        let text = map.to_csv_string();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("cause,effect,cs,provenance"));
        let rows: Vec<&str> = lines.collect();
        let mut sorted = rows.clone();
        sorted.sort_by_key(|r| {
            let mut f = r.splitn(3, ',');
            (f.next().unwrap().to_string(), f.next().unwrap().to_string())
        });
        assert_eq!(rows, sorted);
        let back = CredibilityMap::read_csv(text.as_bytes(), &cat).unwrap();
        assert_eq!(back, map);

        let truncated: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(matches!(
            CredibilityMap::read_csv(truncated.as_bytes(), &cat),
            Err(GroundTruthError::NotTotal(_))
        ));
    }

    #[test]
    fn expert_json_round_trip() {
        let cat = catalog();
        let mut e = ExpertNetwork::new("e1", [link("more fossil fuel burning", "increasing CO2")]);
        e.references.insert(
            link("more fossil fuel burning", "increasing CO2"),
            "IPCC AR6 WG1".into(),
        );
        let back = ExpertNetwork::from_json(&e.to_json(), &cat).unwrap();
        assert_eq!(back.links, e.links);
        assert_eq!(back.references, e.references);
    }

    #[test]
    fn deliberation_csv() {
        let cat = catalog();
        let text = "cause,effect,score,note\nincreasing CO2,increasing temperature,2,one mediator\n";
        let d = read_deliberations(text.as_bytes(), &cat).unwrap();
        assert_eq!(
            d[&link("increasing CO2", "increasing temperature")],
            Deliberation {
                score: 2,
                note: "one mediator".into()
            }
        );
    }
}
