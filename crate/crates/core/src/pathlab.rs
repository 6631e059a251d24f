//! Contingency tables and causal-chain support.
//!
//! [`delta_p`] works on 2x2 trial matrices. The rest of the module measures
//! how strongly the crowd supports a bogus cause (direct links into an
//! outcome) relative to a true cause (the best multi-hop chain into it).

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::attribute::AttributeCatalog;
use crate::metrics::AggregatedNetwork;

pub const DEFAULT_MAX_HOPS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PathlabError {
    #[error("trial matrix has unknown cells")]
    PartialMatrix,
    #[error("trial matrix row {0} sums to zero")]
    ZeroRow(usize),
    #[error("value does not fit in the result type")]
    Overflow,
    #[error("no supported path from {cause} to the outcome within {max_hops} hops")]
    NoTruePath { cause: String, max_hops: usize },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("attribute {0:?} is not in the catalog")]
    CatalogMiss(String),
}

/// 2x2 contingency counts, rows cause present / absent, columns outcome
/// present / absent. Cells may be unknown; the crowd only yields some of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialMatrix {
    pub cause: String,
    pub outcome: String,
    pub cells: [[Option<Ratio<u64>>; 2]; 2],
}

impl TrialMatrix {
    pub fn full(cause: &str, outcome: &str, counts: [[u64; 2]; 2]) -> Self {
        Self {
            cause: cause.into(),
            outcome: outcome.into(),
            cells: counts.map(|row| row.map(|c| Some(Ratio::from_integer(c)))),
        }
    }

    /// Only the cause-present / outcome-present cell is known.
    pub fn upper_left(cause: &str, outcome: &str, value: Ratio<u64>) -> Self {
        Self {
            cause: cause.into(),
            outcome: outcome.into(),
            cells: [[Some(value), None], [None, None]],
        }
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().flatten().all(Option::is_some)
    }

    pub fn rows_swapped(&self) -> Self {
        Self {
            cells: [self.cells[1], self.cells[0]],
            ..self.clone()
        }
    }
}

fn to_signed(r: Ratio<u64>) -> Result<Ratio<i64>, PathlabError> {
    let n = i64::try_from(*r.numer()).map_err(|_| PathlabError::Overflow)?;
    let d = i64::try_from(*r.denom()).map_err(|_| PathlabError::Overflow)?;
    Ok(Ratio::new(n, d))
}

/// `P(O|C) - P(O|not C)`, exact.
pub fn delta_p(m: &TrialMatrix) -> Result<Ratio<i64>, PathlabError> {
    if !m.is_complete() {
        return Err(PathlabError::PartialMatrix);
    }
    let mut p = [Ratio::zero(); 2];
    for (i, row) in m.cells.iter().enumerate() {
        let (a, b) = (row[0].unwrap(), row[1].unwrap());
        let sum = a + b;
        if sum.is_zero() {
            return Err(PathlabError::ZeroRow(i));
        }
        p[i] = to_signed(a / sum)?;
    }
    Ok(p[0] - p[1])
}

/// Directed multigraph-free view of vote counts keyed by node label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VoteGraph {
    edges: BTreeMap<String, BTreeMap<String, u32>>,
}

impl VoteGraph {
    /// Parallel edges are summed; self-loops and zero counts are dropped.
    pub fn from_edges<S: Into<String>>(edges: impl IntoIterator<Item = (S, S, u32)>) -> Self {
        let mut g = Self::default();
        for (from, to, votes) in edges {
            let (from, to) = (from.into(), to.into());
            if votes == 0 || from == to {
                continue;
            }
            *g.edges.entry(from).or_default().entry(to).or_default() += votes;
        }
        g
    }

    pub fn from_aggregate(agg: &AggregatedNetwork) -> Self {
        Self::from_edges(agg.voted_links().map(|(l, v)| {
            (l.cause().display().to_string(), l.effect().display().to_string(), v)
        }))
    }

    pub fn votes(&self, from: &str, to: &str) -> u32 {
        self.edges
            .get(from)
            .and_then(|m| m.get(to))
            .copied()
            .unwrap_or(0)
    }

    pub fn successors(&self, node: &str) -> impl Iterator<Item = (&str, u32)> {
        self.edges
            .get(node)
            .into_iter()
            .flatten()
            .map(|(n, v)| (n.as_str(), *v))
    }

    /// Replaces every node of `group` by a single node `label`.
    pub fn contract(&self, group: &BTreeSet<String>, label: &str) -> Self {
        let map = |n: &String| {
            if group.contains(n) {
                label.to_string()
            } else {
                n.clone()
            }
        };
        Self::from_edges(
            self.edges
                .iter()
                .flat_map(|(f, m)| m.iter().map(move |(t, v)| (map(f), map(t), *v))),
        )
    }
}

/// A chain of links with its vote support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSupport {
    pub path: Vec<String>,
    pub link_votes: Vec<u32>,
    pub weakest: u32,
    pub average: Ratio<u64>,
}

impl PathSupport {
    fn new(path: Vec<String>, link_votes: Vec<u32>) -> Self {
        let weakest = link_votes.iter().copied().min().unwrap_or(0);
        let total: u64 = link_votes.iter().map(|&v| v as u64).sum();
        let average = Ratio::new(total, link_votes.len().max(1) as u64);
        Self {
            path,
            link_votes,
            weakest,
            average,
        }
    }

    pub fn hops(&self) -> usize {
        self.link_votes.len()
    }

    pub fn support(&self, criterion: Criterion) -> Ratio<u64> {
        match criterion {
            Criterion::Weakest => Ratio::from_integer(self.weakest as u64),
            Criterion::Average => self.average,
        }
    }
}

/// All simple paths of 1..=`max_hops` links from a node of `from` to a node
/// of `to`, sorted by hop count, then strongest weakest link, then node
/// sequence. A path may pass through a `to` node and continue.
pub fn enumerate_paths(
    graph: &VoteGraph,
    from: &BTreeSet<String>,
    to: &BTreeSet<String>,
    max_hops: usize,
) -> Vec<PathSupport> {
    let mut found = Vec::new();
    for start in from {
        let mut path = vec![start.clone()];
        let mut votes = Vec::new();
        walk(graph, to, max_hops, &mut path, &mut votes, &mut found);
    }
    found.sort_by(|a, b| {
        a.hops()
            .cmp(&b.hops())
            .then(b.weakest.cmp(&a.weakest))
            .then_with(|| a.path.cmp(&b.path))
    });
    found
}

fn walk(
    graph: &VoteGraph,
    to: &BTreeSet<String>,
    max_hops: usize,
    path: &mut Vec<String>,
    votes: &mut Vec<u32>,
    found: &mut Vec<PathSupport>,
) {
    if votes.len() == max_hops {
        return;
    }
    let last = path.last().expect("path starts non-empty").clone();
    for (next, v) in graph.successors(&last) {
        if path.iter().any(|n| n == next) {
            continue;
        }
        path.push(next.to_string());
        votes.push(v);
        if to.contains(next) {
            found.push(PathSupport::new(path.clone(), votes.clone()));
        }
        walk(graph, to, max_hops, path, votes, found);
        path.pop();
        votes.pop();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Weakest,
    Average,
}

impl Criterion {
    pub const ALL: [Criterion; 2] = [Criterion::Weakest, Criterion::Average];
}

/// Bogus cause(s), a true cause and an outcome given as a synonym set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IllusionQuery {
    pub bogus: BTreeSet<String>,
    #[serde(rename = "true")]
    pub true_cause: String,
    pub outcome: BTreeSet<String>,
    #[serde(default = "default_max_hops")]
    pub max_hops: usize,
}

fn default_max_hops() -> usize {
    DEFAULT_MAX_HOPS
}

impl IllusionQuery {
    pub fn from_json(text: &str) -> Result<Self, PathlabError> {
        let q: Self =
            serde_json::from_str(text).map_err(|e| PathlabError::InvalidQuery(e.to_string()))?;
        q.check()?;
        Ok(q)
    }

    /// Structural checks: non-empty, pairwise disjoint roles, `max_hops >= 1`.
    pub fn check(&self) -> Result<(), PathlabError> {
        let bad = |m: &str| Err(PathlabError::InvalidQuery(m.into()));
        if self.max_hops == 0 {
            return bad("max_hops must be at least 1");
        }
        if self.bogus.is_empty() || self.outcome.is_empty() {
            return bad("bogus and outcome sets must be non-empty");
        }
        if self.bogus.contains(&self.true_cause) || self.outcome.contains(&self.true_cause) {
            return bad("true cause overlaps another role");
        }
        if !self.bogus.is_disjoint(&self.outcome) {
            return bad("bogus and outcome sets overlap");
        }
        Ok(())
    }

    /// Also requires every named attribute to be in `catalog`.
    pub fn validate(&self, catalog: &AttributeCatalog) -> Result<(), PathlabError> {
        self.check()?;
        let names = self
            .bogus
            .iter()
            .chain(&self.outcome)
            .chain(std::iter::once(&self.true_cause));
        for n in names {
            if catalog.get(n).is_none() {
                return Err(PathlabError::CatalogMiss(n.clone()));
            }
        }
        Ok(())
    }

    /// Label of the merged outcome node.
    pub fn outcome_label(&self) -> String {
        self.outcome.iter().cloned().collect::<Vec<_>>().join(" + ")
    }
}

/// Sum of direct votes from any bogus cause into any outcome synonym.
pub fn bogus_votes(graph: &VoteGraph, q: &IllusionQuery) -> u64 {
    q.bogus
        .iter()
        .flat_map(|b| q.outcome.iter().map(move |o| graph.votes(b, o) as u64))
        .sum()
}

/// Paths from the true cause into the merged outcome node.
pub fn true_cause_paths(graph: &VoteGraph, q: &IllusionQuery) -> Vec<PathSupport> {
    let label = q.outcome_label();
    let merged = graph.contract(&q.outcome, &label);
    enumerate_paths(
        &merged,
        &BTreeSet::from([q.true_cause.clone()]),
        &BTreeSet::from([label]),
        q.max_hops,
    )
}

fn best_of<'a>(
    paths: impl IntoIterator<Item = &'a PathSupport>,
    criterion: Criterion,
) -> Option<&'a PathSupport> {
    paths.into_iter().min_by(|a, b| {
        b.support(criterion)
            .cmp(&a.support(criterion))
            .then_with(|| a.path.cmp(&b.path))
    })
}

/// Best path for every hop count that has at least one path.
pub fn best_per_hop(paths: &[PathSupport], criterion: Criterion) -> BTreeMap<usize, PathSupport> {
    let mut by_hops: BTreeMap<usize, Vec<&PathSupport>> = BTreeMap::new();
    for p in paths {
        by_hops.entry(p.hops()).or_default().push(p);
    }
    by_hops
        .into_iter()
        .filter_map(|(h, ps)| best_of(ps, criterion).map(|p| (h, p.clone())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IllusionRatio {
    pub criterion: Criterion,
    pub bogus_votes: u64,
    pub true_support: Ratio<u64>,
    pub ratio: Ratio<u64>,
    pub best_path: PathSupport,
}

/// Bogus votes divided by the true cause's chain support. The chain is the
/// best one, under `criterion`, among the longest chains found within
/// `max_hops`: the longest chain is the fully mediated mechanism.
pub fn illusion_ratio(
    agg: &AggregatedNetwork,
    q: &IllusionQuery,
    criterion: Criterion,
) -> Result<IllusionRatio, PathlabError> {
    q.check()?;
    let graph = VoteGraph::from_aggregate(agg);
    ratio_on_graph(&graph, q, criterion, &true_cause_paths(&graph, q))
}

fn ratio_on_graph(
    graph: &VoteGraph,
    q: &IllusionQuery,
    criterion: Criterion,
    paths: &[PathSupport],
) -> Result<IllusionRatio, PathlabError> {
    let no_path = || PathlabError::NoTruePath {
        cause: q.true_cause.clone(),
        max_hops: q.max_hops,
    };
    let deepest = paths.iter().map(PathSupport::hops).max().ok_or_else(no_path)?;
    let best = best_of(paths.iter().filter(|p| p.hops() == deepest), criterion)
        .ok_or_else(no_path)?
        .clone();
    let true_support = best.support(criterion);
    if true_support.is_zero() {
        return Err(no_path());
    }
    let bogus = bogus_votes(graph, q);
    Ok(IllusionRatio {
        criterion,
        bogus_votes: bogus,
        true_support,
        ratio: Ratio::from_integer(bogus) / true_support,
        best_path: best,
    })
}

/// Partial trial matrices for the bogus and the true cause. Only the
/// upper-left cell is filled: direct bogus votes, and the true cause's chain
/// support under `criterion` (0 when there is no chain).
pub fn build_trial_matrices(
    q: &IllusionQuery,
    agg: &AggregatedNetwork,
    criterion: Criterion,
) -> (TrialMatrix, TrialMatrix) {
    let graph = VoteGraph::from_aggregate(agg);
    let paths = true_cause_paths(&graph, q);
    let support = ratio_on_graph(&graph, q, criterion, &paths)
        .map(|r| r.true_support)
        .unwrap_or_else(|_| Ratio::zero());
    let bogus_label = q.bogus.iter().cloned().collect::<Vec<_>>().join(" + ");
    let outcome = q.outcome_label();
    (
        TrialMatrix::upper_left(&bogus_label, &outcome, Ratio::from_integer(bogus_votes(&graph, q))),
        TrialMatrix::upper_left(&q.true_cause, &outcome, support),
    )
}

/// Exact rational plus its decimal value, for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactValue {
    pub exact: String,
    pub value: f64,
}

impl From<Ratio<u64>> for ExactValue {
    fn from(r: Ratio<u64>) -> Self {
        Self {
            exact: if r.is_integer() {
                r.numer().to_string()
            } else {
                format!("{}/{}", r.numer(), r.denom())
            },
            value: r.to_f64().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathReport {
    pub path: Vec<String>,
    pub hops: usize,
    pub link_votes: Vec<u32>,
    pub weakest: u32,
    pub average: ExactValue,
}

impl From<&PathSupport> for PathReport {
    fn from(p: &PathSupport) -> Self {
        Self {
            path: p.path.clone(),
            hops: p.hops(),
            link_votes: p.link_votes.clone(),
            weakest: p.weakest,
            average: p.average.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub criterion: Criterion,
    /// `None` when the true cause has no supported chain.
    pub true_support: Option<ExactValue>,
    pub ratio: Option<ExactValue>,
    pub best_path: Option<PathReport>,
    pub best_per_hop: BTreeMap<usize, PathReport>,
    pub trial_matrices: TrialMatrixPair,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialMatrixPair {
    pub bogus: TrialMatrixReport,
    #[serde(rename = "true")]
    pub true_cause: TrialMatrixReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialMatrixReport {
    pub cause: String,
    pub outcome: String,
    /// Row-major; `null` marks an unknown cell.
    pub cells: [[Option<ExactValue>; 2]; 2],
}

impl From<&TrialMatrix> for TrialMatrixReport {
    fn from(m: &TrialMatrix) -> Self {
        Self {
            cause: m.cause.clone(),
            outcome: m.outcome.clone(),
            cells: m.cells.map(|row| row.map(|c| c.map(ExactValue::from))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IllusionReport {
    pub query: IllusionQuery,
    pub bogus_votes: u64,
    pub paths: Vec<PathReport>,
    pub criteria: Vec<CriterionReport>,
}

/// Ratios under both criteria with every supporting path listed.
pub fn illusion_report(agg: &AggregatedNetwork, q: &IllusionQuery) -> Result<IllusionReport, PathlabError> {
    q.check()?;
    let graph = VoteGraph::from_aggregate(agg);
    let paths = true_cause_paths(&graph, q);
    let criteria = Criterion::ALL
        .iter()
        .map(|&c| {
            let ratio = ratio_on_graph(&graph, q, c, &paths).ok();
            let (bogus_m, true_m) = build_trial_matrices(q, agg, c);
            CriterionReport {
                criterion: c,
                true_support: ratio.as_ref().map(|r| r.true_support.into()),
                ratio: ratio.as_ref().map(|r| r.ratio.into()),
                best_path: ratio.as_ref().map(|r| (&r.best_path).into()),
                best_per_hop: best_per_hop(&paths, c)
                    .iter()
                    .map(|(h, p)| (*h, p.into()))
                    .collect(),
                trial_matrices: TrialMatrixPair {
                    bogus: (&bogus_m).into(),
                    true_cause: (&true_m).into(),
                },
            }
        })
        .collect();
    Ok(IllusionReport {
        query: q.clone(),
        bogus_votes: bogus_votes(&graph, q),
        paths: paths.iter().map(PathReport::from).collect(),
        criteria,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn r(n: u64, d: u64) -> Ratio<u64> {
        Ratio::new(n, d)
    }

    #[test]
    fn delta_p_table() {
        let m1 = TrialMatrix::full("C", "O", [[80, 20], [20, 80]]);
        let m3 = TrialMatrix::full("C", "O", [[80, 20], [80, 20]]);
        let m4 = TrialMatrix::full("C", "O", [[20, 80], [20, 80]]);
        assert_eq!(delta_p(&m1).unwrap(), Ratio::new(3, 5));
        assert_eq!(delta_p(&m1.rows_swapped()).unwrap(), Ratio::new(-3, 5));
        assert_eq!(delta_p(&m3).unwrap(), Ratio::zero());
        assert_eq!(delta_p(&m4).unwrap(), Ratio::zero());
    }

    #[test]
    fn delta_p_errors() {
        let zero = TrialMatrix::full("C", "O", [[0, 0], [20, 80]]);
        assert_eq!(delta_p(&zero), Err(PathlabError::ZeroRow(0)));
        let partial = TrialMatrix::upper_left("C", "O", r(5, 1));
        assert_eq!(delta_p(&partial), Err(PathlabError::PartialMatrix));
    }

    fn chain() -> VoteGraph {
        VoteGraph::from_edges([("F", "E", 16), ("E", "C", 30), ("C", "H", 25), ("H", "T", 24)])
    }

    #[test]
    fn chain_has_one_path() {
        let paths = enumerate_paths(&chain(), &set(&["F"]), &set(&["T"]), 4);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].path, vec!["F", "E", "C", "H", "T"]);
        assert_eq!(paths[0].weakest, 16);
        assert_eq!(paths[0].average, r(95, 4));
        assert!(enumerate_paths(&chain(), &set(&["F"]), &set(&["T"]), 3).is_empty());
    }

    #[test]
    fn direct_link_adds_short_path() {
        let g = VoteGraph::from_edges([
            ("F", "E", 16),
            ("E", "C", 30),
            ("C", "H", 25),
            ("H", "T", 24),
            ("F", "T", 2),
        ]);
        let paths = enumerate_paths(&g, &set(&["F"]), &set(&["T"]), 4);
        let hops: Vec<usize> = paths.iter().map(PathSupport::hops).collect();
        assert_eq!(hops, vec![1, 4]);
    }

    #[test]
    fn contraction_sums_parallel_votes() {
        let g = VoteGraph::from_edges([("A", "X", 2), ("A", "Y", 3), ("X", "Y", 9)]);
        let c = g.contract(&set(&["X", "Y"]), "XY");
        assert_eq!(c.votes("A", "XY"), 5);
        assert_eq!(c.successors("XY").count(), 0);
    }

    fn agg_of(edges: &[(&str, &str, u32)]) -> AggregatedNetwork {
        let cat = AttributeCatalog::final_study();
        AggregatedNetwork::from_votes(edges.iter().map(|(c, e, v)| (cat.link(c, e).unwrap(), *v)))
    }

    fn query() -> IllusionQuery {
        IllusionQuery {
            bogus: set(&["increasing solar radiation"]),
            true_cause: "more fossil fuel burning".into(),
            outcome: set(&["increasing temperature", "more intense heatwaves"]),
            max_hops: 4,
        }
    }

    #[test]
    fn ratio_uses_deepest_chain() {
        let agg = agg_of(&[
            ("increasing solar radiation", "more intense heatwaves", 6),
            ("more fossil fuel burning", "increasing emissions", 2),
            ("increasing emissions", "increasing CO2", 10),
            ("increasing CO2", "more trapped heat", 4),
            ("more trapped heat", "increasing temperature", 4),
            ("more fossil fuel burning", "increasing temperature", 9),
        ]);
        let w = illusion_ratio(&agg, &query(), Criterion::Weakest).unwrap();
        assert_eq!(w.best_path.hops(), 4);
        assert_eq!((w.true_support, w.ratio), (r(2, 1), r(3, 1)));
        let a = illusion_ratio(&agg, &query(), Criterion::Average).unwrap();
        assert_eq!((a.true_support, a.ratio), (r(5, 1), r(6, 5)));
    }

    #[test]
    fn no_bogus_votes_is_zero_ratio() {
        let agg = agg_of(&[("more fossil fuel burning", "increasing temperature", 3)]);
        let out = illusion_ratio(&agg, &query(), Criterion::Average).unwrap();
        assert_eq!(out.ratio, Ratio::zero());
    }

    #[test]
    fn missing_true_path() {
        let agg = agg_of(&[("increasing solar radiation", "increasing temperature", 3)]);
        assert!(matches!(
            illusion_ratio(&agg, &query(), Criterion::Weakest),
            Err(PathlabError::NoTruePath { .. })
        ));
        let (b, t) = build_trial_matrices(&query(), &agg, Criterion::Weakest);
        assert_eq!(b.cells[0][0], Some(r(3, 1)));
        assert_eq!(t.cells[0][0], Some(Ratio::zero()));
        assert_eq!(t.cells[1][1], None);
    }

    #[test]
    fn empty_aggregate_matrices() {
        let (b, t) =
            build_trial_matrices(&query(), &AggregatedNetwork::default(), Criterion::Average);
        assert_eq!(b.cells[0][0], Some(Ratio::zero()));
        assert_eq!(t.cells[0][0], Some(Ratio::zero()));
    }

    #[test]
    fn query_json() {
        let q = IllusionQuery::from_json(
            r#"{"bogus":["a"],"true":"b","outcome":["c","d"]}"#,
        )
        .unwrap();
        assert_eq!(q.max_hops, DEFAULT_MAX_HOPS);
        assert!(IllusionQuery::from_json(r#"{"bogus":["a"],"true":"a","outcome":["c"]}"#).is_err());
        assert!(
            IllusionQuery::from_json(r#"{"bogus":["a"],"true":"b","outcome":["c"],"max_hops":0}"#)
                .is_err()
        );
        assert!(matches!(
            query_with_unknown().validate(&AttributeCatalog::final_study()),
            Err(PathlabError::CatalogMiss(_))
        ));
    }

    fn query_with_unknown() -> IllusionQuery {
        IllusionQuery {
            true_cause: "more unicorns".into(),
            ..query()
        }
    }
}
