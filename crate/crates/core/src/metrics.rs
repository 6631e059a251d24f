//! Crowd aggregation and summary statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::io;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::attribute::{AttributeCatalog, CatalogError};
use crate::groundtruth::CredibilityMap;
use crate::network::{CausalLink, NetworkStatus, WorkerNetwork};

/// Default saturation threshold on the normalized L1 vote-distribution change.
pub const DEFAULT_SATURATION_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("network has no links")]
    EmptyNetwork,
    #[error("no credibility score for {0}")]
    MissingCredibility(String),
    #[error("correlation input is constant")]
    ConstantVector,
    #[error("correlation needs at least 3 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("correlation inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("aggregate has no votes")]
    EmptyAggregate,
}

/// Vote counts per link over a set of accepted worker networks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AggregatedNetwork {
    votes: BTreeMap<CausalLink, u32>,
    confidences: BTreeMap<CausalLink, Vec<u8>>,
    contributing_networks: usize,
}

impl AggregatedNetwork {
    /// Builds an aggregate from raw vote counts, e.g. a previously exported
    /// adjacency matrix. Confidence lists stay empty and the network count is
    /// the smallest one consistent with the votes.
    pub fn from_votes(votes: impl IntoIterator<Item = (CausalLink, u32)>) -> Self {
        let votes: BTreeMap<CausalLink, u32> =
            votes.into_iter().filter(|(_, v)| *v > 0).collect();
        Self {
            contributing_networks: votes.values().copied().max().unwrap_or(0) as usize,
            votes,
            confidences: BTreeMap::new(),
        }
    }

    pub fn votes(&self, link: &CausalLink) -> u32 {
        self.votes.get(link).copied().unwrap_or(0)
    }

    pub fn link_confidences(&self, link: &CausalLink) -> &[u8] {
        self.confidences.get(link).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Links with at least one vote, in (cause, effect) order.
    pub fn voted_links(&self) -> impl Iterator<Item = (&CausalLink, u32)> {
        self.votes.iter().map(|(l, v)| (l, *v))
    }

    pub fn contributing_networks(&self) -> usize {
        self.contributing_networks
    }

    pub fn total_votes(&self) -> u64 {
        self.votes.values().map(|&v| u64::from(v)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    /// Display names of every attribute used in some voted link.
    pub fn explored_attributes(&self) -> BTreeSet<&str> {
        self.votes
            .keys()
            .flat_map(|l| [l.cause().display(), l.effect().display()])
            .collect()
    }

    /// Writes the vote adjacency matrix: rows are causes, columns effects,
    /// both in catalog order. Same-base cells are 0.
    pub fn write_adjacency_csv<W: io::Write>(
        &self,
        catalog: &AttributeCatalog,
        writer: W,
    ) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(catalog.attributes().iter().map(|a| a.display().to_string()));
        w.write_record(&header)?;
        for cause in catalog.attributes() {
            let mut row = vec![cause.display().to_string()];
            for effect in catalog.attributes() {
                let n = CausalLink::new(cause.clone(), effect.clone())
                    .map(|l| self.votes(&l))
                    .unwrap_or(0);
                row.push(n.to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads an adjacency matrix written by [`Self::write_adjacency_csv`].
    pub fn read_adjacency_csv<R: io::Read>(
        reader: R,
        catalog: &AttributeCatalog,
    ) -> Result<Self, AdjacencyError> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        let mut rows = r.records();
        let header = rows.next().ok_or(AdjacencyError::Empty)??;
        let effects = header
            .iter()
            .skip(1)
            .map(|d| catalog.resolve(d).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        let mut votes = Vec::new();
        for row in rows {
            let row = row?;
            let cause = catalog.resolve(&row[0])?;
            for (effect, cell) in effects.iter().zip(row.iter().skip(1)) {
                let n: u32 = cell
                    .trim()
                    .parse()
                    .map_err(|_| AdjacencyError::Format(format!("bad cell {cell:?}")))?;
                if n == 0 {
                    continue;
                }
                let link = CausalLink::new(cause.clone(), effect.clone())
                    .map_err(|e| AdjacencyError::Format(e.to_string()))?;
                votes.push((link, n));
            }
        }
        Ok(Self::from_votes(votes))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AdjacencyError {
    #[error("adjacency csv is empty")]
    Empty,
    #[error("malformed adjacency csv: {0}")]
    Format(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Counts votes over the Accepted networks; other statuses are skipped.
pub fn aggregate<'a>(nets: impl IntoIterator<Item = &'a WorkerNetwork>) -> AggregatedNetwork {
    let mut agg = AggregatedNetwork::default();
    for net in nets {
        if net.status != NetworkStatus::Accepted {
            continue;
        }
        agg.contributing_networks += 1;
        for link in net.links() {
            *agg.votes.entry(link.clone()).or_default() += 1;
            agg.confidences
                .entry(link.clone())
                .or_default()
                .push(net.confidence.get());
        }
    }
    agg
}

/// Average network credibility: mean credibility over the network's links.
pub fn anc(net: &WorkerNetwork, cred: &CredibilityMap) -> Result<Ratio<u64>, MetricsError> {
    anc_of_links(net.links(), cred)
}

pub fn anc_of_links(links: &[CausalLink], cred: &CredibilityMap) -> Result<Ratio<u64>, MetricsError> {
    if links.is_empty() {
        return Err(MetricsError::EmptyNetwork);
    }
    let mut total = 0u64;
    for link in links {
        total += u64::from(
            cred.score(link)
                .ok_or_else(|| MetricsError::MissingCredibility(link.to_string()))?,
        );
    }
    Ok(Ratio::new(total, links.len() as u64))
}

/// Mean self-reported confidence of the networks that voted for `link`.
pub fn link_average_confidence(agg: &AggregatedNetwork, link: &CausalLink) -> Option<Ratio<u64>> {
    let c = agg.link_confidences(link);
    if c.is_empty() {
        return None;
    }
    let sum: u64 = c.iter().map(|&x| u64::from(x)).sum();
    Some(Ratio::new(sum, c.len() as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided p-value from Student's t with n - 2 degrees of freedom.
    pub p: f64,
    pub n: usize,
}

/// Pearson correlation with a two-sided p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(MetricsError::TooFewPairs(n));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::ConstantVector);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(Correlation {
        r,
        p: pearson_p_value(r, n),
        n,
    })
}

/// P(|T| >= |t|) for t = r sqrt(df / (1 - r^2)); equals I_{1-r^2}(df/2, 1/2),
/// which stays accurate far into the tail.
pub fn pearson_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let x = 1.0 - r * r;
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    statrs::function::beta::beta_reg(df / 2.0, 0.5, x)
}

/// Correlation of vote counts with credibility over every pair of the
/// credibility map, zero-vote links included.
pub fn pearson_votes_vs_credibility(
    agg: &AggregatedNetwork,
    cred: &CredibilityMap,
) -> Result<Correlation, MetricsError> {
    let (votes, scores): (Vec<f64>, Vec<f64>) = cred
        .iter()
        .map(|(l, c)| (f64::from(agg.votes(l)), f64::from(c.score)))
        .unzip();
    pearson(&votes, &scores)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exploration {
    pub attribute: String,
    /// Times the attribute was used as cause or effect across all links.
    pub appearance_count: usize,
    /// Distinct workers whose network used the attribute.
    pub worker_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationStats {
    pub entries: Vec<Exploration>,
}

impl ExplorationStats {
    pub fn get(&self, display: &str) -> Option<&Exploration> {
        self.entries.iter().find(|e| e.attribute == display)
    }

    pub fn unexplored(&self) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(|e| e.worker_count == 0)
            .map(|e| e.attribute.as_str())
    }
}

/// Node exploration over the Accepted networks, one entry per catalog attribute.
pub fn exploration_stats<'a>(
    nets: impl IntoIterator<Item = &'a WorkerNetwork>,
    catalog: &AttributeCatalog,
) -> ExplorationStats {
    let mut appearances = vec![0usize; catalog.len()];
    let mut workers = vec![0usize; catalog.len()];
    for net in nets {
        if net.status != NetworkStatus::Accepted {
            continue;
        }
        let mut used = BTreeSet::new();
        for link in net.links() {
            for attr in [link.cause(), link.effect()] {
                if let Some(i) = catalog.position(attr.display()) {
                    appearances[i] += 1;
                    used.insert(i);
                }
            }
        }
        for i in used {
            workers[i] += 1;
        }
    }
    ExplorationStats {
        entries: catalog
            .attributes()
            .iter()
            .enumerate()
            .map(|(i, a)| Exploration {
                attribute: a.display().to_string(),
                appearance_count: appearances[i],
                worker_count: workers[i],
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    pub delta: f64,
    pub saturated: bool,
    pub unexplored: Vec<String>,
}

/// L1 distance between the normalized vote distributions of two aggregates.
pub fn vote_distribution_distance(
    prev: &AggregatedNetwork,
    curr: &AggregatedNetwork,
) -> Result<f64, MetricsError> {
    let (tp, tc) = (prev.total_votes(), curr.total_votes());
    if tp == 0 || tc == 0 {
        return Err(MetricsError::EmptyAggregate);
    }
    // sum |a/tp - b/tc| = sum |a*tc - b*tp| / (tp*tc), exact in integers
    let keys: BTreeSet<&CausalLink> = prev.votes.keys().chain(curr.votes.keys()).collect();
    let numerator: u128 = keys
        .into_iter()
        .map(|l| {
            let a = u128::from(prev.votes(l)) * u128::from(tc);
            let b = u128::from(curr.votes(l)) * u128::from(tp);
            a.abs_diff(b)
        })
        .sum();
    let ratio = Ratio::new(numerator, u128::from(tp) * u128::from(tc));
    Ok(ratio.to_f64().unwrap_or(f64::NAN))
}

/// Saturation check between consecutive cohorts: the vote distribution moved
/// less than `epsilon` and every catalog attribute has been used at least once.
pub fn saturation(
    prev: &AggregatedNetwork,
    curr: &AggregatedNetwork,
    epsilon: f64,
    catalog: &AttributeCatalog,
) -> Result<Saturation, MetricsError> {
    let delta = vote_distribution_distance(prev, curr)?;
    let explored = curr.explored_attributes();
    let unexplored: Vec<String> = catalog
        .attributes()
        .iter()
        .filter(|a| !explored.contains(a.display()))
        .map(|a| a.display().to_string())
        .collect();
    Ok(Saturation {
        delta,
        saturated: delta < epsilon && unexplored.is_empty(),
        unexplored,
    })
}
