//! Crowd scores, discrepancy (illusion) scores and discrepancy-network export.
//!
//! A link's crowd score `cr` is its vote tier (0 for no votes, 1..=3 from
//! equal-frequency binning of the voted links). The discrepancy is `cs - cr`:
//! negative means the crowd believes more than the evidence supports
//! (misinformed), positive means it misses a credible link (oblivious).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::groundtruth::CredibilityMap;
use crate::metrics::AggregatedNetwork;
use crate::network::CausalLink;

/// Links need at least this many votes to be drawn in a discrepancy network.
pub const DEFAULT_SIGNIFICANCE_THRESHOLD: u32 = 4;

/// Number of nonzero crowd-score tiers.
const TIERS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IllusionError {
    #[error("no credibility score for voted link {0}")]
    MissingCredibility(String),
}

/// Tier for each value in `votes` (any order). Zero votes map to 0. The
/// nonzero values are ranked ascending and split into three equal-frequency
/// bins by position; a run of equal values takes the bin of its first
/// position, so ties straddling a boundary fall into the lower bin. With
/// fewer than three nonzero values every one of them gets tier 1.
pub fn bin_votes(votes: &[u32]) -> Vec<u8> {
    let mut nonzero: Vec<u32> = votes.iter().copied().filter(|&v| v > 0).collect();
    nonzero.sort_unstable();
    let n = nonzero.len();
    let mut tier_of: BTreeMap<u32, u8> = BTreeMap::new();
    for (i, &v) in nonzero.iter().enumerate() {
        let tier = if n < TIERS { 1 } else { 1 + (TIERS * i / n) as u8 };
        tier_of.entry(v).or_insert(tier);
    }
    votes
        .iter()
        .map(|v| if *v == 0 { 0 } else { tier_of[v] })
        .collect()
}

/// Crowd score for every link of `universe`.
pub fn crowd_scores<'a>(
    agg: &AggregatedNetwork,
    universe: impl IntoIterator<Item = &'a CausalLink>,
) -> BTreeMap<CausalLink, u8> {
    let links: Vec<&CausalLink> = universe.into_iter().collect();
    let votes: Vec<u32> = links.iter().map(|l| agg.votes(l)).collect();
    links
        .into_iter()
        .cloned()
        .zip(bin_votes(&votes))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkClass {
    Misinformed,
    Correct,
    Oblivious,
}

impl LinkClass {
    pub fn of(discrepancy: i8) -> Self {
        match discrepancy {
            d if d < 0 => Self::Misinformed,
            0 => Self::Correct,
            _ => Self::Oblivious,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Misinformed => "misinformed",
            Self::Correct => "correct",
            Self::Oblivious => "oblivious",
        }
    }
}

/// Legend entry of one (discrepancy, shade) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegendColor {
    pub name: &'static str,
    pub hex: &'static str,
}

/// Legend color for a discrepancy score; correct links are shaded by `cs`.
pub fn legend_color(discrepancy: i8, cs: u8) -> LegendColor {
    let (name, hex) = match (discrepancy, cs) {
        (-3, _) => ("red", "#8B0000"),
        (-2, _) => ("orange", "#FF8C00"),
        (-1, _) => ("yellow", "#FFD700"),
        (0, 3) => ("grey-darkest", "#404040"),
        (0, 2) => ("grey-darker", "#707070"),
        (0, 1) => ("grey", "#A9A9A9"),
        (0, _) => ("grey-light", "#D3D3D3"),
        (1, _) => ("blue-very-light", "#ADD8E6"),
        (2, _) => ("blue-light", "#6495ED"),
        _ => ("blue", "#00008B"),
    };
    LegendColor { name, hex }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscrepancyLink {
    pub cause: String,
    pub effect: String,
    pub votes: u32,
    pub crowd_score: u8,
    pub credibility: u8,
    pub discrepancy: i8,
    pub class: LinkClass,
    pub visible: bool,
}

impl DiscrepancyLink {
    pub fn new(link: &CausalLink, votes: u32, crowd_score: u8, credibility: u8, threshold: u32) -> Self {
        let discrepancy = credibility as i8 - crowd_score as i8;
        Self {
            cause: link.cause().display().to_string(),
            effect: link.effect().display().to_string(),
            votes,
            crowd_score,
            credibility,
            discrepancy,
            class: LinkClass::of(discrepancy),
            visible: votes >= threshold,
        }
    }

    /// Grey shade index for correct links (darkest at 3); `None` otherwise.
    pub fn shade(&self) -> Option<u8> {
        (self.class == LinkClass::Correct).then_some(self.credibility)
    }

    pub fn color(&self) -> LegendColor {
        legend_color(self.discrepancy, self.credibility)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscrepancyNetwork {
    pub threshold: u32,
    /// One entry per pair of the credibility universe, in (cause, effect) order.
    pub links: Vec<DiscrepancyLink>,
}

/// Crowd vs. credibility comparison for every pair of the credibility map.
pub fn build_discrepancy(
    agg: &AggregatedNetwork,
    cred: &CredibilityMap,
    threshold: u32,
) -> Result<DiscrepancyNetwork, IllusionError> {
    if let Some((l, _)) = agg.voted_links().find(|(l, _)| cred.score(l).is_none()) {
        return Err(IllusionError::MissingCredibility(l.to_string()));
    }
    let crowd = crowd_scores(agg, cred.links());
    let links = cred
        .iter()
        .map(|(l, c)| DiscrepancyLink::new(l, agg.votes(l), crowd[l], c.score, threshold))
        .collect();
    Ok(DiscrepancyNetwork { threshold, links })
}

/// One row of the discrepancy statistics table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistogramRow {
    pub class: LinkClass,
    pub discrepancy: i8,
    /// Credibility split, only for correct links.
    pub credibility: Option<u8>,
    pub color: &'static str,
    pub count_all: usize,
    pub count_visible: usize,
}

impl HistogramRow {
    pub fn score_label(&self) -> String {
        match self.credibility {
            Some(cs) => format!("0 (cs={cs})"),
            None => self.discrepancy.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscrepancyHistogram {
    pub rows: Vec<HistogramRow>,
    pub total_all: usize,
    pub total_visible: usize,
}

impl DiscrepancyHistogram {
    pub fn row(&self, discrepancy: i8, credibility: Option<u8>) -> Option<&HistogramRow> {
        self.rows
            .iter()
            .find(|r| r.discrepancy == discrepancy && r.credibility == credibility)
    }

    /// `type,score,count_all,count_visible`, one row per table line plus a total.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["type", "score", "count_all", "count_visible"])?;
        for r in &self.rows {
            w.write_record([
                r.class.as_str(),
                &r.score_label(),
                &r.count_all.to_string(),
                &r.count_visible.to_string(),
            ])?;
        }
        w.write_record([
            "total",
            "",
            &self.total_all.to_string(),
            &self.total_visible.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Counts per discrepancy score (correct links further split by credibility),
/// over all links and over visible links. Rows follow the legend order:
/// -3, -2, -1, 0 (cs 3..0), +1, +2, +3.
pub fn discrepancy_histogram(d: &DiscrepancyNetwork) -> DiscrepancyHistogram {
    let mut keys: Vec<(i8, Option<u8>)> = vec![(-3, None), (-2, None), (-1, None)];
    keys.extend((0..=3).rev().map(|cs| (0, Some(cs))));
    keys.extend([(1, None), (2, None), (3, None)]);
    let rows = keys
        .into_iter()
        .map(|(score, cs)| {
            let matching = d.links.iter().filter(|l| {
                l.discrepancy == score && cs.is_none_or(|cs| l.credibility == cs)
            });
            let (all, visible) =
                matching.fold((0, 0), |(a, v), l| (a + 1, v + usize::from(l.visible)));
            HistogramRow {
                class: LinkClass::of(score),
                discrepancy: score,
                credibility: cs,
                color: legend_color(score, cs.unwrap_or(0)).name,
                count_all: all,
                count_visible: visible,
            }
        })
        .collect();
    DiscrepancyHistogram {
        rows,
        total_all: d.links.len(),
        total_visible: d.links.iter().filter(|l| l.visible).count(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DotMode {
    Misinformed,
    Oblivious,
    Correct,
    All,
}

impl DotMode {
    fn admits(self, class: LinkClass) -> bool {
        match self {
            Self::All => true,
            Self::Misinformed => class == LinkClass::Misinformed,
            Self::Oblivious => class == LinkClass::Oblivious,
            Self::Correct => class == LinkClass::Correct,
        }
    }
}

pub(crate) fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// DOT digraph of the visible links of the requested class(es), edges in
/// (cause, effect) order and colored by the legend.
pub fn export_discrepancy_dot(d: &DiscrepancyNetwork, mode: DotMode) -> String {
    let mut out = String::from("digraph discrepancy {\n");
    let mut edges: Vec<&DiscrepancyLink> = d
        .links
        .iter()
        .filter(|l| l.visible && mode.admits(l.class))
        .collect();
    edges.sort_by(|a, b| (&a.cause, &a.effect).cmp(&(&b.cause, &b.effect)));
    for l in edges {
        let color = l.color();
        writeln!(
            out,
            "  {} -> {} [color={}, penwidth=2, label=\"{}\", tooltip=\"votes={} cr={} cs={}\"];",
            dot_quote(&l.cause),
            dot_quote(&l.effect),
            dot_quote(color.hex),
            l.discrepancy,
            l.votes,
            l.crowd_score,
            l.credibility
        )
        .expect("write to string");
    }
    out.push_str("}\n");
    out
}
