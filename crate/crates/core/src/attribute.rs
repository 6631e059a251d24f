//! Trended attributes and the attribute catalog that forms the node vocabulary.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::network::CausalLink;

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("attribute {0:?} is not in the catalog")]
    Miss(String),
    #[error("invalid catalog: {0}")]
    Invalid(String),
    #[error("invalid link: {0}")]
    InvalidLink(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed catalog json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Up,
    Down,
}

/// A base attribute fused with a trend term, e.g. "increasing CO2".
///
/// Ordering and equality follow `display`, which is unique within a catalog.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrendedAttribute {
    base: String,
    trend: Trend,
    display: String,
}

impl TrendedAttribute {
    pub fn new(
        base: impl Into<String>,
        trend: Trend,
        display: impl Into<String>,
    ) -> Result<Self, CatalogError> {
        let base = base.into();
        let display = display.into();
        if base.trim().is_empty() {
            return Err(CatalogError::Invalid("empty base attribute".into()));
        }
        // display = "<trend term> <base>"
        let term = display
            .strip_suffix(base.as_str())
            .map(str::trim_end)
            .filter(|t| !t.is_empty());
        if term.is_none() || !display[..display.len() - base.len()].ends_with(' ') {
            return Err(CatalogError::Invalid(format!(
                "display {display:?} is not a trend term followed by base {base:?}"
            )));
        }
        Ok(Self {
            base,
            trend,
            display,
        })
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn trend(&self) -> Trend {
        self.trend
    }

    pub fn display(&self) -> &str {
        &self.display
    }

    /// The trend word(s) preceding the base, e.g. "more" in "more drought".
    pub fn trend_term(&self) -> &str {
        self.display[..self.display.len() - self.base.len()].trim_end()
    }
}

impl PartialEq for TrendedAttribute {
    fn eq(&self, other: &Self) -> bool {
        self.display == other.display
    }
}

impl Eq for TrendedAttribute {}

impl std::hash::Hash for TrendedAttribute {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.display.hash(state);
    }
}

impl PartialOrd for TrendedAttribute {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TrendedAttribute {
    fn cmp(&self, other: &Self) -> Ordering {
        self.display.cmp(&other.display)
    }
}

impl fmt::Display for TrendedAttribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CatalogFile {
    version: String,
    attributes: Vec<TrendedAttribute>,
}

/// Ordered list of trended attributes; every base appears with both trends.
#[derive(Debug, Clone)]
pub struct AttributeCatalog {
    version: String,
    attributes: Vec<TrendedAttribute>,
    by_display: HashMap<String, usize>,
}

const FINAL_CATALOG: &str = include_str!("../data/catalog_final.json");
const FORMATIVE_CATALOG: &str = include_str!("../data/catalog_formative.json");

impl AttributeCatalog {
    pub fn new(
        version: impl Into<String>,
        attributes: Vec<TrendedAttribute>,
    ) -> Result<Self, CatalogError> {
        if attributes.is_empty() {
            return Err(CatalogError::Invalid("catalog has no attributes".into()));
        }
        let mut by_display = HashMap::with_capacity(attributes.len());
        let mut trends: BTreeMap<&str, Vec<Trend>> = BTreeMap::new();
        for (i, attr) in attributes.iter().enumerate() {
            // Re-run the constructor checks: deserialized values bypass `new`.
            TrendedAttribute::new(attr.base.clone(), attr.trend, attr.display.clone())?;
            if by_display.insert(attr.display.clone(), i).is_some() {
                return Err(CatalogError::Invalid(format!(
                    "duplicate attribute {:?}",
                    attr.display
                )));
            }
            let seen = trends.entry(attr.base.as_str()).or_default();
            if seen.contains(&attr.trend) {
                return Err(CatalogError::Invalid(format!(
                    "base {:?} appears twice with trend {:?}",
                    attr.base, attr.trend
                )));
            }
            seen.push(attr.trend);
        }
        if let Some((base, _)) = trends.iter().find(|(_, t)| t.len() != 2) {
            return Err(CatalogError::Invalid(format!(
                "base {base:?} must appear with both trends"
            )));
        }
        Ok(Self {
            version: version.into(),
            attributes,
            by_display,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let file: CatalogFile = serde_json::from_str(text)?;
        Self::new(file.version, file.attributes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let file = CatalogFile {
            version: self.version.clone(),
            attributes: self.attributes.clone(),
        };
        serde_json::to_string_pretty(&file).expect("catalog serializes")
    }

    /// The 16-base (32 attribute) catalog used by the final study design.
    pub fn final_study() -> Self {
        Self::from_json(FINAL_CATALOG).expect("bundled final catalog is valid")
    }

    /// The 17-base (34 attribute) catalog of the formative design.
    pub fn formative_study() -> Self {
        Self::from_json(FORMATIVE_CATALOG).expect("bundled formative catalog is valid")
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn attributes(&self) -> &[TrendedAttribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn get(&self, display: &str) -> Option<&TrendedAttribute> {
        self.by_display.get(display).map(|&i| &self.attributes[i])
    }

    pub fn contains(&self, attr: &TrendedAttribute) -> bool {
        self.get(attr.display())
            .is_some_and(|a| a.base == attr.base && a.trend == attr.trend)
    }

    pub fn position(&self, display: &str) -> Option<usize> {
        self.by_display.get(display).copied()
    }

    pub fn resolve(&self, display: &str) -> Result<&TrendedAttribute, CatalogError> {
        self.get(display)
            .ok_or_else(|| CatalogError::Miss(display.to_string()))
    }

    /// Resolves a (cause, effect) pair of display names into a validated link.
    pub fn link(&self, cause: &str, effect: &str) -> Result<CausalLink, CatalogError> {
        let cause = self.resolve(cause)?.clone();
        let effect = self.resolve(effect)?.clone();
        CausalLink::new(cause, effect).map_err(|v| CatalogError::InvalidLink(v.to_string()))
    }

    /// Every valid ordered pair (distinct bases), sorted by (cause, effect) display.
    pub fn pair_universe(&self) -> Vec<CausalLink> {
        let mut sorted: Vec<&TrendedAttribute> = self.attributes.iter().collect();
        sorted.sort();
        let mut pairs = Vec::with_capacity(self.len() * self.len().saturating_sub(2));
        for cause in &sorted {
            for effect in &sorted {
                if cause.base != effect.base {
                    pairs.push(CausalLink::new_unchecked((*cause).clone(), (*effect).clone()));
                }
            }
        }
        pairs
    }
}
