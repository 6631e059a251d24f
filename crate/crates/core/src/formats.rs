//! JSON-lines interchange of worker networks.
//!
//! One object per line:
//! `{"worker_id":"w1","links":[{"cause":"..","effect":".."}],"confidence":4,"status":"accepted","cohort":1}`.
//! `status` defaults to `pending` and `cohort` may be omitted.

use std::collections::BTreeSet;
use std::io::{self, BufRead};

use serde::{Deserialize, Serialize};

use crate::attribute::{AttributeCatalog, CatalogError};
use crate::network::{CausalLink, Confidence, LinkViolation, NetworkStatus, WorkerNetwork};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Catalog { line: usize, source: CatalogError },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: LinkViolation },
    #[error("line {line}: duplicate worker id {worker_id:?}")]
    DuplicateWorker { line: usize, worker_id: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A link by attribute display names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkRef {
    pub cause: String,
    pub effect: String,
}

impl LinkRef {
    pub fn resolve(&self, catalog: &AttributeCatalog) -> Result<CausalLink, CatalogError> {
        catalog.link(&self.cause, &self.effect)
    }
}

impl From<&CausalLink> for LinkRef {
    fn from(l: &CausalLink) -> Self {
        Self {
            cause: l.cause().display().to_string(),
            effect: l.effect().display().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkRecord {
    pub worker_id: String,
    pub links: Vec<LinkRef>,
    pub confidence: Confidence,
    #[serde(default)]
    pub status: NetworkStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohort: Option<u32>,
}

impl From<&WorkerNetwork> for NetworkRecord {
    fn from(n: &WorkerNetwork) -> Self {
        Self {
            worker_id: n.worker_id.clone(),
            links: n.links().iter().map(LinkRef::from).collect(),
            confidence: n.confidence,
            status: n.status,
            cohort: n.cohort,
        }
    }
}

impl NetworkRecord {
    fn into_network(self, catalog: &AttributeCatalog, line: usize) -> Result<WorkerNetwork, FormatError> {
        let links = self
            .links
            .iter()
            .map(|l| l.resolve(catalog))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| FormatError::Catalog { line, source })?;
        let mut net = WorkerNetwork::new(self.worker_id, links, self.confidence)
            .map_err(|source| FormatError::Invalid { line, source })?
            .with_status(self.status);
        net.cohort = self.cohort;
        Ok(net)
    }
}

/// Reads networks, resolving every attribute against `catalog`. Blank lines
/// are skipped; line numbers in errors are 1-based.
pub fn read_networks_jsonl<R: BufRead>(
    reader: R,
    catalog: &AttributeCatalog,
) -> Result<Vec<WorkerNetwork>, FormatError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, text) in reader.lines().enumerate() {
        let line = i + 1;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let record: NetworkRecord = serde_json::from_str(&text).map_err(|e| FormatError::Parse {
            line,
            message: e.to_string(),
        })?;
        if !seen.insert(record.worker_id.clone()) {
            return Err(FormatError::DuplicateWorker {
                line,
                worker_id: record.worker_id,
            });
        }
        out.push(record.into_network(catalog, line)?);
    }
    Ok(out)
}

pub fn write_networks_jsonl<'a, W: io::Write>(
    mut writer: W,
    nets: impl IntoIterator<Item = &'a WorkerNetwork>,
) -> io::Result<()> {
    for n in nets {
        let line = serde_json::to_string(&NetworkRecord::from(n)).map_err(io::Error::other)?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}
