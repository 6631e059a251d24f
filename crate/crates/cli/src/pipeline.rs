//! Input loading and output writing shared by the batch subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use beliefminer_core::groundtruth::{read_deliberations, CredibilityMap, Deliberation, ExpertNetwork};
use beliefminer_core::metrics::AggregatedNetwork;
use beliefminer_core::qualitycontrol::{read_reviews_jsonl, ReviewRecord};
use beliefminer_core::{AttributeCatalog, CausalLink, ProfileName, ProtocolProfile, WorkerNetwork};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Settings of a batch run. Every field is optional here; each subcommand
/// checks for the ones it needs. Command-line flags take precedence over
/// values read from a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub catalog: Option<PathBuf>,
    pub profile: Option<String>,
    pub networks: Option<PathBuf>,
    #[serde(default)]
    pub experts: Vec<PathBuf>,
    pub deliberations: Option<PathBuf>,
    pub credibility: Option<PathBuf>,
    pub reviews: Option<PathBuf>,
    pub threshold: Option<u32>,
    pub epsilon: Option<f64>,
    pub out: Option<PathBuf>,
}

impl PipelineConfig {
    /// Reads a config file. Relative paths in it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_text(path)?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| CliError::invalid(path.display(), e))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let fix = |p: PathBuf| if p.is_relative() { dir.join(p) } else { p };
        Ok(Self {
            catalog: cfg.catalog.map(fix),
            networks: cfg.networks.map(fix),
            experts: cfg.experts.into_iter().map(fix).collect(),
            deliberations: cfg.deliberations.map(fix),
            credibility: cfg.credibility.map(fix),
            reviews: cfg.reviews.map(fix),
            out: cfg.out.map(fix),
            ..cfg
        })
    }

    /// Fills every unset field of `self` from `base`.
    pub fn or(self, base: Self) -> Self {
        Self {
            catalog: self.catalog.or(base.catalog),
            profile: self.profile.or(base.profile),
            networks: self.networks.or(base.networks),
            experts: if self.experts.is_empty() {
                base.experts
            } else {
                self.experts
            },
            deliberations: self.deliberations.or(base.deliberations),
            credibility: self.credibility.or(base.credibility),
            reviews: self.reviews.or(base.reviews),
            threshold: self.threshold.or(base.threshold),
            epsilon: self.epsilon.or(base.epsilon),
            out: self.out.or(base.out),
        }
    }

    pub fn protocol_profile(&self) -> Result<ProtocolProfile, CliError> {
        match &self.profile {
            None => Ok(ProtocolProfile::final_study()),
            Some(name) => ProtocolProfile::by_name(name)
                .ok_or_else(|| CliError::invalid("--profile", format!("unknown profile {name:?}"))),
        }
    }

    /// The catalog file when given, else the bundled catalog of the profile.
    pub fn catalog(&self) -> Result<AttributeCatalog, CliError> {
        match &self.catalog {
            Some(p) => {
                let text = read_text(p)?;
                AttributeCatalog::from_json(&text).map_err(|e| CliError::invalid(p.display(), e))
            }
            None => Ok(match self.protocol_profile()?.name {
                ProfileName::Final => AttributeCatalog::final_study(),
                ProfileName::Formative => AttributeCatalog::formative_study(),
            }),
        }
    }

    pub fn require<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
        value
            .as_ref()
            .ok_or_else(|| CliError::invalid(flag, "required but not given"))
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<fs::File>, CliError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn load_networks(path: &Path, catalog: &AttributeCatalog) -> Result<Vec<WorkerNetwork>, CliError> {
    beliefminer_core::formats::read_networks_jsonl(open(path)?, catalog)
        .map_err(|e| CliError::from_format(path.display(), e))
}

pub fn load_credibility(path: &Path, catalog: &AttributeCatalog) -> Result<CredibilityMap, CliError> {
    CredibilityMap::read_csv(open(path)?, catalog)
        .map_err(|e| CliError::from_groundtruth(path.display(), e))
}

pub fn load_reviews(path: &Path) -> Result<BTreeMap<String, ReviewRecord>, CliError> {
    read_reviews_jsonl(open(path)?).map_err(|e| CliError::from_reviews(path.display(), e))
}

pub fn load_experts(paths: &[PathBuf], catalog: &AttributeCatalog) -> Result<Vec<ExpertNetwork>, CliError> {
    paths
        .iter()
        .map(|p| {
            let text = read_text(p)?;
            ExpertNetwork::from_json(&text, catalog).map_err(|e| CliError::from_groundtruth(p.display(), e))
        })
        .collect()
}

pub fn load_deliberations(
    path: &Path,
    catalog: &AttributeCatalog,
) -> Result<BTreeMap<CausalLink, Deliberation>, CliError> {
    read_deliberations(open(path)?, catalog).map_err(|e| CliError::from_groundtruth(path.display(), e))
}

pub fn load_adjacency(path: &Path, catalog: &AttributeCatalog) -> Result<AggregatedNetwork, CliError> {
    AggregatedNetwork::read_adjacency_csv(open(path)?, catalog)
        .map_err(|e| CliError::from_adjacency(path.display(), e))
}

/// Replaces `path` with `contents` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Writes a set of files only after all of them have been rendered.
pub fn write_bundle(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<(), CliError> {
    for (name, bytes) in files {
        write_atomic(&dir.join(name), bytes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let file = PipelineConfig {
            networks: Some("a.jsonl".into()),
            threshold: Some(5),
            experts: vec!["e1.json".into()],
            ..Default::default()
        };
        let flags = PipelineConfig {
            threshold: Some(2),
            ..Default::default()
        };
        let merged = flags.or(file);
        assert_eq!(merged.threshold, Some(2));
        assert_eq!(merged.networks, Some("a.jsonl".into()));
        assert_eq!(merged.experts.len(), 1);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"catalogue": "x"}"#).unwrap();
        assert_eq!(PipelineConfig::load(&p).unwrap_err().exit_code(), 7);
        fs::write(&p, r#"{"networks": "n.jsonl", "credibility": "/abs/c.csv", "threshold": 3}"#).unwrap();
        let cfg = PipelineConfig::load(&p).unwrap();
        assert_eq!(cfg.networks, Some(dir.path().join("n.jsonl")));
        assert_eq!(cfg.credibility, Some("/abs/c.csv".into()));
        assert_eq!(cfg.threshold, Some(3));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
