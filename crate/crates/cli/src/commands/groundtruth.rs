use std::collections::BTreeMap;
use std::path::PathBuf;

use beliefminer_core::groundtruth::{merge_expert_networks, CredibilityMap, GroundTruthError, Provenance};

use crate::error::CliError;
use crate::pipeline::{load_deliberations, load_experts, write_atomic, PipelineConfig};

pub const CREDIBILITY_FILE: &str = "credibility.csv";

#[derive(Debug)]
pub struct GroundTruthOutput {
    pub credibility: CredibilityMap,
    pub path: PathBuf,
}

/// Merges the expert networks and applies the deliberated scores. When
/// worklist links lack a score the worklist, with suggested scores, is
/// returned inside [`CliError::MissingDecision`] and nothing is written.
pub fn run(cfg: &PipelineConfig) -> Result<GroundTruthOutput, CliError> {
    let catalog = cfg.catalog()?;
    let out = PipelineConfig::require(&cfg.out, "--out")?;
    let experts = load_experts(&cfg.experts, &catalog)?;
    let deliberations = match &cfg.deliberations {
        Some(p) => load_deliberations(p, &catalog)?,
        None => BTreeMap::new(),
    };
    let draft = merge_expert_networks(&experts, &catalog)
        .map_err(|e| CliError::from_groundtruth("--experts", e))?;
    let scores = deliberations.iter().map(|(l, d)| (l.clone(), d.score)).collect();
    let credibility = match draft.apply_deliberations(&scores) {
        Ok(c) => c,
        Err(GroundTruthError::MissingDecision(missing)) => {
            let mut entries = Vec::with_capacity(missing.len());
            for link in &missing {
                let suggested = draft
                    .suggest_score(link, &experts)
                    .map_err(|e| CliError::from_groundtruth("worklist", e))?;
                let appearances = draft
                    .worklist()
                    .find(|(l, _)| *l == link)
                    .map_or(0, |(_, n)| n);
                entries.push(WorklistRow {
                    cause: link.cause().display().to_string(),
                    effect: link.effect().display().to_string(),
                    appearances,
                    suggested_score: suggested,
                });
            }
            return Err(CliError::MissingDecision(entries));
        }
        Err(e) => {
            let ctx = cfg.deliberations.as_deref().map_or("--deliberations".into(), |p| p.display().to_string());
            return Err(CliError::from_groundtruth(ctx, e));
        }
    };
    let path = out.join(CREDIBILITY_FILE);
    write_atomic(&path, credibility.to_csv_string().as_bytes())?;
    Ok(GroundTruthOutput { credibility, path })
}

/// A worklist link still waiting for a deliberated score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorklistRow {
    pub cause: String,
    pub effect: String,
    pub appearances: usize,
    pub suggested_score: u8,
}

/// `cause,effect,appearances,suggested_score` CSV, ready to be edited into
/// a deliberations file.
pub fn worklist_csv(rows: &[WorklistRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cause", "effect", "appearances", "suggested_score"])
        .expect("in-memory csv");
    for r in rows {
        w.write_record([
            r.cause.as_str(),
            r.effect.as_str(),
            &r.appearances.to_string(),
            &r.suggested_score.to_string(),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

pub fn summary(out: &GroundTruthOutput) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, c) in out.credibility.iter() {
        *counts.entry(c.provenance.as_str()).or_default() += 1;
    }
    let get = |p: Provenance| counts.get(p.as_str()).copied().unwrap_or(0);
    format!(
        "wrote {} ({} pairs: {} present in all, {} absent from all, {} deliberated)",
        out.path.display(),
        out.credibility.len(),
        get(Provenance::PresentAll),
        get(Provenance::AbsentAll),
        get(Provenance::Deliberated),
    )
}
