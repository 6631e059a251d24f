use std::collections::BTreeMap;
use std::path::Path;

use beliefminer_core::groundtruth::CredibilityMap;
use beliefminer_core::qualitycontrol::{
    apply_review, apply_statuses, flag_networks, write_reviews_jsonl, Decision, ReviewRecord,
};
use beliefminer_core::{NetworkStatus, WorkerNetwork};

use crate::error::CliError;
use crate::pipeline::{load_credibility, load_networks, load_reviews, write_atomic, PipelineConfig};

/// Resolves each network's status for analysis: pending networks are flagged
/// against `cred` (unflagged ones become accepted), then review decisions
/// override whatever the networks file says.
pub fn resolve_statuses(
    nets: &mut [WorkerNetwork],
    cred: Option<&CredibilityMap>,
    threshold: usize,
    reviews: Option<&BTreeMap<String, ReviewRecord>>,
) -> Result<(), CliError> {
    if let Some(cred) = cred {
        let pending: Vec<&WorkerNetwork> = nets.iter().filter(|n| n.status == NetworkStatus::Pending).collect();
        let records: BTreeMap<String, ReviewRecord> = flag_networks(pending, cred, threshold)
            .map_err(|e| CliError::from_qc("--networks", e))?
            .into_iter()
            .map(|r| (r.worker_id.clone(), r))
            .collect();
        apply_statuses(nets, &records);
    }
    if let Some(reviews) = reviews {
        apply_statuses(nets, reviews);
    }
    Ok(())
}

pub struct FlagOutput {
    pub records: Vec<ReviewRecord>,
    pub flagged: usize,
    pub kept_decisions: usize,
}

/// Flags every network and writes the review file. Decisions already present
/// in an existing review file at `out` are kept.
pub fn flag(cfg: &PipelineConfig, out: &Path) -> Result<FlagOutput, CliError> {
    let catalog = cfg.catalog()?;
    let threshold = cfg.protocol_profile()?.flag_threshold();
    let networks = load_networks(PipelineConfig::require(&cfg.networks, "--networks")?, &catalog)?;
    let cred = load_credibility(PipelineConfig::require(&cfg.credibility, "--credibility")?, &catalog)?;
    let existing = if out.exists() { load_reviews(out)? } else { BTreeMap::new() };
    let mut kept_decisions = 0;
    let records: Vec<ReviewRecord> = flag_networks(&networks, &cred, threshold)
        .map_err(|e| CliError::from_qc("--networks", e))?
        .into_iter()
        .map(|fresh| match existing.get(&fresh.worker_id) {
            Some(old) if old.auto_flagged && old.decision != Decision::Pending => {
                kept_decisions += 1;
                old.clone()
            }
            _ => fresh,
        })
        .collect();
    let mut buf = Vec::new();
    write_reviews_jsonl(&mut buf, &records).map_err(|e| CliError::io(out, e))?;
    write_atomic(out, &buf)?;
    Ok(FlagOutput {
        flagged: records.iter().filter(|r| r.auto_flagged).count(),
        records,
        kept_decisions,
    })
}

/// Decides one pending record in a local review file.
pub fn decide_local(
    path: &Path,
    worker_id: &str,
    decision: Decision,
    note: &str,
    now_ms: u64,
) -> Result<ReviewRecord, CliError> {
    let mut records = load_reviews(path)?;
    let record = records
        .get(worker_id)
        .ok_or_else(|| CliError::invalid(path.display(), format!("no review record for worker {worker_id:?}")))?;
    let decided = apply_review(record, decision, note, now_ms).map_err(|e| CliError::invalid(worker_id, e))?;
    records.insert(worker_id.to_string(), decided.clone());
    let mut buf = Vec::new();
    write_reviews_jsonl(&mut buf, records.values()).map_err(|e| CliError::io(path, e))?;
    write_atomic(path, &buf)?;
    Ok(decided)
}
