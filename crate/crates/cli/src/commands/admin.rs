use std::path::Path;

use beliefminer_client::Client;
use beliefminer_core::api::CohortState;
use beliefminer_core::collection::CohortReport;

use crate::error::CliError;
use crate::pipeline::write_atomic;

pub async fn report(client: &Client, cohort: u32) -> Result<CohortReport, CliError> {
    Ok(client.cohort_report(cohort).await?)
}

pub async fn close(client: &Client, stop: bool) -> Result<CohortState, CliError> {
    Ok(client.close_cohort(stop).await?)
}

/// Downloads every network, with its current status, as JSON lines.
pub async fn export(client: &Client, out: &Path) -> Result<usize, CliError> {
    let records = client.networks().await?;
    let mut buf = String::new();
    for r in &records {
        buf.push_str(&serde_json::to_string(r).map_err(|e| CliError::invalid(out.display(), e))?);
        buf.push('\n');
    }
    write_atomic(out, buf.as_bytes())?;
    Ok(records.len())
}
