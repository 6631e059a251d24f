use std::fmt::Write as _;
use std::path::Path;

use beliefminer_core::metrics::{aggregate, AggregatedNetwork};
use beliefminer_core::pathlab::{illusion_report, IllusionQuery, IllusionReport};

use crate::commands::qc::resolve_statuses;
use crate::error::CliError;
use crate::pipeline::{
    load_adjacency, load_credibility, load_networks, load_reviews, read_text, write_atomic, PipelineConfig,
};

/// Where the vote counts come from.
pub enum VoteSource<'a> {
    Networks(&'a Path),
    Adjacency(&'a Path),
}

pub struct IllusionOutput {
    pub report: IllusionReport,
    pub warnings: Vec<String>,
}

pub fn load_query(path: &Path) -> Result<IllusionQuery, CliError> {
    IllusionQuery::from_json(&read_text(path)?).map_err(|e| CliError::from_pathlab(path.display(), e))
}

/// Aggregates the votes, computes the ratio under both criteria and writes
/// the JSON report to `out` when given.
pub fn run(
    cfg: &PipelineConfig,
    query_path: &Path,
    source: VoteSource<'_>,
    out: Option<&Path>,
) -> Result<IllusionOutput, CliError> {
    let catalog = cfg.catalog()?;
    let query = load_query(query_path)?;
    query
        .validate(&catalog)
        .map_err(|e| CliError::from_pathlab(query_path.display(), e))?;
    let agg: AggregatedNetwork = match source {
        VoteSource::Adjacency(p) => load_adjacency(p, &catalog)?,
        VoteSource::Networks(p) => {
            let mut nets = load_networks(p, &catalog)?;
            let cred = cfg.credibility.as_deref().map(|c| load_credibility(c, &catalog)).transpose()?;
            let reviews = cfg.reviews.as_deref().map(load_reviews).transpose()?;
            resolve_statuses(
                &mut nets,
                cred.as_ref(),
                cfg.protocol_profile()?.flag_threshold(),
                reviews.as_ref(),
            )?;
            aggregate(&nets)
        }
    };
    let report = illusion_report(&agg, &query).map_err(|e| CliError::from_pathlab(query_path.display(), e))?;
    let warnings = report
        .criteria
        .iter()
        .filter(|c| c.ratio.is_none())
        .map(|c| {
            format!(
                "{:?}: no supported path from {:?} within {} hops; ratio omitted",
                c.criterion, query.true_cause, query.max_hops
            )
            .to_lowercase()
        })
        .collect();
    if let Some(out) = out {
        let mut json = serde_json::to_vec_pretty(&report).map_err(|e| CliError::invalid(out.display(), e))?;
        json.push(b'\n');
        write_atomic(out, &json)?;
    }
    Ok(IllusionOutput { report, warnings })
}

/// Human-readable summary of a report.
pub fn render(report: &IllusionReport) -> String {
    let mut s = String::new();
    let bogus: Vec<&str> = report.query.bogus.iter().map(String::as_str).collect();
    writeln!(s, "bogus cause(s): {}", bogus.join(", ")).unwrap();
    writeln!(s, "true cause:     {}", report.query.true_cause).unwrap();
    writeln!(s, "outcome:        {}", report.query.outcome_label()).unwrap();
    writeln!(s, "bogus votes:    {}", report.bogus_votes).unwrap();
    for c in &report.criteria {
        let name = format!("{:?}", c.criterion).to_lowercase();
        match (&c.ratio, &c.true_support, &c.best_path) {
            (Some(r), Some(t), Some(p)) => {
                writeln!(
                    s,
                    "{name}: ratio {} = {:.4} (support {} via {})",
                    r.exact,
                    r.value,
                    t.exact,
                    p.path.join(" -> ")
                )
                .unwrap();
            }
            _ => writeln!(s, "{name}: ratio unavailable").unwrap(),
        }
        for (hops, p) in &c.best_per_hop {
            let support = match c.criterion {
                beliefminer_core::pathlab::Criterion::Weakest => p.weakest.to_string(),
                beliefminer_core::pathlab::Criterion::Average => p.average.exact.clone(),
            };
            writeln!(s, "  best {hops}-hop: {} [{support}]", p.path.join(" -> ")).unwrap();
        }
    }
    s
}
