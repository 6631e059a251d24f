use std::collections::BTreeMap;
use std::path::PathBuf;

use beliefminer_core::illusion::{
    build_discrepancy, discrepancy_histogram, export_discrepancy_dot, DotMode, DEFAULT_SIGNIFICANCE_THRESHOLD,
};
use beliefminer_core::metrics::{
    aggregate, anc, exploration_stats, link_average_confidence, pearson_votes_vs_credibility, saturation,
    Correlation, Exploration, Saturation, DEFAULT_SATURATION_EPSILON,
};
use beliefminer_core::pathlab::ExactValue;
use beliefminer_core::{NetworkStatus, WorkerNetwork};
use num_rational::Ratio;
use serde::Serialize;

use crate::commands::qc::resolve_statuses;
use crate::error::CliError;
use crate::pipeline::{load_credibility, load_networks, load_reviews, write_bundle, PipelineConfig};

pub const ADJACENCY_FILE: &str = "adjacency.csv";
pub const STATS_FILE: &str = "stats.json";
pub const HISTOGRAM_FILE: &str = "discrepancy_histogram.csv";
pub const DOT_FILES: [(&str, DotMode); 3] = [
    ("discrepancy_misinformed.dot", DotMode::Misinformed),
    ("discrepancy_oblivious.dot", DotMode::Oblivious),
    ("discrepancy_correct.dot", DotMode::Correct),
];

#[derive(Debug, Serialize)]
pub struct StatusCounts {
    pub total: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub flagged: usize,
    pub pending: usize,
}

#[derive(Debug, Serialize)]
pub struct AncBin {
    pub anc: ExactValue,
    pub count: usize,
}

#[derive(Debug, Serialize)]
pub struct ConfidenceBin {
    pub confidence: u8,
    pub count: usize,
}

#[derive(Debug, Serialize)]
pub struct LinkStats {
    pub cause: String,
    pub effect: String,
    pub votes: u32,
    pub credibility: u8,
    pub crowd_score: u8,
    pub discrepancy: i8,
    pub class: &'static str,
    pub visible: bool,
    /// `None` for links without votes.
    pub average_confidence: Option<ExactValue>,
}

#[derive(Debug, Serialize)]
pub struct StatsReport {
    pub networks: StatusCounts,
    pub total_votes: u64,
    pub significance_threshold: u32,
    pub anc_histogram: Vec<AncBin>,
    pub confidence_histogram: Vec<ConfidenceBin>,
    /// `None` when either vector is constant.
    pub pearson: Option<Correlation>,
    /// Links with at least one vote or nonzero credibility.
    pub links: Vec<LinkStats>,
    pub exploration: Vec<Exploration>,
    /// Last cohort against the ones before it; `None` without two cohorts.
    pub saturation: Option<CohortSaturation>,
}

#[derive(Debug, Serialize)]
pub struct CohortSaturation {
    pub cohort: u32,
    pub epsilon: f64,
    #[serde(flatten)]
    pub result: Saturation,
}

pub struct AnalyzeOutput {
    pub out: PathBuf,
    pub stats: StatsReport,
    pub files: Vec<&'static str>,
}

fn status_counts(nets: &[WorkerNetwork]) -> StatusCounts {
    let count = |s: NetworkStatus| nets.iter().filter(|n| n.status == s).count();
    StatusCounts {
        total: nets.len(),
        accepted: count(NetworkStatus::Accepted),
        rejected: count(NetworkStatus::Rejected),
        flagged: count(NetworkStatus::Flagged),
        pending: count(NetworkStatus::Pending),
    }
}

fn cohort_saturation(
    nets: &[WorkerNetwork],
    catalog: &beliefminer_core::AttributeCatalog,
    epsilon: f64,
) -> Option<CohortSaturation> {
    let last = nets.iter().filter_map(|n| n.cohort).max()?;
    if last < 2 {
        return None;
    }
    let upto = |c: u32| nets.iter().filter(move |n| n.cohort.is_some_and(|k| k <= c));
    let result = saturation(&aggregate(upto(last - 1)), &aggregate(upto(last)), epsilon, catalog).ok()?;
    Some(CohortSaturation {
        cohort: last,
        epsilon,
        result,
    })
}

/// Runs the full analysis and writes the report bundle into `out`.
/// Nothing is written unless every report was produced.
pub fn run(cfg: &PipelineConfig) -> Result<AnalyzeOutput, CliError> {
    let catalog = cfg.catalog()?;
    let profile = cfg.protocol_profile()?;
    let out = PipelineConfig::require(&cfg.out, "--out")?.clone();
    let networks_path = PipelineConfig::require(&cfg.networks, "--networks")?;
    let cred_path = cfg
        .credibility
        .as_ref()
        .ok_or_else(|| CliError::MissingCredibility("--credibility is required for analysis".into()))?;
    let threshold = cfg.threshold.unwrap_or(DEFAULT_SIGNIFICANCE_THRESHOLD);
    let epsilon = cfg.epsilon.unwrap_or(DEFAULT_SATURATION_EPSILON);
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(CliError::invalid("--epsilon", "must be positive"));
    }

    let mut nets = load_networks(networks_path, &catalog)?;
    let cred = load_credibility(cred_path, &catalog)?;
    let reviews = cfg.reviews.as_deref().map(load_reviews).transpose()?;
    resolve_statuses(&mut nets, Some(&cred), profile.flag_threshold(), reviews.as_ref())?;

    let accepted: Vec<&WorkerNetwork> = nets.iter().filter(|n| n.status == NetworkStatus::Accepted).collect();
    if accepted.is_empty() {
        return Err(CliError::EmptyAcceptedSet);
    }
    let agg = aggregate(accepted.iter().copied());

    let mut anc_bins: BTreeMap<Ratio<u64>, usize> = BTreeMap::new();
    let mut confidence_bins = [0usize; 5];
    for n in &accepted {
        let a = anc(n, &cred).map_err(|e| CliError::invalid(&n.worker_id, e))?;
        *anc_bins.entry(a).or_default() += 1;
        confidence_bins[usize::from(n.confidence.get() - 1)] += 1;
    }

    let discrepancy = build_discrepancy(&agg, &cred, threshold).map_err(|e| CliError::from_illusion("--networks", e))?;
    let histogram = discrepancy_histogram(&discrepancy);
    let links = discrepancy
        .links
        .iter()
        .filter(|d| d.votes > 0 || d.credibility > 0)
        .map(|d| {
            let link = catalog.link(&d.cause, &d.effect).expect("credibility links are catalog links");
            LinkStats {
                cause: d.cause.clone(),
                effect: d.effect.clone(),
                votes: d.votes,
                credibility: d.credibility,
                crowd_score: d.crowd_score,
                discrepancy: d.discrepancy,
                class: d.class.as_str(),
                visible: d.visible,
                average_confidence: link_average_confidence(&agg, &link).map(ExactValue::from),
            }
        })
        .collect();

    let stats = StatsReport {
        networks: status_counts(&nets),
        total_votes: agg.total_votes(),
        significance_threshold: threshold,
        anc_histogram: anc_bins
            .into_iter()
            .map(|(anc, count)| AncBin { anc: anc.into(), count })
            .collect(),
        confidence_histogram: (1..=5u8)
            .map(|c| ConfidenceBin {
                confidence: c,
                count: confidence_bins[usize::from(c - 1)],
            })
            .collect(),
        pearson: pearson_votes_vs_credibility(&agg, &cred).ok(),
        links,
        exploration: exploration_stats(accepted.iter().copied(), &catalog).entries,
        saturation: cohort_saturation(&nets, &catalog, epsilon),
    };

    let mut adjacency = Vec::new();
    agg.write_adjacency_csv(&catalog, &mut adjacency)
        .map_err(|e| CliError::invalid(ADJACENCY_FILE, e))?;
    let mut hist_csv = Vec::new();
    histogram
        .write_csv(&mut hist_csv)
        .map_err(|e| CliError::invalid(HISTOGRAM_FILE, e))?;
    let mut stats_json = serde_json::to_vec_pretty(&stats).map_err(|e| CliError::invalid(STATS_FILE, e))?;
    stats_json.push(b'\n');

    let mut files: Vec<(&str, Vec<u8>)> = vec![
        (ADJACENCY_FILE, adjacency),
        (STATS_FILE, stats_json),
        (HISTOGRAM_FILE, hist_csv),
    ];
    for (name, mode) in DOT_FILES {
        files.push((name, export_discrepancy_dot(&discrepancy, mode).into_bytes()));
    }
    write_bundle(&out, &files)?;
    Ok(AnalyzeOutput {
        out,
        stats,
        files: files.iter().map(|(n, _)| *n).collect(),
    })
}
