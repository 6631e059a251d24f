//! `beliefminer` command line: offline analysis plus a client for the
//! collection service.

pub mod commands;
pub mod error;
pub mod pipeline;

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use beliefminer_client::Client;
use beliefminer_core::qualitycontrol::{record_to_json_line, Decision, ReviewRecord};
use beliefminer_core::ProtocolProfile;
use beliefminer_server::config::parse_link;
use beliefminer_server::ServerConfig;
use clap::{Args, Parser, Subcommand};

use crate::commands::illusion::VoteSource;
use crate::commands::{admin, analyze, groundtruth, illusion, qc};
use crate::error::{exit, CliError};
use crate::pipeline::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "beliefminer", version, about = "Causal-belief collection and analysis")]
pub struct Cli {
    /// JSON file with default values for the path and tuning flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Attribute catalog JSON; defaults to the bundled catalog of the profile.
    #[arg(long, global = true, value_name = "FILE")]
    pub catalog: Option<PathBuf>,
    /// Protocol profile: `final` or `formative`.
    #[arg(long, global = true)]
    pub profile: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Merge expert networks into a credibility map.
    Groundtruth {
        /// Expert network JSON files (at least three).
        #[arg(long, num_args = 1.., value_name = "FILE")]
        experts: Vec<PathBuf>,
        /// CSV of `cause,effect,score[,note]` for the worklist links.
        #[arg(long, value_name = "FILE")]
        deliberations: Option<PathBuf>,
        /// Output directory for credibility.csv.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Quality control of worker networks.
    Qc {
        #[command(subcommand)]
        action: QcAction,
    },
    /// Aggregate accepted networks and write the report bundle.
    Analyze {
        #[arg(long, value_name = "FILE")]
        networks: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        credibility: Option<PathBuf>,
        /// Review decisions (JSON lines) overriding network statuses.
        #[arg(long, value_name = "FILE")]
        reviews: Option<PathBuf>,
        /// Votes a link needs to be shown in the discrepancy networks.
        #[arg(long)]
        threshold: Option<u32>,
        /// Saturation threshold on the vote-distribution change.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Compare a bogus cause's votes with a true cause's chain support.
    Illusion {
        /// Query JSON: `{"bogus": [..], "true": "..", "outcome": [..], "max_hops": 4}`.
        #[arg(long, value_name = "FILE")]
        query: PathBuf,
        #[arg(long, value_name = "FILE", conflicts_with = "adjacency")]
        networks: Option<PathBuf>,
        /// Vote adjacency CSV as written by `analyze`.
        #[arg(long, value_name = "FILE")]
        adjacency: Option<PathBuf>,
        /// Used to auto-accept pending networks that are not flagged.
        #[arg(long, value_name = "FILE")]
        credibility: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        reviews: Option<PathBuf>,
        /// Write the full JSON report here.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run the collection service. Unset flags fall back to the environment.
    Serve(ServeArgs),
    /// Cohort administration on a running service.
    Admin {
        #[command(flatten)]
        server: ServerArg,
        #[command(subcommand)]
        action: AdminAction,
    },
}

#[derive(Debug, Args)]
pub struct ServerArg {
    /// Base URL of the collection service.
    #[arg(long, env = "BELIEFMINER_SERVER", default_value = "http://127.0.0.1:8080")]
    pub server: String,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ReviewTarget {
    /// Local review file (JSON lines).
    #[arg(long, value_name = "FILE")]
    pub reviews: Option<PathBuf>,
    /// Base URL of the collection service.
    #[arg(long)]
    pub server: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum QcAction {
    /// Flag networks with too many zero-credibility links and write review records.
    Flag {
        #[arg(long, value_name = "FILE")]
        networks: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        credibility: Option<PathBuf>,
        /// Review file to write.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Print review records as JSON lines.
    List {
        #[command(flatten)]
        target: ReviewTarget,
        /// Only records awaiting a decision.
        #[arg(long)]
        pending: bool,
    },
    /// Accept a flagged network.
    Accept {
        worker_id: String,
        #[command(flatten)]
        target: ReviewTarget,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Reject a flagged network.
    Reject {
        worker_id: String,
        #[command(flatten)]
        target: ReviewTarget,
        #[arg(long, default_value = "")]
        note: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum AdminAction {
    /// Cumulative report for a closed cohort.
    Report {
        cohort: u32,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Close the current cohort; with --stop, end the study.
    Close {
        #[arg(long)]
        stop: bool,
    },
    /// Download all networks as JSON lines.
    Export {
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub bind: Option<SocketAddr>,
    /// Journal directory.
    #[arg(long, value_name = "DIR", conflicts_with = "in_memory")]
    pub data_dir: Option<PathBuf>,
    /// Keep everything in memory.
    #[arg(long)]
    pub in_memory: bool,
    #[arg(long, value_name = "FILE")]
    pub sassy_table: Option<PathBuf>,
    /// Credibility CSV; when set, new networks are flagged automatically.
    #[arg(long, value_name = "FILE")]
    pub credibility: Option<PathBuf>,
    /// Test-stage link as `"cause -> effect"`.
    #[arg(long)]
    pub gate: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub cors_origin: Option<String>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Runtime::new().map_err(|e| CliError::io("tokio runtime", e))
}

fn client(url: &str) -> Result<Client, CliError> {
    Ok(Client::new(url)?)
}

fn json_line<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("report serializes")
}

fn print(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e))
}

/// Runs `cli`, writing results to `out` and diagnostics to `err`; returns
/// the process exit code.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli, out, err) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let CliError::MissingDecision(rows) = &e {
                let _ = out.write_all(groundtruth::worklist_csv(rows).as_bytes());
            }
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let file_cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let base = PipelineConfig {
        catalog: cli.catalog.clone(),
        profile: cli.profile.clone(),
        ..Default::default()
    };
    match cli.command {
        Command::Groundtruth {
            experts,
            deliberations,
            out: dir,
        } => {
            let cfg = PipelineConfig {
                experts,
                deliberations,
                out: dir,
                ..base
            }
            .or(file_cfg);
            let result = groundtruth::run(&cfg)?;
            print(out, &format!("{}\n", groundtruth::summary(&result)))
        }
        Command::Qc { action } => run_qc(action, base, file_cfg, out),
        Command::Analyze {
            networks,
            credibility,
            reviews,
            threshold,
            epsilon,
            out: dir,
        } => {
            let cfg = PipelineConfig {
                networks,
                credibility,
                reviews,
                threshold,
                epsilon,
                out: dir,
                ..base
            }
            .or(file_cfg);
            let result = analyze::run(&cfg)?;
            let s = &result.stats;
            let mut text = format!(
                "{} networks, {} accepted, {} votes\n",
                s.networks.total, s.networks.accepted, s.total_votes
            );
            match &s.pearson {
                Some(c) => text.push_str(&format!("pearson r = {:.6}, p = {:.3e}, n = {}\n", c.r, c.p, c.n)),
                None => text.push_str("pearson r undefined (constant input)\n"),
            }
            if let Some(sat) = &s.saturation {
                text.push_str(&format!(
                    "cohort {}: delta = {:.6}, saturated = {}\n",
                    sat.cohort, sat.result.delta, sat.result.saturated
                ));
            }
            for f in &result.files {
                text.push_str(&format!("wrote {}\n", result.out.join(f).display()));
            }
            print(out, &text)
        }
        Command::Illusion {
            query,
            networks,
            adjacency,
            credibility,
            reviews,
            out: report_path,
        } => {
            let cfg = PipelineConfig {
                networks,
                credibility,
                reviews,
                ..base
            }
            .or(file_cfg);
            let source = match (&adjacency, &cfg.networks) {
                (Some(a), _) => VoteSource::Adjacency(a),
                (None, Some(n)) => VoteSource::Networks(n),
                (None, None) => return Err(CliError::invalid("illusion", "--networks or --adjacency is required")),
            };
            let result = illusion::run(&cfg, &query, source, report_path.as_deref())?;
            for w in &result.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            print(out, &illusion::render(&result.report))
        }
        Command::Serve(args) => serve(args, base.or(file_cfg)),
        Command::Admin { server, action } => {
            let client = client(&server.server)?;
            let rt = runtime()?;
            match action {
                AdminAction::Report { cohort, out: path } => {
                    let report = rt.block_on(admin::report(&client, cohort))?;
                    let mut json = serde_json::to_vec_pretty(&report).expect("report serializes");
                    json.push(b'\n');
                    match path {
                        Some(p) => {
                            pipeline::write_atomic(&p, &json)?;
                            print(out, &format!("wrote {}\n", p.display()))
                        }
                        None => out.write_all(&json).map_err(|e| CliError::io("stdout", e)),
                    }
                }
                AdminAction::Close { stop } => {
                    let state = rt.block_on(admin::close(&client, stop))?;
                    print(out, &format!("{}\n", json_line(&state)))
                }
                AdminAction::Export { out: path } => {
                    let n = rt.block_on(admin::export(&client, &path))?;
                    print(out, &format!("wrote {n} networks to {}\n", path.display()))
                }
            }
        }
    }
}

fn run_qc(action: QcAction, base: PipelineConfig, file_cfg: PipelineConfig, out: &mut dyn Write) -> Result<(), CliError> {
    match action {
        QcAction::Flag {
            networks,
            credibility,
            out: path,
        } => {
            let cfg = PipelineConfig {
                networks,
                credibility,
                ..base
            }
            .or(file_cfg);
            let result = qc::flag(&cfg, &path)?;
            print(
                out,
                &format!(
                    "{} networks, {} flagged for review ({} earlier decisions kept); wrote {}\n",
                    result.records.len(),
                    result.flagged,
                    result.kept_decisions,
                    path.display()
                ),
            )
        }
        QcAction::List { target, pending } => {
            let records: Vec<ReviewRecord> = match (&target.reviews, &target.server) {
                (Some(p), _) => pipeline::load_reviews(p)?
                    .into_values()
                    .filter(|r| !pending || r.decision == Decision::Pending)
                    .collect(),
                (None, Some(url)) => runtime()?.block_on(client(url)?.reviews(pending))?,
                (None, None) => unreachable!("clap requires one review target"),
            };
            let text: String = records.iter().map(|r| record_to_json_line(r) + "\n").collect();
            print(out, &text)
        }
        QcAction::Accept {
            worker_id,
            target,
            note,
        } => decide(&worker_id, Decision::Accept, &note, &target, out),
        QcAction::Reject {
            worker_id,
            target,
            note,
        } => decide(&worker_id, Decision::Reject, &note, &target, out),
    }
}

fn decide(
    worker_id: &str,
    decision: Decision,
    note: &str,
    target: &ReviewTarget,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let record = match (&target.reviews, &target.server) {
        (Some(p), _) => qc::decide_local(p, worker_id, decision, note, now_ms())?,
        (None, Some(url)) => runtime()?.block_on(client(url)?.decide(worker_id, decision, note))?,
        (None, None) => unreachable!("clap requires one review target"),
    };
    print(out, &(record_to_json_line(&record) + "\n"))
}

fn serve(args: ServeArgs, cfg: PipelineConfig) -> Result<(), CliError> {
    let mut server = ServerConfig::from_env().map_err(|e| CliError::invalid("environment", e))?;
    if let Some(name) = &cfg.profile {
        server.profile = ProtocolProfile::by_name(name)
            .ok_or_else(|| CliError::invalid("--profile", format!("unknown profile {name:?}")))?;
    }
    if let Some(c) = cfg.catalog {
        server.catalog_path = Some(c);
    }
    if let Some(b) = args.bind {
        server.bind_addr = b;
    }
    if args.in_memory {
        server.data_dir = None;
    } else if let Some(d) = args.data_dir {
        server.data_dir = Some(d);
    }
    if let Some(p) = args.sassy_table {
        server.sassy_table_path = Some(p);
    }
    if let Some(p) = args.credibility {
        server.credibility_path = Some(p);
    }
    if let Some(g) = &args.gate {
        server.gate = parse_link(g).ok_or_else(|| CliError::invalid("--gate", "expected \"cause -> effect\""))?;
    }
    if let Some(e) = args.epsilon.or(cfg.epsilon) {
        server.saturation_epsilon = e;
    }
    if let Some(o) = args.cors_origin {
        server.cors_origin = Some(o);
    }
    runtime()?
        .block_on(beliefminer_server::run(server))
        .map_err(|e| CliError::invalid("serve", e))
}
