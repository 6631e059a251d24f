use std::path::PathBuf;

use beliefminer_client::ClientError;
use beliefminer_core::attribute::CatalogError;
use beliefminer_core::formats::FormatError;
use beliefminer_core::groundtruth::GroundTruthError;
use beliefminer_core::illusion::IllusionError;
use beliefminer_core::metrics::AdjacencyError;
use beliefminer_core::pathlab::PathlabError;
use beliefminer_core::qualitycontrol::{QcError, ReadError};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const MISSING_DECISION: i32 = 2;
    pub const TOO_FEW_EXPERTS: i32 = 3;
    pub const CATALOG_MISS: i32 = 4;
    pub const MISSING_CREDIBILITY: i32 = 5;
    pub const EMPTY_ACCEPTED_SET: i32 = 6;
    pub const INVALID_INPUT: i32 = 7;
    pub const SERVICE: i32 = 8;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{} worklist link(s) still need a deliberated score", .0.len())]
    MissingDecision(Vec<crate::commands::groundtruth::WorklistRow>),
    #[error("at least 3 expert networks are required, got {0}")]
    TooFewExperts(usize),
    #[error("{context}: attribute {name:?} is not in the catalog")]
    CatalogMiss { context: String, name: String },
    #[error("{0}")]
    MissingCredibility(String),
    #[error("no accepted networks to analyze")]
    EmptyAcceptedSet,
    #[error("{context}: {message}")]
    Invalid { context: String, message: String },
    #[error("service request failed: {0}")]
    Service(#[from] ClientError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } => exit::IO,
            Self::MissingDecision(_) => exit::MISSING_DECISION,
            Self::TooFewExperts(_) => exit::TOO_FEW_EXPERTS,
            Self::CatalogMiss { .. } => exit::CATALOG_MISS,
            Self::MissingCredibility(_) => exit::MISSING_CREDIBILITY,
            Self::EmptyAcceptedSet => exit::EMPTY_ACCEPTED_SET,
            Self::Invalid { .. } => exit::INVALID_INPUT,
            Self::Service(_) => exit::SERVICE,
        }
    }

    pub fn invalid(context: impl std::fmt::Display, message: impl std::fmt::Display) -> Self {
        Self::Invalid {
            context: context.to_string(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn from_catalog(context: impl std::fmt::Display, e: CatalogError) -> Self {
        match e {
            CatalogError::Miss(name) => Self::CatalogMiss {
                context: context.to_string(),
                name,
            },
            CatalogError::Io { path, source } => Self::io(path, source),
            other => Self::invalid(context, other),
        }
    }

    pub fn from_groundtruth(context: impl std::fmt::Display, e: GroundTruthError) -> Self {
        match e {
            GroundTruthError::TooFewExperts(n) => Self::TooFewExperts(n),
            GroundTruthError::Catalog(c) => Self::from_catalog(context, c),
            other => Self::invalid(context, other),
        }
    }

    pub fn from_format(context: impl std::fmt::Display, e: FormatError) -> Self {
        match e {
            FormatError::Catalog { line, source } => {
                Self::from_catalog(format!("{context}:{line}"), source)
            }
            FormatError::Io(source) => Self::io(context.to_string(), source),
            other => Self::invalid(context, other),
        }
    }

    pub fn from_pathlab(context: impl std::fmt::Display, e: PathlabError) -> Self {
        match e {
            PathlabError::CatalogMiss(name) => Self::CatalogMiss {
                context: context.to_string(),
                name,
            },
            other => Self::invalid(context, other),
        }
    }

    pub fn from_adjacency(context: impl std::fmt::Display, e: AdjacencyError) -> Self {
        match e {
            AdjacencyError::Catalog(c) => Self::from_catalog(context, c),
            other => Self::invalid(context, other),
        }
    }

    pub fn from_qc(context: impl std::fmt::Display, e: QcError) -> Self {
        match e {
            QcError::MissingCredibility(link) => {
                Self::MissingCredibility(format!("{context}: no credibility score for {link}"))
            }
            other => Self::invalid(context, other),
        }
    }

    pub fn from_reviews(context: impl std::fmt::Display, e: ReadError) -> Self {
        match e {
            ReadError::Io(source) => Self::io(context.to_string(), source),
            ReadError::Qc(q) => Self::from_qc(context, q),
        }
    }

    pub fn from_illusion(context: impl std::fmt::Display, e: IllusionError) -> Self {
        match e {
            IllusionError::MissingCredibility(link) => {
                Self::MissingCredibility(format!("{context}: no credibility score for {link}"))
            }
        }
    }
}
