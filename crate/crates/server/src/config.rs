use std::net::SocketAddr;
use std::path::PathBuf;

use beliefminer_core::collection::{ConfigError, Protocol, SassyTable, SurveyConfig, DEFAULT_GATE};
use beliefminer_core::formats::LinkRef;
use beliefminer_core::groundtruth::CredibilityMap;
use beliefminer_core::metrics::DEFAULT_SATURATION_EPSILON;
use beliefminer_core::{AttributeCatalog, ProfileName, ProtocolProfile};

/// Service settings, normally read from the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerConfig {
    pub bind_addr: SocketAddr,
    /// Journal directory; `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    pub profile: ProtocolProfile,
    pub catalog_path: Option<PathBuf>,
    pub sassy_table_path: Option<PathBuf>,
    pub credibility_path: Option<PathBuf>,
    pub gate: LinkRef,
    pub saturation_epsilon: f64,
    pub cors_origin: Option<String>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind_addr: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: Some(PathBuf::from("data")),
            profile: ProtocolProfile::final_study(),
            catalog_path: None,
            sassy_table_path: None,
            credibility_path: None,
            gate: LinkRef {
                cause: DEFAULT_GATE.0.into(),
                effect: DEFAULT_GATE.1.into(),
            },
            saturation_epsilon: DEFAULT_SATURATION_EPSILON,
            cors_origin: None,
        }
    }
}

fn invalid(var: &str, value: &str) -> ConfigError {
    ConfigError::Invalid(format!("{var}={value:?}"))
}

/// Parses `"cause -> effect"`.
pub fn parse_link(text: &str) -> Option<LinkRef> {
    let (cause, effect) = text.split_once("->")?;
    let (cause, effect) = (cause.trim(), effect.trim());
    (!cause.is_empty() && !effect.is_empty()).then(|| LinkRef {
        cause: cause.into(),
        effect: effect.into(),
    })
}

impl ServerConfig {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Reads `BIND_ADDR`, `DATA_DIR` (empty for in-memory), `PROFILE`,
    /// `CATALOG_PATH`, `SASSY_TABLE_PATH`, `CREDIBILITY_PATH`, `GATE_LINK`,
    /// `SATURATION_EPSILON` and `CORS_ORIGIN`.
    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        if let Some(v) = get("BIND_ADDR") {
            cfg.bind_addr = v.parse().map_err(|_| invalid("BIND_ADDR", &v))?;
        }
        if let Some(v) = get("DATA_DIR") {
            cfg.data_dir = (!v.is_empty()).then(|| PathBuf::from(v));
        }
        if let Some(v) = get("PROFILE") {
            cfg.profile = ProtocolProfile::by_name(&v).ok_or_else(|| invalid("PROFILE", &v))?;
        }
        let path = |k: &str| get(k).filter(|v| !v.is_empty()).map(PathBuf::from);
        cfg.catalog_path = path("CATALOG_PATH");
        cfg.sassy_table_path = path("SASSY_TABLE_PATH");
        cfg.credibility_path = path("CREDIBILITY_PATH");
        if let Some(v) = get("GATE_LINK") {
            cfg.gate = parse_link(&v).ok_or_else(|| invalid("GATE_LINK", &v))?;
        }
        if let Some(v) = get("SATURATION_EPSILON") {
            cfg.saturation_epsilon = v
                .parse()
                .ok()
                .filter(|e: &f64| *e > 0.0)
                .ok_or_else(|| invalid("SATURATION_EPSILON", &v))?;
        }
        cfg.cors_origin = get("CORS_ORIGIN").filter(|v| !v.is_empty());
        Ok(cfg)
    }

    pub fn protocol(&self) -> Result<Protocol, ConfigError> {
        let catalog = match &self.catalog_path {
            Some(p) => AttributeCatalog::load(p)?,
            None => match self.profile.name {
                ProfileName::Final => AttributeCatalog::final_study(),
                ProfileName::Formative => AttributeCatalog::formative_study(),
            },
        };
        let sassy = match &self.sassy_table_path {
            Some(p) => SassyTable::load(p)?,
            None => SassyTable::placeholder(),
        };
        Protocol::new(
            catalog,
            self.profile.clone(),
            sassy,
            SurveyConfig::default(),
            self.gate.clone(),
        )
    }

    pub fn credibility(&self, catalog: &AttributeCatalog) -> Result<Option<CredibilityMap>, ConfigError> {
        let Some(path) = &self.credibility_path else {
            return Ok(None);
        };
        let file = std::fs::File::open(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        CredibilityMap::read_csv(file, catalog)
            .map(Some)
            .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))
    }
}
