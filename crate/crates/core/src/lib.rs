//! Domain model and analysis for crowdsourced causal-belief networks.
//!
//! Workers link trended attributes ("increasing CO2") into small causal
//! networks. Expert networks merged into a [`groundtruth::CredibilityMap`]
//! score every possible link, and the crowd's aggregate is compared against
//! it to find misinformed and oblivious beliefs.

pub mod api;
pub mod attribute;
pub mod collection;
pub mod formats;
pub mod groundtruth;
pub mod illusion;
pub mod metrics;
pub mod narrative;
pub mod network;
pub mod pathlab;
pub mod profile;
pub mod qualitycontrol;

#[cfg(test)]
mod test_support;

pub use attribute::{AttributeCatalog, CatalogError, Trend, TrendedAttribute};
pub use network::{CausalLink, Confidence, NetworkStatus, WorkerNetwork};
pub use profile::{ProfileName, ProtocolProfile};
