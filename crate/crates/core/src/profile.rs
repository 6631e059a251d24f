//! Protocol profiles selecting between the formative and final study designs.

use serde::{Deserialize, Serialize};

use crate::network::LINKS_PER_NETWORK;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Formative,
    Final,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolProfile {
    pub name: ProfileName,
    pub links_per_network: usize,
    pub networks_per_session: usize,
    pub allow_delete: bool,
    pub randomize_order: bool,
}

impl ProtocolProfile {
    /// One network of five links, no deletion, randomized attribute order.
    pub fn final_study() -> Self {
        Self {
            name: ProfileName::Final,
            links_per_network: LINKS_PER_NETWORK,
            networks_per_session: 1,
            allow_delete: false,
            randomize_order: true,
        }
    }

    /// Three networks per participant, deletion allowed, fixed attribute order.
    pub fn formative_study() -> Self {
        Self {
            name: ProfileName::Formative,
            links_per_network: LINKS_PER_NETWORK,
            networks_per_session: 3,
            allow_delete: true,
            randomize_order: false,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "final" => Some(Self::final_study()),
            "formative" => Some(Self::formative_study()),
            _ => None,
        }
    }

    /// Zero-credibility links needed to flag a network: 3 of 5, scaled as ceil(3L/5).
    pub fn flag_threshold(&self) -> usize {
        crate::qualitycontrol::flag_threshold_for(self.links_per_network)
    }
}

impl Default for ProtocolProfile {
    fn default() -> Self {
        Self::final_study()
    }
}
