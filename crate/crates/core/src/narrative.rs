//! Plain-text narration of a worker network.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::attribute::TrendedAttribute;
use crate::network::{nodes_in_order, CausalLink};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NarrativeError {
    #[error("cannot narrate an empty network")]
    EmptyNetwork,
}

/// Sentence template. `{cause}` and `{effect}` are substituted with attribute
/// display names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarrativeTemplate {
    pub version: String,
    pub link: String,
    pub chain: String,
    pub separator: String,
}

impl Default for NarrativeTemplate {
    fn default() -> Self {
        Self {
            version: "en-1".into(),
            link: "{cause} leads to {effect}".into(),
            chain: ", which leads to {effect}".into(),
            separator: ". ".into(),
        }
    }
}

impl NarrativeTemplate {
    fn render_link(&self, cause: &TrendedAttribute, effect: &TrendedAttribute) -> String {
        self.link
            .replace("{cause}", cause.display())
            .replace("{effect}", effect.display())
    }

    fn render_chain(&self, effect: &TrendedAttribute) -> String {
        self.chain.replace("{effect}", effect.display())
    }

    /// Narrates `links` depth-first from each root (a node without incoming
    /// links), roots and children taken in insertion order. A node's first
    /// outgoing link continues the sentence that reached it.
    pub fn render(&self, links: &[CausalLink]) -> Result<String, NarrativeError> {
        if links.is_empty() {
            return Err(NarrativeError::EmptyNetwork);
        }
        let mut walker = Walker {
            template: self,
            links,
            used: HashSet::new(),
            sentences: Vec::new(),
        };
        let roots: Vec<&TrendedAttribute> = nodes_in_order(links)
            .into_iter()
            .filter(|n| !links.iter().any(|l| l.effect() == *n))
            .collect();
        for root in roots {
            walker.visit(root, None);
        }
        // Only reachable with a directed cycle, which the round rule excludes.
        for (i, l) in links.iter().enumerate() {
            if !walker.used.contains(&i) {
                walker.visit(l.cause(), None);
            }
        }
        Ok(walker.sentences.join(&self.separator))
    }
}

struct Walker<'a> {
    template: &'a NarrativeTemplate,
    links: &'a [CausalLink],
    used: HashSet<usize>,
    sentences: Vec<String>,
}

impl Walker<'_> {
    fn visit(&mut self, node: &TrendedAttribute, mut open: Option<usize>) {
        for (i, l) in self.links.iter().enumerate() {
            if l.cause() != node || self.used.contains(&i) {
                continue;
            }
            self.used.insert(i);
            let sentence = match open.take() {
                Some(s) => {
                    let tail = self.template.render_chain(l.effect());
                    self.sentences[s].push_str(&tail);
                    s
                }
                None => {
                    self.sentences
                        .push(self.template.render_link(l.cause(), l.effect()));
                    self.sentences.len() - 1
                }
            };
            self.visit(l.effect(), Some(sentence));
        }
    }
}

/// Narrates with the default English template.
pub fn generate_narrative(links: &[CausalLink]) -> Result<String, NarrativeError> {
    NarrativeTemplate::default().render(links)
}
