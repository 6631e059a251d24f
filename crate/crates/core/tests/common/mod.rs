#![allow(dead_code)]

use beliefminer_core::network::validate_next_link;
use beliefminer_core::{AttributeCatalog, CausalLink, Confidence, NetworkStatus, WorkerNetwork};
use rand::seq::IndexedRandom;
use rand::Rng;

/// A network grown by the round rule, so it is always a tree.
pub fn random_network<R: Rng>(
    rng: &mut R,
    catalog: &AttributeCatalog,
    id: &str,
    len: usize,
) -> WorkerNetwork {
    let attrs = catalog.attributes();
    let mut links: Vec<CausalLink> = Vec::new();
    while links.len() < len {
        let c = attrs.choose(rng).unwrap().clone();
        let e = attrs.choose(rng).unwrap().clone();
        let Ok(candidate) = CausalLink::new(c, e) else {
            continue;
        };
        if validate_next_link(catalog, &links, &candidate, len).is_ok() {
            links.push(candidate);
        }
    }
    let conf = Confidence::new(rng.random_range(1..=5)).unwrap();
    WorkerNetwork::new(id, links, conf)
        .unwrap()
        .with_status(NetworkStatus::Accepted)
}

pub fn random_networks<R: Rng>(rng: &mut R, catalog: &AttributeCatalog, n: usize) -> Vec<WorkerNetwork> {
    (0..n)
        .map(|i| random_network(rng, catalog, &format!("w{i}"), 5))
        .collect()
}
