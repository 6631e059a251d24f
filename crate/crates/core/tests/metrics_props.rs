mod common;

use beliefminer_core::groundtruth::CredibilityMap;
use beliefminer_core::metrics::{aggregate, anc};
use beliefminer_core::{AttributeCatalog, NetworkStatus};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_credibility(rng: &mut ChaCha8Rng, catalog: &AttributeCatalog) -> CredibilityMap {
    let scores = catalog
        .pair_universe()
        .into_iter()
        .map(|l| (l, rng.random_range(0..=3)))
        .collect::<Vec<_>>();
    CredibilityMap::from_scores(catalog, scores).unwrap()
}

#[test]
fn anc_equals_brute_force_mean() {
    let catalog = AttributeCatalog::final_study();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cred = random_credibility(&mut rng, &catalog);
    for i in 0..1000 {
        let len = rng.random_range(1..=5);
        let net = common::random_network(&mut rng, &catalog, &format!("w{i}"), len);
        let scores: Vec<u64> = net.links().iter().map(|l| cred.score(l).unwrap() as u64).collect();
        let mean = Ratio::new(scores.iter().sum::<u64>(), scores.len() as u64);
        let got = anc(&net, &cred).unwrap();
        assert_eq!(got, mean);
        assert!(got >= Ratio::from_integer(0) && got <= Ratio::from_integer(3));
    }
}

#[test]
fn rejecting_a_network_removes_exactly_its_votes() {
    let catalog = AttributeCatalog::final_study();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let count = rng.random_range(1..30);
        let mut nets = common::random_networks(&mut rng, &catalog, count);
        let before = aggregate(&nets);
        let k = rng.random_range(0..nets.len());
        nets[k].status = NetworkStatus::Rejected;
        let after = aggregate(&nets);
        for link in catalog.pair_universe() {
            let dropped = u32::from(nets[k].contains(&link));
            assert_eq!(after.votes(&link) + dropped, before.votes(&link));
        }
        assert_eq!(after.contributing_networks() + 1, before.contributing_networks());
    }
}
