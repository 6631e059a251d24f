mod common;

use std::collections::BTreeMap;

use beliefminer_core::groundtruth::{merge_expert_networks, ExpertNetwork, GroundTruthError, Provenance};
use beliefminer_core::{AttributeCatalog, CausalLink};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_experts(rng: &mut ChaCha8Rng, universe: &[CausalLink]) -> Vec<ExpertNetwork> {
    // a shared core makes "present in all" cases common
    let shared: Vec<CausalLink> = universe.choose_multiple(rng, 6).cloned().collect();
    let count = rng.random_range(3..=6);
    (0..count)
        .map(|i| {
            let k = rng.random_range(0..25);
            let mut links: Vec<CausalLink> = universe
                .choose_multiple(rng, k)
                .cloned()
                .collect();
            links.extend(shared.iter().filter(|_| rng.random_bool(0.8)).cloned());
            ExpertNetwork::new(format!("e{i}"), links)
        })
        .collect()
}

#[test]
fn appearance_rule_and_totality() {
    let catalog = AttributeCatalog::final_study();
    let universe = catalog.pair_universe();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let experts = random_experts(&mut rng, &universe);
        let draft = merge_expert_networks(&experts, &catalog).unwrap();
        for link in &universe {
            let m = experts.iter().filter(|e| e.links.contains(link)).count();
            match m {
                0 => {
                    let c = draft.fixed()[link];
                    assert_eq!((c.score, c.provenance), (0, Provenance::AbsentAll));
                }
                m if m == experts.len() => {
                    let c = draft.fixed()[link];
                    assert_eq!((c.score, c.provenance), (3, Provenance::PresentAll));
                }
                _ => assert!(draft.is_on_worklist(link)),
            }
        }
        assert_eq!(draft.fixed().len() + draft.worklist().count(), universe.len());

        let decisions: BTreeMap<CausalLink, u8> = draft
            .worklist()
            .map(|(l, _)| (l.clone(), draft.suggest_score(l, &experts).unwrap()))
            .collect();
        let map = draft.apply_deliberations(&decisions).unwrap();
        assert_eq!(map.len(), universe.len());
        assert!(universe.iter().all(|l| map.score(l).is_some_and(|s| s <= 3)));

        if let Some((first, _)) = decisions.iter().next() {
            let mut partial = decisions.clone();
            partial.remove(first);
            match draft.apply_deliberations(&partial) {
                Err(GroundTruthError::MissingDecision(missing)) => assert_eq!(missing, vec![first.clone()]),
                other => panic!("expected MissingDecision, got {other:?}"),
            }
        }
    }
}

#[test]
fn merge_is_order_independent() {
    let catalog = AttributeCatalog::final_study();
    let universe = catalog.pair_universe();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let experts = random_experts(&mut rng, &universe);
    let base = merge_expert_networks(&experts, &catalog).unwrap();
    let base_work: Vec<_> = base.worklist().map(|(l, n)| (l.clone(), n)).collect();
    for _ in 0..100 {
        let mut shuffled = experts.clone();
        shuffled.shuffle(&mut rng);
        let d = merge_expert_networks(&shuffled, &catalog).unwrap();
        assert_eq!(d.fixed(), base.fixed());
        let work: Vec<_> = d.worklist().map(|(l, n)| (l.clone(), n)).collect();
        assert_eq!(work, base_work);
    }
}

#[test]
fn too_few_experts() {
    let catalog = AttributeCatalog::final_study();
    let e = ExpertNetwork::new("e", []);
    assert!(matches!(
        merge_expert_networks(&[e.clone(), e], &catalog),
        Err(GroundTruthError::TooFewExperts(2))
    ));
}
