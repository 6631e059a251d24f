use beliefminer_core::groundtruth::CredibilityMap;
use beliefminer_core::illusion::{
    build_discrepancy, discrepancy_histogram, DiscrepancyLink, LinkClass,
};
use beliefminer_core::metrics::AggregatedNetwork;
use beliefminer_core::{AttributeCatalog, CausalLink};
use proptest::prelude::*;

#[test]
fn full_score_grid() {
    let catalog = AttributeCatalog::final_study();
    let link = catalog.link("increasing CO2", "more trapped heat").unwrap();
    for cs in 0u8..=3 {
        for cr in 0u8..=3 {
            let d = DiscrepancyLink::new(&link, 10, cr, cs, 4);
            assert_eq!(d.discrepancy, cs as i8 - cr as i8);
            let expected = if cs < cr {
                LinkClass::Misinformed
            } else if cs > cr {
                LinkClass::Oblivious
            } else {
                LinkClass::Correct
            };
            assert_eq!(d.class, expected, "cs={cs} cr={cr}");
            assert_eq!(d.shade().is_some(), cs == cr);
        }
    }
}

/// Twelve voted links with distinct vote counts fall into tiers of four
/// (cr 1, 2, 3); credibility is chosen per link to land on each table row.
#[test]
fn table_row_structure() {
    let catalog = AttributeCatalog::final_study();
    let universe = catalog.pair_universe();
    // (votes, cs): tiers by rank, 4 links per tier
    let plan: [(u32, u8); 12] = [
        (4, 0), (5, 1), (6, 2), (7, 3),      // cr 1: -1, 0(cs1), +1, +2
        (8, 0), (9, 2), (10, 3), (11, 1),    // cr 2: -2, 0(cs2), +1, -1
        (12, 0), (13, 3), (14, 1), (15, 2),  // cr 3: -3, 0(cs3), -2, -1
    ];
    let links: Vec<CausalLink> = universe.iter().take(12).cloned().collect();
    let agg = AggregatedNetwork::from_votes(links.iter().cloned().zip(plan.iter().map(|p| p.0)));
    let cred = CredibilityMap::from_scores(&catalog, links.iter().cloned().zip(plan.iter().map(|p| p.1)))
        .unwrap();
    // one unvoted credible link for +3
    let oblivious = universe[20].clone();
    let cred = CredibilityMap::from_scores(
        &catalog,
        cred.iter()
            .filter(|(_, c)| c.score > 0)
            .map(|(l, c)| (l.clone(), c.score))
            .chain([(oblivious, 3)]),
    )
    .unwrap();
    let d = build_discrepancy(&agg, &cred, 4).unwrap();
    let h = discrepancy_histogram(&d);
    let labels: Vec<String> = h.rows.iter().map(|r| r.score_label()).collect();
    assert_eq!(
        labels,
        ["-3", "-2", "-1", "0 (cs=3)", "0 (cs=2)", "0 (cs=1)", "0 (cs=0)", "1", "2", "3"]
    );
    let counts: Vec<usize> = h.rows.iter().map(|r| r.count_all).collect();
    let unvoted_zero = universe.len() - 13;
    assert_eq!(counts, [1, 2, 3, 1, 1, 1, unvoted_zero, 2, 1, 1]);
    let visible: Vec<usize> = h.rows.iter().map(|r| r.count_visible).collect();
    assert_eq!(visible, [1, 2, 3, 1, 1, 1, 0, 2, 1, 0]);
    assert_eq!(h.total_all, universe.len());
    assert_eq!(h.total_visible, 12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn histogram_partitions_universe(
        votes in prop::collection::vec(0u32..30, 960),
        scores in prop::collection::vec(0u8..=3, 960),
        threshold in 1u32..10,
    ) {
        let catalog = AttributeCatalog::final_study();
        let universe = catalog.pair_universe();
        let agg = AggregatedNetwork::from_votes(universe.iter().cloned().zip(votes.iter().copied()));
        let cred = CredibilityMap::from_scores(&catalog, universe.iter().cloned().zip(scores)).unwrap();
        let d = build_discrepancy(&agg, &cred, threshold).unwrap();
        let h = discrepancy_histogram(&d);
        prop_assert_eq!(h.rows.iter().map(|r| r.count_all).sum::<usize>(), universe.len());
        prop_assert_eq!(h.total_all, universe.len());
        let visible = votes.iter().filter(|&&v| v >= threshold).count();
        prop_assert_eq!(h.rows.iter().map(|r| r.count_visible).sum::<usize>(), visible);
        prop_assert_eq!(h.total_visible, visible);
    }
}
