use std::collections::BTreeMap;

use beliefminer_core::illusion::bin_votes;
use proptest::prelude::*;

/// Reference tiers computed per value: with k nonzero values strictly below
/// v among n nonzero values, v sits in tier 1 + floor(3k / n).
fn reference_tiers(votes: &[u32]) -> Vec<u8> {
    let nonzero: Vec<u32> = votes.iter().copied().filter(|&v| v > 0).collect();
    let n = nonzero.len();
    votes
        .iter()
        .map(|&v| {
            if v == 0 {
                0
            } else if n < 3 {
                1
            } else {
                let below = nonzero.iter().filter(|&&w| w < v).count();
                1 + (3 * below / n) as u8
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn matches_reference(votes in prop::collection::vec(0u32..60, 0..80)) {
        prop_assert_eq!(bin_votes(&votes), reference_tiers(&votes));
    }

    #[test]
    fn range_zero_monotone_ties(votes in prop::collection::vec(0u32..1000, 0..80)) {
        let tiers = bin_votes(&votes);
        let nonzero = votes.iter().filter(|&&v| v > 0).count();
        for (i, (&v, &t)) in votes.iter().zip(&tiers).enumerate() {
            prop_assert!(t <= 3);
            prop_assert_eq!(v == 0, t == 0);
            if nonzero >= 3 {
                prop_assert!(v == 0 || t >= 1);
            }
            for (&w, &u) in votes.iter().zip(&tiers).skip(i + 1) {
                if v < w { prop_assert!(t <= u); }
                if v > w { prop_assert!(t >= u); }
                if v == w { prop_assert_eq!(t, u); }
            }
        }
    }

    #[test]
    fn scale_invariant(votes in prop::collection::vec(0u32..500, 0..60), k in 1u32..50) {
        let scaled: Vec<u32> = votes.iter().map(|v| v * k).collect();
        prop_assert_eq!(bin_votes(&votes), bin_votes(&scaled));
    }

    #[test]
    fn tiers_are_roughly_balanced(votes in prop::collection::btree_set(1u32..10_000, 3..90)) {
        // distinct values: each tier holds floor or ceil of n/3 values
        let votes: Vec<u32> = votes.into_iter().collect();
        let n = votes.len();
        let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
        for t in bin_votes(&votes) {
            *counts.entry(t).or_default() += 1;
        }
        for tier in 1..=3 {
            let c = counts.get(&tier).copied().unwrap_or(0);
            prop_assert!(c + 1 >= n / 3 && c <= n.div_ceil(3) + 1, "tier {} has {} of {}", tier, c, n);
        }
    }
}
