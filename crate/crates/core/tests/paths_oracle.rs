use std::collections::{BTreeMap, BTreeSet};

use beliefminer_core::pathlab::{enumerate_paths, VoteGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Edges = BTreeMap<(usize, usize), u32>;

/// Every sequence of distinct nodes, checked edge by edge.
fn brute_force(n: usize, edges: &Edges, from: &BTreeSet<usize>, to: &BTreeSet<usize>, max_hops: usize) -> BTreeSet<Vec<usize>> {
    fn extend(
        n: usize,
        seq: &mut Vec<usize>,
        max_hops: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        out.push(seq.clone());
        if seq.len() == max_hops + 1 {
            return;
        }
        for v in 0..n {
            if !seq.contains(&v) {
                seq.push(v);
                extend(n, seq, max_hops, out);
                seq.pop();
            }
        }
    }
    let mut all = Vec::new();
    for s in 0..n {
        extend(n, &mut vec![s], max_hops, &mut all);
    }
    all.into_iter()
        .filter(|seq| seq.len() >= 2)
        .filter(|seq| from.contains(&seq[0]) && to.contains(seq.last().unwrap()))
        .filter(|seq| seq.windows(2).all(|w| edges.get(&(w[0], w[1])).is_some_and(|&v| v >= 1)))
        .collect()
}

fn name(i: usize) -> String {
    format!("n{i}")
}

#[test]
fn matches_exhaustive_dfs_on_random_digraphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for round in 0..500 {
        let n = rng.random_range(1..=10);
        let density = rng.random_range(0.05..0.6);
        let mut edges = Edges::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && rng.random_bool(density) {
                    // zero-vote edges must never be traversed
                    edges.insert((a, b), rng.random_range(0..20));
                }
            }
        }
        let pick = |rng: &mut ChaCha8Rng| -> BTreeSet<usize> {
            (0..n).filter(|_| rng.random_bool(0.3)).collect()
        };
        let (from, to) = (pick(&mut rng), pick(&mut rng));
        let max_hops = rng.random_range(1..=4);

        let graph = VoteGraph::from_edges(edges.iter().map(|(&(a, b), &v)| (name(a), name(b), v)));
        let names = |s: &BTreeSet<usize>| s.iter().map(|&i| name(i)).collect::<BTreeSet<_>>();
        let got = enumerate_paths(&graph, &names(&from), &names(&to), max_hops);

        let expected: BTreeSet<Vec<String>> = brute_force(n, &edges, &from, &to, max_hops)
            .into_iter()
            .map(|seq| seq.into_iter().map(name).collect())
            .collect();
        let got_set: BTreeSet<Vec<String>> = got.iter().map(|p| p.path.clone()).collect();
        assert_eq!(got_set.len(), got.len(), "round {round}: duplicate paths");
        assert_eq!(got_set, expected, "round {round}");

        for p in &got {
            let distinct: BTreeSet<&String> = p.path.iter().collect();
            assert_eq!(distinct.len(), p.path.len());
            assert_eq!(p.link_votes.len() + 1, p.path.len());
            for (w, &v) in p.path.windows(2).zip(&p.link_votes) {
                assert!(v >= 1);
                assert_eq!(graph.votes(&w[0], &w[1]), v);
            }
            let max = *p.link_votes.iter().max().unwrap() as u64;
            assert!(num_rational::Ratio::from_integer(p.weakest as u64) <= p.average);
            assert!(p.average <= num_rational::Ratio::from_integer(max));
        }
        for w in got.windows(2) {
            assert!((w[0].hops(), std::cmp::Reverse(w[0].weakest)) <= (w[1].hops(), std::cmp::Reverse(w[1].weakest)));
        }
    }
}
