//! Canonical example markets used across tests, examples and docs.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::market::{market_from_ints, MarketGraph};

/// Single edge, endowments 10 and 30.
pub fn two_node() -> MarketGraph {
    market_from_ints(&[("1", 10), ("2", 30)], &[("1", "2")])
}

/// A hub `c` with three unit-endowment leaves.
pub fn star() -> MarketGraph {
    market_from_ints(
        &[("a", 1), ("b", 1), ("c", 1), ("d", 1)],
        &[("c", "a"), ("c", "b"), ("c", "d")],
    )
}

/// Six nodes, three levels (1/2, 1, 2); the running worked example.
pub fn six_node() -> MarketGraph {
    market_from_ints(
        &[("1", 40), ("2", 20), ("3", 10), ("4", 10), ("5", 30), ("6", 60)],
        &[("1", "2"), ("2", "4"), ("2", "5"), ("3", "4"), ("5", "6")],
    )
}

/// Four unit-endowment nodes on a path.
pub fn path4() -> MarketGraph {
    market_from_ints(
        &[("a", 1), ("b", 1), ("c", 1), ("d", 1)],
        &[("a", "b"), ("b", "c"), ("c", "d")],
    )
}

/// Four nodes on a cycle with equal endowments of 10.
pub fn cycle4() -> MarketGraph {
    market_from_ints(
        &[("a", 10), ("b", 10), ("c", 10), ("d", 10)],
        &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")],
    )
}

/// Complete graph over the given integer endowments; ids "n0", "n1", ...
pub fn complete(endowments: &[i64]) -> MarketGraph {
    let ids: Vec<String> = (0..endowments.len()).map(|i| format!("n{i}")).collect();
    let nodes: Vec<(&str, i64)> = ids
        .iter()
        .zip(endowments.iter())
        .map(|(id, &d)| (id.as_str(), d))
        .collect();
    let mut edges = Vec::new();
    for i in 0..ids.len() {
        for j in (i + 1)..ids.len() {
            edges.push((ids[i].as_str(), ids[j].as_str()));
        }
    }
    market_from_ints(&nodes, &edges)
}

/// Complete graph on six unit-endowment nodes.
pub fn complete6() -> MarketGraph {
    complete(&[1, 1, 1, 1, 1, 1])
}

/// Deterministic random connected market: a random spanning tree plus
/// extra random edges, with integer endowments in 1..=max_endowment.
pub fn random_connected(seed: u64, n: usize, extra_edges: usize, max_endowment: i64) -> MarketGraph {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let nodes: Vec<(&str, i64)> = ids
        .iter()
        .map(|id| (id.as_str(), rng.gen_range(1..=max_endowment)))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edge_set = std::collections::BTreeSet::new();
    for w in 1..n {
        let parent = order[rng.gen_range(0..w)];
        let child = order[w];
        let (a, b) = if parent < child { (parent, child) } else { (child, parent) };
        edge_set.insert((a, b));
    }
    for _ in 0..extra_edges {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            edge_set.insert((a, b));
        }
    }
    let edges: Vec<(&str, &str)> = edge_set
        .iter()
        .map(|&(a, b)| (ids[a].as_str(), ids[b].as_str()))
        .collect();
    market_from_ints(&nodes, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_validate() {
        for m in [two_node(), star(), six_node(), path4(), cycle4(), complete6()] {
            assert!(m.edge_count() > 0);
            assert!(m.isolated_nodes().is_empty());
        }
    }

    #[test]
    fn random_markets_are_connected_and_deterministic() {
        let a = random_connected(7, 8, 5, 20);
        let b = random_connected(7, 8, 5, 20);
        assert_eq!(a.edges(), b.edges());
        assert!(a.isolated_nodes().is_empty());
        // connectivity via BFS from node 0
        let mut seen = vec![false; a.node_count()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in a.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }
}
