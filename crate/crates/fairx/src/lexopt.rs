//! Lexicographically optimal allocation by level peeling: repeatedly solve
//! the max-min subproblem on the remaining subgraph, extract the exact
//! bottom level set by flow reshaping, pair it with its neighborhood as
//! the matching top level, fix the cross-level flows by transportation,
//! and recurse on the peeled interior.

use std::collections::BTreeSet;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::flow::saturate;
use crate::market::{
    level_decomposition, Allocation, LevelDecomposition, MarketGraph, RatioVector, ReceivedVector,
};
use crate::maxmin::{solve_maxmin_subgraph, MaxMinSolution};
use crate::rational::Rational;

/// A certified lex-optimal allocation with its received vector, ratios and
/// level decomposition.
#[derive(Debug, Clone)]
pub struct LexSolution {
    pub allocation: Allocation,
    pub received: ReceivedVector,
    pub ratios: RatioVector,
    pub decomposition: LevelDecomposition,
}

fn received_on(market: &MarketGraph, allocation: &Allocation) -> Vec<Rational> {
    let mut r = vec![Rational::zero(); market.node_count()];
    for (_, j, a) in allocation.iter() {
        r[j] += a;
    }
    r
}

/// Reshapes a max-min witness until the candidate bottom set is
/// independent and absorbs the full endowment of its neighborhood, which
/// pins it to the exact bottom level set. Returns the set and the
/// reshaped allocation.
pub fn extract_bottom_level(
    market: &MarketGraph,
    maxmin: &MaxMinSolution,
) -> Result<(Vec<usize>, Allocation)> {
    let active = market.non_isolated_nodes();
    extract_bottom_level_subgraph(market, &active, &maxmin.lambda_star, maxmin.allocation.clone())
}

pub(crate) fn extract_bottom_level_subgraph(
    market: &MarketGraph,
    active: &[usize],
    bottom: &Rational,
    mut alloc: Allocation,
) -> Result<(Vec<usize>, Allocation)> {
    if bottom >= &Rational::one() {
        return Err(Error::NotOptimalInput(
            "bottom-level extraction needs a minimum ratio below one".into(),
        ));
    }
    let r = received_on(market, &alloc);
    let active_set: BTreeSet<usize> = active.iter().copied().collect();
    let min_ratio = active
        .iter()
        .map(|&i| &r[i] / market.endowment(i))
        .min()
        .expect("nonempty subgraph");
    if &min_ratio != bottom {
        return Err(Error::NotOptimalInput(format!(
            "witness minimum ratio {} does not match the optimum {}",
            min_ratio, bottom
        )));
    }
    let mut r = r;
    let mut level: BTreeSet<usize> = active
        .iter()
        .copied()
        .filter(|&i| &r[i] == &(bottom * market.endowment(i)))
        .collect();

    // shift `delta` from (i, donor) to (i, target); the donor keeps a
    // ratio strictly above the bottom level, the target rises above it
    let shift = |alloc: &mut Allocation,
                     r: &mut Vec<Rational>,
                     i: usize,
                     donor: usize,
                     target: usize| {
        let gap = &r[donor] - bottom * market.endowment(donor);
        let half = gap / Rational::from_integer(2.into());
        let available = alloc.amount(i, donor);
        let delta = if available < half { available } else { half };
        debug_assert!(delta.is_positive());
        alloc.add(i, donor, &(-delta.clone()));
        alloc.add(i, target, &delta);
        r[donor] -= &delta;
        r[target] += &delta;
    };

    // first pass: break intra-set edges by diverting flow that currently
    // leaves the set back into it
    loop {
        let mut intra = Vec::new();
        for &i in &level {
            for &j in market.neighbors(i) {
                if level.contains(&j) {
                    intra.push((i, j));
                }
            }
        }
        if intra.is_empty() {
            break;
        }
        let boundary: BTreeSet<usize> = level_boundary(market, &level, &active_set);
        let mut applied = false;
        'outer: for &(i, j) in &intra {
            for &j1 in market.neighbors(i) {
                if boundary.contains(&j1) && alloc.amount(i, j1).is_positive() {
                    shift(&mut alloc, &mut r, i, j1, j);
                    level.remove(&j);
                    applied = true;
                    break 'outer;
                }
            }
        }
        if !applied {
            return Err(Error::NotOptimalInput(
                "bottom-level reshaping stalled on an intra-set edge".into(),
            ));
        }
    }

    // second pass: shrink the set until its neighborhood ships only into it
    loop {
        let boundary = level_boundary(market, &level, &active_set);
        let mut stray = None;
        'scan: for &i in &boundary {
            for &j1 in market.neighbors(i) {
                if active_set.contains(&j1)
                    && !level.contains(&j1)
                    && alloc.amount(i, j1).is_positive()
                {
                    stray = Some((i, j1));
                    break 'scan;
                }
            }
        }
        let Some((i, j1)) = stray else { break };
        let target = market
            .neighbors(i)
            .iter()
            .copied()
            .find(|j| level.contains(j))
            .expect("boundary node has a neighbor in the set");
        shift(&mut alloc, &mut r, i, j1, target);
        level.remove(&target);
    }

    if level.is_empty() {
        return Err(Error::NotOptimalInput(
            "bottom-level reshaping emptied the candidate set".into(),
        ));
    }
    debug_assert!({
        let boundary = level_boundary(market, &level, &active_set);
        let lhs: Rational = level.iter().map(|&i| r[i].clone()).sum();
        let rhs: Rational = boundary.iter().map(|&i| market.endowment(i).clone()).sum();
        lhs == rhs
    });
    Ok((level.into_iter().collect(), alloc))
}

fn level_boundary(
    market: &MarketGraph,
    level: &BTreeSet<usize>,
    active: &BTreeSet<usize>,
) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for &i in level {
        for &j in market.neighbors(i) {
            if active.contains(&j) && !level.contains(&j) {
                out.insert(j);
            }
        }
    }
    out
}

/// Fixes the flows between a bottom level set and its paired top set by
/// two independent transportation problems: the low side ships its full
/// endowment into the high side, and the high side ships its full
/// endowment back so that every node lands exactly on its level.
pub fn pair_link_allocation(
    market: &MarketGraph,
    low: &[usize],
    high: &[usize],
    low_level: &Rational,
) -> Result<Allocation> {
    let high_level = Rational::one() / low_level;
    let high_set: BTreeSet<usize> = high.iter().copied().collect();
    let low_set: BTreeSet<usize> = low.iter().copied().collect();
    let mut cross = Vec::new();
    for &(a, b) in market.edges() {
        if low_set.contains(&a) && high_set.contains(&b) {
            cross.push((a, b));
        } else if low_set.contains(&b) && high_set.contains(&a) {
            cross.push((b, a));
        }
    }
    let low_pos = |i: usize| low.binary_search(&i).unwrap();
    let high_pos = |j: usize| high.binary_search(&j).unwrap();

    let mut result = Allocation::new();
    // low -> high: supply D_i, each high node receives high_level * D_j
    {
        let supplies: Vec<Rational> = low.iter().map(|&i| market.endowment(i).clone()).collect();
        let demands: Vec<Rational> = high
            .iter()
            .map(|&j| &high_level * market.endowment(j))
            .collect();
        let arcs: Vec<(usize, usize)> = cross.iter().map(|&(i, j)| (low_pos(i), high_pos(j))).collect();
        let out = saturate(&supplies, &demands, &arcs);
        if !out.saturated {
            return Err(Error::InfeasibleTransport(
                "low-to-high shipment cannot saturate the top level".into(),
            ));
        }
        for (&(i, j), f) in cross.iter().zip(out.arc_flows.iter()) {
            result.add(i, j, f);
        }
    }
    // high -> low: supply D_j, each low node receives low_level * D_i
    {
        let supplies: Vec<Rational> = high.iter().map(|&j| market.endowment(j).clone()).collect();
        let demands: Vec<Rational> = low
            .iter()
            .map(|&i| low_level * market.endowment(i))
            .collect();
        let arcs: Vec<(usize, usize)> = cross.iter().map(|&(i, j)| (high_pos(j), low_pos(i))).collect();
        let out = saturate(&supplies, &demands, &arcs);
        if !out.saturated {
            return Err(Error::InfeasibleTransport(
                "high-to-low shipment cannot saturate the bottom level".into(),
            ));
        }
        for (&(i, j), f) in cross.iter().zip(out.arc_flows.iter()) {
            result.add(j, i, f);
        }
    }
    Ok(result)
}

pub fn solve_lex_optimal(market: &MarketGraph) -> Result<LexSolution> {
    let mut allocation = Allocation::new();
    let active = market.non_isolated_nodes();
    if active.len() == 2 {
        // single edge: the unique allocation
        let (a, b) = (active[0], active[1]);
        allocation.set(a, b, market.endowment(a).clone());
        allocation.set(b, a, market.endowment(b).clone());
        return Ok(finish(market, allocation));
    }
    let mut q: Vec<usize> = active;
    while !q.is_empty() {
        let (lambda, witness) = solve_maxmin_subgraph(market, &q);
        if lambda.is_one() {
            for (i, j, a) in witness.iter() {
                allocation.add(i, j, a);
            }
            break;
        }
        let (low, reshaped) = extract_bottom_level_subgraph(market, &q, &lambda, witness)?;
        let q_set: BTreeSet<usize> = q.iter().copied().collect();
        let low_set: BTreeSet<usize> = low.iter().copied().collect();
        let high: Vec<usize> = level_boundary(market, &low_set, &q_set).into_iter().collect();
        drop(reshaped);
        let cross = pair_link_allocation(market, &low, &high, &lambda)?;
        for (i, j, a) in cross.iter() {
            allocation.add(i, j, a);
        }
        let remove: BTreeSet<usize> = low.iter().chain(high.iter()).copied().collect();
        q.retain(|i| !remove.contains(i));
        let q_set: BTreeSet<usize> = q.iter().copied().collect();
        assert!(
            q.iter()
                .all(|&i| market.neighbors(i).iter().any(|j| q_set.contains(j))),
            "peeled interior must not contain isolated nodes"
        );
    }
    Ok(finish(market, allocation))
}

fn finish(market: &MarketGraph, allocation: Allocation) -> LexSolution {
    let r = received_on(market, &allocation);
    let received = ReceivedVector { r };
    let rho = (0..market.node_count())
        .map(|i| {
            if market.is_isolated(i) {
                Rational::zero()
            } else {
                &received.r[i] / market.endowment(i)
            }
        })
        .collect();
    let ratios = RatioVector { rho };
    let decomposition = level_decomposition(market, &ratios);
    LexSolution { allocation, received, ratios, decomposition }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::market::market_from_ints;
    use crate::maxmin::solve_maxmin;
    use crate::rational::{rat, rat_int};

    #[test]
    fn two_node_bottom_set() {
        let m = market_from_ints(&[("1", 10), ("2", 30)], &[("1", "2")]);
        let mm = solve_maxmin(&m).unwrap();
        let (low, _) = extract_bottom_level(&m, &mm).unwrap();
        assert_eq!(low, vec![1]);
    }

    #[test]
    fn star_bottom_set_is_the_leaves() {
        let m = fixtures::star();
        let mm = solve_maxmin(&m).unwrap();
        assert_eq!(mm.lambda_star, rat(1, 3));
        let (low, _) = extract_bottom_level(&m, &mm).unwrap();
        let leaves: Vec<usize> = ["a", "b", "d"]
            .iter()
            .map(|id| m.node_index(id).unwrap())
            .collect();
        let mut expected = leaves;
        expected.sort_unstable();
        assert_eq!(low, expected);
    }

    #[test]
    fn extraction_requires_matching_optimum() {
        let m = fixtures::star();
        let mut mm = solve_maxmin(&m).unwrap();
        mm.lambda_star = rat(1, 4);
        assert!(matches!(
            extract_bottom_level(&m, &mm),
            Err(Error::NotOptimalInput(_))
        ));
    }

    #[test]
    fn six_node_solution() {
        let m = fixtures::six_node();
        let sol = solve_lex_optimal(&m).unwrap();
        let expect_r = [20, 40, 10, 10, 60, 30];
        let expect_rho = [rat(1, 2), rat_int(2), rat_int(1), rat_int(1), rat_int(2), rat(1, 2)];
        for (idx, id) in ["1", "2", "3", "4", "5", "6"].iter().enumerate() {
            let i = m.node_index(id).unwrap();
            assert_eq!(sol.received.r[i], rat_int(expect_r[idx]));
            assert_eq!(sol.ratios.rho[i], expect_rho[idx]);
        }
        assert_eq!(sol.decomposition.level_count(), 3);
        let ids = |set: &Vec<usize>| -> Vec<&str> {
            set.iter().map(|&i| m.id(i)).collect()
        };
        assert_eq!(ids(&sol.decomposition.level_sets[0]), vec!["1", "6"]);
        assert_eq!(ids(&sol.decomposition.level_sets[1]), vec!["3", "4"]);
        assert_eq!(ids(&sol.decomposition.level_sets[2]), vec!["2", "5"]);
        assert_eq!(ids(&sol.decomposition.groups[0]), vec!["1", "2", "5", "6"]);
        assert_eq!(ids(&sol.decomposition.groups[1]), vec!["3", "4"]);
    }

    #[test]
    fn six_node_bottom_level() {
        let m = fixtures::six_node();
        let mm = solve_maxmin(&m).unwrap();
        assert_eq!(mm.lambda_star, rat(1, 2));
        let (low, _) = extract_bottom_level(&m, &mm).unwrap();
        let ids: Vec<&str> = low.iter().map(|&i| m.id(i)).collect();
        assert_eq!(ids, vec!["1", "6"]);
    }

    #[test]
    fn six_node_pair_flows() {
        let m = fixtures::six_node();
        let sol = solve_lex_optimal(&m).unwrap();
        let n = |id: &str| m.node_index(id).unwrap();
        assert_eq!(sol.allocation.amount(n("1"), n("2")), rat_int(40));
        assert_eq!(sol.allocation.amount(n("6"), n("5")), rat_int(60));
        assert_eq!(sol.allocation.amount(n("2"), n("1")), rat_int(20));
        assert_eq!(sol.allocation.amount(n("5"), n("6")), rat_int(30));
        assert_eq!(sol.allocation.amount(n("2"), n("4")), rat_int(0));
    }

    #[test]
    fn complete_graph_dominant_node() {
        let m = fixtures::complete(&[10, 1, 1, 1]);
        let sol = solve_lex_optimal(&m).unwrap();
        assert_eq!(sol.decomposition.level_count(), 2);
        assert_eq!(sol.decomposition.levels[0], rat(3, 10));
        assert_eq!(sol.decomposition.levels[1], rat(10, 3));
        assert_eq!(sol.decomposition.level_sets[0], vec![0]);
    }

    #[test]
    fn triangle_single_level() {
        let m = fixtures::complete(&[1, 1, 1]);
        let sol = solve_lex_optimal(&m).unwrap();
        assert_eq!(sol.decomposition.level_count(), 1);
        assert_eq!(sol.decomposition.levels[0], rat_int(1));
    }

    #[test]
    fn star_pair_link_allocation() {
        let m = fixtures::star();
        let c = m.node_index("c").unwrap();
        let mut leaves: Vec<usize> = ["a", "b", "d"]
            .iter()
            .map(|id| m.node_index(id).unwrap())
            .collect();
        leaves.sort_unstable();
        let alloc = pair_link_allocation(&m, &leaves, &[c], &rat(1, 3)).unwrap();
        for &l in &leaves {
            assert_eq!(alloc.amount(l, c), rat_int(1));
            assert_eq!(alloc.amount(c, l), rat(1, 3));
        }
    }

    #[test]
    fn solution_allocation_is_valid() {
        let m = fixtures::six_node();
        let sol = solve_lex_optimal(&m).unwrap();
        sol.allocation.validate(&m).unwrap();
    }

    #[test]
    fn disconnected_market_with_isolated_node() {
        let m = market_from_ints(
            &[("a", 10), ("b", 30), ("c", 5), ("d", 5), ("z", 7)],
            &[("a", "b"), ("c", "d")],
        );
        let sol = solve_lex_optimal(&m).unwrap();
        let n = |id: &str| m.node_index(id).unwrap();
        assert_eq!(sol.ratios.rho[n("a")], rat_int(3));
        assert_eq!(sol.ratios.rho[n("b")], rat(1, 3));
        assert_eq!(sol.ratios.rho[n("c")], rat_int(1));
        assert_eq!(sol.ratios.rho[n("z")], rat_int(0));
        sol.allocation.validate(&m).unwrap();
    }
}
