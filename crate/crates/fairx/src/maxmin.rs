//! Solves "maximize the minimum ratio r_j / D_j" over allocations, exactly.
//!
//! Feasibility of a target ratio reduces to bipartite flow: source ->
//! sender i (capacity D_i), sender i -> receiver j for each direction of
//! each edge, receiver j -> sink (capacity lambda * D_j). The target is
//! feasible iff the max flow saturates every sink arc; an unsaturated run
//! yields a deficient receiver set T whose Hall ratio
//! (sum of D over senders adjacent to T) / (sum of D over T) bounds the
//! optimum, which drives the iterative search.

use std::collections::BTreeSet;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::flow::saturate;
use crate::market::{Allocation, MarketGraph, ReceivedVector};
use crate::rational::Rational;

/// Feasibility witness or a Hall-type cut certificate.
#[derive(Debug, Clone)]
pub enum FeasibilityResult {
    Feasible { witness: Allocation },
    Infeasible { cut_certificate: Vec<usize> },
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityResult::Feasible { .. })
    }
}

#[derive(Debug, Clone)]
pub struct MaxMinSolution {
    pub lambda_star: Rational,
    pub allocation: Allocation,
    pub received: ReceivedVector,
}

/// Hall ratio of a receiver set: endowment of senders adjacent to the set
/// over endowment of the set.
pub fn hall_ratio(market: &MarketGraph, active: &[usize], receivers: &[usize]) -> Rational {
    let t: BTreeSet<usize> = receivers.iter().copied().collect();
    let in_active: BTreeSet<usize> = active.iter().copied().collect();
    let mut suppliers = Rational::zero();
    for &i in active {
        if market.neighbors(i).iter().any(|j| t.contains(j)) {
            suppliers += market.endowment(i);
        }
    }
    let demand: Rational = receivers
        .iter()
        .filter(|j| in_active.contains(j))
        .map(|&j| market.endowment(j).clone())
        .sum();
    suppliers / demand
}

/// Nodes of `active` with at least one neighbor inside `active`.
fn connected_within(market: &MarketGraph, active: &[usize]) -> Vec<usize> {
    let set: BTreeSet<usize> = active.iter().copied().collect();
    active
        .iter()
        .copied()
        .filter(|&i| market.neighbors(i).iter().any(|j| set.contains(j)))
        .collect()
}

/// Decides whether an allocation on the subgraph induced by `active`
/// exists with r_j >= bound_j for every node carrying a bound. Bounds are
/// indexed by position in `active`.
pub(crate) fn feasible_with_bounds(
    market: &MarketGraph,
    active: &[usize],
    bounds: &[Rational],
) -> FeasibilityResult {
    let nodes = active;
    let set: BTreeSet<usize> = nodes.iter().copied().collect();
    let pos = |i: usize| nodes.binary_search(&i).unwrap();
    let supplies: Vec<Rational> = nodes.iter().map(|&i| market.endowment(i).clone()).collect();
    let mut arcs = Vec::new();
    for &(a, b) in market.edges() {
        if set.contains(&a) && set.contains(&b) {
            arcs.push((pos(a), pos(b)));
            arcs.push((pos(b), pos(a)));
        }
    }
    let out = saturate(&supplies, bounds, &arcs);
    if !out.saturated {
        let cut: Vec<usize> = out
            .deficient_receivers
            .iter()
            .map(|&j| nodes[j])
            .collect();
        return FeasibilityResult::Infeasible { cut_certificate: cut };
    }
    let mut witness = Allocation::new();
    for (&(i, j), f) in arcs.iter().zip(out.arc_flows.iter()) {
        witness.add(nodes[i], nodes[j], f);
    }
    // route surplus supply to the lowest-id neighbor inside the subgraph;
    // receiver totals only grow, so every bound still holds
    for (slot, &i) in nodes.iter().enumerate() {
        let leftover = &supplies[slot] - &out.shipped[slot];
        if leftover.is_positive() {
            let j = market
                .neighbors(i)
                .iter()
                .copied()
                .find(|j| set.contains(j))
                .expect("bounded node must have a neighbor in the subgraph");
            witness.add(i, j, &leftover);
        }
    }
    FeasibilityResult::Feasible { witness }
}

/// Feasibility of min ratio >= lambda over the whole market.
pub fn feasible_at(market: &MarketGraph, lambda: &Rational) -> Result<FeasibilityResult> {
    if lambda.is_negative() {
        return Err(Error::NegativeLambda);
    }
    let active = market.non_isolated_nodes();
    Ok(feasible_at_subgraph(market, &active, lambda))
}

/// Same, restricted to the subgraph induced by `active` (which must have
/// no nodes isolated within it).
pub fn feasible_at_subgraph(
    market: &MarketGraph,
    active: &[usize],
    lambda: &Rational,
) -> FeasibilityResult {
    let bounds: Vec<Rational> = active
        .iter()
        .map(|&j| lambda * market.endowment(j))
        .collect();
    feasible_with_bounds(market, active, &bounds)
}

pub fn solve_maxmin(market: &MarketGraph) -> Result<MaxMinSolution> {
    if market.edge_count() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let active = market.non_isolated_nodes();
    let (lambda_star, allocation) = solve_maxmin_subgraph(market, &active);
    let mut r = vec![Rational::zero(); market.node_count()];
    for (_, j, a) in allocation.iter() {
        r[j] += a;
    }
    Ok(MaxMinSolution {
        lambda_star,
        allocation,
        received: ReceivedVector { r },
    })
}

/// Iterative exact search: start at lambda = 1 (the D-weighted mean ratio,
/// an upper bound); while infeasible, drop lambda to the Hall ratio of the
/// returned cut. Every probe value is a Hall ratio, so the sequence is
/// strictly decreasing over a finite set and lands on the optimum.
pub fn solve_maxmin_subgraph(
    market: &MarketGraph,
    active: &[usize],
) -> (Rational, Allocation) {
    debug_assert_eq!(connected_within(market, active).len(), active.len());
    let mut lambda = Rational::one();
    let cap = 4 * active.len() + 8;
    for _ in 0..cap {
        match feasible_at_subgraph(market, active, &lambda) {
            FeasibilityResult::Feasible { witness } => return (lambda, witness),
            FeasibilityResult::Infeasible { cut_certificate } => {
                let next = hall_ratio(market, active, &cut_certificate);
                debug_assert!(next < lambda);
                lambda = next;
            }
        }
    }
    unreachable!("max-min search failed to converge");
}
