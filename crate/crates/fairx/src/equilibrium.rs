//! Exchange-equilibrium checking and construction. An allocation is an
//! exchange equilibrium when every flow is reciprocated in proportion to
//! the sender's ratio and every node serves only minimum-ratio neighbors.
//! `proportionalize` turns any lex-optimal allocation into one by
//! canceling cycles of under-reciprocated links; the received vector never
//! changes.

use num::{One, Signed};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lexopt::LexSolution;
use crate::market::{ratio_vector, received_vector, Allocation, MarketGraph};
use crate::rational::{render_rational, Rational};
use crate::structure::verify_structure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumCondition {
    /// d_ji must equal rho_i * d_ij on every edge.
    Reciprocity,
    /// A node may pay only neighbors at its neighborhood's minimum ratio.
    MinRatio,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumViolation {
    pub from: String,
    pub to: String,
    pub condition: EquilibriumCondition,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub is_equilibrium: bool,
    pub violations: Vec<EquilibriumViolation>,
}

pub fn is_exchange_equilibrium(
    market: &MarketGraph,
    allocation: &Allocation,
) -> Result<EquilibriumReport> {
    let received = received_vector(market, allocation)?;
    let ratios = ratio_vector(market, &received);
    let mut violations = Vec::new();
    for i in 0..market.node_count() {
        for &j in market.neighbors(i) {
            let d_ij = allocation.amount(i, j);
            let d_ji = allocation.amount(j, i);
            let expected = &ratios.rho[i] * &d_ij;
            if d_ji != expected {
                violations.push(EquilibriumViolation {
                    from: market.id(i).to_string(),
                    to: market.id(j).to_string(),
                    condition: EquilibriumCondition::Reciprocity,
                    detail: format!(
                        "return flow is {} but ratio {} times forward flow {} requires {}",
                        render_rational(&d_ji),
                        render_rational(&ratios.rho[i]),
                        render_rational(&d_ij),
                        render_rational(&expected),
                    ),
                });
            }
        }
        let min = market
            .neighbors(i)
            .iter()
            .map(|&j| &ratios.rho[j])
            .min();
        let Some(min) = min else { continue };
        for &j in market.neighbors(i) {
            // the condition binds only on neighbors that actually pay i
            if allocation.amount(j, i).is_positive() && &ratios.rho[j] != min {
                violations.push(EquilibriumViolation {
                    from: market.id(j).to_string(),
                    to: market.id(i).to_string(),
                    condition: EquilibriumCondition::MinRatio,
                    detail: format!(
                        "paying neighbor has ratio {} but the neighborhood minimum is {}",
                        render_rational(&ratios.rho[j]),
                        render_rational(min),
                    ),
                });
            }
        }
    }
    Ok(EquilibriumReport { is_equilibrium: violations.is_empty(), violations })
}

/// Rebalances a lex-optimal allocation into an exchange equilibrium
/// without changing anyone's received total.
///
/// While some link is under-reciprocated (rho_i * d_ij > d_ji), flow
/// conservation forces an over-reciprocated link out of the same node, so
/// following over-reciprocated links traces a simple cycle of
/// under-reciprocated ones; shifting the largest safe amount around the
/// cycle closes at least one violation per pass.
pub fn proportionalize(market: &MarketGraph, lex: &LexSolution) -> Result<Allocation> {
    let report = verify_structure(market, &lex.allocation)?;
    if !report.all_pass() {
        return Err(Error::NotLexOptimalInput(
            "input allocation fails the structural certificate".into(),
        ));
    }
    let rho = &lex.ratios.rho;
    for &i in &market.non_isolated_nodes() {
        if !rho[i].is_positive() {
            return Err(Error::NotLexOptimalInput(format!(
                "non-isolated node {} has ratio zero",
                market.id(i)
            )));
        }
    }
    let mut alloc = lex.allocation.clone();
    let violated = |alloc: &Allocation, i: usize, j: usize| -> bool {
        &rho[i] * alloc.amount(i, j) > alloc.amount(j, i)
    };
    let over = |alloc: &Allocation, i: usize, j: usize| -> bool {
        &rho[i] * alloc.amount(i, j) < alloc.amount(j, i)
    };
    let cap = 2 * market.edge_count() + 4;
    for _ in 0..cap {
        let mut start = None;
        'find: for i in 0..market.node_count() {
            for &j in market.neighbors(i) {
                if violated(&alloc, i, j) {
                    start = Some((i, j));
                    break 'find;
                }
            }
        }
        let Some((i1, i0)) = start else {
            debug_assert!(is_exchange_equilibrium(market, &alloc)?.is_equilibrium);
            return Ok(alloc);
        };
        // walk over-reciprocated links until a node repeats
        let mut path = vec![i0, i1];
        let cycle = loop {
            let cur = *path.last().unwrap();
            let next = market
                .neighbors(cur)
                .iter()
                .copied()
                .find(|&j| over(&alloc, cur, j))
                .ok_or_else(|| {
                    Error::NotLexOptimalInput(
                        "conservation failed while tracing a rebalancing cycle".into(),
                    )
                })?;
            debug_assert!(violated(&alloc, next, cur));
            if let Some(p) = path.iter().position(|&x| x == next) {
                break path[p..].to_vec();
            }
            path.push(next);
        };
        let m = cycle.len();
        let mut delta: Option<Rational> = None;
        for idx in 0..m {
            let node = cycle[idx];
            let pred = cycle[(idx + m - 1) % m];
            let bound = (&rho[node] * alloc.amount(node, pred) - alloc.amount(pred, node))
                / (&rho[node] + Rational::one());
            debug_assert!(bound.is_positive());
            delta = Some(match delta {
                Some(d) if d < bound => d,
                _ => bound,
            });
        }
        let delta = delta.expect("cycle is nonempty");
        for idx in 0..m {
            let node = cycle[idx];
            let pred = cycle[(idx + m - 1) % m];
            let succ = cycle[(idx + 1) % m];
            alloc.add(node, pred, &(-delta.clone()));
            alloc.add(node, succ, &delta);
        }
    }
    Err(Error::NotLexOptimalInput(
        "cycle canceling failed to terminate".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::lexopt::solve_lex_optimal;
    use crate::rational::{rat, rat_int};

    #[test]
    fn two_node_allocation_is_equilibrium() {
        let m = fixtures::two_node();
        let sol = solve_lex_optimal(&m).unwrap();
        let report = is_exchange_equilibrium(&m, &sol.allocation).unwrap();
        assert!(report.is_equilibrium, "{:?}", report.violations);
    }

    #[test]
    fn one_directional_cycle_is_not_equilibrium() {
        let m = fixtures::cycle4();
        let n = |id: &str| m.node_index(id).unwrap();
        let mut alloc = Allocation::new();
        alloc.set(n("a"), n("b"), rat_int(10));
        alloc.set(n("b"), n("c"), rat_int(10));
        alloc.set(n("c"), n("d"), rat_int(10));
        alloc.set(n("d"), n("a"), rat_int(10));
        let report = is_exchange_equilibrium(&m, &alloc).unwrap();
        assert!(!report.is_equilibrium);
        assert!(report
            .violations
            .iter()
            .any(|v| v.condition == EquilibriumCondition::Reciprocity));
    }

    #[test]
    fn one_directional_cycle_repairs_to_symmetric() {
        let m = fixtures::cycle4();
        let n = |id: &str| m.node_index(id).unwrap();
        let mut alloc = Allocation::new();
        alloc.set(n("a"), n("b"), rat_int(10));
        alloc.set(n("b"), n("c"), rat_int(10));
        alloc.set(n("c"), n("d"), rat_int(10));
        alloc.set(n("d"), n("a"), rat_int(10));
        let sol = crate::lexopt::LexSolution {
            received: crate::market::received_vector(&m, &alloc).unwrap(),
            ratios: crate::market::ratio_vector(
                &m,
                &crate::market::received_vector(&m, &alloc).unwrap(),
            ),
            decomposition: crate::market::level_decomposition(
                &m,
                &crate::market::ratio_vector(
                    &m,
                    &crate::market::received_vector(&m, &alloc).unwrap(),
                ),
            ),
            allocation: alloc,
        };
        let fixed = proportionalize(&m, &sol).unwrap();
        for (x, y) in [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")] {
            assert_eq!(fixed.amount(n(x), n(y)), rat_int(5));
            assert_eq!(fixed.amount(n(y), n(x)), rat_int(5));
        }
        assert!(is_exchange_equilibrium(&m, &fixed).unwrap().is_equilibrium);
    }

    #[test]
    fn six_node_solution_is_already_proportional() {
        let m = fixtures::six_node();
        let sol = solve_lex_optimal(&m).unwrap();
        let fixed = proportionalize(&m, &sol).unwrap();
        for (i, j, a) in sol.allocation.iter() {
            assert_eq!(&fixed.amount(i, j), a);
        }
        assert!(is_exchange_equilibrium(&m, &fixed).unwrap().is_equilibrium);
    }

    #[test]
    fn star_proportional_allocation_is_equilibrium() {
        let m = fixtures::star();
        let c = m.node_index("c").unwrap();
        let mut alloc = Allocation::new();
        for id in ["a", "b", "d"] {
            let l = m.node_index(id).unwrap();
            alloc.set(l, c, rat_int(1));
            alloc.set(c, l, rat(1, 3));
        }
        assert!(is_exchange_equilibrium(&m, &alloc).unwrap().is_equilibrium);
    }

    #[test]
    fn proportionalize_rejects_suboptimal_input() {
        let m = fixtures::path4();
        let n = |id: &str| m.node_index(id).unwrap();
        let mut alloc = Allocation::new();
        alloc.set(n("a"), n("b"), rat_int(1));
        alloc.set(n("b"), n("c"), rat_int(1));
        alloc.set(n("c"), n("d"), rat_int(1));
        alloc.set(n("d"), n("c"), rat_int(1));
        let received = crate::market::received_vector(&m, &alloc).unwrap();
        let ratios = crate::market::ratio_vector(&m, &received);
        let sol = crate::lexopt::LexSolution {
            decomposition: crate::market::level_decomposition(&m, &ratios),
            received,
            ratios,
            allocation: alloc,
        };
        assert!(matches!(
            proportionalize(&m, &sol),
            Err(Error::NotLexOptimalInput(_))
        ));
    }

    #[test]
    fn proportionalize_preserves_received_vector() {
        let m = fixtures::complete(&[10, 1, 1, 1]);
        let sol = solve_lex_optimal(&m).unwrap();
        let fixed = proportionalize(&m, &sol).unwrap();
        let r = crate::market::received_vector(&m, &fixed).unwrap();
        assert_eq!(r.r, sol.received.r);
        assert!(is_exchange_equilibrium(&m, &fixed).unwrap().is_equilibrium);
    }
}
