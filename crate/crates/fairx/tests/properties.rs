//! Property-based invariants over randomly generated markets.

use std::collections::BTreeSet;

use proptest::prelude::*;

use fairx::lexopt::solve_lex_optimal;
use fairx::market::{
    conservation_check, lex_compare, received_vector, validate_market, LexOrdering, MarketGraph,
    RatioVector,
};
use fairx::rational::{parse_rational, rat_int, render_rational, Rational};
use fairx::sim::{simulate, SimConfig};

/// A random market with 2..=8 nodes, arbitrary (possibly disconnected)
/// edge sets with at least one edge, and integer endowments in 1..=50.
fn arb_market() -> impl Strategy<Value = MarketGraph> {
    (2usize..=8)
        .prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .collect();
            let edge_count = pairs.len();
            (
                Just(pairs),
                proptest::collection::vec(1i64..=50, n),
                (1u64..(1u64 << edge_count)),
            )
        })
        .prop_map(|(pairs, endowments, mask)| {
            let nodes: Vec<(String, Rational)> = endowments
                .iter()
                .enumerate()
                .map(|(i, &d)| (format!("n{i}"), rat_int(d)))
                .collect();
            let edges: Vec<(String, String)> = pairs
                .iter()
                .enumerate()
                .filter(|&(k, _)| mask & (1 << k) != 0)
                .map(|(_, &(a, b))| (format!("n{a}"), format!("n{b}")))
                .collect();
            validate_market(&nodes, &edges).expect("generated market is valid")
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solver_output_is_a_valid_conserving_allocation(m in arb_market()) {
        let sol = solve_lex_optimal(&m).unwrap();
        sol.allocation.validate(&m).unwrap();
        let full: BTreeSet<usize> = (0..m.node_count()).collect();
        prop_assert!(conservation_check(&m, &sol.allocation, &full).unwrap().is_ok());
        for i in 0..m.node_count() {
            let single: BTreeSet<usize> = [i].into_iter().collect();
            prop_assert!(conservation_check(&m, &sol.allocation, &single).unwrap().is_ok());
        }
    }

    #[test]
    fn solver_ratios_match_its_own_allocation(m in arb_market()) {
        let sol = solve_lex_optimal(&m).unwrap();
        let r = received_vector(&m, &sol.allocation).unwrap();
        prop_assert_eq!(&r.r, &sol.received.r);
        for i in 0..m.node_count() {
            if !m.is_isolated(i) {
                prop_assert_eq!(&sol.ratios.rho[i], &(&r.r[i] / m.endowment(i)));
            }
        }
    }

    #[test]
    fn level_bounds(m in arb_market()) {
        let sol = solve_lex_optimal(&m).unwrap();
        let levels = &sol.decomposition.levels;
        if levels.len() == 1 {
            prop_assert_eq!(&levels[0], &rat_int(1));
        } else if levels.len() > 1 {
            prop_assert!(levels[0] < rat_int(1));
            prop_assert!(levels[levels.len() - 1] > rat_int(1));
        }
        // levels strictly increasing and reciprocal-paired
        for w in levels.windows(2) {
            prop_assert!(w[0] < w[1]);
        }
        let k = levels.len();
        for step in 0..k {
            prop_assert_eq!(&levels[step] * &levels[k - step - 1], rat_int(1));
        }
    }

    #[test]
    fn lex_compare_is_a_total_preorder(m in arb_market()) {
        let sol = solve_lex_optimal(&m).unwrap();
        let x = &sol.ratios;
        prop_assert_eq!(lex_compare(x, x).unwrap(), LexOrdering::Equal);
        // the solver's vector weakly dominates a flat all-zero vector
        let zero = RatioVector { rho: vec![Rational::from_integer(0.into()); x.rho.len()] };
        if m.edges().is_empty() {
            prop_assert_eq!(lex_compare(x, &zero).unwrap(), LexOrdering::Equal);
        } else {
            prop_assert_eq!(lex_compare(x, &zero).unwrap(), LexOrdering::Greater);
        }
    }

    #[test]
    fn simulation_is_deterministic_and_conserving(m in arb_market(), seed in 0u64..1000) {
        prop_assume!(m.isolated_nodes().is_empty());
        let config = SimConfig::from_market(&m, 2000, seed);
        let a = simulate(&m, &config);
        let b = simulate(&m, &config);
        prop_assert_eq!(&a.final_state.tokens_given, &b.final_state.tokens_given);
        let n = m.node_count();
        let given: u64 = (0..n).map(|i| a.final_state.total_given(i)).sum();
        let received: u64 = (0..n).map(|i| a.final_state.total_received(i)).sum();
        prop_assert_eq!(given, a.final_state.events);
        prop_assert_eq!(received, a.final_state.events);
    }

    #[test]
    fn rationals_round_trip(n in -1_000_000i64..1_000_000, d in 1i64..1_000_000) {
        let r = Rational::new(n.into(), d.into());
        prop_assert_eq!(parse_rational(&render_rational(&r)).unwrap(), r);
    }
}
