//! Turn a fair-but-unreciprocated allocation into an exchange equilibrium
//! without changing what anyone receives.
//!
//!     cargo run --example make_equilibrium

use fairx::equilibrium::{is_exchange_equilibrium, proportionalize};
use fairx::fixtures;
use fairx::lexopt::LexSolution;
use fairx::market::{level_decomposition, ratio_vector, received_vector, Allocation};
use fairx::rational::{rat_int, render_rational};

fn main() {
    let market = fixtures::cycle4();
    let n = |id: &str| market.node_index(id).unwrap();

    // Everyone forwards 10 units clockwise: all ratios are 1, so this is
    // already max-min fair -- but nobody reciprocates their benefactor.
    let mut ring = Allocation::new();
    ring.set(n("a"), n("b"), rat_int(10));
    ring.set(n("b"), n("c"), rat_int(10));
    ring.set(n("c"), n("d"), rat_int(10));
    ring.set(n("d"), n("a"), rat_int(10));

    let check = is_exchange_equilibrium(&market, &ring).unwrap();
    println!("ring allocation: equilibrium = {}", check.is_equilibrium);
    for v in check.violations.iter().take(3) {
        println!("  {} -> {}: {}", v.from, v.to, v.detail);
    }
    println!("  ({} violations total)\n", check.violations.len());

    let received = received_vector(&market, &ring).unwrap();
    let ratios = ratio_vector(&market, &received);
    let sol = LexSolution {
        decomposition: level_decomposition(&market, &ratios),
        received,
        ratios,
        allocation: ring,
    };
    let fixed = proportionalize(&market, &sol).unwrap();

    println!("after rebalancing:");
    for (i, j, amount) in fixed.iter() {
        println!(
            "  {} -> {}: {}",
            market.id(i),
            market.id(j),
            render_rational(amount)
        );
    }
    let check = is_exchange_equilibrium(&market, &fixed).unwrap();
    println!("equilibrium = {}", check.is_equilibrium);

    let after = received_vector(&market, &fixed).unwrap();
    assert_eq!(after.r, sol.received.r);
    println!("received vector unchanged: true");
}
