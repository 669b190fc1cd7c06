//! Solve a market and walk through the resulting level structure.
//!
//!     cargo run --example solve_market

use fairx::fixtures;
use fairx::lexopt::solve_lex_optimal;
use fairx::rational::render_rational;

fn main() {
    // Six peers; each must hand its idle capacity to direct neighbors.
    let market = fixtures::six_node();
    let sol = solve_lex_optimal(&market).expect("market has edges");

    println!("node  endowment  received  ratio");
    for i in 0..market.node_count() {
        println!(
            "{:<5} {:<10} {:<9} {}",
            market.id(i),
            render_rational(market.endowment(i)),
            render_rational(&sol.received.r[i]),
            render_rational(&sol.ratios.rho[i]),
        );
    }

    println!("\nlevels (each pairs with its reciprocal):");
    for (k, level) in sol.decomposition.levels.iter().enumerate() {
        let members: Vec<&str> = sol.decomposition.level_sets[k]
            .iter()
            .map(|&i| market.id(i))
            .collect();
        println!("  l_{} = {:<5} {:?}", k + 1, render_rational(level), members);
    }

    println!("\ngroups (no flow ever crosses a group boundary):");
    for (g, group) in sol.decomposition.groups.iter().enumerate() {
        let members: Vec<&str> = group.iter().map(|&i| market.id(i)).collect();
        println!("  M_{} = {:?}", g + 1, members);
    }

    println!("\nflows:");
    for (i, j, amount) in sol.allocation.iter() {
        println!(
            "  {} -> {}: {}",
            market.id(i),
            market.id(j),
            render_rational(amount)
        );
    }
}
