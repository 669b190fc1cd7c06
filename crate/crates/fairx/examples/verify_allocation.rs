//! Use the structural certificate to audit a third-party allocation.
//!
//!     cargo run --example verify_allocation

use fairx::fixtures;
use fairx::lexopt::solve_lex_optimal;
use fairx::market::Allocation;
use fairx::rational::rat_int;
use fairx::structure::verify_structure;

fn main() {
    let market = fixtures::path4();

    // A plausible-looking chain allocation: a pays b, b pays c, c and d
    // swap. Everyone ships their full endowment, yet it is unfair to a.
    let n = |id: &str| market.node_index(id).unwrap();
    let mut chain = Allocation::new();
    chain.set(n("a"), n("b"), rat_int(1));
    chain.set(n("b"), n("c"), rat_int(1));
    chain.set(n("c"), n("d"), rat_int(1));
    chain.set(n("d"), n("c"), rat_int(1));

    let report = verify_structure(&market, &chain).unwrap();
    println!("chain allocation certificate: all_pass = {}", report.all_pass());
    for (name, verdict) in [
        ("served levels      ", &report.served_levels),
        ("independence       ", &report.independence),
        ("neighborhood pairs ", &report.neighborhood_pairing),
        ("level product      ", &report.level_product),
        ("received balance   ", &report.received_balance),
        ("flow isolation     ", &report.flow_isolation),
    ] {
        match &verdict.detail {
            Some(detail) => println!("  {name} FAIL: {detail}"),
            None => println!("  {name} {}", if verdict.pass { "ok" } else { "FAIL" }),
        }
    }

    // The solver's own output always certifies.
    let sol = solve_lex_optimal(&market).unwrap();
    let report = verify_structure(&market, &sol.allocation).unwrap();
    println!("\nsolver allocation certificate: all_pass = {}", report.all_pass());
}
