//! Coalitional stability: which outcomes can a subgroup improve on by
//! seceding and trading only among themselves?
//!
//!     cargo run --example check_stability

use fairx::fixtures;
use fairx::lexopt::solve_lex_optimal;
use fairx::market::ReceivedVector;
use fairx::rational::{rat_int, render_rational, Rational};
use fairx::stability::{strong_stability_check, weak_stability_check};

fn main() {
    let market = fixtures::path4();
    let n = |id: &str| market.node_index(id).unwrap();

    // Outcome of the "chain" allocation: a gets nothing while its neighbor
    // b does fine. The pair {a, b} can secede and swap 1-for-1.
    let mut r = vec![Rational::from_integer(0.into()); 4];
    r[n("b")] = rat_int(1);
    r[n("c")] = rat_int(2);
    r[n("d")] = rat_int(1);
    let unfair = ReceivedVector { r };

    let verdict = strong_stability_check(&market, &unfair).unwrap();
    println!("chain outcome strongly stable: {}", verdict.stable);
    if let Some(blocking) = &verdict.blocking {
        let members: Vec<&str> = blocking.coalition.members.iter().map(|&i| market.id(i)).collect();
        println!("  blocked by {members:?}, who can secure:");
        for (i, amount) in &blocking.received {
            println!("    {} receives {}", market.id(*i), render_rational(amount));
        }
    }

    // The solver's outcome survives every one of the 2^4 - 1 coalitions,
    // in both the one-winner-no-losers and the everyone-strictly senses.
    let sol = solve_lex_optimal(&market).unwrap();
    let strong = strong_stability_check(&market, &sol.received).unwrap();
    let weak = weak_stability_check(&market, &sol.received).unwrap();
    println!("\nsolver outcome strongly stable: {}", strong.stable);
    println!("solver outcome weakly stable (in the core): {}", weak.stable);
}
