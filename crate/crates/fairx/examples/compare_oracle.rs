//! Cross-check the combinatorial solver against two independent
//! references: an exact-rational linear-programming oracle and a direct
//! enumeration of the bottleneck subset ratio.
//!
//!     cargo run --example compare_oracle

use fairx::fixtures;
use fairx::lexopt::solve_lex_optimal;
use fairx::maxmin::solve_maxmin;
use fairx::oracle::{hall_minimum, oracle_ratio_vector};
use fairx::rational::render_rational;

fn main() {
    for seed in 0..10u64 {
        let n = 3 + (seed as usize % 4);
        let market = fixtures::random_connected(seed, n, n, 30);

        let sol = solve_lex_optimal(&market).unwrap();
        let oracle = oracle_ratio_vector(&market).unwrap();
        assert_eq!(sol.ratios.rho, oracle.rho, "seed {seed}: solver vs LP oracle");

        let maxmin = solve_maxmin(&market).unwrap();
        let (hall, argmin) = hall_minimum(&market).unwrap();
        assert_eq!(maxmin.lambda_star, hall, "seed {seed}: flow vs enumeration");

        let members: Vec<&str> = argmin.iter().map(|&i| market.id(i)).collect();
        println!(
            "seed {seed}: {} nodes, worst ratio {} (bottleneck receivers {:?}) -- solver, LP oracle and enumeration agree",
            market.node_count(),
            render_rational(&hall),
            members,
        );
    }
}
