//! Run the asynchronous token dynamic and watch the empirical exchange
//! ratios settle onto the static solver's level values.
//!
//!     cargo run --example simulate_tokens

use fairx::fixtures;
use fairx::lexopt::solve_lex_optimal;
use fairx::rational::{render_rational, to_f64};
use fairx::sim::{convergence_report, simulate, SimConfig};

fn main() {
    let market = fixtures::six_node();

    // Tokens arrive in Poisson streams with rate equal to each node's
    // endowment; every token goes to the historically most generous
    // neighbor (per token received back).
    let config = SimConfig::from_market(&market, 100_000, 7);
    let trace = simulate(&market, &config);

    println!(
        "{} tokens over {:.1} time units\n",
        trace.final_state.events, trace.final_state.clock
    );

    let reference = solve_lex_optimal(&market).unwrap();
    println!("node  empirical  target");
    for i in 0..market.node_count() {
        println!(
            "{:<5} {:<10.4} {} ({:.4})",
            market.id(i),
            trace.final_state.ratio(i),
            render_rational(&reference.ratios.rho[i]),
            to_f64(&reference.ratios.rho[i]),
        );
    }

    let report = convergence_report(&trace, Some(&reference), 0.05).unwrap();
    println!(
        "\ntrailing-window deviation within {:.0}%: {}",
        report.tolerance * 100.0,
        report.pass
    );
    for (i, dev) in report.deviations.iter().enumerate() {
        println!("  {}: {:.3}%", market.id(i), dev * 100.0);
    }
}
