//! Exact solver, verifier and simulator for service-exchange markets on
//! graphs: every node must give away its idle capacity to neighbors, and
//! the object of interest is the max-min fair (lexicographically optimal)
//! vector of exchange ratios, its level structure, the equilibrium
//! allocations realizing it, its coalitional stability, and an
//! asynchronous token dynamic that approaches it.
//!
//! Start with [`market::MarketGraph`] and [`lexopt::solve_lex_optimal`];
//! the `examples/` directory has a runnable walkthrough per capability.

pub mod equilibrium;
pub mod error;
pub mod fixtures;
mod flow;
pub mod io;
pub mod lexopt;
pub mod market;
pub mod maxmin;
pub mod oracle;
pub mod rational;
pub mod sim;
pub mod stability;
pub mod structure;

pub use error::{Error, Result};
pub use lexopt::{solve_lex_optimal, LexSolution};
pub use market::{Allocation, MarketGraph, RatioVector, ReceivedVector};
pub use rational::Rational;
