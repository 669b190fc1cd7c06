//! Asynchronous token-exchange simulator. Each node generates service
//! tokens in a Poisson stream and grants every token to the neighbor that
//! has historically been most generous to it per token received. With
//! rates equal to endowments, the empirical exchange ratios approach the
//! static solver's level values.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lexopt::LexSolution;
use crate::market::MarketGraph;
use crate::rational::to_f64;

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Token generation rate per node; must be positive.
    pub rates: Vec<f64>,
    /// Total number of tokens to generate.
    pub tokens: u64,
    pub seed: u64,
    /// Record a trace sample every this many events.
    pub sample_every: u64,
}

impl SimConfig {
    /// Rates taken from the market's endowments, the regime in which the
    /// dynamics track the static solution.
    pub fn from_market(market: &MarketGraph, tokens: u64, seed: u64) -> Self {
        let rates = (0..market.node_count())
            .map(|i| to_f64(market.endowment(i)))
            .collect();
        SimConfig { rates, tokens, seed, sample_every: 100 }
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    /// tokens_given[i][j]: tokens i has granted to j. The receiving side
    /// reads the same counter, so conservation is structural.
    pub tokens_given: Vec<Vec<u64>>,
    pub clock: f64,
    pub events: u64,
}

impl SimState {
    pub fn new(n: usize) -> Self {
        SimState { tokens_given: vec![vec![0; n]; n], clock: 0.0, events: 0 }
    }

    pub fn total_given(&self, i: usize) -> u64 {
        self.tokens_given[i].iter().sum()
    }

    pub fn total_received(&self, i: usize) -> u64 {
        self.tokens_given.iter().map(|row| row[i]).sum()
    }

    /// Empirical exchange ratio; NaN until the node has given something.
    pub fn ratio(&self, i: usize) -> f64 {
        self.total_received(i) as f64 / self.total_given(i) as f64
    }
}

#[derive(Debug, Clone)]
pub struct SimSample {
    pub time: f64,
    pub event: u64,
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimTrace {
    pub samples: Vec<SimSample>,
    pub final_state: SimState,
}

/// True when j's generosity toward i beats the incumbent's: higher
/// received-per-given score, then fewer tokens already given, then lower
/// id (the iteration order, so "not better" keeps the incumbent).
fn beats(state: &SimState, i: usize, challenger: usize, incumbent: usize) -> bool {
    let g_cj = state.tokens_given[i][challenger]; // i -> challenger
    let g_ij = state.tokens_given[i][incumbent];
    let r_cj = state.tokens_given[challenger][i]; // challenger -> i
    let r_ij = state.tokens_given[incumbent][i];
    match (g_cj == 0, g_ij == 0) {
        (true, true) => false,                // both unexplored: keep lower id
        (true, false) => true,                // unexplored scores +infinity
        (false, true) => false,
        (false, false) => {
            let lhs = r_cj as u128 * g_ij as u128;
            let rhs = r_ij as u128 * g_cj as u128;
            lhs > rhs || (lhs == rhs && g_cj < g_ij)
        }
    }
}

/// Advances the state by one token event: picks the generating node by
/// rate, grants its token to the best-scoring neighbor, advances the clock
/// by a competing-exponential waiting time.
pub fn step(market: &MarketGraph, state: &mut SimState, config: &SimConfig, rng: &mut ChaCha8Rng) {
    let total_rate: f64 = config.rates.iter().sum();
    let wait = -(1.0 - rng.gen::<f64>()).ln() / total_rate;
    let mut pick = rng.gen::<f64>() * total_rate;
    let mut generator = 0;
    for (i, rate) in config.rates.iter().enumerate() {
        if pick < *rate {
            generator = i;
            break;
        }
        pick -= rate;
        generator = i;
    }
    let neighbors = market.neighbors(generator);
    debug_assert!(!neighbors.is_empty(), "generators must have neighbors");
    let mut best = neighbors[0];
    for &j in &neighbors[1..] {
        if beats(state, generator, j, best) {
            best = j;
        }
    }
    state.tokens_given[generator][best] += 1;
    state.clock += wait;
    state.events += 1;
}

pub fn simulate(market: &MarketGraph, config: &SimConfig) -> SimTrace {
    assert_eq!(config.rates.len(), market.node_count());
    assert!(config.rates.iter().all(|&r| r > 0.0), "rates must be positive");
    assert!(
        market.isolated_nodes().is_empty(),
        "every generating node needs a neighbor to grant to"
    );
    let n = market.node_count();
    let mut state = SimState::new(n);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut samples = Vec::new();
    let sample_every = config.sample_every.max(1);
    for _ in 0..config.tokens {
        step(market, &mut state, config, &mut rng);
        if state.events % sample_every == 0 {
            samples.push(SimSample {
                time: state.clock,
                event: state.events,
                ratios: (0..n).map(|i| state.ratio(i)).collect(),
            });
        }
    }
    if samples.last().map(|s| s.event) != Some(state.events) {
        samples.push(SimSample {
            time: state.clock,
            event: state.events,
            ratios: (0..n).map(|i| state.ratio(i)).collect(),
        });
    }
    SimTrace { samples, final_state: state }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// Relative deviation of each node's trailing-window mean ratio from
    /// the reference level value.
    pub deviations: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares the trailing quarter of the trace against the static solution
/// (solved with endowments equal to the simulation rates).
pub fn convergence_report(
    trace: &SimTrace,
    reference: Option<&LexSolution>,
    tolerance: f64,
) -> Result<ConvergenceReport> {
    let reference = reference.ok_or(Error::MissingReference)?;
    let count = trace.samples.len();
    if count == 0 {
        return Err(Error::MissingReference);
    }
    let window = &trace.samples[count - count.div_ceil(4)..];
    let n = reference.ratios.rho.len();
    let mut deviations = Vec::with_capacity(n);
    for i in 0..n {
        let target = to_f64(&reference.ratios.rho[i]);
        let mean = window.iter().map(|s| s.ratios[i]).sum::<f64>() / window.len() as f64;
        let dev = if target == 0.0 {
            if mean == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            ((mean - target) / target).abs()
        };
        deviations.push(dev);
    }
    let pass = deviations.iter().all(|d| d.is_finite() && *d <= tolerance);
    Ok(ConvergenceReport { deviations, tolerance, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::lexopt::solve_lex_optimal;

    #[test]
    fn two_node_tokens_flow_across_the_only_edge() {
        let m = fixtures::two_node();
        let config = SimConfig::from_market(&m, 1000, 42);
        let trace = simulate(&m, &config);
        let state = &trace.final_state;
        assert_eq!(state.events, 1000);
        assert_eq!(state.total_given(0) + state.total_given(1), 1000);
        // every token crosses the single edge
        assert_eq!(state.total_received(0), state.total_given(1));
    }

    #[test]
    fn determinism() {
        let m = fixtures::six_node();
        let config = SimConfig::from_market(&m, 5000, 7);
        let a = simulate(&m, &config);
        let b = simulate(&m, &config);
        assert_eq!(a.final_state.tokens_given, b.final_state.tokens_given);
        assert_eq!(a.final_state.clock.to_bits(), b.final_state.clock.to_bits());
        for (x, y) in a.samples.iter().zip(b.samples.iter()) {
            assert_eq!(x.time.to_bits(), y.time.to_bits());
            assert_eq!(x.ratios, y.ratios);
        }
    }

    #[test]
    fn token_conservation_throughout() {
        let m = fixtures::star();
        let config = SimConfig::from_market(&m, 2000, 3);
        let trace = simulate(&m, &config);
        let s = &trace.final_state;
        let given: u64 = (0..4).map(|i| s.total_given(i)).sum();
        let received: u64 = (0..4).map(|i| s.total_received(i)).sum();
        assert_eq!(given, s.events);
        assert_eq!(received, s.events);
    }

    #[test]
    fn unexplored_neighbors_are_tried_first() {
        let m = fixtures::star();
        let c = m.node_index("c").unwrap();
        let mut state = SimState::new(4);
        // center has already paid the lowest-id leaf once
        let first_leaf = *m.neighbors(c).first().unwrap();
        state.tokens_given[c][first_leaf] = 1;
        let mut best = m.neighbors(c)[0];
        for &j in &m.neighbors(c)[1..] {
            if beats(&state, c, j, best) {
                best = j;
            }
        }
        assert_ne!(best, first_leaf);
    }

    #[test]
    fn star_converges_to_levels() {
        let m = fixtures::star();
        let config = SimConfig::from_market(&m, 100_000, 11);
        let trace = simulate(&m, &config);
        let reference = solve_lex_optimal(&m).unwrap();
        let report = convergence_report(&trace, Some(&reference), 0.05).unwrap();
        assert!(report.pass, "deviations: {:?}", report.deviations);
    }

    #[test]
    fn missing_reference_is_an_error() {
        let m = fixtures::two_node();
        let config = SimConfig::from_market(&m, 100, 1);
        let trace = simulate(&m, &config);
        assert!(matches!(
            convergence_report(&trace, None, 0.05),
            Err(Error::MissingReference)
        ));
    }
}
