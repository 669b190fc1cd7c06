//! JSON schemas for markets, allocations, solutions and received vectors,
//! plus the CSV trace format. All rationals travel as strings ("p/q" or
//! "p") so values round-trip exactly.

use std::collections::BTreeMap;

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexopt::LexSolution;
use crate::market::{Allocation, MarketGraph, ReceivedVector};
use crate::rational::{parse_rational, render_rational};
use crate::sim::SimTrace;

#[derive(Debug, Serialize, Deserialize)]
pub struct MarketFile {
    pub nodes: Vec<NodeFile>,
    pub edges: Vec<(String, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NodeFile {
    pub id: String,
    pub endowment: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AllocationFile {
    pub flows: Vec<FlowFile>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FlowFile {
    pub from: String,
    pub to: String,
    pub amount: String,
}

/// Solver output: per-node results plus the level structure. Node keys are
/// ids; sets are lists of ids.
#[derive(Debug, Serialize, Deserialize)]
pub struct SolutionFile {
    pub received: BTreeMap<String, String>,
    pub ratios: BTreeMap<String, String>,
    pub levels: Vec<String>,
    pub level_sets: Vec<Vec<String>>,
    pub groups: Vec<Vec<String>>,
    pub allocation: AllocationFile,
}

pub fn market_from_json(text: &str) -> std::result::Result<MarketGraph, Vec<Error>> {
    let file: MarketFile =
        serde_json::from_str(text).map_err(|e| vec![Error::AllocationMismatch(e.to_string())])?;
    let mut nodes = Vec::new();
    for n in &file.nodes {
        let endowment = parse_rational(&n.endowment).map_err(|e| vec![e])?;
        nodes.push((n.id.clone(), endowment));
    }
    crate::market::validate_market(&nodes, &file.edges)
}

pub fn market_to_json(market: &MarketGraph) -> String {
    let file = MarketFile {
        nodes: (0..market.node_count())
            .map(|i| NodeFile {
                id: market.id(i).to_string(),
                endowment: render_rational(market.endowment(i)),
            })
            .collect(),
        edges: market
            .edges()
            .iter()
            .map(|&(a, b)| (market.id(a).to_string(), market.id(b).to_string()))
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("market serializes")
}

pub fn allocation_from_json(market: &MarketGraph, text: &str) -> Result<Allocation> {
    let file: AllocationFile =
        serde_json::from_str(text).map_err(|e| Error::AllocationMismatch(e.to_string()))?;
    let mut alloc = Allocation::new();
    for f in &file.flows {
        let i = market.node_index(&f.from)?;
        let j = market.node_index(&f.to)?;
        let amount = parse_rational(&f.amount)?;
        alloc.add(i, j, &amount);
    }
    Ok(alloc)
}

pub fn allocation_to_file(market: &MarketGraph, alloc: &Allocation) -> AllocationFile {
    AllocationFile {
        flows: alloc
            .iter()
            .filter(|(_, _, a)| !a.is_zero())
            .map(|(i, j, a)| FlowFile {
                from: market.id(i).to_string(),
                to: market.id(j).to_string(),
                amount: render_rational(a),
            })
            .collect(),
    }
}

pub fn allocation_to_json(market: &MarketGraph, alloc: &Allocation) -> String {
    serde_json::to_string_pretty(&allocation_to_file(market, alloc)).expect("allocation serializes")
}

pub fn solution_to_json(market: &MarketGraph, sol: &LexSolution) -> String {
    let ids = |set: &[usize]| -> Vec<String> {
        set.iter().map(|&i| market.id(i).to_string()).collect()
    };
    let file = SolutionFile {
        received: (0..market.node_count())
            .map(|i| (market.id(i).to_string(), render_rational(&sol.received.r[i])))
            .collect(),
        ratios: (0..market.node_count())
            .map(|i| (market.id(i).to_string(), render_rational(&sol.ratios.rho[i])))
            .collect(),
        levels: sol.decomposition.levels.iter().map(render_rational).collect(),
        level_sets: sol.decomposition.level_sets.iter().map(|s| ids(s)).collect(),
        groups: sol.decomposition.groups.iter().map(|g| ids(g)).collect(),
        allocation: allocation_to_file(market, &sol.allocation),
    };
    serde_json::to_string_pretty(&file).expect("solution serializes")
}

/// Received vector as a bare id -> amount map; missing ids mean zero.
pub fn received_from_json(market: &MarketGraph, text: &str) -> Result<ReceivedVector> {
    let map: BTreeMap<String, String> =
        serde_json::from_str(text).map_err(|e| Error::AllocationMismatch(e.to_string()))?;
    let mut r = vec![crate::rational::Rational::zero(); market.node_count()];
    for (id, amount) in &map {
        let i = market.node_index(id)?;
        r[i] = parse_rational(amount)?;
    }
    Ok(ReceivedVector { r })
}

pub fn received_to_json(market: &MarketGraph, received: &ReceivedVector) -> String {
    let map: BTreeMap<String, String> = (0..market.node_count())
        .map(|i| (market.id(i).to_string(), render_rational(&received.r[i])))
        .collect();
    serde_json::to_string_pretty(&map).expect("received vector serializes")
}

/// `time,node,ratio` rows, one per node per sample.
pub fn trace_to_csv(market: &MarketGraph, trace: &SimTrace) -> String {
    let mut out = String::from("time,node,ratio\n");
    for sample in &trace.samples {
        for (i, ratio) in sample.ratios.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", sample.time, market.id(i), ratio));
        }
    }
    out
}
