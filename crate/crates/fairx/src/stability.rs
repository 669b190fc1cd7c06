//! Brute-force coalitional stability analysis on small instances. A
//! coalition deviates by exchanging only among its own members on its
//! induced subgraph; members cut off from the rest of the coalition
//! receive nothing. Strong stability rules out deviations improving one
//! member without hurting any; weak stability (core membership) rules out
//! deviations improving every member strictly.

use std::collections::BTreeSet;

use num::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{Allocation, MarketGraph, ReceivedVector};
use crate::maxmin::{feasible_with_bounds, FeasibilityResult};
use crate::rational::{rat_int, Rational};

/// Largest node count checked without an explicit override; every subset
/// of the node set is enumerated.
pub const DEFAULT_COALITION_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityMode {
    Strong,
    Weak,
}

#[derive(Debug, Clone)]
pub struct Coalition {
    pub members: Vec<usize>,
    /// Intra-coalition edges of the induced subgraph.
    pub edges: Vec<(usize, usize)>,
}

impl Coalition {
    pub fn new(market: &MarketGraph, members: Vec<usize>) -> Result<Self> {
        let mut sorted = members;
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.is_empty() {
            return Err(Error::UnknownNode("empty coalition".into()));
        }
        for &i in &sorted {
            if i >= market.node_count() {
                return Err(Error::UnknownNode(i.to_string()));
            }
        }
        let set: BTreeSet<usize> = sorted.iter().copied().collect();
        let edges = market
            .edges()
            .iter()
            .copied()
            .filter(|&(a, b)| set.contains(&a) && set.contains(&b))
            .collect();
        Ok(Coalition { members: sorted, edges })
    }

    /// Members with at least one neighbor inside the coalition.
    fn connected_members(&self) -> Vec<usize> {
        let mut touched = BTreeSet::new();
        for &(a, b) in &self.edges {
            touched.insert(a);
            touched.insert(b);
        }
        self.members
            .iter()
            .copied()
            .filter(|i| touched.contains(i))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BlockingCoalition {
    pub coalition: Coalition,
    /// A deviation witnessing the block, feasible on the induced subgraph.
    pub allocation: Allocation,
    /// What each member receives under the deviation.
    pub received: Vec<(usize, Rational)>,
}

#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub mode: StabilityMode,
    pub blocking: Option<BlockingCoalition>,
}

fn witness_to_blocking(
    market: &MarketGraph,
    coalition: Coalition,
    allocation: Allocation,
) -> BlockingCoalition {
    // the witness covers only the induced subgraph, so tally directly
    let mut r = vec![Rational::zero(); market.node_count()];
    for (_, j, a) in allocation.iter() {
        r[j] += a;
    }
    let received = coalition
        .members
        .iter()
        .map(|&i| (i, r[i].clone()))
        .collect();
    BlockingCoalition { coalition, allocation, received }
}

/// Looks for a deviation of `coalition` giving every member at least the
/// baseline and at least one member strictly more. The coalition's
/// internal total is pinned to the endowment of its intra-connected
/// members, so a deviation exists iff that total strictly exceeds the
/// baseline total and the baseline is feasible as per-node lower bounds.
pub fn coalition_improvement(
    market: &MarketGraph,
    coalition: &Coalition,
    baseline: &ReceivedVector,
) -> Result<Option<Allocation>> {
    if baseline.r.len() != market.node_count() {
        return Err(Error::DimensionMismatch);
    }
    let connected = coalition.connected_members();
    // members isolated inside the coalition are stuck at zero
    for &i in &coalition.members {
        if !connected.contains(&i) && baseline.r[i].is_positive() {
            return Ok(None);
        }
    }
    if connected.is_empty() {
        return Ok(None);
    }
    let supply: Rational = connected.iter().map(|&i| market.endowment(i).clone()).sum();
    let baseline_total: Rational = coalition
        .members
        .iter()
        .map(|&i| baseline.r[i].clone())
        .sum();
    if supply <= baseline_total {
        return Ok(None);
    }
    let bounds: Vec<Rational> = connected.iter().map(|&i| baseline.r[i].clone()).collect();
    match feasible_with_bounds(market, &connected, &bounds) {
        FeasibilityResult::Feasible { witness } => Ok(Some(witness)),
        FeasibilityResult::Infeasible { .. } => Ok(None),
    }
}

/// Largest t such that every intra-connected member can receive its
/// baseline plus t on the induced subgraph, or None when no positive t
/// works. Same cut-driven descent as the max-min solver, over the shifted
/// demands.
fn max_uniform_slack(
    market: &MarketGraph,
    connected: &[usize],
    baseline: &ReceivedVector,
) -> Option<(Rational, Allocation)> {
    let n = connected.len();
    let supply: Rational = connected.iter().map(|&i| market.endowment(i).clone()).sum();
    let base: Rational = connected.iter().map(|&i| baseline.r[i].clone()).sum();
    let mut t = (supply - base) / rat_int(n as i64);
    let cap = 4 * n + 8;
    for _ in 0..cap {
        if !t.is_positive() {
            return None;
        }
        let bounds: Vec<Rational> = connected
            .iter()
            .map(|&i| &baseline.r[i] + &t)
            .collect();
        match feasible_with_bounds(market, connected, &bounds) {
            FeasibilityResult::Feasible { witness } => return Some((t, witness)),
            FeasibilityResult::Infeasible { cut_certificate } => {
                let sub: BTreeSet<usize> = connected.iter().copied().collect();
                let mut suppliers = Rational::zero();
                for &i in connected {
                    if market
                        .neighbors(i)
                        .iter()
                        .any(|j| cut_certificate.contains(j) && sub.contains(j))
                    {
                        suppliers += market.endowment(i);
                    }
                }
                let cut_base: Rational = cut_certificate
                    .iter()
                    .map(|&j| baseline.r[j].clone())
                    .sum();
                let next = (suppliers - cut_base) / rat_int(cut_certificate.len() as i64);
                debug_assert!(next < t);
                t = next;
            }
        }
    }
    unreachable!("uniform-slack search failed to converge");
}

/// All nonempty subsets of 0..n by increasing size, then lexicographic.
fn for_each_subset<F>(n: usize, mut f: F) -> Result<Option<StabilityVerdict>>
where
    F: FnMut(&[usize]) -> Result<Option<StabilityVerdict>>,
{
    let mut current = Vec::new();
    for size in 1..=n {
        current.clear();
        current.extend(0..size);
        loop {
            if let Some(v) = f(&current)? {
                return Ok(Some(v));
            }
            // advance to the next combination of `size` out of n
            let mut idx = size;
            loop {
                if idx == 0 {
                    break;
                }
                idx -= 1;
                if current[idx] < n - (size - idx) {
                    current[idx] += 1;
                    for k in (idx + 1)..size {
                        current[k] = current[k - 1] + 1;
                    }
                    break;
                }
                if idx == 0 {
                    current.clear();
                    break;
                }
            }
            if current.is_empty() {
                break;
            }
        }
    }
    Ok(None)
}

fn check_cap(market: &MarketGraph, cap: usize) -> Result<()> {
    if market.node_count() > cap {
        return Err(Error::InstanceTooLarge { nodes: market.node_count(), cap });
    }
    Ok(())
}

pub fn strong_stability_check(
    market: &MarketGraph,
    baseline: &ReceivedVector,
) -> Result<StabilityVerdict> {
    strong_stability_check_with_cap(market, baseline, DEFAULT_COALITION_CAP)
}

pub fn strong_stability_check_with_cap(
    market: &MarketGraph,
    baseline: &ReceivedVector,
    cap: usize,
) -> Result<StabilityVerdict> {
    check_cap(market, cap)?;
    let found = for_each_subset(market.node_count(), |members| {
        let coalition = Coalition::new(market, members.to_vec())?;
        if let Some(witness) = coalition_improvement(market, &coalition, baseline)? {
            let blocking = witness_to_blocking(market, coalition, witness);
            return Ok(Some(StabilityVerdict {
                stable: false,
                mode: StabilityMode::Strong,
                blocking: Some(blocking),
            }));
        }
        Ok(None)
    })?;
    Ok(found.unwrap_or(StabilityVerdict {
        stable: true,
        mode: StabilityMode::Strong,
        blocking: None,
    }))
}

pub fn weak_stability_check(
    market: &MarketGraph,
    baseline: &ReceivedVector,
) -> Result<StabilityVerdict> {
    weak_stability_check_with_cap(market, baseline, DEFAULT_COALITION_CAP)
}

pub fn weak_stability_check_with_cap(
    market: &MarketGraph,
    baseline: &ReceivedVector,
    cap: usize,
) -> Result<StabilityVerdict> {
    check_cap(market, cap)?;
    if baseline.r.len() != market.node_count() {
        return Err(Error::DimensionMismatch);
    }
    let found = for_each_subset(market.node_count(), |members| {
        let coalition = Coalition::new(market, members.to_vec())?;
        let connected = coalition.connected_members();
        // a strict improvement is impossible for a member stuck at zero
        if connected.len() != coalition.members.len() {
            return Ok(None);
        }
        if let Some((_, witness)) = max_uniform_slack(market, &connected, baseline) {
            let blocking = witness_to_blocking(market, coalition, witness);
            return Ok(Some(StabilityVerdict {
                stable: false,
                mode: StabilityMode::Weak,
                blocking: Some(blocking),
            }));
        }
        Ok(None)
    })?;
    Ok(found.unwrap_or(StabilityVerdict {
        stable: true,
        mode: StabilityMode::Weak,
        blocking: None,
    }))
}
