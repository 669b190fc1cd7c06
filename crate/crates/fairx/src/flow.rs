//! Integral max-flow on BigInt capacities, plus the bipartite
//! sender/receiver reduction shared by the max-min solver, the cross-level
//! transportation step, and the coalition feasibility tests.
//!
//! Rational capacities are scaled to integers by the LCM of their
//! denominators per call, so every flow value is exact.

use std::collections::VecDeque;

use num::bigint::BigInt;
use num::{Integer, One, Signed, Zero};

use crate::rational::Rational;

struct Arc {
    to: usize,
    cap: BigInt,
}

pub struct FlowNetwork {
    arcs: Vec<Arc>, // paired: arc 2e and its reverse 2e+1
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        Self { arcs: Vec::new(), adj: vec![Vec::new(); n] }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: BigInt) -> usize {
        let id = self.arcs.len();
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        self.arcs.push(Arc { to, cap });
        self.arcs.push(Arc { to: from, cap: BigInt::zero() });
        id
    }

    /// Flow pushed through the arc returned by `add_arc`.
    pub fn flow(&self, arc: usize) -> BigInt {
        self.arcs[arc + 1].cap.clone()
    }

    /// Edmonds-Karp; the augmentation count is bounded combinatorially, so
    /// arbitrary-precision capacities are fine.
    pub fn max_flow(&mut self, source: usize, sink: usize) -> BigInt {
        let mut total = BigInt::zero();
        loop {
            let mut prev: Vec<Option<usize>> = vec![None; self.adj.len()];
            let mut queue = VecDeque::new();
            queue.push_back(source);
            prev[source] = Some(usize::MAX);
            while let Some(u) = queue.pop_front() {
                if u == sink {
                    break;
                }
                for &a in &self.adj[u] {
                    let v = self.arcs[a].to;
                    if prev[v].is_none() && self.arcs[a].cap.is_positive() {
                        prev[v] = Some(a);
                        queue.push_back(v);
                    }
                }
            }
            if prev[sink].is_none() {
                return total;
            }
            let mut bottleneck: Option<BigInt> = None;
            let mut v = sink;
            while v != source {
                let a = prev[v].unwrap();
                let cap = &self.arcs[a].cap;
                bottleneck = Some(match bottleneck {
                    Some(b) if &b < cap => b,
                    _ => cap.clone(),
                });
                v = self.arcs[a ^ 1].to;
            }
            let push = bottleneck.unwrap();
            let mut v = sink;
            while v != source {
                let a = prev[v].unwrap();
                self.arcs[a].cap -= &push;
                self.arcs[a ^ 1].cap += &push;
                v = self.arcs[a ^ 1].to;
            }
            total += push;
        }
    }

    /// Nodes reachable from `source` in the residual network.
    pub fn residual_reachable(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        let mut queue = VecDeque::new();
        seen[source] = true;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let v = self.arcs[a].to;
                if !seen[v] && self.arcs[a].cap.is_positive() {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

/// Outcome of a sender/receiver saturation problem.
pub struct TransportOutcome {
    /// Flow per arc, in the original rational units.
    pub arc_flows: Vec<Rational>,
    /// True when every receiver demand was met exactly.
    pub saturated: bool,
    /// Shipped total per sender slot.
    pub shipped: Vec<Rational>,
    /// Receiver slots unreachable from the source in the residual network;
    /// a Hall-type deficiency witness when not saturated.
    pub deficient_receivers: Vec<usize>,
}

/// Ships up to `supplies[i]` from each sender along `arcs` (sender slot ->
/// receiver slot) to meet each `demands[j]` exactly. Arcs are uncapped
/// (bounded above by total supply plus one so they never enter a min cut).
pub fn saturate(
    supplies: &[Rational],
    demands: &[Rational],
    arcs: &[(usize, usize)],
) -> TransportOutcome {
    let mut denom_lcm = BigInt::one();
    for r in supplies.iter().chain(demands.iter()) {
        denom_lcm = denom_lcm.lcm(r.denom());
    }
    let scale = |r: &Rational| -> BigInt { (r * Rational::from_integer(denom_lcm.clone())).to_integer() };

    let ns = supplies.len();
    let nr = demands.len();
    let source = ns + nr;
    let sink = source + 1;
    let mut net = FlowNetwork::new(ns + nr + 2);
    let total_supply: BigInt = supplies.iter().map(|s| scale(s)).sum();
    let middle_cap = &total_supply + BigInt::one();
    for (i, s) in supplies.iter().enumerate() {
        net.add_arc(source, i, scale(s));
    }
    let mut arc_ids = Vec::with_capacity(arcs.len());
    for &(i, j) in arcs {
        arc_ids.push(net.add_arc(i, ns + j, middle_cap.clone()));
    }
    let mut demand_total = BigInt::zero();
    for (j, d) in demands.iter().enumerate() {
        let c = scale(d);
        demand_total += &c;
        net.add_arc(ns + j, sink, c);
    }
    let flow = net.max_flow(source, sink);
    let saturated = flow == demand_total;
    let unscale = |v: BigInt| Rational::new(v, denom_lcm.clone());
    let arc_flows: Vec<Rational> = arc_ids.iter().map(|&a| unscale(net.flow(a))).collect();
    let mut shipped = vec![Rational::zero(); ns];
    for (&(i, _), f) in arcs.iter().zip(arc_flows.iter()) {
        shipped[i] += f;
    }
    let deficient_receivers = if saturated {
        Vec::new()
    } else {
        let reach = net.residual_reachable(source);
        (0..nr).filter(|&j| !reach[ns + j]).collect()
    };
    TransportOutcome { arc_flows, saturated, shipped, deficient_receivers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    #[test]
    fn max_flow_small() {
        let mut net = FlowNetwork::new(4);
        net.add_arc(0, 1, BigInt::from(3));
        net.add_arc(0, 2, BigInt::from(2));
        net.add_arc(1, 2, BigInt::from(2));
        net.add_arc(1, 3, BigInt::from(2));
        net.add_arc(2, 3, BigInt::from(3));
        assert_eq!(net.max_flow(0, 3), BigInt::from(5));
    }

    #[test]
    fn saturate_balanced_transport() {
        // two senders, two receivers, crossing arcs
        let out = saturate(
            &[rat_int(2), rat_int(3)],
            &[rat(5, 2), rat(5, 2)],
            &[(0, 0), (0, 1), (1, 0), (1, 1)],
        );
        assert!(out.saturated);
        assert_eq!(out.shipped[0].clone() + out.shipped[1].clone(), rat_int(5));
    }

    #[test]
    fn saturate_reports_deficiency() {
        // single sender with supply 1, receiver demanding 2
        let out = saturate(&[rat_int(1)], &[rat_int(2)], &[(0, 0)]);
        assert!(!out.saturated);
        assert_eq!(out.deficient_receivers, vec![0]);
    }
}
