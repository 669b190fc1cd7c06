//! Certificate checker for third-party allocations: verifies the level
//! pairing structure, neighborhood identities, received-sum balances and
//! group flow isolation that characterize lex-optimal allocations,
//! re-deriving everything from the (market, allocation) pair alone.

use std::collections::BTreeSet;

use num::{One, Zero};
use serde::Serialize;

use crate::error::Result;
use crate::lexopt::LexSolution;
use crate::market::{
    in_out, level_decomposition, ratio_vector, received_vector, Allocation, LevelDecomposition,
    MarketGraph,
};
use crate::rational::{render_rational, Rational};

/// Pass/fail with a human-readable counterexample on failure.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Verdict {
    fn pass() -> Self {
        Verdict { pass: true, detail: None }
    }

    fn fail(detail: String) -> Self {
        Verdict { pass: false, detail: Some(detail) }
    }
}

/// Per-property verdicts; all passes on a market with more than one level
/// certify lex-optimality of the allocation's ratio vector.
#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    /// Every node's recipients share one level; non-recipients sit at or
    /// above it.
    pub served_levels: Verdict,
    /// Each outer level set is independent in its peeled subgraph.
    pub independence: Verdict,
    /// The top set of each pair is exactly the peeled neighborhood of the
    /// bottom set.
    pub neighborhood_pairing: Verdict,
    /// Paired levels multiply to one (a single level must equal one).
    pub level_product: Verdict,
    /// Each bottom set receives exactly the endowment of its top set.
    pub received_balance: Verdict,
    /// No flow crosses any group boundary.
    pub flow_isolation: Verdict,
}

impl StructureReport {
    pub fn all_pass(&self) -> bool {
        self.served_levels.pass
            && self.independence.pass
            && self.neighborhood_pairing.pass
            && self.level_product.pass
            && self.received_balance.pass
            && self.flow_isolation.pass
    }
}

/// Checks that each node serves only one level and withholds only from
/// levels at least that high.
pub fn verify_served_levels(market: &MarketGraph, allocation: &Allocation) -> Result<Verdict> {
    let received = received_vector(market, allocation)?;
    let ratios = ratio_vector(market, &received);
    for i in 0..market.node_count() {
        let mut served_level: Option<(&Rational, usize)> = None;
        for &j in market.neighbors(i) {
            if !allocation.amount(i, j).is_zero() {
                match served_level {
                    None => served_level = Some((&ratios.rho[j], j)),
                    Some((l, j0)) if l != &ratios.rho[j] => {
                        return Ok(Verdict::fail(format!(
                            "node {} serves {} (ratio {}) and {} (ratio {}) on different levels",
                            market.id(i),
                            market.id(j0),
                            render_rational(l),
                            market.id(j),
                            render_rational(&ratios.rho[j]),
                        )));
                    }
                    _ => {}
                }
            }
        }
        if let Some((served, _)) = served_level {
            for &j in market.neighbors(i) {
                if allocation.amount(i, j).is_zero() && &ratios.rho[j] < served {
                    return Ok(Verdict::fail(format!(
                        "node {} withholds from {} (ratio {}) below its served level {}",
                        market.id(i),
                        market.id(j),
                        render_rational(&ratios.rho[j]),
                        render_rational(served),
                    )));
                }
            }
        }
    }
    Ok(Verdict::pass())
}

fn set_ids(market: &MarketGraph, set: &[usize]) -> String {
    let names: Vec<&str> = set.iter().map(|&i| market.id(i)).collect();
    format!("{{{}}}", names.join(","))
}

/// Full structural check of a (market, allocation) pair; everything is
/// re-derived from the allocation's ratio vector, nothing is trusted.
pub fn verify_structure(market: &MarketGraph, allocation: &Allocation) -> Result<StructureReport> {
    let received = received_vector(market, allocation)?;
    let ratios = ratio_vector(market, &received);
    let decomp = level_decomposition(market, &ratios);
    let k = decomp.level_count();

    let served_levels = verify_served_levels(market, allocation)?;

    let mut independence = Verdict::pass();
    let mut neighborhood_pairing = Verdict::pass();
    let mut level_product = Verdict::pass();
    let mut received_balance = Verdict::pass();

    // paired checks on outer level pairs; the middle level of an odd
    // decomposition (or a single level) only needs its product check
    for step in 0..k.div_ceil(2) {
        let low = &decomp.level_sets[step];
        let high = &decomp.level_sets[k - step - 1];
        let product = &decomp.levels[step] * &decomp.levels[k - step - 1];
        if level_product.pass && !product.is_one() {
            level_product = Verdict::fail(format!(
                "levels {} and {} multiply to {}",
                render_rational(&decomp.levels[step]),
                render_rational(&decomp.levels[k - step - 1]),
                render_rational(&product),
            ));
        }
        if step == k - step - 1 {
            continue;
        }
        let q: BTreeSet<usize> = decomp.peeled[step].iter().copied().collect();
        if independence.pass {
            if let Some(&(a, b)) = market
                .edges()
                .iter()
                .find(|&&(a, b)| low.contains(&a) && low.contains(&b))
            {
                independence = Verdict::fail(format!(
                    "edge {{{},{}}} joins two nodes of bottom set {}",
                    market.id(a),
                    market.id(b),
                    set_ids(market, low),
                ));
            }
        }
        if neighborhood_pairing.pass {
            let mut hood = BTreeSet::new();
            for &i in low {
                for &j in market.neighbors(i) {
                    if q.contains(&j) && !low.contains(&j) {
                        hood.insert(j);
                    }
                }
            }
            let high_set: BTreeSet<usize> = high.iter().copied().collect();
            if hood != high_set {
                neighborhood_pairing = Verdict::fail(format!(
                    "peeled neighborhood of {} is {} but the paired top set is {}",
                    set_ids(market, low),
                    set_ids(market, &hood.iter().copied().collect::<Vec<_>>()),
                    set_ids(market, high),
                ));
            }
        }
        if received_balance.pass {
            let got: Rational = low.iter().map(|&i| received.r[i].clone()).sum();
            let supply: Rational = high.iter().map(|&i| market.endowment(i).clone()).sum();
            if got != supply {
                received_balance = Verdict::fail(format!(
                    "bottom set {} receives {} but its top set holds {}",
                    set_ids(market, low),
                    render_rational(&got),
                    render_rational(&supply),
                ));
            }
        }
    }

    let mut flow_isolation = Verdict::pass();
    for (g, members) in decomp.groups.iter().enumerate() {
        let set: BTreeSet<usize> = members.iter().copied().collect();
        let flows = in_out(market, allocation, &set)?;
        if !flows.in_flow.is_zero() || !flows.out_flow.is_zero() {
            flow_isolation = Verdict::fail(format!(
                "group {} {} has boundary flow in {} out {}",
                g + 1,
                set_ids(market, members),
                render_rational(&flows.in_flow),
                render_rational(&flows.out_flow),
            ));
            break;
        }
    }

    Ok(StructureReport {
        served_levels,
        independence,
        neighborhood_pairing,
        level_product,
        received_balance,
        flow_isolation,
    })
}

/// A group with the level values of its two member sets (equal for a
/// middle group).
#[derive(Debug, Clone)]
pub struct GroupInfo {
    pub members: Vec<usize>,
    pub low_level: Rational,
    pub high_level: Rational,
}

/// Groups of the decomposition with their level annotations; panics if the
/// groups fail to partition the non-isolated nodes (they cannot, by
/// construction).
pub fn groups(market: &MarketGraph, decomp: &LevelDecomposition) -> Vec<GroupInfo> {
    let k = decomp.level_count();
    let mut out = Vec::new();
    for (g, members) in decomp.groups.iter().enumerate() {
        let low_level = decomp.levels[g].clone();
        let high_level = decomp.levels[k - g - 1].clone();
        out.push(GroupInfo { members: members.clone(), low_level, high_level });
    }
    let mut seen = BTreeSet::new();
    for info in &out {
        for &i in &info.members {
            assert!(seen.insert(i), "groups must be pairwise disjoint");
        }
    }
    let active: BTreeSet<usize> = market.non_isolated_nodes().into_iter().collect();
    assert_eq!(seen, active, "groups must cover every non-isolated node");
    out
}

/// Edges that carry no flow in either direction and join different groups;
/// they can be deleted without changing the solution.
pub fn redundant_links(market: &MarketGraph, lex: &LexSolution) -> Vec<(usize, usize)> {
    let decomp = &lex.decomposition;
    let k = decomp.level_count();
    let group_of = |i: usize| -> Option<usize> {
        decomp.node_level.get(&i).map(|&m| (m - 1).min(k - m))
    };
    market
        .edges()
        .iter()
        .copied()
        .filter(|&(a, b)| {
            lex.allocation.amount(a, b).is_zero()
                && lex.allocation.amount(b, a).is_zero()
                && group_of(a) != group_of(b)
        })
        .collect()
}
