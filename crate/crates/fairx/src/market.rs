//! Market model: graph, endowments, allocations, received/ratio vectors,
//! flow accounting over node subsets, lexicographic comparison, and the
//! level decomposition of a ratio vector.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Undirected exchange graph with per-node positive endowments.
///
/// Node ids are opaque strings externally and dense indices internally;
/// every public output reports the original ids.
#[derive(Debug, Clone)]
pub struct MarketGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    endowments: Vec<Rational>,
    edges: Vec<(usize, usize)>, // i < j
    adjacency: Vec<Vec<usize>>,
}

impl MarketGraph {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn node_index(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn endowment(&self, node: usize) -> &Rational {
        &self.endowments[node]
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn is_isolated(&self, node: usize) -> bool {
        self.adjacency[node].is_empty()
    }

    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.is_isolated(i)).collect()
    }

    pub fn non_isolated_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| !self.is_isolated(i)).collect()
    }

    pub fn total_endowment(&self) -> Rational {
        self.non_isolated_nodes()
            .iter()
            .map(|&i| self.endowments[i].clone())
            .sum()
    }

    /// Neighbors of `set` that lie outside `set`.
    pub fn outside_neighbors(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &i in set {
            for &j in self.neighbors(i) {
                if !set.contains(&j) {
                    out.insert(j);
                }
            }
        }
        out
    }
}

/// Per-directed-edge nonnegative amounts. A valid allocation ships each
/// non-isolated node's full endowment; `conservation_check` also accepts
/// raw (possibly corrupted) amounts so it can report violations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Allocation {
    amounts: BTreeMap<(usize, usize), Rational>,
}

impl Allocation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, from: usize, to: usize, amount: Rational) {
        if amount.is_zero() {
            self.amounts.remove(&(from, to));
        } else {
            self.amounts.insert((from, to), amount);
        }
    }

    pub fn add(&mut self, from: usize, to: usize, amount: &Rational) {
        if amount.is_zero() {
            return;
        }
        let entry = self
            .amounts
            .entry((from, to))
            .or_insert_with(Rational::zero);
        *entry += amount;
        if entry.is_zero() {
            self.amounts.remove(&(from, to));
        }
    }

    pub fn amount(&self, from: usize, to: usize) -> Rational {
        self.amounts
            .get(&(from, to))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        self.amounts.iter().map(|(&(i, j), a)| (i, j, a))
    }

    pub fn sent_by(&self, node: usize) -> Rational {
        self.amounts
            .range((node, 0)..(node + 1, 0))
            .map(|(_, a)| a.clone())
            .sum()
    }

    /// Recipients of `node` with positive flow.
    pub fn recipients(&self, node: usize) -> Vec<usize> {
        self.amounts
            .range((node, 0)..(node + 1, 0))
            .map(|(&(_, j), _)| j)
            .collect()
    }

    /// Checks the allocation against the market: flows only on existing
    /// edges, nonnegative, and full endowment shipped by every non-isolated
    /// node.
    pub fn validate(&self, market: &MarketGraph) -> Result<()> {
        for (i, j, a) in self.iter() {
            if i >= market.node_count() || j >= market.node_count() {
                return Err(Error::AllocationMismatch(format!(
                    "flow references node index {} outside the market",
                    i.max(j)
                )));
            }
            if !market.has_edge(i, j) {
                return Err(Error::AllocationMismatch(format!(
                    "flow on absent edge {} -> {}",
                    market.id(i),
                    market.id(j)
                )));
            }
            if a.is_negative() {
                return Err(Error::AllocationMismatch(format!(
                    "negative flow on {} -> {}",
                    market.id(i),
                    market.id(j)
                )));
            }
        }
        for i in market.non_isolated_nodes() {
            if &self.sent_by(i) != market.endowment(i) {
                return Err(Error::AllocationMismatch(format!(
                    "node {} ships {} instead of its endowment {}",
                    market.id(i),
                    self.sent_by(i),
                    market.endowment(i)
                )));
            }
        }
        Ok(())
    }
}

/// Received resource per node; isolated nodes carry zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceivedVector {
    pub r: Vec<Rational>,
}

/// Exchange ratio per node, r_i / D_i; zero for isolated nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioVector {
    pub rho: Vec<Rational>,
}

/// In/out flow totals for a node subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSummary {
    pub in_flow: Rational,
    pub out_flow: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexOrdering {
    Less,
    Equal,
    Greater,
}

/// Distinct sorted ratio levels with their node sets, peeled subsets and
/// groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelDecomposition {
    /// l_1 < ... < l_K over non-isolated nodes.
    pub levels: Vec<Rational>,
    /// level_sets[m] holds the nodes at level m+1.
    pub level_sets: Vec<Vec<usize>>,
    /// node -> level index (1-based); isolated nodes absent.
    pub node_level: BTreeMap<usize, usize>,
    /// peeled[k] is the node set remaining after removing the k outermost
    /// level pairs; peeled[0] is the full non-isolated set.
    pub peeled: Vec<Vec<usize>>,
    /// groups[k] pairs the (k+1)-th lowest and highest level sets; a single
    /// middle group remains when the level count is odd.
    pub groups: Vec<Vec<usize>>,
}

impl LevelDecomposition {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_of(&self, node: usize) -> Option<&Rational> {
        self.node_level.get(&node).map(|&k| &self.levels[k - 1])
    }
}

/// Validates raw nodes and edges into a `MarketGraph`, collecting every
/// violation instead of stopping at the first.
pub fn validate_market(
    nodes: &[(String, Rational)],
    edges: &[(String, String)],
) -> std::result::Result<MarketGraph, Vec<Error>> {
    let mut errors = Vec::new();
    let mut ids = Vec::new();
    let mut index = HashMap::new();
    let mut endowments = Vec::new();
    for (id, endowment) in nodes {
        if index.contains_key(id) {
            errors.push(Error::DuplicateNode(id.clone()));
            continue;
        }
        if !endowment.is_positive() {
            errors.push(Error::NonPositiveEndowment(id.clone()));
        }
        index.insert(id.clone(), ids.len());
        ids.push(id.clone());
        endowments.push(endowment.clone());
    }
    let mut seen = BTreeSet::new();
    let mut edge_list = Vec::new();
    for (a, b) in edges {
        let ia = match index.get(a) {
            Some(&i) => i,
            None => {
                errors.push(Error::UnknownNode(a.clone()));
                continue;
            }
        };
        let ib = match index.get(b) {
            Some(&i) => i,
            None => {
                errors.push(Error::UnknownNode(b.clone()));
                continue;
            }
        };
        if ia == ib {
            errors.push(Error::SelfLoop(a.clone()));
            continue;
        }
        let key = (ia.min(ib), ia.max(ib));
        if !seen.insert(key) {
            errors.push(Error::DuplicateEdge(a.clone(), b.clone()));
            continue;
        }
        edge_list.push(key);
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    edge_list.sort_unstable();
    let mut adjacency = vec![Vec::new(); ids.len()];
    for &(i, j) in &edge_list {
        adjacency[i].push(j);
        adjacency[j].push(i);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    Ok(MarketGraph {
        ids,
        index,
        endowments,
        edges: edge_list,
        adjacency,
    })
}

/// r_i = sum over neighbors j of d_ji.
pub fn received_vector(market: &MarketGraph, allocation: &Allocation) -> Result<ReceivedVector> {
    allocation.validate(market)?;
    let mut r = vec![Rational::zero(); market.node_count()];
    for (i, j, a) in allocation.iter() {
        r[j] += a;
        let _ = i;
    }
    Ok(ReceivedVector { r })
}

/// rho_i = r_i / D_i; isolated nodes get zero.
pub fn ratio_vector(market: &MarketGraph, received: &ReceivedVector) -> RatioVector {
    let rho = (0..market.node_count())
        .map(|i| {
            if market.is_isolated(i) {
                Rational::zero()
            } else {
                &received.r[i] / market.endowment(i)
            }
        })
        .collect();
    RatioVector { rho }
}

/// Exact In(S) and Out(S) across the boundary of `set`.
pub fn in_out(
    market: &MarketGraph,
    allocation: &Allocation,
    set: &BTreeSet<usize>,
) -> Result<FlowSummary> {
    for &i in set {
        if i >= market.node_count() {
            return Err(Error::UnknownNode(i.to_string()));
        }
    }
    let mut in_flow = Rational::zero();
    let mut out_flow = Rational::zero();
    for (i, j, a) in allocation.iter() {
        match (set.contains(&i), set.contains(&j)) {
            (true, false) => out_flow += a,
            (false, true) => in_flow += a,
            _ => {}
        }
    }
    Ok(FlowSummary { in_flow, out_flow })
}

/// A reported conservation violation: both sides of the failed identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConservationViolation {
    pub identity: &'static str,
    pub lhs: Rational,
    pub rhs: Rational,
}

/// Checks sum_S r + Out(S) = sum_S D + In(S), Out(S) <= sum_S D, and
/// In(S) <= sum_S r for the given subset. Violations signal a corrupted
/// allocation.
pub fn conservation_check(
    market: &MarketGraph,
    allocation: &Allocation,
    set: &BTreeSet<usize>,
) -> Result<std::result::Result<(), ConservationViolation>> {
    let flows = in_out(market, allocation, set)?;
    let mut r = vec![Rational::zero(); market.node_count()];
    for (_, j, a) in allocation.iter() {
        r[j] += a;
    }
    let sum_r: Rational = set.iter().map(|&i| r[i].clone()).sum();
    // isolated nodes ship nothing, so they contribute no supply
    let sum_d: Rational = set
        .iter()
        .filter(|&&i| !market.is_isolated(i))
        .map(|&i| market.endowment(i).clone())
        .sum();
    let lhs = &sum_r + &flows.out_flow;
    let rhs = &sum_d + &flows.in_flow;
    if lhs != rhs {
        return Ok(Err(ConservationViolation {
            identity: "sum_S r + Out(S) = sum_S D + In(S)",
            lhs,
            rhs,
        }));
    }
    if flows.out_flow > sum_d {
        return Ok(Err(ConservationViolation {
            identity: "Out(S) <= sum_S D",
            lhs: flows.out_flow,
            rhs: sum_d,
        }));
    }
    if flows.in_flow > sum_r {
        return Ok(Err(ConservationViolation {
            identity: "In(S) <= sum_S r",
            lhs: flows.in_flow,
            rhs: sum_r,
        }));
    }
    Ok(Ok(()))
}

/// Compares two ratio vectors by ascending sorted order; the first
/// component where the sorted copies differ decides.
pub fn lex_compare(x: &RatioVector, y: &RatioVector) -> Result<LexOrdering> {
    if x.rho.len() != y.rho.len() {
        return Err(Error::DimensionMismatch);
    }
    let mut xs = x.rho.clone();
    let mut ys = y.rho.clone();
    xs.sort();
    ys.sort();
    for (a, b) in xs.iter().zip(ys.iter()) {
        match a.cmp(b) {
            Ordering::Less => return Ok(LexOrdering::Less),
            Ordering::Greater => return Ok(LexOrdering::Greater),
            Ordering::Equal => {}
        }
    }
    Ok(LexOrdering::Equal)
}

/// Builds the level decomposition of a ratio vector over the non-isolated
/// nodes. Levels are compared by exact rational equality.
pub fn level_decomposition(market: &MarketGraph, ratios: &RatioVector) -> LevelDecomposition {
    let active = market.non_isolated_nodes();
    let mut levels: Vec<Rational> = Vec::new();
    for &i in &active {
        if !levels.contains(&ratios.rho[i]) {
            levels.push(ratios.rho[i].clone());
        }
    }
    levels.sort();
    let k = levels.len();
    let mut level_sets = vec![Vec::new(); k];
    let mut node_level = BTreeMap::new();
    for &i in &active {
        let m = levels.iter().position(|l| *l == ratios.rho[i]).unwrap();
        level_sets[m].push(i);
        node_level.insert(i, m + 1);
    }
    let mut peeled = Vec::new();
    let half = k.div_ceil(2);
    for step in 0..half {
        let q: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&i| {
                let m = node_level[&i];
                m > step && m <= k - step
            })
            .collect();
        peeled.push(q);
    }
    let mut groups = Vec::new();
    for m in 0..k / 2 {
        let mut g = level_sets[m].clone();
        g.extend(level_sets[k - m - 1].iter().copied());
        g.sort_unstable();
        groups.push(g);
    }
    if k % 2 == 1 {
        groups.push(level_sets[k / 2].clone());
    }
    LevelDecomposition {
        levels,
        level_sets,
        node_level,
        peeled,
        groups,
    }
}

/// Convenience builder used by tests and examples.
pub fn market_from_ints(nodes: &[(&str, i64)], edges: &[(&str, &str)]) -> MarketGraph {
    let node_list: Vec<(String, Rational)> = nodes
        .iter()
        .map(|&(id, d)| (id.to_string(), crate::rational::rat_int(d)))
        .collect();
    let edge_list: Vec<(String, String)> = edges
        .iter()
        .map(|&(a, b)| (a.to_string(), b.to_string()))
        .collect();
    validate_market(&node_list, &edge_list).expect("fixture market must validate")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn two_node() -> MarketGraph {
        market_from_ints(&[("1", 10), ("2", 30)], &[("1", "2")])
    }

    fn star() -> MarketGraph {
        market_from_ints(
            &[("c", 1), ("a", 1), ("b", 1), ("d", 1)],
            &[("c", "a"), ("c", "b"), ("c", "d")],
        )
    }

    fn star_allocation(m: &MarketGraph) -> Allocation {
        let c = m.node_index("c").unwrap();
        let mut alloc = Allocation::new();
        for leaf in ["a", "b", "d"] {
            let l = m.node_index(leaf).unwrap();
            alloc.set(l, c, rat_int(1));
            alloc.set(c, l, rat(1, 3));
        }
        alloc
    }

    #[test]
    fn validate_minimal_market() {
        let m = two_node();
        assert_eq!(m.node_count(), 2);
        assert_eq!(m.edge_count(), 1);
    }

    #[test]
    fn validate_rejects_zero_endowment() {
        let errs = validate_market(
            &[("1".into(), rat_int(0)), ("2".into(), rat_int(1))],
            &[("1".into(), "2".into())],
        )
        .unwrap_err();
        assert_eq!(errs, vec![Error::NonPositiveEndowment("1".into())]);
    }

    #[test]
    fn validate_rejects_self_loop_and_duplicates() {
        let errs = validate_market(
            &[
                ("1".into(), rat_int(1)),
                ("1".into(), rat_int(1)),
                ("2".into(), rat_int(1)),
            ],
            &[
                ("1".into(), "1".into()),
                ("1".into(), "2".into()),
                ("2".into(), "1".into()),
            ],
        )
        .unwrap_err();
        assert!(errs.contains(&Error::DuplicateNode("1".into())));
        assert!(errs.contains(&Error::SelfLoop("1".into())));
        assert!(errs.contains(&Error::DuplicateEdge("2".into(), "1".into())));
    }

    #[test]
    fn isolated_node_is_permitted_with_zero_ratio() {
        let m = market_from_ints(&[("1", 1), ("2", 1), ("3", 1)], &[("1", "2")]);
        assert_eq!(m.isolated_nodes(), vec![2]);
        let mut alloc = Allocation::new();
        alloc.set(0, 1, rat_int(1));
        alloc.set(1, 0, rat_int(1));
        let r = received_vector(&m, &alloc).unwrap();
        let rho = ratio_vector(&m, &r);
        assert_eq!(rho.rho[2], Rational::zero());
    }

    #[test]
    fn received_two_node() {
        let m = two_node();
        let mut alloc = Allocation::new();
        alloc.set(0, 1, rat_int(10));
        alloc.set(1, 0, rat_int(30));
        let r = received_vector(&m, &alloc).unwrap();
        assert_eq!(r.r, vec![rat_int(30), rat_int(10)]);
        let rho = ratio_vector(&m, &r);
        assert_eq!(rho.rho, vec![rat_int(3), rat(1, 3)]);
    }

    #[test]
    fn received_star() {
        let m = star();
        let r = received_vector(&m, &star_allocation(&m)).unwrap();
        let c = m.node_index("c").unwrap();
        assert_eq!(r.r[c], rat_int(3));
        for leaf in ["a", "b", "d"] {
            assert_eq!(r.r[m.node_index(leaf).unwrap()], rat(1, 3));
        }
        let total: Rational = r.r.iter().cloned().sum();
        assert_eq!(total, m.total_endowment());
    }

    #[test]
    fn received_rejects_partial_shipping() {
        let m = two_node();
        let mut alloc = Allocation::new();
        alloc.set(0, 1, rat_int(4));
        alloc.set(1, 0, rat_int(30));
        assert!(matches!(
            received_vector(&m, &alloc),
            Err(Error::AllocationMismatch(_))
        ));
    }

    #[test]
    fn in_out_two_node_and_full_set() {
        let m = two_node();
        let mut alloc = Allocation::new();
        alloc.set(0, 1, rat_int(10));
        alloc.set(1, 0, rat_int(30));
        let s: BTreeSet<usize> = [0].into();
        let f = in_out(&m, &alloc, &s).unwrap();
        assert_eq!(f.in_flow, rat_int(30));
        assert_eq!(f.out_flow, rat_int(10));
        let all: BTreeSet<usize> = [0, 1].into();
        let f = in_out(&m, &alloc, &all).unwrap();
        assert_eq!(f.in_flow, Rational::zero());
        assert_eq!(f.out_flow, Rational::zero());
        // In(S) = Out(S^c)
        let comp: BTreeSet<usize> = [1].into();
        let fc = in_out(&m, &alloc, &comp).unwrap();
        let fs = in_out(&m, &alloc, &s).unwrap();
        assert_eq!(fs.in_flow, fc.out_flow);
        assert_eq!(fs.out_flow, fc.in_flow);
    }

    #[test]
    fn in_out_star_center() {
        let m = star();
        let alloc = star_allocation(&m);
        let c = m.node_index("c").unwrap();
        let s: BTreeSet<usize> = [c].into();
        let f = in_out(&m, &alloc, &s).unwrap();
        assert_eq!(f.in_flow, rat_int(3));
        assert_eq!(f.out_flow, rat_int(1));
    }

    #[test]
    fn conservation_holds_and_leaf_equality_case() {
        let m = star();
        let alloc = star_allocation(&m);
        let leaves: BTreeSet<usize> = ["a", "b", "d"]
            .iter()
            .map(|id| m.node_index(id).unwrap())
            .collect();
        assert!(conservation_check(&m, &alloc, &leaves).unwrap().is_ok());
        let f = in_out(&m, &alloc, &leaves).unwrap();
        let sum_d: Rational = leaves.iter().map(|&i| m.endowment(i).clone()).sum();
        // leaves give their resource only to nodes outside the set
        assert_eq!(f.out_flow, sum_d);
    }

    #[test]
    fn conservation_flags_corrupted_allocation() {
        let m = two_node();
        let mut alloc = Allocation::new();
        alloc.set(0, 1, rat_int(7)); // lowered without rebalancing
        alloc.set(1, 0, rat_int(30));
        let s: BTreeSet<usize> = [0].into();
        let v = conservation_check(&m, &alloc, &s).unwrap().unwrap_err();
        assert_ne!(v.lhs, v.rhs);
    }

    #[test]
    fn lex_compare_cases() {
        let x = RatioVector { rho: vec![rat_int(1), rat_int(2)] };
        let y = RatioVector { rho: vec![rat_int(2), rat_int(1)] };
        assert_eq!(lex_compare(&x, &y).unwrap(), LexOrdering::Equal);
        let x = RatioVector { rho: vec![rat(1, 2), rat_int(2)] };
        let y = RatioVector { rho: vec![rat_int(1), rat_int(1)] };
        assert_eq!(lex_compare(&x, &y).unwrap(), LexOrdering::Less);
        let x = RatioVector { rho: vec![rat_int(1), rat_int(1), rat_int(2)] };
        let y = RatioVector { rho: vec![rat_int(1), rat_int(1), rat_int(1)] };
        assert_eq!(lex_compare(&x, &y).unwrap(), LexOrdering::Greater);
        let short = RatioVector { rho: vec![rat_int(1)] };
        assert!(lex_compare(&x, &short).is_err());
    }

    #[test]
    fn level_decomposition_two_levels() {
        let m = two_node();
        let rho = RatioVector { rho: vec![rat_int(3), rat(1, 3)] };
        let d = level_decomposition(&m, &rho);
        assert_eq!(d.levels, vec![rat(1, 3), rat_int(3)]);
        assert_eq!(d.level_sets, vec![vec![1], vec![0]]);
        assert_eq!(d.groups, vec![vec![0, 1]]);
    }

    #[test]
    fn level_decomposition_single_level() {
        let m = star();
        let rho = RatioVector { rho: vec![rat_int(1); 4] };
        let d = level_decomposition(&m, &rho);
        assert_eq!(d.level_count(), 1);
        assert_eq!(d.level_sets[0], vec![0, 1, 2, 3]);
        assert_eq!(d.levels[0], rat_int(1));
    }
}
