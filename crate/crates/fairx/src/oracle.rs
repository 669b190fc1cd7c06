//! Independent brute-force reference implementations used to cross-check
//! the combinatorial solver: an exact rational simplex driving an
//! iterative "maximize the minimum ratio, fix the tight nodes, repeat"
//! program, and a direct enumeration of the bottleneck subset ratio. These
//! share no machinery with the flow-based solver on purpose.

use std::collections::BTreeSet;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::market::{MarketGraph, RatioVector};
use crate::rational::Rational;

/// maximize c.x subject to a.x = b, x >= 0 (b entries nonnegative).
struct Lp {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    c: Vec<Rational>,
}

#[cfg_attr(not(test), allow(dead_code))]
enum LpOutcome {
    Optimal { value: Rational, x: Vec<Rational> },
    Infeasible,
}

/// Two-phase primal simplex with Bland's rule; exact arithmetic, so no
/// tolerance anywhere. Panics on unbounded programs (ours are bounded by
/// construction).
fn solve_lp(lp: &Lp) -> LpOutcome {
    let m = lp.a.len();
    let n = lp.c.len();
    let total = n + m; // original variables plus one artificial per row
    // tableau rows: constraints with b in the last column
    let mut tab: Vec<Vec<Rational>> = Vec::with_capacity(m);
    for (i, row) in lp.a.iter().enumerate() {
        assert_eq!(row.len(), n);
        assert!(!lp.b[i].is_negative(), "rhs must be nonnegative");
        let mut t = vec![Rational::zero(); total + 1];
        t[..n].clone_from_slice(row);
        t[n + i] = Rational::one();
        t[total] = lp.b[i].clone();
        tab.push(t);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // phase 1: maximize minus the artificial sum
    let mut cost = vec![Rational::zero(); total];
    for j in n..total {
        cost[j] = -Rational::one();
    }
    run_simplex(&mut tab, &mut basis, &cost, total);
    let phase1: Rational = basis
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v >= n)
        .map(|(i, _)| tab[i][total].clone())
        .sum();
    if !phase1.is_zero() {
        return LpOutcome::Infeasible;
    }
    // drive leftover zero-valued artificials out of the basis
    let mut row = 0;
    while row < tab.len() {
        if basis[row] >= n {
            if let Some(col) = (0..n).find(|&j| !tab[row][j].is_zero()) {
                pivot(&mut tab, &mut basis, row, col, total);
            } else {
                tab.remove(row);
                basis.remove(row);
                continue;
            }
        }
        row += 1;
    }

    // phase 2: the real objective, artificials pinned at zero cost and
    // barred from entering (their columns are zeroed)
    for t in tab.iter_mut() {
        for j in n..total {
            t[j] = Rational::zero();
        }
    }
    let mut cost = vec![Rational::zero(); total];
    cost[..n].clone_from_slice(&lp.c);
    run_simplex(&mut tab, &mut basis, &cost, total);

    let mut x = vec![Rational::zero(); n];
    for (i, &v) in basis.iter().enumerate() {
        if v < n {
            x[v] = tab[i][total].clone();
        }
    }
    let value = lp
        .c
        .iter()
        .zip(x.iter())
        .map(|(ci, xi)| ci * xi)
        .sum();
    LpOutcome::Optimal { value, x }
}

fn pivot(tab: &mut [Vec<Rational>], basis: &mut [usize], row: usize, col: usize, width: usize) {
    let p = tab[row][col].clone();
    for v in tab[row].iter_mut() {
        *v /= &p;
    }
    for r in 0..tab.len() {
        if r != row && !tab[r][col].is_zero() {
            let f = tab[r][col].clone();
            for j in 0..=width {
                let d = &tab[row][j] * &f;
                tab[r][j] -= d;
            }
        }
    }
    basis[row] = col;
}

fn run_simplex(
    tab: &mut Vec<Vec<Rational>>,
    basis: &mut Vec<usize>,
    cost: &[Rational],
    width: usize,
) {
    loop {
        // reduced cost of column j: c_j - c_B . column_j
        let mut entering = None;
        'cols: for j in 0..width {
            if basis.contains(&j) {
                continue;
            }
            let mut reduced = cost[j].clone();
            for (i, &bv) in basis.iter().enumerate() {
                if !cost[bv].is_zero() && !tab[i][j].is_zero() {
                    reduced -= &cost[bv] * &tab[i][j];
                }
            }
            if reduced.is_positive() {
                entering = Some(j);
                break 'cols;
            }
        }
        let Some(col) = entering else { return };
        let mut leaving: Option<(usize, Rational)> = None;
        for i in 0..tab.len() {
            if tab[i][col].is_positive() {
                let ratio = &tab[i][width] / &tab[i][col];
                let better = match &leaving {
                    None => true,
                    Some((best_i, best)) => {
                        ratio < *best || (ratio == *best && basis[i] < basis[*best_i])
                    }
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let (row, _) = leaving.expect("objective is bounded by construction");
        pivot(tab, basis, row, col, width);
    }
}

struct Program<'m> {
    market: &'m MarketGraph,
    active: Vec<usize>,
    /// Directed variable index: (sender, receiver) -> column.
    vars: Vec<(usize, usize)>,
}

impl<'m> Program<'m> {
    fn new(market: &'m MarketGraph) -> Self {
        let active = market.non_isolated_nodes();
        let mut vars = Vec::new();
        for &(a, b) in market.edges() {
            vars.push((a, b));
            vars.push((b, a));
        }
        Program { market, active, vars }
    }

    fn var(&self, from: usize, to: usize) -> usize {
        self.vars
            .iter()
            .position(|&(f, t)| f == from && t == to)
            .expect("directed pair exists")
    }

    /// Rows shared by every program: each active node ships its full
    /// endowment; fixed nodes receive exactly their pinned value.
    fn base_rows(
        &self,
        fixed: &[Option<Rational>],
        columns: usize,
    ) -> (Vec<Vec<Rational>>, Vec<Rational>) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (slot, &i) in self.active.iter().enumerate() {
            let mut row = vec![Rational::zero(); columns];
            for &j in self.market.neighbors(i) {
                row[self.var(i, j)] = Rational::one();
            }
            a.push(row);
            b.push(self.market.endowment(i).clone());
            if let Some(v) = &fixed[slot] {
                let mut row = vec![Rational::zero(); columns];
                for &j in self.market.neighbors(i) {
                    row[self.var(j, i)] = Rational::one();
                }
                a.push(row);
                b.push(v.clone());
            }
        }
        (a, b)
    }
}

/// Ratio vector computed by pure linear programming: maximize the common
/// lower ratio bound, pin every node that cannot receive more than that
/// bound in any optimum, and repeat on the rest.
pub fn oracle_ratio_vector(market: &MarketGraph) -> Result<RatioVector> {
    let prog = Program::new(market);
    let n_active = prog.active.len();
    let mut rho = vec![Rational::zero(); market.node_count()];
    if n_active == 0 {
        return Ok(RatioVector { rho });
    }
    let mut fixed: Vec<Option<Rational>> = vec![None; n_active];
    for _round in 0..=n_active {
        if fixed.iter().all(|f| f.is_some()) {
            break;
        }
        let t_star = maximize_min_ratio(&prog, &fixed)?;
        let mut newly_fixed = 0;
        for slot in 0..n_active {
            if fixed[slot].is_some() {
                continue;
            }
            let target = &t_star * prog.market.endowment(prog.active[slot]);
            let best = maximize_received(&prog, &fixed, &t_star, slot)?;
            if best == target {
                fixed[slot] = Some(target);
                newly_fixed += 1;
            }
        }
        assert!(newly_fixed > 0, "each round must pin at least one node");
    }
    for (slot, &i) in prog.active.iter().enumerate() {
        let v = fixed[slot].clone().expect("all nodes pinned");
        rho[i] = v / market.endowment(i);
    }
    Ok(RatioVector { rho })
}

/// The oracle's value for the plain max-min stage (no nodes pinned).
pub fn oracle_maxmin_value(market: &MarketGraph) -> Result<Rational> {
    if market.edge_count() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let prog = Program::new(market);
    let fixed = vec![None; prog.active.len()];
    maximize_min_ratio(&prog, &fixed)
}

/// maximize t subject to r_i >= t * D_i for unpinned nodes.
fn maximize_min_ratio(prog: &Program, fixed: &[Option<Rational>]) -> Result<Rational> {
    let nd = prog.vars.len();
    let unfixed: Vec<usize> = (0..fixed.len()).filter(|&s| fixed[s].is_none()).collect();
    let t_col = nd;
    let slack0 = nd + 1;
    let columns = slack0 + unfixed.len();
    let (mut a, mut b) = prog.base_rows(fixed, columns);
    for (k, &slot) in unfixed.iter().enumerate() {
        let i = prog.active[slot];
        let mut row = vec![Rational::zero(); columns];
        for &j in prog.market.neighbors(i) {
            row[prog.var(j, i)] = Rational::one();
        }
        row[t_col] = -prog.market.endowment(i).clone();
        row[slack0 + k] = -Rational::one();
        a.push(row);
        b.push(Rational::zero());
    }
    let mut c = vec![Rational::zero(); columns];
    c[t_col] = Rational::one();
    match solve_lp(&Lp { a, b, c }) {
        LpOutcome::Optimal { value, .. } => Ok(value),
        LpOutcome::Infeasible => Err(Error::InfeasibleTransport(
            "max-min oracle program is infeasible".into(),
        )),
    }
}

/// maximize r_target subject to r_i >= t * D_i for unpinned nodes.
fn maximize_received(
    prog: &Program,
    fixed: &[Option<Rational>],
    t: &Rational,
    target_slot: usize,
) -> Result<Rational> {
    let nd = prog.vars.len();
    let unfixed: Vec<usize> = (0..fixed.len()).filter(|&s| fixed[s].is_none()).collect();
    let slack0 = nd;
    let columns = slack0 + unfixed.len();
    let (mut a, mut b) = prog.base_rows(fixed, columns);
    for (k, &slot) in unfixed.iter().enumerate() {
        let i = prog.active[slot];
        let mut row = vec![Rational::zero(); columns];
        for &j in prog.market.neighbors(i) {
            row[prog.var(j, i)] = Rational::one();
        }
        row[slack0 + k] = -Rational::one();
        a.push(row);
        b.push(t * prog.market.endowment(i));
    }
    let mut c = vec![Rational::zero(); columns];
    let i = prog.active[target_slot];
    for &j in prog.market.neighbors(i) {
        c[prog.var(j, i)] = Rational::one();
    }
    match solve_lp(&Lp { a, b, c }) {
        LpOutcome::Optimal { value, .. } => Ok(value),
        LpOutcome::Infeasible => Err(Error::InfeasibleTransport(
            "received-maximization oracle program is infeasible".into(),
        )),
    }
}

/// Enumerates every nonempty receiver subset and returns the minimum
/// supplier/demand ratio with an achieving subset.
pub fn hall_minimum(market: &MarketGraph) -> Result<(Rational, Vec<usize>)> {
    let active = market.non_isolated_nodes();
    if active.is_empty() {
        return Err(Error::EmptyEdgeSet);
    }
    assert!(active.len() <= 24, "subset enumeration is exponential");
    let mut best: Option<(Rational, Vec<usize>)> = None;
    for mask in 1u64..(1u64 << active.len()) {
        let t: BTreeSet<usize> = active
            .iter()
            .enumerate()
            .filter(|&(k, _)| mask & (1 << k) != 0)
            .map(|(_, &i)| i)
            .collect();
        let mut suppliers = Rational::zero();
        for &i in &active {
            if market.neighbors(i).iter().any(|j| t.contains(j)) {
                suppliers += market.endowment(i);
            }
        }
        let demand: Rational = t.iter().map(|&j| market.endowment(j).clone()).sum();
        let ratio = suppliers / demand;
        if best.as_ref().map_or(true, |(b, _)| ratio < *b) {
            best = Some((ratio, t.into_iter().collect()));
        }
    }
    Ok(best.expect("at least one subset"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::lexopt::solve_lex_optimal;
    use crate::maxmin::solve_maxmin;
    use crate::rational::{rat, rat_int};

    #[test]
    fn simplex_solves_a_textbook_program() {
        // maximize 3x + 2y s.t. x + y + s1 = 4, x + 3y + s2 = 6
        let lp = Lp {
            a: vec![
                vec![rat_int(1), rat_int(1), rat_int(1), rat_int(0)],
                vec![rat_int(1), rat_int(3), rat_int(0), rat_int(1)],
            ],
            b: vec![rat_int(4), rat_int(6)],
            c: vec![rat_int(3), rat_int(2), rat_int(0), rat_int(0)],
        };
        let LpOutcome::Optimal { value, x } = solve_lp(&lp) else {
            panic!("expected optimal")
        };
        assert_eq!(value, rat_int(12));
        assert_eq!(x[0], rat_int(4));
        assert_eq!(x[1], rat_int(0));
    }

    #[test]
    fn simplex_detects_infeasibility() {
        // x + y = 1 and x + y = 2 cannot both hold
        let lp = Lp {
            a: vec![
                vec![rat_int(1), rat_int(1)],
                vec![rat_int(1), rat_int(1)],
            ],
            b: vec![rat_int(1), rat_int(2)],
            c: vec![rat_int(1), rat_int(0)],
        };
        assert!(matches!(solve_lp(&lp), LpOutcome::Infeasible));
    }

    #[test]
    fn oracle_matches_six_node() {
        let m = fixtures::six_node();
        let oracle = oracle_ratio_vector(&m).unwrap();
        let sol = solve_lex_optimal(&m).unwrap();
        assert_eq!(oracle.rho, sol.ratios.rho);
    }

    #[test]
    fn oracle_matches_star_and_two_node() {
        for m in [fixtures::star(), fixtures::two_node(), fixtures::path4()] {
            let oracle = oracle_ratio_vector(&m).unwrap();
            let sol = solve_lex_optimal(&m).unwrap();
            assert_eq!(oracle.rho, sol.ratios.rho);
        }
    }

    #[test]
    fn oracle_maxmin_matches_solver_and_enumeration() {
        for m in [fixtures::star(), fixtures::six_node(), fixtures::cycle4()] {
            let lp_value = oracle_maxmin_value(&m).unwrap();
            let solver = solve_maxmin(&m).unwrap();
            let (hall, _) = hall_minimum(&m).unwrap();
            // the optimum cannot exceed the bottleneck ratio, and the
            // solver achieves it
            let capped = if hall > rat_int(1) { rat_int(1) } else { hall };
            assert_eq!(lp_value, solver.lambda_star);
            assert_eq!(lp_value, capped);
        }
    }

    #[test]
    fn hall_minimum_on_star() {
        let m = fixtures::star();
        let (ratio, t) = hall_minimum(&m).unwrap();
        assert_eq!(ratio, rat(1, 3));
        // the leaves as receivers: one supplier (the center) for demand 3
        assert_eq!(t.len(), 3);
    }
}
