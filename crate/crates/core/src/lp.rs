//! Exact rational linear programming: a dense two-phase simplex with Bland's
//! anti-cycling rule. Strict rows are handled by maximising a shared slack
//! `δ ∈ [0, 1]` and demanding `δ > 0`.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::rational::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Free,
    NonNeg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
    Lt,
    Gt,
}

impl Cmp {
    fn is_strict(self) -> bool {
        matches!(self, Cmp::Lt | Cmp::Gt)
    }

    fn flipped(self) -> Cmp {
        match self {
            Cmp::Le => Cmp::Ge,
            Cmp::Ge => Cmp::Le,
            Cmp::Lt => Cmp::Gt,
            Cmp::Gt => Cmp::Lt,
            Cmp::Eq => Cmp::Eq,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: BTreeMap<usize, Rat>,
    pub cmp: Cmp,
    pub rhs: Rat,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { point: Vec<Rat>, value: Rat },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn point(&self) -> Option<&[Rat]> {
        match self {
            LpOutcome::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }
}

/// `maximise objective · x` subject to the rows; variables are free or
/// non-negative.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    kinds: Vec<VarKind>,
    rows: Vec<Row>,
    objective: Option<BTreeMap<usize, Rat>>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, kind: VarKind) -> usize {
        self.kinds.push(kind);
        self.kinds.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.kinds.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coeffs: impl IntoIterator<Item = (usize, Rat)>, cmp: Cmp, rhs: Rat) {
        let mut map: BTreeMap<usize, Rat> = BTreeMap::new();
        for (v, c) in coeffs {
            assert!(v < self.kinds.len(), "row references undeclared variable {v}");
            *map.entry(v).or_insert_with(Rat::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        self.rows.push(Row { coeffs: map, cmp, rhs });
    }

    pub fn set_objective(&mut self, coeffs: impl IntoIterator<Item = (usize, Rat)>) {
        let mut map: BTreeMap<usize, Rat> = BTreeMap::new();
        for (v, c) in coeffs {
            *map.entry(v).or_insert_with(Rat::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        self.objective = Some(map);
    }

    pub fn solve(&self) -> LpOutcome {
        if !self.rows.iter().any(|r| r.cmp.is_strict()) {
            return solve_nonstrict(&self.kinds, &self.rows, self.objective.as_ref());
        }
        // Phase A: maximise the common strictness slack.
        let mut kinds = self.kinds.clone();
        let delta = kinds.len();
        kinds.push(VarKind::NonNeg);
        let mut rows: Vec<Row> = self.rows.iter().map(|r| shift_strict(r, delta)).collect();
        rows.push(Row { coeffs: BTreeMap::from([(delta, Rat::one())]), cmp: Cmp::Le, rhs: Rat::one() });
        let obj = BTreeMap::from([(delta, Rat::one())]);
        let best = match solve_nonstrict(&kinds, &rows, Some(&obj)) {
            LpOutcome::Optimal { value, point } if value.is_positive() => (value, point),
            _ => return LpOutcome::Infeasible,
        };
        let Some(objective) = &self.objective else {
            let mut point = best.1;
            point.truncate(self.kinds.len());
            return LpOutcome::Optimal { point, value: Rat::zero() };
        };
        // Phase B: fix the slack at its optimum and optimise the real goal.
        let fixed: Vec<Row> = self
            .rows
            .iter()
            .map(|r| match r.cmp {
                Cmp::Gt => Row { coeffs: r.coeffs.clone(), cmp: Cmp::Ge, rhs: &r.rhs + &best.0 },
                Cmp::Lt => Row { coeffs: r.coeffs.clone(), cmp: Cmp::Le, rhs: &r.rhs - &best.0 },
                _ => r.clone(),
            })
            .collect();
        solve_nonstrict(&self.kinds, &fixed, Some(objective))
    }

    /// Feasibility only, ignoring any objective.
    pub fn feasible_point(&self) -> Option<Vec<Rat>> {
        let mut plain = self.clone();
        plain.objective = None;
        match plain.solve() {
            LpOutcome::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }
}

fn shift_strict(r: &Row, delta: usize) -> Row {
    let mut coeffs = r.coeffs.clone();
    match r.cmp {
        Cmp::Gt => {
            coeffs.insert(delta, -Rat::one());
            Row { coeffs, cmp: Cmp::Ge, rhs: r.rhs.clone() }
        }
        Cmp::Lt => {
            coeffs.insert(delta, Rat::one());
            Row { coeffs, cmp: Cmp::Le, rhs: r.rhs.clone() }
        }
        _ => r.clone(),
    }
}

struct Tableau {
    rows: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rat {
        &self.rows[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        if !p.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximises `cost · x` over columns where `allowed[j]`. Returns false on
    /// unboundedness.
    fn optimise(&mut self, cost: &[Rat], allowed: &[bool]) -> bool {
        loop {
            // Reduced cost z_j - c_j; negative means improving.
            let mut entering = None;
            for j in 0..self.ncols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut z = -cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    let a = &self.rows[i][j];
                    if !a.is_zero() && !cost[b].is_zero() {
                        z += &cost[b] * a;
                    }
                }
                if z.is_negative() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, Rat)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, c);
        }
    }
}

fn solve_nonstrict(kinds: &[VarKind], rows: &[Row], objective: Option<&BTreeMap<usize, Rat>>) -> LpOutcome {
    // Column layout: structural (free vars split), slack/surplus, artificial.
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(kinds.len());
    let mut ncols = 0;
    for k in kinds {
        match k {
            VarKind::NonNeg => {
                col_of.push((ncols, None));
                ncols += 1;
            }
            VarKind::Free => {
                col_of.push((ncols, Some(ncols + 1)));
                ncols += 2;
            }
        }
    }
    let nstruct = ncols;
    // Normalise rows to non-negative right-hand sides.
    let norm: Vec<(BTreeMap<usize, Rat>, Cmp, Rat)> = rows
        .iter()
        .map(|r| {
            if r.rhs.is_negative() {
                (r.coeffs.iter().map(|(k, v)| (*k, -v)).collect(), r.cmp.flipped(), -r.rhs.clone())
            } else {
                (r.coeffs.clone(), r.cmp, r.rhs.clone())
            }
        })
        .collect();
    let nslack = norm.iter().filter(|r| matches!(r.1, Cmp::Le | Cmp::Ge)).count();
    let nart = norm.iter().filter(|r| matches!(r.1, Cmp::Ge | Cmp::Eq)).count();
    let total = nstruct + nslack + nart;
    let mut tab = Tableau { rows: Vec::with_capacity(norm.len()), basis: Vec::with_capacity(norm.len()), ncols: total };
    let mut is_art = vec![false; total];
    let (mut s, mut a) = (nstruct, nstruct + nslack);
    for (coeffs, cmp, rhs) in &norm {
        let mut row = vec![Rat::zero(); total + 1];
        for (v, c) in coeffs {
            let (p, n) = col_of[*v];
            row[p] = c.clone();
            if let Some(n) = n {
                row[n] = -c.clone();
            }
        }
        row[total] = rhs.clone();
        match cmp {
            Cmp::Le => {
                row[s] = Rat::one();
                tab.basis.push(s);
                s += 1;
            }
            Cmp::Ge => {
                row[s] = -Rat::one();
                s += 1;
                row[a] = Rat::one();
                is_art[a] = true;
                tab.basis.push(a);
                a += 1;
            }
            Cmp::Eq => {
                row[a] = Rat::one();
                is_art[a] = true;
                tab.basis.push(a);
                a += 1;
            }
            Cmp::Lt | Cmp::Gt => unreachable!("strict rows are removed before this point"),
        }
        tab.rows.push(row);
    }

    if nart > 0 {
        let cost: Vec<Rat> = (0..total).map(|j| if is_art[j] { -Rat::one() } else { Rat::zero() }).collect();
        let allowed = vec![true; total];
        tab.optimise(&cost, &allowed);
        let infeas: Rat = tab.basis.iter().enumerate().filter(|(_, &b)| is_art[b]).map(|(i, _)| tab.rhs(i).clone()).sum();
        if infeas.is_positive() {
            return LpOutcome::Infeasible;
        }
        // Drive zero-valued artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if is_art[tab.basis[i]] {
                if let Some(j) = (0..total).find(|&j| !is_art[j] && !tab.rows[i][j].is_zero()) {
                    tab.pivot(i, j);
                    i += 1;
                } else {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                }
            } else {
                i += 1;
            }
        }
    }

    let allowed: Vec<bool> = (0..total).map(|j| !is_art[j]).collect();
    let mut cost = vec![Rat::zero(); total];
    if let Some(obj) = objective {
        for (v, c) in obj {
            let (p, n) = col_of[*v];
            cost[p] = c.clone();
            if let Some(n) = n {
                cost[n] = -c.clone();
            }
        }
    }
    if !tab.optimise(&cost, &allowed) {
        return LpOutcome::Unbounded;
    }
    let mut colval = vec![Rat::zero(); total];
    for (i, &b) in tab.basis.iter().enumerate() {
        colval[b] = tab.rhs(i).clone();
    }
    let point: Vec<Rat> = col_of
        .iter()
        .map(|(p, n)| match n {
            Some(n) => &colval[*p] - &colval[*n],
            None => colval[*p].clone(),
        })
        .collect();
    let value = match objective {
        Some(obj) => obj.iter().map(|(v, c)| c * &point[*v]).sum(),
        None => Rat::zero(),
    };
    LpOutcome::Optimal { point, value }
}

/// Checks a point against a row exactly.
pub fn row_holds(row: &Row, point: &[Rat]) -> bool {
    let lhs: Rat = row.coeffs.iter().map(|(v, c)| c * &point[*v]).sum();
    match row.cmp {
        Cmp::Le => lhs <= row.rhs,
        Cmp::Ge => lhs >= row.rhs,
        Cmp::Eq => lhs == row.rhs,
        Cmp::Lt => lhs < row.rhs,
        Cmp::Gt => lhs > row.rhs,
    }
}

impl LinearProgram {
    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn kinds(&self) -> &[VarKind] {
        &self.kinds
    }

    /// Whether a point satisfies every row and sign restriction.
    pub fn satisfied_by(&self, point: &[Rat]) -> bool {
        self.kinds.iter().zip(point).all(|(k, v)| *k == VarKind::Free || !v.is_negative())
            && self.rows.iter().all(|r| row_holds(r, point))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn small_maximisation() {
        // max x + y  s.t. x + 2y <= 4, 3x + y <= 6, x,y >= 0  → (8/5, 6/5), 14/5
        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarKind::NonNeg);
        let y = lp.add_var(VarKind::NonNeg);
        lp.add_row([(x, int(1)), (y, int(2))], Cmp::Le, int(4));
        lp.add_row([(x, int(3)), (y, int(1))], Cmp::Le, int(6));
        lp.set_objective([(x, int(1)), (y, int(1))]);
        match lp.solve() {
            LpOutcome::Optimal { point, value } => {
                assert_eq!(value, rat(14, 5));
                assert_eq!(point, vec![rat(8, 5), rat(6, 5)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x (max -x) s.t. x = y - 3, y >= 1  → x = -2
        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarKind::Free);
        let y = lp.add_var(VarKind::Free);
        lp.add_row([(x, int(1)), (y, int(-1))], Cmp::Eq, int(-3));
        lp.add_row([(y, int(1))], Cmp::Ge, int(1));
        lp.set_objective([(x, int(-1))]);
        assert_eq!(lp.solve().point().unwrap()[0], int(-2));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarKind::NonNeg);
        lp.add_row([(x, int(1))], Cmp::Le, int(-1));
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarKind::Free);
        lp.set_objective([(x, int(1))]);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn strict_rows() {
        // x > 0, x < 0 infeasible; x >= 0, x <= 0 feasible.
        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarKind::Free);
        lp.add_row([(x, int(1))], Cmp::Gt, int(0));
        lp.add_row([(x, int(1))], Cmp::Le, int(0));
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarKind::Free);
        lp.add_row([(x, int(1))], Cmp::Gt, int(0));
        lp.add_row([(x, int(1))], Cmp::Lt, int(1));
        lp.set_objective([(x, int(1))]);
        let p = lp.solve();
        let v = &p.point().unwrap()[0];
        assert!(*v > int(0) && *v < int(1));
        assert!(lp.satisfied_by(p.point().unwrap()));
    }

    #[test]
    fn degenerate_redundant_equalities() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(VarKind::NonNeg);
        let y = lp.add_var(VarKind::NonNeg);
        lp.add_row([(x, int(1)), (y, int(1))], Cmp::Eq, int(2));
        lp.add_row([(x, int(2)), (y, int(2))], Cmp::Eq, int(4));
        lp.add_row([(x, int(1))], Cmp::Ge, int(0));
        lp.set_objective([(y, int(1))]);
        assert_eq!(lp.solve().point().unwrap(), &[int(0), int(2)]);
    }
}
