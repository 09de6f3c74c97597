//! Per-state synthesis on finite chains, and an exhaustive search used to
//! cross-check it.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use super::{drive, ensure_sound, RoundSolution, Rounds, SynthesisError, SynthesisResult, SynthesisTrace};
use crate::certificates::finite::check_lexpmsm_map;
use crate::certificates::Lev;
use crate::lexorder::Level;
use crate::lp::{Cmp, LinearProgram, LpOutcome, VarKind};
use crate::model::FiniteChain;
use crate::rational::Rat;

struct FiniteRounds<'a> {
    chain: &'a FiniteChain,
}

impl Rounds for FiniteRounds<'_> {
    type Key = usize;
    type Val = Rat;

    fn keys(&self) -> Vec<usize> {
        (0..self.chain.len()).collect()
    }

    fn priority(&self, s: &usize) -> usize {
        self.chain.priority(*s)
    }

    fn max_priority(&self) -> usize {
        self.chain.max_priority()
    }

    fn label(&self, s: &usize) -> String {
        self.chain.label(*s).to_string()
    }

    fn zero(&self) -> Rat {
        Rat::zero()
    }

    fn solve(&mut self, active: &BTreeSet<usize>) -> Result<RoundSolution<usize, Rat>, String> {
        let n = self.chain.len();
        let mut lp = LinearProgram::new();
        let r: Vec<usize> = (0..n).map(|_| lp.add_var(VarKind::NonNeg)).collect();
        let mut eps = BTreeMap::new();
        for &s in active {
            let e = lp.add_var(VarKind::NonNeg);
            lp.add_row([(e, Rat::one())], Cmp::Le, Rat::one());
            lp.add_row(step_row(self.chain, &r, s, Some(e)), Cmp::Ge, Rat::zero());
            eps.insert(s, e);
        }
        lp.set_objective(eps.values().map(|&e| (e, Rat::one())));
        let point = match lp.solve() {
            LpOutcome::Optimal { point, .. } => point,
            other => return Err(format!("per-state LP: {other:?}")),
        };
        let min = eps.values().map(|&e| &point[e]).filter(|v| v.is_positive()).min().cloned();
        let Some(min) = min else {
            return Ok(RoundSolution {
                values: (0..n).map(|s| (s, Rat::zero())).collect(),
                strict: BTreeSet::new(),
                outcome: "no positive slack".into(),
            });
        };
        let values: Vec<Rat> = r.iter().map(|&v| &point[v] / &min).collect();
        let strict = active
            .iter()
            .copied()
            .filter(|&s| &values[s] - &self.chain.next_expectation(s, &values) >= Rat::one())
            .collect();
        Ok(RoundSolution {
            values: values.into_iter().enumerate().collect(),
            strict,
            outcome: format!("optimal, rescaled by {}", Rat::one() / min),
        })
    }
}

/// `r_s − Σ P(s,t)·r_t − ε` as LP coefficients.
fn step_row(chain: &FiniteChain, r: &[usize], s: usize, eps: Option<usize>) -> Vec<(usize, Rat)> {
    let mut coeffs: BTreeMap<usize, Rat> = BTreeMap::new();
    *coeffs.entry(r[s]).or_insert_with(Rat::zero) += Rat::one();
    for (t, p) in chain.row(s) {
        *coeffs.entry(r[*t]).or_insert_with(Rat::zero) -= p;
    }
    if let Some(e) = eps {
        coeffs.insert(e, -Rat::one());
    }
    coeffs.into_iter().collect()
}

/// Synthesises a per-state LexPMSM map on a finite chain.
pub fn synthesize_finite(
    chain: &FiniteChain,
    max_rounds: Option<usize>,
) -> Result<(SynthesisResult<usize, Rat>, SynthesisTrace), SynthesisError> {
    let mut problem = FiniteRounds { chain };
    let mut trace = SynthesisTrace::default();
    let result = drive(&mut problem, max_rounds, &mut trace)?;
    if let SynthesisResult::Found(map) = &result {
        ensure_sound(check_lexpmsm_map(chain, map))?;
    }
    Ok((result, trace))
}

/// Whether some per-state LexPMSM map with every block size in
/// `1..=max_block` exists, by trying every shape and level assignment.
pub fn brute_force_map_exists(chain: &FiniteChain, max_block: usize) -> bool {
    let half = chain.max_priority().div_ceil(2);
    let mut shape = vec![1; half];
    loop {
        if shapes_admit_map(chain, &shape) {
            return true;
        }
        // Next shape in lexicographic order.
        let mut i = 0;
        while i < half && shape[i] == max_block {
            shape[i] = 1;
            i += 1;
        }
        if i == half {
            return false;
        }
        shape[i] += 1;
    }
}

fn options(shape: &[usize], p: usize) -> Vec<Lev> {
    let mut out = Vec::new();
    for j in 1..=p.div_ceil(2).min(shape.len()) {
        for k in 1..=shape[j - 1] {
            out.push(Lev::At(Level::new(j, k)));
        }
    }
    if p % 2 == 0 {
        out.push(Lev::Star);
    }
    out
}

fn shapes_admit_map(chain: &FiniteChain, shape: &[usize]) -> bool {
    let n = chain.len();
    let opts: Vec<Vec<Lev>> = (0..n).map(|s| options(shape, chain.priority(s))).collect();
    let mut pick = vec![0; n];
    loop {
        let levs: Vec<Lev> = pick.iter().zip(&opts).map(|(&i, o)| o[i]).collect();
        if levels_feasible(chain, shape, &levs) {
            return true;
        }
        let mut s = 0;
        while s < n && pick[s] + 1 == opts[s].len() {
            pick[s] = 0;
            s += 1;
        }
        if s == n {
            return false;
        }
        pick[s] += 1;
    }
}

fn levels_feasible(chain: &FiniteChain, shape: &[usize], levs: &[Lev]) -> bool {
    let n = chain.len();
    let dim: usize = shape.iter().sum();
    let mut lp = LinearProgram::new();
    let vars: Vec<Vec<usize>> = (0..dim).map(|_| (0..n).map(|_| lp.add_var(VarKind::NonNeg)).collect()).collect();
    for (s, lev) in levs.iter().enumerate() {
        let (ge_upto, strict_at) = match lev {
            Lev::At(l) => (l.flat(shape) - 1, Some(l.flat(shape) - 1)),
            Lev::Star => (shape[..chain.priority(s).div_ceil(2)].iter().sum(), None),
        };
        for c in 0..ge_upto {
            lp.add_row(step_row(chain, &vars[c], s, None), Cmp::Ge, Rat::zero());
        }
        if let Some(c) = strict_at {
            lp.add_row(step_row(chain, &vars[c], s, None), Cmp::Ge, Rat::one());
        }
    }
    lp.feasible_point().is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    #[test]
    fn transient_odd_state_gets_a_level() {
        // 0 (priority 1) moves to the absorbing even state 1.
        let chain = FiniteChain::new(vec![vec![(1, r(1, 1))], vec![(1, r(1, 1))]], vec![1, 2]).unwrap();
        let (res, _) = synthesize_finite(&chain, None).unwrap();
        let SynthesisResult::Found(map) = res else { panic!("expected a map") };
        assert_eq!(map.lev[&0], Lev::At(Level::new(1, 1)));
        assert_eq!(map.lev[&1], Lev::Star);
        assert!(brute_force_map_exists(&chain, 1));
    }

    #[test]
    fn odd_cycle_has_no_map() {
        let chain = FiniteChain::new(vec![vec![(0, r(1, 2)), (1, r(1, 2))], vec![(0, r(1, 1))]], vec![1, 2]).unwrap();
        let (res, _) = synthesize_finite(&chain, None).unwrap();
        assert!(matches!(res, SynthesisResult::NotFound { j: 1, .. }));
        assert!(!brute_force_map_exists(&chain, 2));
    }
}
