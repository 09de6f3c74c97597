//! Exact checkers over finite chains. Every state is checked; strict
//! decreases may use a different level at each state.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::{Lev, LexPmsMap, Verdict, Witness};
use crate::lexorder::{lex_geq_trunc, lex_gt_trunc, nested_gt_at, Level, Nested};
use crate::model::{FiniteChain, StreettPair};
use crate::oracle::StepDistribution;
use crate::rational::{format_rat, Ext, Rat};

fn at(chain: &FiniteChain, s: usize) -> Option<Witness> {
    Some(Witness { at: chain.label(s).to_string(), point: None })
}

fn ext(v: &[Rat]) -> Vec<Ext> {
    v.iter().cloned().map(Ext::Fin).collect()
}

fn next_vec(chain: &FiniteChain, s: usize, r: &[Vec<Rat>]) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); r[s].len()];
    for (t, p) in chain.row(s) {
        for (o, v) in out.iter_mut().zip(&r[*t]) {
            *o += p * v;
        }
    }
    out
}

fn check_shape(chain: &FiniteChain, n: usize, dims: impl Iterator<Item = usize>) -> Result<usize, Verdict> {
    if n != chain.len() {
        return Err(Verdict::reject(format!("certificate has {n} states, chain has {}", chain.len()), None));
    }
    let dims: Vec<usize> = dims.collect();
    match dims.first() {
        Some(&d) if dims.iter().all(|&x| x == d) => Ok(d),
        None => Ok(0),
        _ => Err(Verdict::reject("components differ in dimension across states", None)),
    }
}

fn non_negative(chain: &FiniteChain, r: &[Vec<Rat>]) -> Result<(), Verdict> {
    for (s, v) in r.iter().enumerate() {
        if let Some(x) = v.iter().find(|x| x.is_negative()) {
            return Err(Verdict::reject(format!("negative value {}", format_rat(x)), at(chain, s)));
        }
    }
    Ok(())
}

/// `𝕏r ≤ r − ε·[A∖B] + M·[B]` and `r ≥ 0` everywhere.
pub fn check_ssm(chain: &FiniteChain, pair: &StreettPair, r: &[Rat], eps: &Rat, m: &Rat) -> Verdict {
    if !eps.is_positive() || m.is_negative() {
        return Verdict::reject("ε must be positive and M non-negative", None);
    }
    if r.len() != chain.len() {
        return Verdict::reject("certificate and chain differ in size", None);
    }
    for s in 0..chain.len() {
        if r[s].is_negative() {
            return Verdict::reject(format!("negative value {}", format_rat(&r[s])), at(chain, s));
        }
        let x = chain.next_expectation(s, r);
        let bound = if pair.b[s] {
            &r[s] + m
        } else if pair.a[s] {
            &r[s] - eps
        } else {
            r[s].clone()
        };
        if x > bound {
            return Verdict::reject(format!("next-step expectation {} exceeds {}", format_rat(&x), format_rat(&bound)), at(chain, s));
        }
    }
    Verdict::accept()
}

/// `𝕏r ≤ r − [A∖B]` off `B` and `r ≥ 0`.
pub fn check_gssm(chain: &FiniteChain, pair: &StreettPair, r: &[Rat]) -> Verdict {
    if r.len() != chain.len() {
        return Verdict::reject("certificate and chain differ in size", None);
    }
    for s in 0..chain.len() {
        if r[s].is_negative() {
            return Verdict::reject(format!("negative value {}", format_rat(&r[s])), at(chain, s));
        }
        if pair.b[s] {
            continue;
        }
        let x = chain.next_expectation(s, r);
        let bound = if pair.a[s] { &r[s] - Rat::one() } else { r[s].clone() };
        if x > bound {
            return Verdict::reject(format!("next-step expectation {} exceeds {}", format_rat(&x), format_rat(&bound)), at(chain, s));
        }
    }
    Verdict::accept()
}

/// `r ≻ 𝕏r` on `A∖B`, `r ⪰ 𝕏r` off `A ∪ B`.
pub fn check_lexgssm(chain: &FiniteChain, pair: &StreettPair, r: &[Vec<Rat>]) -> Verdict {
    let dim = match check_shape(chain, r.len(), r.iter().map(Vec::len)) {
        Ok(d) if d > 0 => d,
        Ok(_) => return Verdict::reject("empty certificate vectors", None),
        Err(v) => return v,
    };
    if let Err(v) = non_negative(chain, r) {
        return v;
    }
    let mut levels = BTreeMap::new();
    for s in 0..chain.len() {
        if pair.b[s] {
            continue;
        }
        let (u, x) = (ext(&r[s]), ext(&next_vec(chain, s, r)));
        if pair.a[s] {
            match lex_gt_trunc(&u, &x, dim).expect("same length") {
                Some(l) => {
                    levels.insert(chain.label(s).to_string(), l.to_string());
                }
                None => return Verdict::reject("no strict lexicographic decrease", at(chain, s)),
            }
        } else if !lex_geq_trunc(&u, &x, dim).expect("same length") {
            return Verdict::reject("lexicographic increase", at(chain, s));
        }
    }
    Verdict::Accept { levels }
}

/// Truncated flat comparisons at `p(x)`.
pub fn check_pmsm(chain: &FiniteChain, r: &[Vec<Rat>]) -> Verdict {
    let dim = match check_shape(chain, r.len(), r.iter().map(Vec::len)) {
        Ok(d) => d,
        Err(v) => return v,
    };
    if dim < chain.max_priority() {
        return Verdict::reject(format!("dimension {dim} below the maximum priority {}", chain.max_priority()), None);
    }
    if let Err(v) = non_negative(chain, r) {
        return v;
    }
    let mut levels = BTreeMap::new();
    for s in 0..chain.len() {
        let p = chain.priority(s);
        let (u, x) = (ext(&r[s]), ext(&next_vec(chain, s, r)));
        if p % 2 == 1 {
            match lex_gt_trunc(&u, &x, p).expect("valid truncation") {
                Some(l) => {
                    levels.insert(chain.label(s).to_string(), l.to_string());
                }
                None => return Verdict::reject(format!("no strict decrease within the first {p} components"), at(chain, s)),
            }
        } else if !lex_geq_trunc(&u, &x, p).expect("valid truncation") {
            return Verdict::reject(format!("increase within the first {p} components"), at(chain, s));
        }
    }
    Verdict::Accept { levels }
}

fn nested_check(chain: &FiniteChain, r: &[Vec<Vec<Rat>>], blocks_for: impl Fn(usize) -> usize, needed: usize) -> Verdict {
    if r.len() != chain.len() {
        return Verdict::reject("certificate and chain differ in size", None);
    }
    let shape: Vec<usize> = match r.first() {
        Some(b) => b.iter().map(Vec::len).collect(),
        None => return Verdict::accept(),
    };
    if shape.contains(&0) || r.iter().any(|b| b.iter().map(Vec::len).collect::<Vec<_>>() != shape) {
        return Verdict::reject("inconsistent or empty blocks", None);
    }
    if shape.len() < needed {
        return Verdict::reject(format!("{} blocks, {needed} needed", shape.len()), None);
    }
    let flat: Vec<Vec<Rat>> = r.iter().map(|b| b.iter().flatten().cloned().collect()).collect();
    if let Err(v) = non_negative(chain, &flat) {
        return v;
    }
    let mut levels = BTreeMap::new();
    for s in 0..chain.len() {
        let p = chain.priority(s);
        let t: usize = shape[..blocks_for(p)].iter().sum();
        let (u, x) = (ext(&flat[s]), ext(&next_vec(chain, s, &flat)));
        if p % 2 == 1 {
            match lex_gt_trunc(&u, &x, t).expect("valid truncation") {
                Some(l) => {
                    let lev = Level::from_flat(l, &shape).expect("inside shape");
                    levels.insert(chain.label(s).to_string(), lev.to_string());
                }
                None => return Verdict::reject(format!("no strict decrease within the first {} blocks", blocks_for(p)), at(chain, s)),
            }
        } else if !lex_geq_trunc(&u, &x, t).expect("valid truncation") {
            return Verdict::reject(format!("increase within the first {} blocks", blocks_for(p)), at(chain, s));
        }
    }
    Verdict::Accept { levels }
}

/// One block per priority; comparisons truncated at block `p(x)`.
pub fn check_lexpmsm(chain: &FiniteChain, r: &[Vec<Vec<Rat>>]) -> Verdict {
    nested_check(chain, r, |p| p, chain.max_priority())
}

/// One block per odd priority; comparisons truncated at block `⌈p(x)/2⌉`.
pub fn check_reduced_lexpmsm(chain: &FiniteChain, r: &[Vec<Vec<Rat>>]) -> Verdict {
    nested_check(chain, r, |p| p.div_ceil(2), chain.max_priority().div_ceil(2))
}

/// LexPMSM map with one key per state.
pub fn check_lexpmsm_map(chain: &FiniteChain, map: &LexPmsMap<usize, Rat>) -> Verdict {
    let keys: Vec<usize> = (0..chain.len()).collect();
    let issues = map.structural_issues(&keys, |&s| chain.priority(s));
    if !issues.is_empty() {
        return Verdict::reject(format!("malformed map: {}", issues.join("; ")), None);
    }
    let zero: Vec<Vec<Rat>> = map.shape.iter().map(|&m| vec![Rat::zero(); m]).collect();
    let nested: Vec<Vec<Vec<Rat>>> = keys.iter().map(|s| map.values.get(s).cloned().unwrap_or_else(|| zero.clone())).collect();
    let flat: Vec<Vec<Rat>> = nested.iter().map(|b| b.iter().flatten().cloned().collect()).collect();
    if let Err(v) = non_negative(chain, &flat) {
        return v;
    }
    let mut levels = BTreeMap::new();
    for s in keys {
        let x = next_vec(chain, s, &flat);
        let mut off = 0;
        let xb: Vec<Vec<Ext>> = map
            .shape
            .iter()
            .map(|&m| {
                let b = ext(&x[off..off + m]);
                off += m;
                b
            })
            .collect();
        let u = Nested { blocks: nested[s].iter().map(|b| ext(b)).collect() };
        let v = Nested { blocks: xb };
        match map.lev[&s] {
            Lev::At(l) => {
                if !nested_gt_at(&u, &v, l).expect("structurally valid level") {
                    return Verdict::reject(format!("no strict decrease at level {l}"), at(chain, s));
                }
                levels.insert(chain.label(s).to_string(), l.to_string());
            }
            Lev::Star => {
                let t: usize = map.shape[..chain.priority(s).div_ceil(2).min(map.shape.len())].iter().sum();
                let (fu, fv) = (u.flatten(), v.flatten());
                if let Some(k) = (0..t).find(|&k| !fu[k].ge(&fv[k])) {
                    return Verdict::reject(format!("component {} increases", k + 1), at(chain, s));
                }
            }
        }
    }
    Verdict::Accept { levels }
}

/// Distribution-valued certificate: `masses[s][m]` for `m = 0..=K`.
/// `1 ⊕ 𝕏r ≤ r` on `A∖B` and `𝕏r ≤ r` off `A ∪ B` in the stochastic order.
/// Mass that the shift pushes past `K` has nowhere to go in `r` and counts
/// as a violation.
pub fn check_dvssm(chain: &FiniteChain, pair: &StreettPair, masses: &[Vec<Rat>]) -> Verdict {
    let width = match check_shape(chain, masses.len(), masses.iter().map(Vec::len)) {
        Ok(w) if w > 0 => w,
        Ok(_) => return Verdict::reject("empty distributions", None),
        Err(v) => return v,
    };
    for (s, m) in masses.iter().enumerate() {
        if m.iter().any(Signed::is_negative) || m.iter().cloned().sum::<Rat>() != Rat::one() {
            return Verdict::reject("not a probability distribution", at(chain, s));
        }
    }
    let dist = |m: &Vec<Rat>| StepDistribution { masses: m.clone(), tail: Rat::zero() };
    for s in 0..chain.len() {
        if pair.b[s] {
            continue;
        }
        let mut mix = vec![Rat::zero(); width];
        for (t, p) in chain.row(s) {
            for (o, v) in mix.iter_mut().zip(&masses[*t]) {
                *o += p * v;
            }
        }
        let mut lhs = dist(&mix);
        if pair.a[s] {
            lhs = lhs.shift();
        }
        if !lhs.stochastically_le(&dist(&masses[s])) {
            return Verdict::reject("stochastic order violated", at(chain, s));
        }
    }
    Verdict::accept()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn geometric() -> (FiniteChain, StreettPair) {
        let c = FiniteChain::new(vec![vec![(0, rat(1, 2)), (1, rat(1, 2))], vec![(1, int(1))]], vec![3, 2]).unwrap();
        (c, StreettPair::new(vec![true, false], vec![false, true]))
    }

    #[test]
    fn scalar_checks() {
        let (c, p) = geometric();
        assert!(check_gssm(&c, &p, &[int(2), int(0)]).is_accept());
        assert!(check_gssm(&c, &p, &[rat(3, 2), int(0)]).is_reject());
        assert!(check_ssm(&c, &p, &[int(2), int(0)], &int(1), &int(1)).is_accept());
        let zero_a = StreettPair::new(vec![false, false], vec![false, false]);
        assert!(check_ssm(&c, &zero_a, &[int(0), int(0)], &int(5), &int(7)).is_accept());
        let b_loop = FiniteChain::new(vec![vec![(0, int(1))]], vec![2]).unwrap();
        assert!(check_ssm(&b_loop, &StreettPair::new(vec![false], vec![true]), &[int(1)], &int(1), &int(1)).is_accept());
    }

    #[test]
    fn odd_self_loop_rejected() {
        let c = FiniteChain::new(vec![vec![(0, int(1))]], vec![1]).unwrap();
        assert!(check_pmsm(&c, &[vec![int(5), int(0)]]).is_reject());
        let c = FiniteChain::new(vec![vec![(0, int(1))]], vec![2]).unwrap();
        assert!(check_pmsm(&c, &[vec![int(0), int(0)]]).is_accept());
    }

    #[test]
    fn dvssm_geometric() {
        let (c, p) = geometric();
        // Exact geometric distribution needs infinite support; any truncation leaks.
        let trunc = vec![vec![int(0), rat(1, 2), rat(1, 4), rat(1, 4)], vec![int(1), int(0), int(0), int(0)]];
        assert!(check_dvssm(&c, &p, &trunc).is_reject());
        let acyclic = FiniteChain::new(vec![vec![(1, int(1))], vec![(1, int(1))]], vec![3, 2]).unwrap();
        let r = vec![vec![int(0), int(1)], vec![int(1), int(0)]];
        assert!(check_dvssm(&acyclic, &p, &r).is_accept());
    }

    #[test]
    fn map_structure() {
        let c = FiniteChain::new(vec![vec![(0, int(1))]], vec![1]).unwrap();
        let map = LexPmsMap {
            shape: vec![1],
            lev: BTreeMap::from([(0usize, Lev::Star)]),
            values: BTreeMap::from([(0usize, vec![vec![int(0)]])]),
        };
        assert!(matches!(check_lexpmsm_map(&c, &map), Verdict::Reject { reason, .. } if reason.contains("odd")));
    }
}
