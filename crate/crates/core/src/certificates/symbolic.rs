//! Symbolic checkers over a pCFG with a priority partition.
//!
//! `𝕏r` at a region is expanded into guarded cases: one per region piece,
//! enabled command and choice of target piece (or "outside every region")
//! for each branch, with the target guards pulled back through the branch
//! updates. Cases whose guard is provably empty are dropped. Values outside
//! every region count as zero. Each resulting inequality is a linear
//! entailment decided exactly; nonlinear ones make the verdict unknown.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use super::{Lev, LexPmsMap, Verdict, Witness};
use crate::lexorder::Level;
use crate::model::{complement_of_union, feasibility, Feasibility, Guard, Pcfg, PriorityPartition, RegionKey, System};
use crate::poly::Polynomial;
use crate::pqe::{check_validity, Validity};
use crate::rational::Rat;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseBranch {
    pub weight: Rat,
    /// `None` when the successor lies outside every region.
    pub target: Option<RegionKey>,
    pub update: Vec<Polynomial>,
}

/// One guarded case of the next-step operator at a region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case {
    pub key: RegionKey,
    pub command: usize,
    pub guard: Guard,
    pub branches: Vec<CaseBranch>,
}

impl Case {
    /// `Σ w · value(target)∘update`, with zero outside every region.
    pub fn next<T>(&self, zero: T, mut add: impl FnMut(&mut T, &Rat, RegionKey, &[Polynomial])) -> T {
        let mut acc = zero;
        for b in &self.branches {
            if let Some(k) = b.target {
                add(&mut acc, &b.weight, k, &b.update);
            }
        }
        acc
    }
}

/// Expands every region piece into its next-step cases.
pub fn expand_cases(pcfg: &Pcfg, partition: &PriorityPartition) -> Vec<Case> {
    let n = pcfg.nvars();
    let maybe = |g: &Guard| feasibility(n, &g.atoms) != Feasibility::Infeasible;
    let nloc = pcfg.locations.len();
    let mut targets: Vec<Vec<(Option<RegionKey>, Guard)>> = Vec::with_capacity(nloc);
    for l in 0..nloc {
        let pieces: Vec<(Option<RegionKey>, Guard)> =
            partition.regions_at(l).map(|r| (Some((r.location, r.priority)), r.guard.clone())).collect();
        let guards: Vec<Guard> = pieces.iter().map(|(_, g)| g.clone()).collect();
        let mut all = pieces;
        all.extend(complement_of_union(&guards).into_iter().map(|g| (None, g)));
        targets.push(all);
    }
    let mut out = Vec::new();
    for region in &partition.regions {
        let key = (region.location, region.priority);
        for (ci, cmd) in pcfg.commands[region.location].iter().enumerate() {
            let base = region.guard.and(&cmd.guard);
            if !maybe(&base) {
                continue;
            }
            let mut partial: Vec<(Guard, Vec<CaseBranch>)> = vec![(base, Vec::new())];
            for b in &cmd.dist.branches {
                let mut next = Vec::new();
                for (g, branches) in &partial {
                    for (target, tg) in &targets[b.target] {
                        let g2 = g.and(&tg.compose(&b.update));
                        if maybe(&g2) {
                            let mut bs = branches.clone();
                            bs.push(CaseBranch { weight: b.weight.clone(), target: *target, update: b.update.clone() });
                            next.push((g2, bs));
                        }
                    }
                }
                partial = next;
            }
            out.extend(partial.into_iter().map(|(guard, branches)| Case { key, command: ci, guard, branches }));
        }
    }
    out
}

pub fn key_label(pcfg: &Pcfg, key: RegionKey) -> String {
    format!("{}/{}", pcfg.locations[key.0], key.1)
}

/// Flat vector certificate per region; missing regions are zero.
pub type VecCert = BTreeMap<RegionKey, Vec<Polynomial>>;

fn zero_vec(n: usize, dim: usize) -> Vec<Polynomial> {
    vec![Polynomial::zero(n); dim]
}

/// What a region must satisfy, in flat 1-based component positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Req {
    Nothing,
    /// Strict at one uniform level `≤ upto`.
    Strict { upto: usize },
    /// Componentwise `≥` on `1..=upto`, or strict at a uniform level `≤ upto`.
    NonStrict { upto: usize },
    /// Strict at exactly this level.
    At(usize),
    /// Componentwise `≥` on `1..=upto`.
    ComponentGe { upto: usize },
}

enum Outcome {
    Ok(Option<usize>),
    Fail(String, Option<Witness>),
    Unknown(String),
}

/// Decides entailments for the cases of one region, with memoisation.
struct RegionCheck<'a> {
    sys: &'a System,
    cases: Vec<&'a Case>,
    diffs: Vec<Vec<Polynomial>>,
    memo: RefCell<HashMap<(usize, bool), Validity>>,
    witness_case: RefCell<HashMap<usize, usize>>,
}

impl<'a> RegionCheck<'a> {
    fn new(sys: &'a System, cases: Vec<&'a Case>, cert: &VecCert, dim: usize) -> Self {
        let n = sys.pcfg.nvars();
        let zero = zero_vec(n, dim);
        let value = |k: RegionKey| cert.get(&k).unwrap_or(&zero);
        let diffs = cases
            .iter()
            .map(|c| {
                let here = value(c.key);
                let next = c.next(zero_vec(n, dim), |acc, w, k, upd| {
                    for (a, p) in acc.iter_mut().zip(value(k)) {
                        *a = &*a + &p.compose(upd).scale(w);
                    }
                });
                here.iter().zip(&next).map(|(h, x)| h - x).collect()
            })
            .collect();
        RegionCheck { sys, cases, diffs, memo: RefCell::new(HashMap::new()), witness_case: RefCell::new(HashMap::new()) }
    }

    /// Whether `r_k − 𝕏r_k ≥ 1` (strict) or `≥ 0` holds on every case.
    fn holds(&self, k: usize, strict: bool) -> Validity {
        if let Some(v) = self.memo.borrow().get(&(k, strict)) {
            return v.clone();
        }
        let n = self.sys.pcfg.nvars();
        let mut result = Validity::Valid;
        for (ci, (c, d)) in self.cases.iter().zip(&self.diffs).enumerate() {
            let target = if strict { &d[k - 1] - &Polynomial::constant(n, Rat::one()) } else { d[k - 1].clone() };
            match check_validity(n, &c.guard.atoms, &target, false) {
                Validity::Valid => {}
                Validity::Invalid(w) => {
                    self.witness_case.borrow_mut().insert(k, ci);
                    result = Validity::Invalid(w);
                    break;
                }
                Validity::Unknown => result = Validity::Unknown,
            }
        }
        self.memo.borrow_mut().insert((k, strict), result.clone());
        result
    }

    fn witness(&self, w: Vec<Rat>) -> Option<Witness> {
        let key = self.cases.first().map(|c| c.key)?;
        Some(Witness { at: self.sys.pcfg.locations[key.0].clone(), point: Some(w) })
    }

    fn component_ge(&self, upto: usize) -> Outcome {
        let mut unknown = false;
        for k in 1..=upto {
            match self.holds(k, false) {
                Validity::Valid => {}
                Validity::Invalid(w) => return Outcome::Fail(format!("component {k} increases"), self.witness(w)),
                Validity::Unknown => unknown = true,
            }
        }
        if unknown {
            Outcome::Unknown("nonlinear entailment".into())
        } else {
            Outcome::Ok(None)
        }
    }

    fn strict(&self, upto: usize) -> Outcome {
        let mut unknown = false;
        let mut last = None;
        for l in 1..=upto {
            match self.holds(l, true) {
                Validity::Valid if !unknown => return Outcome::Ok(Some(l)),
                Validity::Valid => return Outcome::Unknown("nonlinear entailment".into()),
                Validity::Invalid(w) => last = Some((format!("no uniform strict decrease up to component {l}"), w)),
                Validity::Unknown => unknown = true,
            }
            match self.holds(l, false) {
                Validity::Valid => {}
                Validity::Unknown => unknown = true,
                Validity::Invalid(w) => {
                    if unknown {
                        return Outcome::Unknown("nonlinear entailment".into());
                    }
                    return Outcome::Fail(format!("component {l} increases before any strict decrease"), self.witness(w));
                }
            }
        }
        match (unknown, last) {
            (true, _) => Outcome::Unknown("nonlinear entailment".into()),
            (false, Some((why, w))) => Outcome::Fail(why, self.witness(w)),
            (false, None) => Outcome::Fail("no components to decrease".into(), None),
        }
    }

    fn run(&self, req: Req) -> Outcome {
        match req {
            Req::Nothing => Outcome::Ok(None),
            Req::ComponentGe { upto } => self.component_ge(upto),
            Req::Strict { upto } => self.strict(upto),
            Req::NonStrict { upto } => match self.component_ge(upto) {
                Outcome::Ok(_) => Outcome::Ok(None),
                other => match self.strict(upto) {
                    Outcome::Ok(l) => Outcome::Ok(l),
                    Outcome::Unknown(r) => Outcome::Unknown(r),
                    Outcome::Fail(..) => other,
                },
            },
            Req::At(f) => {
                if let o @ (Outcome::Fail(..) | Outcome::Unknown(_)) = self.component_ge(f - 1) {
                    return o;
                }
                match self.holds(f, true) {
                    Validity::Valid => Outcome::Ok(Some(f)),
                    Validity::Invalid(w) => Outcome::Fail(format!("no strict decrease at component {f}"), self.witness(w)),
                    Validity::Unknown => Outcome::Unknown("nonlinear entailment".into()),
                }
            }
        }
    }
}

/// Every component is non-negative on every region piece.
fn non_negative(sys: &System, cert: &VecCert) -> Option<Verdict> {
    let n = sys.pcfg.nvars();
    let mut unknown = None;
    for r in &sys.partition.regions {
        let Some(v) = cert.get(&(r.location, r.priority)) else { continue };
        for (k, p) in v.iter().enumerate() {
            match check_validity(n, &r.guard.atoms, p, false) {
                Validity::Valid => {}
                Validity::Invalid(w) => {
                    return Some(Verdict::reject(
                        format!("component {} negative on {}", k + 1, key_label(&sys.pcfg, (r.location, r.priority))),
                        Some(Witness { at: sys.pcfg.locations[r.location].clone(), point: Some(w) }),
                    ))
                }
                Validity::Unknown => unknown = Some(Verdict::Unknown { reason: "nonlinear non-negativity".into() }),
            }
        }
    }
    unknown
}

fn check_vector(sys: &System, cert: &VecCert, dim: usize, req: impl Fn(RegionKey) -> Req, shape: Option<&[usize]>) -> Verdict {
    if cert.values().any(|v| v.len() != dim) {
        return Verdict::reject(format!("every region needs {dim} components"), None);
    }
    let declared = sys.partition.keys();
    if let Some(k) = cert.keys().find(|k| !declared.contains(k)) {
        return Verdict::reject(format!("certificate mentions undeclared region {:?}", k), None);
    }
    let nonneg = non_negative(sys, cert);
    if let Some(v @ Verdict::Reject { .. }) = &nonneg {
        return v.clone();
    }
    let cases = expand_cases(&sys.pcfg, &sys.partition);
    let mut levels = BTreeMap::new();
    let mut unknown = nonneg.map(|v| v.to_string());
    for key in declared {
        let mine: Vec<&Case> = cases.iter().filter(|c| c.key == key).collect();
        let check = RegionCheck::new(sys, mine, cert, dim);
        match check.run(req(key)) {
            Outcome::Ok(Some(l)) => {
                let lev = match shape {
                    Some(s) => Level::from_flat(l, s).map(|x| x.to_string()).unwrap_or_else(|| l.to_string()),
                    None => l.to_string(),
                };
                levels.insert(key_label(&sys.pcfg, key), lev);
            }
            Outcome::Ok(None) => {}
            Outcome::Fail(why, w) => return Verdict::reject(format!("{}: {why}", key_label(&sys.pcfg, key)), w),
            Outcome::Unknown(why) => unknown = Some(format!("{}: {why}", key_label(&sys.pcfg, key))),
        }
    }
    match unknown {
        Some(reason) => Verdict::Unknown { reason },
        None => Verdict::Accept { levels },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairRole {
    AminusB,
    B,
    Other,
}

/// Role of priority `p` for the Streett pair `(S≤2i−1, S≤2i−2)`.
fn role(p: usize, i: usize) -> PairRole {
    if p + 2 <= 2 * i {
        PairRole::B
    } else if p == 2 * i - 1 {
        PairRole::AminusB
    } else {
        PairRole::Other
    }
}

/// Scalar per region.
pub type ScalarCert = BTreeMap<RegionKey, Polynomial>;

fn lift(r: &ScalarCert) -> VecCert {
    r.iter().map(|(k, p)| (*k, vec![p.clone()])).collect()
}

/// `𝕏r ≤ r − [A∖B]` off `B`, `r ≥ 0`, for Streett pair `pair`.
pub fn check_gssm(sys: &System, pair: usize, r: &ScalarCert) -> Verdict {
    check_lexgssm(sys, pair, &lift(r))
}

pub fn check_lexgssm(sys: &System, pair: usize, r: &VecCert) -> Verdict {
    let dim = r.values().next().map(Vec::len).unwrap_or(1);
    check_vector(
        sys,
        r,
        dim,
        |(_, p)| match role(p, pair) {
            PairRole::B => Req::Nothing,
            PairRole::AminusB => Req::Strict { upto: dim },
            PairRole::Other => Req::NonStrict { upto: dim },
        },
        None,
    )
}

/// `𝕏r ≤ r − ε·[A∖B] + M·[B]` and `r ≥ 0`.
pub fn check_ssm(sys: &System, pair: usize, r: &ScalarCert, eps: &Rat, m: &Rat) -> Verdict {
    let n = sys.pcfg.nvars();
    let vc = lift(r);
    if let Some(v) = non_negative(sys, &vc) {
        return v;
    }
    let zero = Polynomial::zero(n);
    let value = |k: RegionKey| r.get(&k).unwrap_or(&zero);
    let mut unknown = None;
    for c in expand_cases(&sys.pcfg, &sys.partition) {
        let next = c.next(Polynomial::zero(n), |acc, w, k, upd| *acc = &*acc + &value(k).compose(upd).scale(w));
        let offset = match role(c.key.1, pair) {
            PairRole::AminusB => -eps.clone(),
            PairRole::B => m.clone(),
            PairRole::Other => Rat::zero(),
        };
        let slack = &(value(c.key) - &next) + &Polynomial::constant(n, offset);
        match check_validity(n, &c.guard.atoms, &slack, false) {
            Validity::Valid => {}
            Validity::Invalid(w) => {
                return Verdict::reject(
                    format!("{}: supermartingale inequality fails", key_label(&sys.pcfg, c.key)),
                    Some(Witness { at: sys.pcfg.locations[c.key.0].clone(), point: Some(w) }),
                )
            }
            Validity::Unknown => unknown = Some(key_label(&sys.pcfg, c.key)),
        }
    }
    match unknown {
        Some(k) => Verdict::Unknown { reason: format!("{k}: nonlinear entailment") },
        None => Verdict::accept(),
    }
}

/// Flat `d`-dimensional PMSM.
pub fn check_pmsm(sys: &System, r: &VecCert) -> Verdict {
    let d = sys.partition.max_priority;
    check_vector(sys, r, d, |(_, p)| if p % 2 == 1 { Req::Strict { upto: p } } else { Req::NonStrict { upto: p } }, None)
}

/// Nested certificate with block sizes `shape`; `reduced` selects the
/// `⌈p/2⌉` truncation.
pub fn check_nested(sys: &System, shape: &[usize], r: &BTreeMap<RegionKey, Vec<Vec<Polynomial>>>, reduced: bool) -> Verdict {
    let d = sys.partition.max_priority;
    let need = if reduced { d.div_ceil(2) } else { d };
    if shape.len() < need || shape.contains(&0) {
        return Verdict::reject(format!("shape {shape:?} needs {need} non-empty blocks"), None);
    }
    if r.values().any(|b| b.iter().map(Vec::len).collect::<Vec<_>>() != shape) {
        return Verdict::reject("region values do not match the shape", None);
    }
    let flat: VecCert = r.iter().map(|(k, b)| (*k, b.iter().flatten().cloned().collect())).collect();
    let dim = shape.iter().sum();
    let upto = |p: usize| shape[..if reduced { p.div_ceil(2) } else { p }].iter().sum();
    check_vector(
        sys,
        &flat,
        dim,
        |(_, p)| if p % 2 == 1 { Req::Strict { upto: upto(p) } } else { Req::NonStrict { upto: upto(p) } },
        Some(shape),
    )
}

/// Region-uniform levels as declared by the map.
pub fn check_lexpmsm_map(sys: &System, map: &LexPmsMap<RegionKey, Polynomial>) -> Verdict {
    let keys = sys.partition.keys();
    let d = sys.partition.max_priority;
    let mut issues = map.structural_issues(&keys, |k| k.1);
    if map.shape.len() != d.div_ceil(2) {
        issues.push(format!("{} blocks for maximum priority {d}", map.shape.len()));
    }
    if !issues.is_empty() {
        return Verdict::reject(format!("malformed map: {}", issues.join("; ")), None);
    }
    let flat: VecCert = map.values.iter().map(|(k, b)| (*k, b.iter().flatten().cloned().collect())).collect();
    let dim = map.shape.iter().sum();
    let shape = map.shape.clone();
    check_vector(
        sys,
        &flat,
        dim,
        |k| match map.lev[&k] {
            Lev::At(l) => Req::At(l.flat(&shape)),
            Lev::Star => Req::ComponentGe { upto: shape[..k.1.div_ceil(2)].iter().sum() },
        },
        Some(&map.shape),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::json::parse_system;

    fn walk() -> System {
        // x ≥ 1: x := x − 1; x < 1: stay. Region x ≥ 1 odd, x in [0,1) even.
        parse_system(
            r#"{"vars":["x"],"locations":["l"],
                "commands":{"l":[{"guard":["x >= 1"],"branches":[{"target":"l","update":["x - 1"]}]},
                                 {"guard":["x < 1"],"branches":[{"target":"l"}]}]},
                "max_priority":4,
                "partition":[{"location":"l","priority":3,"guard":["x >= 1"]},
                             {"location":"l","priority":2,"guard":["x >= 0","x < 1"]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn cases_cover_targets() {
        let sys = walk();
        let cases = expand_cases(&sys.pcfg, &sys.partition);
        // From x ≥ 1 the successor x − 1 lands in priority 3 or 2; from [0,1) it stays.
        assert_eq!(cases.iter().filter(|c| c.key == (0, 3)).count(), 2);
        assert_eq!(cases.iter().filter(|c| c.key == (0, 2)).count(), 1);
    }

    #[test]
    fn gssm_on_decrement() {
        let sys = walk();
        let names = sys.pcfg.var_names.clone();
        let x = Polynomial::parse("x", &names).unwrap();
        let r: ScalarCert = BTreeMap::from([((0, 3), x.clone()), ((0, 2), Polynomial::zero(1))]);
        assert!(check_gssm(&sys, 2, &r).is_accept());
        let half = BTreeMap::from([((0, 3), x.scale(&crate::rational::rat(1, 2)))]);
        assert!(check_gssm(&sys, 2, &half).is_reject());
        let neg = BTreeMap::from([((0, 3), x.clone()), ((0, 2), Polynomial::parse("x - 1", &names).unwrap())]);
        assert!(check_gssm(&sys, 2, &neg).is_reject());
    }
}
