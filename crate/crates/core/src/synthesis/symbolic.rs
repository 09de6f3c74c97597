//! Template synthesis over a pCFG with a priority partition.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use super::{drive, ensure_sound, RoundSolution, Rounds, SynthesisError, SynthesisResult, SynthesisTrace, TemplateConfig};
use crate::certificates::symbolic::{check_lexpmsm_map, expand_cases, key_label, Case};
use crate::lp::VarKind;
use crate::model::{Rel, RegionKey, System};
use crate::poly::{LinForm, ParamPoly, Polynomial};
use crate::pqe::{check_validity, Backend, ParamSystem, Pqe, SolveOutcome, Validity};
use crate::rational::Rat;

/// One unknown polynomial per region.
#[derive(Debug, Clone)]
pub struct Templates {
    pub polys: BTreeMap<RegionKey, ParamPoly>,
    pub names: Vec<String>,
}

impl Templates {
    pub fn new(sys: &System, degree: u32) -> Self {
        let n = sys.pcfg.nvars();
        let mut next = 0;
        let mut polys = BTreeMap::new();
        let mut names = Vec::new();
        for key in sys.partition.keys() {
            let (p, used) = ParamPoly::template(n, degree, &mut next);
            for (i, _) in used.iter().enumerate() {
                names.push(format!("R[{}].c{i}", key_label(&sys.pcfg, key)));
            }
            polys.insert(key, p);
        }
        Templates { polys, names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// `R_key − 𝕏R` on one case.
    pub fn difference(&self, case: &Case) -> ParamPoly {
        let n = self.polys.values().next().map(ParamPoly::nvars).unwrap_or(0);
        let zero = ParamPoly::zero(n);
        let next = case.next(ParamPoly::zero(n), |acc, w, k, upd| {
            acc.add_scaled(&self.polys.get(&k).unwrap_or(&zero).compose(upd), w);
        });
        let mut d = self.polys.get(&case.key).cloned().unwrap_or(zero);
        d.add_scaled(&next, &-Rat::one());
        d
    }
}

/// Entailments of one round: `c0` holds the hard constraints (`R ≥ 𝕏R` on
/// the active regions, `R ≥ 0` on every piece), `c1` the strict ones
/// (`R ≥ 1 + 𝕏R`) per active region.
#[derive(Debug, Clone)]
pub struct Constraints {
    pub c0: Vec<Pqe>,
    pub c1: Vec<(RegionKey, Pqe)>,
}

pub fn build_constraints(sys: &System, cases: &[Case], active: &BTreeSet<RegionKey>, templates: &Templates) -> Constraints {
    let n = sys.pcfg.nvars();
    let universals = sys.pcfg.var_names.clone();
    let mut c0 = Vec::new();
    let mut c1 = Vec::new();
    for r in &sys.partition.regions {
        let key = (r.location, r.priority);
        c0.push(Pqe {
            universals: universals.clone(),
            antecedent: r.guard.atoms.clone(),
            consequent: templates.polys[&key].clone(),
            strict: false,
            label: format!("nonneg {}", key_label(&sys.pcfg, key)),
        });
    }
    for (i, c) in cases.iter().enumerate().filter(|(_, c)| active.contains(&c.key)) {
        let d = templates.difference(c);
        let label = format!("{} case {i}", key_label(&sys.pcfg, c.key));
        c0.push(Pqe {
            universals: universals.clone(),
            antecedent: c.guard.atoms.clone(),
            consequent: d.clone(),
            strict: false,
            label: format!("{label} ge"),
        });
        let mut strict = d;
        strict.add_poly(&Polynomial::constant(n, Rat::one()), &-Rat::one());
        c1.push((
            c.key,
            Pqe { universals: universals.clone(), antecedent: c.guard.atoms.clone(), consequent: strict, strict: false, label },
        ));
    }
    Constraints { c0, c1 }
}

struct SymbolicRounds<'a> {
    sys: &'a System,
    config: &'a TemplateConfig,
    backend: &'a Backend,
    cases: Vec<Case>,
    templates: Templates,
}

impl SymbolicRounds<'_> {
    /// The hard constraints plus `c1` relaxed to `R ≥ ε_key + 𝕏R`.
    fn param_system(&self, active: &BTreeSet<RegionKey>) -> (ParamSystem, BTreeMap<RegionKey, usize>) {
        let cons = build_constraints(self.sys, &self.cases, active, &self.templates);
        let mut ps = ParamSystem::new();
        for name in &self.templates.names {
            ps.add_param(name.clone(), VarKind::Free);
        }
        if let Some(b) = &self.config.coeff_bound {
            for p in 0..self.templates.len() {
                let mut hi = LinForm::constant(b.clone());
                hi.add_param(p, &-Rat::one());
                ps.add_constraint(hi, Rel::Ge, format!("{} upper bound", self.templates.names[p]));
                let mut lo = LinForm::constant(b.clone());
                lo.add_param(p, &Rat::one());
                ps.add_constraint(lo, Rel::Ge, format!("{} lower bound", self.templates.names[p]));
            }
        }
        let mut eps = BTreeMap::new();
        for &key in active {
            let e = ps.add_param(format!("eps[{}]", key_label(&self.sys.pcfg, key)), VarKind::NonNeg);
            let mut le_one = LinForm::constant(Rat::one());
            le_one.add_param(e, &-Rat::one());
            ps.add_constraint(le_one, Rel::Ge, format!("eps[{}] <= 1", key_label(&self.sys.pcfg, key)));
            eps.insert(key, e);
        }
        for (key, mut pqe) in cons.c1 {
            let mut shift = LinForm::constant(Rat::one());
            shift.add_param(eps[&key], &-Rat::one());
            pqe.consequent.add_constant(&shift);
            ps.add_pqe(pqe);
        }
        for pqe in cons.c0.into_iter().filter(|p| p.label.starts_with("nonneg")) {
            ps.add_pqe(pqe);
        }
        (ps, eps)
    }

    fn strict_keys(&self, active: &BTreeSet<RegionKey>, values: &BTreeMap<RegionKey, Polynomial>) -> BTreeSet<RegionKey> {
        let n = self.sys.pcfg.nvars();
        let zero = Polynomial::zero(n);
        let value = |k: RegionKey| values.get(&k).unwrap_or(&zero);
        let one = Polynomial::constant(n, Rat::one());
        active
            .iter()
            .copied()
            .filter(|key| {
                self.cases.iter().filter(|c| c.key == *key).all(|c| {
                    let next = c.next(Polynomial::zero(n), |acc, w, k, upd| *acc = &*acc + &value(k).compose(upd).scale(w));
                    let slack = &(value(*key) - &next) - &one;
                    check_validity(n, &c.guard.atoms, &slack, false) == Validity::Valid
                })
            })
            .collect()
    }
}

impl Rounds for SymbolicRounds<'_> {
    type Key = RegionKey;
    type Val = Polynomial;

    fn keys(&self) -> Vec<RegionKey> {
        self.sys.partition.keys()
    }

    fn priority(&self, key: &RegionKey) -> usize {
        key.1
    }

    fn max_priority(&self) -> usize {
        self.sys.partition.max_priority
    }

    fn label(&self, key: &RegionKey) -> String {
        key_label(&self.sys.pcfg, *key)
    }

    fn zero(&self) -> Polynomial {
        Polynomial::zero(self.sys.pcfg.nvars())
    }

    fn solve(&mut self, active: &BTreeSet<RegionKey>) -> Result<RoundSolution<RegionKey, Polynomial>, String> {
        let (mut ps, eps) = self.param_system(active);
        let mut total = LinForm::default();
        for &e in eps.values() {
            total.add_param(e, &Rat::one());
        }
        let optimise = self.config.optimise && self.backend.supports_opt();
        let outcome = if optimise {
            ps.objective = Some(total);
            self.backend.solve(&ps)
        } else {
            total.constant = -Rat::one();
            ps.add_constraint(total, Rel::Ge, "slack sum >= 1");
            self.backend.solve(&ps)
        };
        let (model, note) = match outcome {
            SolveOutcome::Sat(m) => (m, if optimise { "optimal" } else { "threshold met" }),
            SolveOutcome::Unsat if !optimise => (vec![Rat::zero(); ps.num_params()], "threshold unsat, zero solution"),
            SolveOutcome::Unsat => return Err("hard constraints unsatisfiable".into()),
            SolveOutcome::Unknown(why) => return Err(why),
        };
        let min_eps = eps.values().map(|&e| &model[e]).filter(|v| v.is_positive()).min().cloned();
        let Some(min_eps) = min_eps else {
            let values = self.keys().into_iter().map(|k| (k, self.zero())).collect();
            return Ok(RoundSolution { values, strict: BTreeSet::new(), outcome: format!("{note}, no positive slack") });
        };
        let scale = Rat::one() / &min_eps;
        let values: BTreeMap<RegionKey, Polynomial> =
            self.templates.polys.iter().map(|(k, t)| (*k, t.instantiate(&model).scale(&scale))).collect();
        let strict = self.strict_keys(active, &values);
        Ok(RoundSolution { values, strict, outcome: format!("{note}, rescaled by {scale}") })
    }
}

/// Synthesises a region-uniform LexPMSM map with polynomial templates of
/// `config.degree`. The result is re-checked before it is returned.
pub fn synthesize(
    sys: &System,
    config: &TemplateConfig,
    backend: &Backend,
) -> Result<(SynthesisResult<RegionKey, Polynomial>, SynthesisTrace), SynthesisError> {
    let mut problem = SymbolicRounds {
        sys,
        config,
        backend,
        cases: expand_cases(&sys.pcfg, &sys.partition),
        templates: Templates::new(sys, config.degree),
    };
    let mut trace = SynthesisTrace::default();
    let result = drive(&mut problem, config.max_rounds, &mut trace)?;
    if let SynthesisResult::Found(map) = &result {
        ensure_sound(check_lexpmsm_map(sys, map))?;
    }
    Ok((result, trace))
}

/// Single-pair SSM template system `R − 𝕏R ≥ ε·[A∖B] − M·[B]`, `R ≥ 0`,
/// with unknown `ε > 0` and `0 ≤ M ≤ m_bound`.
pub fn ssm_template_system(sys: &System, pair: usize, degree: u32, m_bound: &Rat) -> ParamSystem {
    let templates = Templates::new(sys, degree);
    let mut ps = ParamSystem::new();
    for name in &templates.names {
        ps.add_param(name.clone(), VarKind::Free);
    }
    let eps = ps.add_param("epsilon", VarKind::NonNeg);
    ps.add_constraint(LinForm::param(eps), Rel::Gt, "epsilon > 0");
    let m = ps.add_param("M", VarKind::NonNeg);
    let mut le = LinForm::constant(m_bound.clone());
    le.add_param(m, &-Rat::one());
    ps.add_constraint(le, Rel::Ge, "M bound");
    let all: BTreeSet<RegionKey> = sys.partition.keys().into_iter().collect();
    let cases = expand_cases(&sys.pcfg, &sys.partition);
    let cons = build_constraints(sys, &cases, &all, &templates);
    for mut pqe in cons.c0 {
        if !pqe.label.starts_with("nonneg") {
            let p = key_of_label(sys, &pqe.label);
            let mut shift = LinForm::default();
            if p + 2 <= 2 * pair {
                shift.add_param(m, &Rat::one());
            } else if p == 2 * pair - 1 {
                shift.add_param(eps, &-Rat::one());
            }
            pqe.consequent.add_constant(&shift);
        }
        ps.add_pqe(pqe);
    }
    ps
}

fn key_of_label(sys: &System, label: &str) -> usize {
    let head = label.split(' ').next().unwrap_or_default();
    sys.partition
        .keys()
        .into_iter()
        .find(|k| key_label(&sys.pcfg, *k) == head)
        .map(|k| k.1)
        .expect("labels come from declared keys")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::Lev;
    use crate::lexorder::Level;
    use crate::model::json::parse_system;

    fn walk() -> System {
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
    fn decrement_walk_synthesises() {
        let sys = walk();
        for optimise in [true, false] {
            let config = TemplateConfig { optimise, ..Default::default() };
            let (res, trace) = synthesize(&sys, &config, &Backend::ExactLp).unwrap();
            let SynthesisResult::Found(map) = res else { panic!("expected a map") };
            assert_eq!(map.lev[&(0, 3)], Lev::At(Level::new(1, 1)));
            assert_eq!(map.lev[&(0, 2)], Lev::Star);
            assert_eq!(map.shape, vec![1, 1]);
            assert!(!trace.rounds.is_empty());
        }
    }

    #[test]
    fn self_loop_on_odd_is_not_found() {
        let sys = parse_system(
            r#"{"vars":["x"],"locations":["l"],
                "commands":{"l":[{"guard":[],"branches":[{"target":"l"}]}]},
                "max_priority":2,
                "partition":[{"location":"l","priority":1,"guard":[]}]}"#,
        )
        .unwrap();
        let (res, _) = synthesize(&sys, &TemplateConfig::default(), &Backend::ExactLp).unwrap();
        assert!(matches!(res, SynthesisResult::NotFound { j: 1, .. }));
    }
}
