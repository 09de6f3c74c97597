//! Polynomial quantified entailments over unknown template parameters.
//!
//! A [`Pqe`] reads `∀x. ⋀ antecedent ⇒ consequent(t, x) ⋈ 0`. The antecedent
//! is parameter-free; the consequent is affine in the parameters `t`. When
//! everything is of degree ≤ 1 in `x`, [`ParamSystem::add_pqe`] applies the
//! affine Farkas lemma and produces linear constraints over `t` and fresh
//! multipliers. Higher-degree entailments are kept verbatim and can only be
//! discharged by an external solver.
//!
//! Strict consequents: for a non-empty antecedent set `S` with `≥` rows `a_i`
//! and `>` rows `g_k`, `∀x ∈ S. c·x + d > 0` holds iff there are multipliers
//! `λ ≥ 0` with `c = Σλa`, `d = Σλb + λ₀`, `λ₀ ≥ 0` and `λ₀ + Σ_k λ_k > 0`.
//! Equality rows get free multipliers. Antecedents that are infeasible
//! (including their strict rows) are dropped, since the entailment is vacuous.

pub mod smt;

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::lp::{Cmp, LinearProgram, LpOutcome, VarKind};
use crate::model::{feasibility, Atom, Feasibility, Rel};
use crate::poly::{LinForm, ParamPoly, Polynomial};
use crate::rational::{format_rat, Rat};

pub use smt::{emit_smt, run_solver, SolverOutput};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum PqeError {
    #[error("entailment `{0}` is not linear in its universal variables")]
    NotLinear(String),
    #[error("solver: {0}")]
    Solver(String),
}

/// `∀ universals. ⋀ antecedent ⇒ consequent ≥ 0` (or `> 0` when strict).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pqe {
    pub universals: Vec<String>,
    pub antecedent: Vec<Atom>,
    pub consequent: ParamPoly,
    pub strict: bool,
    pub label: String,
}

impl Pqe {
    pub fn is_linear(&self) -> bool {
        self.antecedent.iter().all(Atom::is_linear) && self.consequent.degree() <= 1
    }

    /// Consequent with the parameters fixed.
    pub fn instantiate(&self, model: &[Rat]) -> Polynomial {
        self.consequent.instantiate(model)
    }

    pub fn holds_at(&self, model: &[Rat], point: &[Rat]) -> bool {
        if !self.antecedent.iter().all(|a| a.holds(point)) {
            return true;
        }
        let v = self.instantiate(model).eval(point);
        if self.strict {
            v.is_positive()
        } else {
            !v.is_negative()
        }
    }
}

/// Result of deciding a parameter-free entailment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Valid,
    /// A point satisfying the antecedent and violating the consequent.
    Invalid(Vec<Rat>),
    Unknown,
}

/// Decides `∀x. ⋀ antecedent ⇒ consequent ⋈ 0` for a concrete consequent.
/// Exact when every polynomial is of degree ≤ 1.
pub fn check_validity(nvars: usize, antecedent: &[Atom], consequent: &Polynomial, strict: bool) -> Validity {
    let negated = Atom::new(-consequent, if strict { Rel::Ge } else { Rel::Gt });
    let mut atoms = antecedent.to_vec();
    atoms.push(negated);
    match feasibility(nvars, &atoms) {
        Feasibility::Infeasible => Validity::Valid,
        Feasibility::Feasible(w) => Validity::Invalid(w),
        Feasibility::Unknown => Validity::Unknown,
    }
}

/// A constraint `form ⋈ 0` over parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub form: LinForm,
    pub rel: Rel,
    pub label: String,
}

/// Parameter values indexed like [`ParamSystem::names`].
pub type Model = Vec<Rat>;

/// Existential constraint system over template parameters and multipliers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParamSystem {
    pub names: Vec<String>,
    pub kinds: Vec<VarKind>,
    pub constraints: Vec<Constraint>,
    /// Linear form to maximise.
    pub objective: Option<LinForm>,
    /// Entailments that could not be reduced.
    pub raw: Vec<Pqe>,
}

impl ParamSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_param(&mut self, name: impl Into<String>, kind: VarKind) -> usize {
        self.names.push(name.into());
        self.kinds.push(kind);
        self.names.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.names.len()
    }

    pub fn add_constraint(&mut self, form: LinForm, rel: Rel, label: impl Into<String>) {
        if let Some(p) = form.max_param() {
            assert!(p < self.names.len(), "constraint references undeclared parameter {p}");
        }
        self.constraints.push(Constraint { form, rel, label: label.into() });
    }

    /// Reduces a linear entailment by Farkas' lemma, or keeps it raw.
    pub fn add_pqe(&mut self, pqe: Pqe) {
        if let Err(PqeError::NotLinear(_)) = self.add_farkas(&pqe) {
            self.raw.push(pqe);
        }
    }

    /// Farkas reduction into this system. Fails with `NotLinear` without
    /// touching the system.
    pub fn add_farkas(&mut self, pqe: &Pqe) -> Result<(), PqeError> {
        let nx = pqe.universals.len();
        let Some((c, d)) = pqe.consequent.as_affine() else {
            return Err(PqeError::NotLinear(pqe.label.clone()));
        };
        let mut rows = Vec::with_capacity(pqe.antecedent.len());
        for a in &pqe.antecedent {
            let Some(aff) = a.poly.as_affine() else {
                return Err(PqeError::NotLinear(pqe.label.clone()));
            };
            rows.push((aff, a.rel));
        }
        if matches!(feasibility(nx, &pqe.antecedent), Feasibility::Infeasible) {
            return Ok(());
        }
        let mut lambdas = Vec::with_capacity(rows.len());
        for (i, (_, rel)) in rows.iter().enumerate() {
            let kind = if *rel == Rel::Eq { VarKind::Free } else { VarKind::NonNeg };
            lambdas.push(self.add_param(format!("{}.lambda{}", pqe.label, i + 1), kind));
        }
        let lambda0 = self.add_param(format!("{}.lambda0", pqe.label), VarKind::NonNeg);
        for v in 0..nx {
            let mut f = c[v].clone();
            for (((coeffs, _), _), &l) in rows.iter().zip(&lambdas) {
                f.add_param(l, &-&coeffs[v]);
            }
            self.add_constraint(f, Rel::Eq, format!("{}: coefficient of {}", pqe.label, pqe.universals[v]));
        }
        let mut f = d;
        for (((_, b), _), &l) in rows.iter().zip(&lambdas) {
            f.add_param(l, &-b);
        }
        f.add_param(lambda0, &-Rat::one());
        self.add_constraint(f, Rel::Eq, format!("{}: constant", pqe.label));
        if pqe.strict {
            let mut s = LinForm::param(lambda0);
            for ((_, rel), &l) in rows.iter().zip(&lambdas) {
                if *rel == Rel::Gt {
                    s.add_param(l, &Rat::one());
                }
            }
            self.add_constraint(s, Rel::Gt, format!("{}: strictness", pqe.label));
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        self.raw.is_empty()
    }

    fn to_lp(&self) -> LinearProgram {
        let mut lp = LinearProgram::new();
        for k in &self.kinds {
            lp.add_var(*k);
        }
        for c in &self.constraints {
            let cmp = match c.rel {
                Rel::Ge => Cmp::Ge,
                Rel::Gt => Cmp::Gt,
                Rel::Eq => Cmp::Eq,
            };
            lp.add_row(c.form.coeffs.iter().map(|(p, v)| (*p, v.clone())), cmp, -c.form.constant.clone());
        }
        if let Some(obj) = &self.objective {
            lp.set_objective(obj.coeffs.iter().map(|(p, v)| (*p, v.clone())));
        }
        lp
    }
}

/// Standalone reduction of one entailment whose consequent mentions
/// parameters `0..nparams`.
pub fn farkas_reduce(pqe: &Pqe, nparams: usize) -> Result<ParamSystem, PqeError> {
    let mut sys = ParamSystem::new();
    for i in 0..nparams {
        sys.add_param(format!("t{i}"), VarKind::Free);
    }
    sys.add_farkas(pqe)?;
    Ok(sys)
}

/// Exact re-validation of a model against a system.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelReport {
    pub violated: Vec<String>,
    /// Raw entailments whose validity could not be decided exactly.
    pub undecided: Vec<String>,
}

impl ModelReport {
    pub fn is_valid(&self) -> bool {
        self.violated.is_empty() && self.undecided.is_empty()
    }
}

pub fn validate_model(sys: &ParamSystem, model: &[Rat]) -> ModelReport {
    let mut report = ModelReport::default();
    if model.len() != sys.num_params() {
        report.violated.push(format!("model has {} values for {} parameters", model.len(), sys.num_params()));
        return report;
    }
    for (i, (k, v)) in sys.kinds.iter().zip(model).enumerate() {
        if *k == VarKind::NonNeg && v.is_negative() {
            report.violated.push(format!("{} = {} is negative", sys.names[i], format_rat(v)));
        }
    }
    for c in &sys.constraints {
        if !c.rel.holds(&c.form.eval(model)) {
            report.violated.push(c.label.clone());
        }
    }
    for p in &sys.raw {
        match check_validity(p.universals.len(), &p.antecedent, &p.instantiate(model), p.strict) {
            Validity::Valid => {}
            Validity::Invalid(w) => report.violated.push(format!(
                "{} at ({})",
                p.label,
                w.iter().map(format_rat).collect::<Vec<_>>().join(", ")
            )),
            Validity::Unknown => report.undecided.push(p.label.clone()),
        }
    }
    report
}

/// How parameter systems are solved.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Backend {
    /// In-process exact simplex; linear systems only.
    #[default]
    ExactLp,
    /// SMT-LIB2 subprocess; `{file}` in the command is replaced by the
    /// document path.
    External { command: String, timeout_secs: u64, supports_opt: bool },
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::ExactLp => write!(f, "exact-lp"),
            Backend::External { command, .. } => write!(f, "external `{command}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Sat(Model),
    Unsat,
    Unknown(String),
}

impl Backend {
    pub fn supports_opt(&self) -> bool {
        match self {
            Backend::ExactLp => true,
            Backend::External { supports_opt, .. } => *supports_opt,
        }
    }

    /// Finds a model, maximising the objective when one is set and the
    /// backend can optimise. Every model is re-validated exactly before it is
    /// returned.
    pub fn solve(&self, sys: &ParamSystem) -> SolveOutcome {
        let outcome = match self {
            Backend::ExactLp => {
                if !sys.is_linear() {
                    return SolveOutcome::Unknown(format!(
                        "{} nonlinear entailments need an external solver",
                        sys.raw.len()
                    ));
                }
                match sys.to_lp().solve() {
                    LpOutcome::Optimal { point, .. } => SolveOutcome::Sat(point),
                    LpOutcome::Infeasible => SolveOutcome::Unsat,
                    LpOutcome::Unbounded => {
                        let mut plain = sys.clone();
                        plain.objective = None;
                        match plain.to_lp().feasible_point() {
                            Some(p) => SolveOutcome::Sat(p),
                            None => SolveOutcome::Unsat,
                        }
                    }
                }
            }
            Backend::External { command, timeout_secs, supports_opt } => {
                let doc = emit_smt(sys, *supports_opt);
                match run_solver(&doc, command, std::time::Duration::from_secs(*timeout_secs)) {
                    SolverOutput::Sat(values) => {
                        let model = sys
                            .names
                            .iter()
                            .enumerate()
                            .map(|(i, _)| values.get(&smt::param_symbol(i)).cloned().unwrap_or_else(Rat::zero))
                            .collect();
                        SolveOutcome::Sat(model)
                    }
                    SolverOutput::Unsat => SolveOutcome::Unsat,
                    SolverOutput::Unknown(why) => SolveOutcome::Unknown(why),
                }
            }
        };
        if let SolveOutcome::Sat(m) = &outcome {
            let report = validate_model(sys, m);
            if !report.is_valid() {
                return SolveOutcome::Unknown(format!(
                    "model failed exact validation: {}",
                    report.violated.iter().chain(&report.undecided).cloned().collect::<Vec<_>>().join("; ")
                ));
            }
        }
        outcome
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn names() -> Vec<String> {
        vec!["x".into()]
    }

    /// `u + t·x` with `u = p0`, `t = p1`.
    fn tx_plus_u() -> ParamPoly {
        let mut next = 0;
        ParamPoly::template(1, 1, &mut next).0
    }

    fn pqe(ante: &[&str], strict: bool) -> Pqe {
        Pqe {
            universals: names(),
            antecedent: ante.iter().map(|a| Atom::parse(a, &names()).unwrap()).collect(),
            consequent: tx_plus_u(),
            strict,
            label: "q".into(),
        }
    }

    #[test]
    fn hand_farkas_expansion() {
        let sys = farkas_reduce(&pqe(&["x >= 0"], false), 2).unwrap();
        assert_eq!(sys.num_params(), 4);
        // t = λ1, u = λ0
        let ok = validate_model(&sys, &[int(2), int(3), int(3), int(2)]);
        assert!(ok.is_valid(), "{ok:?}");
        let bad = validate_model(&sys, &[int(-1), int(0), int(-1), int(0)]);
        assert!(!bad.is_valid());
        match Backend::ExactLp.solve(&sys) {
            SolveOutcome::Sat(m) => assert!(validate_model(&sys, &m).is_valid()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vacuous_and_unbounded() {
        let sys = farkas_reduce(&pqe(&["0 >= 1"], false), 2).unwrap();
        assert!(sys.constraints.is_empty());
        // ∀x. x ≥ 0 with no antecedent: consequent x itself.
        let p = Pqe {
            universals: names(),
            antecedent: vec![],
            consequent: ParamPoly::from_poly(&Polynomial::var(1, 0)),
            strict: false,
            label: "top".into(),
        };
        let sys = farkas_reduce(&p, 0).unwrap();
        assert_eq!(Backend::ExactLp.solve(&sys), SolveOutcome::Unsat);
    }

    fn t_minus_one() -> LinForm {
        let mut f = LinForm::param(1);
        f.constant = int(-1);
        f
    }

    #[test]
    fn strict_consequent_needs_slack_or_strict_row() {
        // ∀x. x > 0 ⇒ t·x + u > 0: t = 1, u = 0 is fine via the strict row.
        let sys = farkas_reduce(&pqe(&["x > 0"], true), 2).unwrap();
        let mut fixed = sys.clone();
        fixed.add_constraint(t_minus_one(), Rel::Eq, "t=1");
        fixed.add_constraint(LinForm::param(0), Rel::Eq, "u=0");
        assert!(matches!(Backend::ExactLp.solve(&fixed), SolveOutcome::Sat(_)));
        // With x ≥ 0 instead, u = 0 fails at x = 0.
        let sys = farkas_reduce(&pqe(&["x >= 0"], true), 2).unwrap();
        let mut fixed = sys.clone();
        fixed.add_constraint(t_minus_one(), Rel::Eq, "t=1");
        fixed.add_constraint(LinForm::param(0), Rel::Eq, "u=0");
        assert_eq!(Backend::ExactLp.solve(&fixed), SolveOutcome::Unsat);
    }

    #[test]
    fn nonlinear_falls_back_to_raw() {
        let mut sys = ParamSystem::new();
        sys.add_param("t0", VarKind::Free);
        let sq = Polynomial::parse("x*x", &names()).unwrap();
        let mut cons = ParamPoly::from_poly(&sq);
        cons.add_constant(&LinForm::param(0));
        sys.add_pqe(Pqe { universals: names(), antecedent: vec![], consequent: cons, strict: false, label: "sq".into() });
        assert_eq!(sys.raw.len(), 1);
        assert!(matches!(Backend::ExactLp.solve(&sys), SolveOutcome::Unknown(_)));
    }

    #[test]
    fn validity_witness() {
        let ante = vec![Atom::parse("x >= 1", &names()).unwrap()];
        let good = Polynomial::parse("x - 1", &names()).unwrap();
        assert_eq!(check_validity(1, &ante, &good, false), Validity::Valid);
        match check_validity(1, &ante, &good, true) {
            Validity::Invalid(w) => assert_eq!(w, vec![int(1)]),
            other => panic!("{other:?}"),
        }
    }
}
