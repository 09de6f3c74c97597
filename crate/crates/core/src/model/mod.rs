//! Probabilistic control-flow graphs, priority partitions, finite Markov
//! chains and the conversions between Streett and parity conditions.

mod chain;
mod convert;
pub mod json;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::poly::{PolyError, Polynomial};
use crate::rational::Rat;

pub use chain::{ChainError, FiniteChain};
pub use convert::{
    parity_to_streett, parity_to_streett_symbolic, streett_pair_to_parity, streett_to_priority_partition, SetDesc,
    StreettCondition, StreettPair, SymbolicSet,
};
pub use validate::{feasibility, pcfg_to_finite_chain, validate_partition, Feasibility, Issue, PartitionReport, ValidationMode};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("duplicate location `{0}`")]
    DuplicateLocation(String),
    #[error("bad atom `{0}`: expected `lhs op rhs` with op one of >=, >, <=, <, =")]
    BadAtom(String),
    #[error("distribution at `{location}` command {command}: {msg}")]
    BadDistribution { location: String, command: usize, msg: String },
    #[error("update at `{location}` has {got} components, expected {expected}")]
    UpdateArity { location: String, got: usize, expected: usize },
    #[error("priority {priority} outside 1..={max}")]
    BadPriority { priority: usize, max: usize },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("successor {successor} of state {state} is not in the enumeration")]
    EscapingState { state: String, successor: String },
    #[error("no enabled command at state {0}")]
    NoCommand(String),
    #[error("parity to Streett needs an even maximum priority, got {0}; pad it to {next}", next = .0 + 1)]
    OddPriority(usize),
    #[error("only single-pair Streett conditions can be compiled into a partition (got {0} pairs)")]
    TooManyPairs(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Relation of an atom `p ⋈ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Ge,
    Gt,
    Eq,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Ge => ">=",
            Rel::Gt => ">",
            Rel::Eq => "=",
        }
    }

    pub fn holds(self, v: &Rat) -> bool {
        match self {
            Rel::Ge => !v.is_negative(),
            Rel::Gt => v.is_positive(),
            Rel::Eq => v.is_zero(),
        }
    }
}

/// `poly ⋈ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub poly: Polynomial,
    pub rel: Rel,
}

impl Atom {
    pub fn new(poly: Polynomial, rel: Rel) -> Self {
        Atom { poly, rel }
    }

    pub fn holds(&self, point: &[Rat]) -> bool {
        self.rel.holds(&self.poly.eval(point))
    }

    pub fn compose(&self, subst: &[Polynomial]) -> Atom {
        Atom { poly: self.poly.compose(subst), rel: self.rel }
    }

    /// The negation as a disjunction of atoms.
    pub fn negate(&self) -> Vec<Atom> {
        match self.rel {
            Rel::Ge => vec![Atom::new(-&self.poly, Rel::Gt)],
            Rel::Gt => vec![Atom::new(-&self.poly, Rel::Ge)],
            Rel::Eq => vec![Atom::new(self.poly.clone(), Rel::Gt), Atom::new(-&self.poly, Rel::Gt)],
        }
    }

    /// Parses `lhs op rhs` into `lhs - rhs ⋈ 0` (or `rhs - lhs` for `<`, `<=`).
    pub fn parse(text: &str, names: &[String]) -> Result<Atom, ModelError> {
        const OPS: [&str; 6] = [">=", "<=", "==", ">", "<", "="];
        let (pos, op) = OPS
            .iter()
            .filter_map(|op| text.find(op).map(|p| (p, *op)))
            .min_by_key(|(p, op)| (*p, std::cmp::Reverse(op.len())))
            .ok_or_else(|| ModelError::BadAtom(text.to_string()))?;
        let lhs = Polynomial::parse(&text[..pos], names)?;
        let rest = &text[pos + op.len()..];
        if OPS.iter().any(|o| rest.contains(o)) {
            return Err(ModelError::BadAtom(text.to_string()));
        }
        let rhs = Polynomial::parse(rest, names)?;
        Ok(match op {
            ">=" => Atom::new(&lhs - &rhs, Rel::Ge),
            ">" => Atom::new(&lhs - &rhs, Rel::Gt),
            "<=" => Atom::new(&rhs - &lhs, Rel::Ge),
            "<" => Atom::new(&rhs - &lhs, Rel::Gt),
            _ => Atom::new(&lhs - &rhs, Rel::Eq),
        })
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Atom, &'a [String]);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{} {} 0", self.0.poly.display(self.1), self.0.rel.symbol())
            }
        }
        D(self, names)
    }

    pub fn is_linear(&self) -> bool {
        self.poly.degree() <= 1
    }
}

/// Conjunction of atoms; the empty conjunction is true.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Guard {
    pub atoms: Vec<Atom>,
}

impl Guard {
    pub fn top() -> Self {
        Guard { atoms: Vec::new() }
    }

    pub fn new(atoms: Vec<Atom>) -> Self {
        Guard { atoms }
    }

    pub fn holds(&self, point: &[Rat]) -> bool {
        self.atoms.iter().all(|a| a.holds(point))
    }

    pub fn compose(&self, subst: &[Polynomial]) -> Guard {
        Guard { atoms: self.atoms.iter().map(|a| a.compose(subst)).collect() }
    }

    pub fn and(&self, other: &Guard) -> Guard {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Guard { atoms }
    }

    /// The complement as a list of guards (disjunctive normal form).
    pub fn negate(&self) -> Vec<Guard> {
        self.atoms.iter().flat_map(Atom::negate).map(|a| Guard { atoms: vec![a] }).collect()
    }

    pub fn is_linear(&self) -> bool {
        self.atoms.iter().all(Atom::is_linear)
    }

    pub fn parse(texts: &[String], names: &[String]) -> Result<Guard, ModelError> {
        Ok(Guard { atoms: texts.iter().map(|t| Atom::parse(t, names)).collect::<Result<_, _>>()? })
    }

    pub fn to_strings(&self, names: &[String]) -> Vec<String> {
        self.atoms.iter().map(|a| a.display(names).to_string()).collect()
    }
}

/// Complement of a union of guards, in disjunctive normal form. Each returned
/// guard picks one negated atom from every input guard.
pub fn complement_of_union(guards: &[Guard]) -> Vec<Guard> {
    let mut acc = vec![Guard::top()];
    for g in guards {
        let neg = g.negate();
        let mut next = Vec::with_capacity(acc.len() * neg.len());
        for a in &acc {
            for n in &neg {
                next.push(a.and(n));
            }
        }
        acc = next;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub weight: Rat,
    pub target: usize,
    pub update: Vec<Polynomial>,
}

/// Finite-support distribution over (target, update) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    pub branches: Vec<Branch>,
}

impl Distribution {
    pub fn validate(&self) -> Result<(), String> {
        if self.branches.is_empty() {
            return Err("empty branch list".into());
        }
        for b in &self.branches {
            if !b.weight.is_positive() || b.weight > Rat::one() {
                return Err(format!("weight {} outside (0, 1]", b.weight));
            }
        }
        let total: Rat = self.branches.iter().map(|b| b.weight.clone()).sum();
        if !total.is_one() {
            return Err(format!("weights sum to {total}, not 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub guard: Guard,
    pub dist: Distribution,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pcfg {
    pub var_names: Vec<String>,
    pub locations: Vec<String>,
    /// Indexed by location.
    pub commands: Vec<Vec<Command>>,
}

impl Pcfg {
    pub fn new(var_names: Vec<String>, locations: Vec<String>, commands: Vec<Vec<Command>>) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for l in &locations {
            if !seen.insert(l) {
                return Err(ModelError::DuplicateLocation(l.clone()));
            }
        }
        if commands.len() != locations.len() {
            return Err(ModelError::Invalid("one command list per location required".into()));
        }
        let n = var_names.len();
        for (l, cmds) in commands.iter().enumerate() {
            for (ci, c) in cmds.iter().enumerate() {
                c.dist.validate().map_err(|msg| ModelError::BadDistribution {
                    location: locations[l].clone(),
                    command: ci,
                    msg,
                })?;
                for b in &c.dist.branches {
                    if b.target >= locations.len() {
                        return Err(ModelError::Invalid(format!("branch target {} out of range", b.target)));
                    }
                    if b.update.len() != n {
                        return Err(ModelError::UpdateArity { location: locations[l].clone(), got: b.update.len(), expected: n });
                    }
                }
            }
        }
        Ok(Pcfg { var_names, locations, commands })
    }

    pub fn nvars(&self) -> usize {
        self.var_names.len()
    }

    pub fn location_index(&self, name: &str) -> Result<usize, ModelError> {
        self.locations.iter().position(|l| l == name).ok_or_else(|| ModelError::UnknownLocation(name.to_string()))
    }

    /// First command whose guard holds at the point.
    pub fn enabled(&self, location: usize, point: &[Rat]) -> Option<&Command> {
        self.commands[location].iter().find(|c| c.guard.holds(point))
    }

    pub fn identity_update(&self) -> Vec<Polynomial> {
        (0..self.nvars()).map(|i| Polynomial::var(self.nvars(), i)).collect()
    }
}

/// `P_{l,i}` piece; several pieces may share a priority.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub location: usize,
    pub priority: usize,
    pub guard: Guard,
}

/// Region key `(location, priority)`.
pub type RegionKey = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityPartition {
    pub max_priority: usize,
    pub regions: Vec<Region>,
}

impl PriorityPartition {
    pub fn new(max_priority: usize, regions: Vec<Region>) -> Result<Self, ModelError> {
        if max_priority == 0 {
            return Err(ModelError::BadPriority { priority: 0, max: 0 });
        }
        for r in &regions {
            if r.priority == 0 || r.priority > max_priority {
                return Err(ModelError::BadPriority { priority: r.priority, max: max_priority });
            }
        }
        Ok(PriorityPartition { max_priority, regions })
    }

    /// Priority of the implicit absorbing sink outside every region.
    pub fn sink_priority(&self) -> usize {
        sink_priority(self.max_priority)
    }

    /// Declared `(location, priority)` pairs, sorted.
    pub fn keys(&self) -> Vec<RegionKey> {
        self.regions.iter().map(|r| (r.location, r.priority)).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn pieces(&self, key: RegionKey) -> impl Iterator<Item = &Region> {
        self.regions.iter().filter(move |r| (r.location, r.priority) == key)
    }

    pub fn regions_at(&self, location: usize) -> impl Iterator<Item = &Region> {
        self.regions.iter().filter(move |r| r.location == location)
    }

    /// Region key containing the state, if any (first match).
    pub fn locate(&self, location: usize, point: &[Rat]) -> Option<RegionKey> {
        self.regions_at(location).find(|r| r.guard.holds(point)).map(|r| (r.location, r.priority))
    }

    /// Priority of a state, the sink priority outside all regions.
    pub fn priority_of(&self, location: usize, point: &[Rat]) -> usize {
        self.locate(location, point).map(|k| k.1).unwrap_or_else(|| self.sink_priority())
    }

    /// Number of blocks of a reduced certificate.
    pub fn half(&self) -> usize {
        self.max_priority.div_ceil(2)
    }
}

/// `d` if even, `d + 1` otherwise.
pub fn sink_priority(d: usize) -> usize {
    if d % 2 == 0 {
        d
    } else {
        d + 1
    }
}

/// A program together with its acceptance structure.
#[derive(Debug, Clone)]
pub struct System {
    pub name: Option<String>,
    pub description: Option<String>,
    pub pcfg: Pcfg,
    pub partition: PriorityPartition,
    /// Present when the input gave a Streett condition instead of priorities.
    pub streett: Option<StreettCondition>,
    pub invariant: Option<Vec<(usize, Guard)>>,
}
