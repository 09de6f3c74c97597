//! Certificate types, exact checkers on finite chains, symbolic checkers on
//! pCFGs, and translations between certificate classes.
//!
//! Finite checkers evaluate every state exactly. Symbolic checkers expand
//! the next-step operator into guarded cases (see [`symbolic::expand_cases`])
//! and decide each inequality as a linear entailment; a strict decrease must
//! be witnessed at one level shared by the whole region.

pub mod finite;
pub mod json;
pub mod symbolic;
pub mod translate;

use std::collections::BTreeMap;
use std::fmt;

use crate::lexorder::Level;
use crate::rational::{format_rat, Rat};

/// Where a check failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// State label (finite) or location name (symbolic).
    pub at: String,
    /// Variable valuation for symbolic witnesses.
    pub point: Option<Vec<Rat>>,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.point {
            Some(p) => write!(f, "{}({})", self.at, p.iter().map(format_rat).collect::<Vec<_>>().join(", ")),
            None => write!(f, "{}", self.at),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// `levels` maps a state or region to the level witnessing its strict
    /// decrease, where one exists.
    Accept { levels: BTreeMap<String, String> },
    Reject { reason: String, witness: Option<Witness> },
    Unknown { reason: String },
}

impl Verdict {
    pub fn accept() -> Self {
        Verdict::Accept { levels: BTreeMap::new() }
    }

    pub fn reject(reason: impl Into<String>, witness: Option<Witness>) -> Self {
        Verdict::Reject { reason: reason.into(), witness }
    }

    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept { .. })
    }

    pub fn is_reject(&self) -> bool {
        matches!(self, Verdict::Reject { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Accept { .. } => "accept",
            Verdict::Reject { .. } => "reject",
            Verdict::Unknown { .. } => "unknown",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accept { .. } => write!(f, "accept"),
            Verdict::Reject { reason, witness: Some(w) } => write!(f, "reject: {reason} at {w}"),
            Verdict::Reject { reason, witness: None } => write!(f, "reject: {reason}"),
            Verdict::Unknown { reason } => write!(f, "unknown: {reason}"),
        }
    }
}

/// Certificate classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Ssm,
    Gssm,
    LexGssm,
    Pmsm,
    LexPmsm,
    ReducedLexPmsm,
    LexPmsmMap,
    Dvssm,
}

impl Kind {
    pub const ALL: [Kind; 8] =
        [Kind::Ssm, Kind::Gssm, Kind::LexGssm, Kind::Pmsm, Kind::LexPmsm, Kind::ReducedLexPmsm, Kind::LexPmsmMap, Kind::Dvssm];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Ssm => "ssm",
            Kind::Gssm => "gssm",
            Kind::LexGssm => "lexgssm",
            Kind::Pmsm => "pmsm",
            Kind::LexPmsm => "lexpmsm",
            Kind::ReducedLexPmsm => "reduced_lexpmsm",
            Kind::LexPmsmMap => "lexpmsm_map",
            Kind::Dvssm => "dvssm",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Level of a region in a LexPMSM map; `Star` marks a non-strict region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lev {
    At(Level),
    Star,
}

impl fmt::Display for Lev {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lev::At(l) => write!(f, "{l}"),
            Lev::Star => write!(f, "*"),
        }
    }
}

/// Region-uniform reduced LexPMSM: block sizes `m_1..m_{⌈d/2⌉}`, a level
/// per key and a nested value per key. Keys are `(location, priority)` on
/// pCFGs or states on finite chains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexPmsMap<K: Ord, V> {
    pub shape: Vec<usize>,
    pub lev: BTreeMap<K, Lev>,
    pub values: BTreeMap<K, Vec<Vec<V>>>,
}

impl<K: Ord + Clone + fmt::Debug, V> LexPmsMap<K, V> {
    /// Structural conditions: every key has a level, `j ≤ ⌈i/2⌉`, levels lie
    /// inside the shape, `⋆` only on even priorities, and values have the
    /// declared shape.
    pub fn structural_issues(&self, keys: &[K], priority: impl Fn(&K) -> usize) -> Vec<String> {
        let mut out = Vec::new();
        if self.shape.contains(&0) {
            out.push("every block needs at least one component".to_string());
        }
        for k in keys {
            let i = priority(k);
            match self.lev.get(k) {
                None => out.push(format!("{k:?} has no level")),
                Some(Lev::Star) if i % 2 == 1 => out.push(format!("{k:?} has odd priority {i} but level *")),
                Some(Lev::At(l)) => {
                    if l.block == 0 || l.block > i.div_ceil(2) {
                        out.push(format!("{k:?} with priority {i} has level {l} beyond block {}", i.div_ceil(2)));
                    } else if l.block > self.shape.len() || l.index == 0 || l.index > self.shape[l.block - 1] {
                        out.push(format!("{k:?} has level {l} outside shape {:?}", self.shape));
                    }
                }
                Some(Lev::Star) => {}
            }
        }
        for (k, v) in &self.values {
            if v.iter().map(Vec::len).collect::<Vec<_>>() != self.shape {
                out.push(format!("{k:?} has values of the wrong shape"));
            }
        }
        out
    }
}
