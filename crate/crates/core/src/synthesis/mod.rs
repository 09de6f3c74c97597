//! Synthesis of LexPMSM maps by iterated template solving.
//!
//! For each block `j` the active set `T` keeps the regions whose strict
//! inequality is still open. Each round solves the hard constraints (`≥` on
//! `T`, non-negativity everywhere) while pushing a slack `ε ∈ [0, 1]` per
//! active region up; the solution is rescaled by the smallest positive slack
//! and the regions whose strict inequality then holds are re-verified
//! exactly and removed. A block ends when a round removes nothing; odd
//! regions of priority `2j − 1` must be gone by then.
//!
//! Levels are stored 1-based: a region removed in the `k`-th round of block
//! `j` gets level `(j, k)`. Regions that never become strict get `⋆`.

pub mod finite;
pub mod symbolic;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;

use serde::Serialize;

use crate::certificates::{Lev, LexPmsMap, Verdict};
use crate::lexorder::Level;

pub use finite::{brute_force_map_exists, synthesize_finite};
pub use symbolic::Templates;
pub use symbolic::{build_constraints, ssm_template_system, synthesize, Constraints};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateConfig {
    pub degree: u32,
    /// Optional box `|t| ≤ bound` on template coefficients.
    pub coeff_bound: Option<crate::rational::Rat>,
    /// Rounds per block; defaults to the number of regions plus one.
    pub max_rounds: Option<usize>,
    /// Maximise the slack sum instead of asking for a sum of at least one.
    pub optimise: bool,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        TemplateConfig { degree: 1, coeff_bound: None, max_rounds: None, optimise: true }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthesisError {
    #[error("round ({j}, {k}): {reason}")]
    Backend { j: usize, k: usize, reason: String },
    #[error("inner loop of block {0} did not settle")]
    NoProgress(usize),
    #[error("synthesised map failed its own check: {0}")]
    Unsound(String),
}

/// One `Solve` round.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct RoundRecord {
    pub j: usize,
    /// 0-based round index within the block.
    pub k: usize,
    pub active_before: Vec<String>,
    pub removed: Vec<String>,
    pub outcome: String,
}

#[derive(Debug, Clone, Default, Serialize, PartialEq, Eq)]
pub struct SynthesisTrace {
    pub rounds: Vec<RoundRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthesisResult<K: Ord, V> {
    Found(LexPmsMap<K, V>),
    /// Odd regions of priority `2j − 1` left without a strict decrease.
    NotFound { j: usize, stuck: Vec<K> },
}

/// Result of one round: values for every key, and the keys now strict.
pub struct RoundSolution<K, V> {
    pub values: BTreeMap<K, V>,
    pub strict: BTreeSet<K>,
    pub outcome: String,
}

/// Problem-specific parts of the loop.
pub trait Rounds {
    type Key: Ord + Clone + Debug;
    type Val: Clone;
    fn keys(&self) -> Vec<Self::Key>;
    fn priority(&self, key: &Self::Key) -> usize;
    fn max_priority(&self) -> usize;
    fn label(&self, key: &Self::Key) -> String;
    fn zero(&self) -> Self::Val;
    fn solve(&mut self, active: &BTreeSet<Self::Key>) -> Result<RoundSolution<Self::Key, Self::Val>, String>;
}

/// The outer loop over blocks and the inner loop over rounds.
pub fn drive<R: Rounds>(
    problem: &mut R,
    max_rounds: Option<usize>,
    trace: &mut SynthesisTrace,
) -> Result<SynthesisResult<R::Key, R::Val>, SynthesisError> {
    let keys = problem.keys();
    let half = problem.max_priority().div_ceil(2);
    let limit = max_rounds.unwrap_or(keys.len() + 1);
    let mut active: BTreeSet<R::Key> = keys.iter().cloned().collect();
    let mut lev: BTreeMap<R::Key, Lev> = BTreeMap::new();
    let mut blocks: Vec<Vec<BTreeMap<R::Key, R::Val>>> = Vec::new();
    for j in 1..=half {
        for k in active.iter().filter(|k| problem.priority(k) < 2 * j - 1) {
            lev.entry(k.clone()).or_insert(Lev::Star);
        }
        active.retain(|k| problem.priority(k) >= 2 * j - 1);
        let mut sols = Vec::new();
        let mut k = 0;
        loop {
            if k > limit {
                return Err(SynthesisError::NoProgress(j));
            }
            let before: Vec<String> = active.iter().map(|x| problem.label(x)).collect();
            let sol = problem.solve(&active).map_err(|reason| SynthesisError::Backend { j, k, reason })?;
            let removed: BTreeSet<R::Key> = sol.strict.intersection(&active).cloned().collect();
            tracing::debug!(j, k, active = active.len(), removed = removed.len(), outcome = %sol.outcome, "solve round");
            trace.rounds.push(RoundRecord {
                j,
                k,
                active_before: before,
                removed: removed.iter().map(|x| problem.label(x)).collect(),
                outcome: sol.outcome.clone(),
            });
            k += 1;
            if removed.is_empty() {
                break;
            }
            for key in &removed {
                lev.insert(key.clone(), Lev::At(Level::new(j, k)));
                active.remove(key);
            }
            sols.push(sol.values);
        }
        let stuck: Vec<R::Key> = active.iter().filter(|x| problem.priority(x) == 2 * j - 1).cloned().collect();
        if !stuck.is_empty() {
            return Ok(SynthesisResult::NotFound { j, stuck });
        }
        if sols.is_empty() {
            sols.push(keys.iter().map(|x| (x.clone(), problem.zero())).collect());
        }
        blocks.push(sols);
    }
    for k in &active {
        lev.entry(k.clone()).or_insert(Lev::Star);
    }
    let shape: Vec<usize> = blocks.iter().map(Vec::len).collect();
    let values = keys
        .iter()
        .map(|key| {
            let nested = blocks
                .iter()
                .map(|b| b.iter().map(|sol| sol.get(key).cloned().unwrap_or_else(|| problem.zero())).collect())
                .collect();
            (key.clone(), nested)
        })
        .collect();
    Ok(SynthesisResult::Found(LexPmsMap { shape, lev, values }))
}

fn ensure_sound(v: Verdict) -> Result<(), SynthesisError> {
    match v {
        Verdict::Accept { .. } => Ok(()),
        other => Err(SynthesisError::Unsound(other.to_string())),
    }
}
