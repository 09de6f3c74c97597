use num_traits::{One, Signed};
use thiserror::Error;

use crate::rational::Rat;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ChainError {
    #[error("chain has no states")]
    Empty,
    #[error("row {state} sums to {sum}, not 1")]
    RowSum { state: usize, sum: String },
    #[error("row {state} has a non-positive probability")]
    NonPositive { state: usize },
    #[error("row {state} targets missing state {target}")]
    BadTarget { state: usize, target: usize },
    #[error("priority vector has {got} entries for {expected} states")]
    PriorityLength { got: usize, expected: usize },
    #[error("state {state} has priority 0; priorities start at 1")]
    ZeroPriority { state: usize },
}

/// Explicit finite Markov chain with a priority per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteChain {
    rows: Vec<Vec<(usize, Rat)>>,
    priority: Vec<usize>,
    labels: Vec<String>,
}

impl FiniteChain {
    /// Validates exact row sums. Duplicate targets in a row are merged.
    pub fn new(rows: Vec<Vec<(usize, Rat)>>, priority: Vec<usize>) -> Result<Self, ChainError> {
        let labels = (0..rows.len()).map(|i| format!("s{i}")).collect();
        Self::with_labels(rows, priority, labels)
    }

    pub fn with_labels(rows: Vec<Vec<(usize, Rat)>>, priority: Vec<usize>, labels: Vec<String>) -> Result<Self, ChainError> {
        let n = rows.len();
        if n == 0 {
            return Err(ChainError::Empty);
        }
        if priority.len() != n {
            return Err(ChainError::PriorityLength { got: priority.len(), expected: n });
        }
        if let Some(state) = priority.iter().position(|&p| p == 0) {
            return Err(ChainError::ZeroPriority { state });
        }
        let mut merged = Vec::with_capacity(n);
        for (state, row) in rows.into_iter().enumerate() {
            let mut acc: std::collections::BTreeMap<usize, Rat> = std::collections::BTreeMap::new();
            for (t, p) in row {
                if t >= n {
                    return Err(ChainError::BadTarget { state, target: t });
                }
                if !p.is_positive() {
                    return Err(ChainError::NonPositive { state });
                }
                *acc.entry(t).or_default() += p;
            }
            let sum: Rat = acc.values().cloned().sum();
            if !sum.is_one() {
                return Err(ChainError::RowSum { state, sum: sum.to_string() });
            }
            merged.push(acc.into_iter().collect());
        }
        Ok(FiniteChain { rows: merged, priority, labels })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, s: usize) -> &[(usize, Rat)] {
        &self.rows[s]
    }

    pub fn rows(&self) -> &[Vec<(usize, Rat)>] {
        &self.rows
    }

    pub fn priority(&self, s: usize) -> usize {
        self.priority[s]
    }

    pub fn priorities(&self) -> &[usize] {
        &self.priority
    }

    pub fn max_priority(&self) -> usize {
        self.priority.iter().copied().max().unwrap_or(1)
    }

    pub fn label(&self, s: usize) -> &str {
        &self.labels[s]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn with_priorities(&self, priority: Vec<usize>) -> Result<Self, ChainError> {
        FiniteChain::with_labels(self.rows.clone(), priority, self.labels.clone())
    }

    /// `(𝕏 f)(s) = Σ_t P(s,t) f(t)`.
    pub fn next_expectation(&self, s: usize, f: &[Rat]) -> Rat {
        self.rows[s].iter().map(|(t, p)| p * &f[*t]).sum()
    }

    pub fn successors(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[s].iter().map(|(t, _)| *t)
    }
}
