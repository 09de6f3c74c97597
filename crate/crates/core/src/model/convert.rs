use super::validate::{feasibility, Feasibility};
use super::{complement_of_union, Guard, ModelError, Pcfg, PriorityPartition, Region};

/// Union of per-location guards.
pub type SymbolicSet = Vec<(usize, Guard)>;

/// A set of states: symbolic over a pCFG, or a subset of a finite chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetDesc {
    Symbolic(SymbolicSet),
    Finite(Vec<bool>),
}

/// Streett pair over a finite chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreettPair {
    pub a: Vec<bool>,
    pub b: Vec<bool>,
}

impl StreettPair {
    pub fn new(a: Vec<bool>, b: Vec<bool>) -> Self {
        assert_eq!(a.len(), b.len(), "Streett sets over different state spaces");
        StreettPair { a, b }
    }

    pub fn in_a_minus_b(&self, s: usize) -> bool {
        self.a[s] && !self.b[s]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StreettCondition {
    pub pairs: Vec<(SetDesc, SetDesc)>,
}

/// Pairs `(S≤2i−1, S≤2i−2)` for `i = 1..d/2`.
pub fn parity_to_streett(priorities: &[usize], d: usize) -> Result<Vec<StreettPair>, ModelError> {
    if d % 2 == 1 {
        return Err(ModelError::OddPriority(d));
    }
    if let Some(&p) = priorities.iter().find(|&&p| p == 0 || p > d) {
        return Err(ModelError::BadPriority { priority: p, max: d });
    }
    Ok((1..=d / 2)
        .map(|i| {
            StreettPair::new(
                priorities.iter().map(|&p| p < 2 * i).collect(),
                priorities.iter().map(|&p| p + 2 <= 2 * i).collect(),
            )
        })
        .collect())
}

/// Symbolic version over a priority partition with even `d`.
pub fn parity_to_streett_symbolic(partition: &PriorityPartition) -> Result<StreettCondition, ModelError> {
    let d = partition.max_priority;
    if d % 2 == 1 {
        return Err(ModelError::OddPriority(d));
    }
    let upto = |k: usize| -> SymbolicSet {
        partition.regions.iter().filter(|r| r.priority <= k).map(|r| (r.location, r.guard.clone())).collect()
    };
    Ok(StreettCondition {
        pairs: (1..=d / 2).map(|i| (SetDesc::Symbolic(upto(2 * i - 1)), SetDesc::Symbolic(upto(2 * i - 2)))).collect(),
    })
}

/// `2` on `B`, `3` on `A ∖ B`, `4` elsewhere.
pub fn streett_pair_to_parity(pair: &StreettPair) -> Vec<usize> {
    pair.a
        .iter()
        .zip(&pair.b)
        .map(|(&a, &b)| if b { 2 } else if a { 3 } else { 4 })
        .collect()
}

fn pieces_at(set: &SymbolicSet, l: usize) -> Vec<Guard> {
    set.iter().filter(|(loc, _)| *loc == l).map(|(_, g)| g.clone()).collect()
}

/// Compiles a single Streett pair into a `d = 4` priority partition, keeping
/// only pieces that are not provably empty. An invariant guard per location
/// is conjoined to every piece at that location.
pub fn streett_to_priority_partition(
    pcfg: &Pcfg,
    cond: &StreettCondition,
    invariant: Option<&[(usize, Guard)]>,
) -> Result<PriorityPartition, ModelError> {
    let inv = |l: usize| -> Guard {
        invariant
            .and_then(|inv| inv.iter().find(|(loc, _)| *loc == l))
            .map(|(_, g)| g.clone())
            .unwrap_or_default()
    };
    let n = pcfg.nvars();
    let mut regions = Vec::new();
    let mut push = |l: usize, priority: usize, g: Guard| {
        if feasibility(n, &g.atoms) != Feasibility::Infeasible {
            regions.push(Region { location: l, priority, guard: g });
        }
    };
    match cond.pairs.as_slice() {
        [] => {
            for l in 0..pcfg.locations.len() {
                push(l, 2, inv(l));
            }
            return PriorityPartition::new(2, regions);
        }
        [(SetDesc::Symbolic(a), SetDesc::Symbolic(b))] => {
            for l in 0..pcfg.locations.len() {
                let (al, bl) = (pieces_at(a, l), pieces_at(b, l));
                let base = inv(l);
                for g in &bl {
                    push(l, 2, base.and(g));
                }
                let not_b = complement_of_union(&bl);
                for g in &al {
                    for nb in &not_b {
                        push(l, 3, base.and(g).and(nb));
                    }
                }
                let mut ab = al.clone();
                ab.extend(bl);
                for g in complement_of_union(&ab) {
                    push(l, 4, base.and(&g));
                }
            }
        }
        [_] => return Err(ModelError::Invalid("Streett sets over a pCFG must be symbolic".into())),
        many => return Err(ModelError::TooManyPairs(many.len())),
    }
    PriorityPartition::new(4, regions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_to_streett_examples() {
        let pairs = parity_to_streett(&[1, 2], 2).unwrap();
        assert_eq!(pairs, vec![StreettPair::new(vec![true, false], vec![false, false])]);
        let pairs = parity_to_streett(&[4, 4], 4).unwrap();
        assert!(pairs.iter().all(|p| p.a.iter().chain(&p.b).all(|x| !x)));
        assert!(matches!(parity_to_streett(&[1], 3), Err(ModelError::OddPriority(3))));
    }

    #[test]
    fn pair_to_parity_examples() {
        assert_eq!(streett_pair_to_parity(&StreettPair::new(vec![false; 2], vec![false; 2])), vec![4, 4]);
        assert_eq!(streett_pair_to_parity(&StreettPair::new(vec![true; 2], vec![true; 2])), vec![2, 2]);
        assert_eq!(streett_pair_to_parity(&StreettPair::new(vec![false, true], vec![true, false])), vec![2, 3]);
    }
}
