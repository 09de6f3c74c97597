//! Exact analyses of finite chains: Kleene iteration of `K_E` and `K_P`,
//! closed-form step expectations and distributions, recurrence and
//! almost-sure parity via bottom strongly connected components, and a seeded
//! trace sampler for Monte-Carlo cross-checks.

use std::collections::{BTreeMap, VecDeque};

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, ToPrimitive, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::{FiniteChain, StreettPair};
use crate::rational::Rat;

/// Value of `𝔼_s[step]` at one state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepValue {
    Exact(Rat),
    /// Infinitely many A-steps before B with positive probability.
    Divergent,
}

impl StepValue {
    pub fn exact(&self) -> Option<&Rat> {
        match self {
            StepValue::Exact(r) => Some(r),
            StepValue::Divergent => None,
        }
    }
}

/// Distribution of the step count truncated at a horizon: `masses[m]` for
/// `m ≤ horizon` and the remaining mass (including any mass at `∞`) in `tail`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepDistribution {
    pub masses: Vec<Rat>,
    pub tail: Rat,
}

impl StepDistribution {
    pub fn dirac_zero(horizon: usize) -> Self {
        let mut masses = vec![Rat::zero(); horizon + 1];
        masses[0] = Rat::one();
        StepDistribution { masses, tail: Rat::zero() }
    }

    pub fn horizon(&self) -> usize {
        self.masses.len() - 1
    }

    pub fn total(&self) -> Rat {
        self.masses.iter().cloned().sum::<Rat>() + &self.tail
    }

    /// `ζ([a, ∞])` for `a ≤ horizon + 1`.
    pub fn tail_from(&self, a: usize) -> Rat {
        self.masses.iter().skip(a).cloned().sum::<Rat>() + &self.tail
    }

    /// `1 ⊕ ζ`; mass pushed past the horizon joins the tail.
    pub fn shift(&self) -> Self {
        let h = self.horizon();
        let mut masses = vec![Rat::zero(); h + 1];
        masses[1..].clone_from_slice(&self.masses[..h]);
        StepDistribution { masses, tail: &self.tail + &self.masses[h] }
    }

    /// `ζ ≤ η` in the stochastic order, comparing tails at every threshold.
    pub fn stochastically_le(&self, other: &StepDistribution) -> bool {
        assert_eq!(self.horizon(), other.horizon());
        (0..=self.horizon() + 1).all(|a| self.tail_from(a) <= other.tail_from(a))
    }
}

fn mix(chain: &FiniteChain, s: usize, dists: &[StepDistribution]) -> StepDistribution {
    let h = dists[0].horizon();
    let mut masses = vec![Rat::zero(); h + 1];
    let mut tail = Rat::zero();
    for (t, p) in chain.row(s) {
        for (m, v) in dists[*t].masses.iter().enumerate() {
            if !v.is_zero() {
                masses[m] += p * v;
            }
        }
        tail += p * &dists[*t].tail;
    }
    StepDistribution { masses, tail }
}

/// Iterates `K_E` from `⊥ = 0`; returns `K_E^1(⊥) … K_E^n(⊥)`.
pub fn ke_iterate(chain: &FiniteChain, pair: &StreettPair, n: usize) -> Vec<Vec<Rat>> {
    let mut cur = vec![Rat::zero(); chain.len()];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        cur = (0..chain.len())
            .map(|s| {
                if pair.b[s] {
                    Rat::zero()
                } else if pair.a[s] {
                    chain.next_expectation(s, &cur) + Rat::one()
                } else {
                    chain.next_expectation(s, &cur)
                }
            })
            .collect();
        out.push(cur.clone());
    }
    out
}

/// Iterates `K_P` from `⊥ = δ₀`; returns iterates `1..=n`, truncated at the
/// horizon.
pub fn kp_iterate(chain: &FiniteChain, pair: &StreettPair, horizon: usize, n: usize) -> Vec<Vec<StepDistribution>> {
    let mut cur = vec![StepDistribution::dirac_zero(horizon); chain.len()];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        cur = (0..chain.len())
            .map(|s| {
                if pair.b[s] {
                    StepDistribution::dirac_zero(horizon)
                } else if pair.a[s] {
                    mix(chain, s, &cur).shift()
                } else {
                    mix(chain, s, &cur)
                }
            })
            .collect();
        out.push(cur.clone());
    }
    out
}

/// Bottom strongly connected components, each sorted, in a stable order.
pub fn bsccs(chain: &FiniteChain) -> Vec<Vec<usize>> {
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..chain.len()).map(|_| g.add_node(())).collect();
    for s in 0..chain.len() {
        for t in chain.successors(s) {
            g.add_edge(nodes[s], nodes[t], ());
        }
    }
    let mut comp = vec![usize::MAX; chain.len()];
    let sccs = tarjan_scc(&g);
    for (i, c) in sccs.iter().enumerate() {
        for n in c {
            comp[n.index()] = i;
        }
    }
    let mut out: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(i, c)| c.iter().all(|n| chain.successors(n.index()).all(|t| comp[t] == *i)))
        .map(|(_, c)| {
            let mut v: Vec<usize> = c.iter().map(|n| n.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    out.sort();
    out
}

/// States reachable from `s` (including `s`), not expanding `blocked`
/// states and not counting them as reached.
fn reach_avoiding(chain: &FiniteChain, s: usize, blocked: &[bool]) -> Vec<bool> {
    let mut seen = vec![false; chain.len()];
    if blocked[s] {
        return seen;
    }
    let mut queue = VecDeque::from([s]);
    seen[s] = true;
    while let Some(u) = queue.pop_front() {
        for t in chain.successors(u) {
            if !seen[t] && !blocked[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    seen
}

pub fn reachable(chain: &FiniteChain, s: usize) -> Vec<bool> {
    reach_avoiding(chain, s, &vec![false; chain.len()])
}

/// `ℙ_s[step < ∞] = 1` per state. False exactly when `s ∉ B` can reach,
/// through states outside `B`, a bottom component that avoids `B` and meets
/// `A`.
pub fn null_recurrent(chain: &FiniteChain, pair: &StreettPair) -> Vec<bool> {
    let mut bad = vec![false; chain.len()];
    for c in bsccs(chain) {
        if c.iter().all(|&s| !pair.b[s]) && c.iter().any(|&s| pair.a[s]) {
            for s in c {
                bad[s] = true;
            }
        }
    }
    (0..chain.len())
        .map(|s| {
            let r = reach_avoiding(chain, s, &pair.b);
            !r.iter().zip(&bad).any(|(&x, &y)| x && y)
        })
        .collect()
}

/// Almost-sure parity per state: every reachable bottom component has an
/// even minimum priority.
pub fn almost_sure_parity(chain: &FiniteChain) -> Vec<bool> {
    let comps = bsccs(chain);
    let odd: Vec<&Vec<usize>> =
        comps.iter().filter(|c| c.iter().map(|&s| chain.priority(s)).min().unwrap_or(2) % 2 == 1).collect();
    (0..chain.len())
        .map(|s| {
            let r = reachable(chain, s);
            !odd.iter().any(|c| r[c[0]])
        })
        .collect()
}

/// Exact Gaussian elimination; `None` when singular.
pub fn solve_linear(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col].clone();
        for j in col..n {
            a[col][j] = &a[col][j] / &p;
        }
        b[col] = &b[col] / &p;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in col..n {
                    let v = &f * &a[col][j];
                    a[r][j] -= v;
                }
                let v = &f * &b[col];
                b[r] -= v;
            }
        }
    }
    Some(b)
}

/// Least solution of `x = Q x + c` on `set`, where `c` collects the known
/// contributions of transitions leaving `set`. States of `set` that cannot
/// leave it get `0`.
fn least_solution(chain: &FiniteChain, set: &[bool], c: &[Rat]) -> Vec<Rat> {
    let n = chain.len();
    // States of `set` with a path (inside `set`) to a non-zero source.
    let mut live = vec![false; n];
    let mut changed = true;
    for s in 0..n {
        live[s] = set[s] && !c[s].is_zero();
    }
    while changed {
        changed = false;
        for s in 0..n {
            if set[s] && !live[s] && chain.successors(s).any(|t| live[t]) {
                live[s] = true;
                changed = true;
            }
        }
    }
    let idx: Vec<usize> = (0..n).filter(|&s| live[s]).collect();
    let pos: BTreeMap<usize, usize> = idx.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut a = vec![vec![Rat::zero(); idx.len()]; idx.len()];
    let mut b = vec![Rat::zero(); idx.len()];
    for (i, &s) in idx.iter().enumerate() {
        a[i][i] += Rat::one();
        for (t, p) in chain.row(s) {
            if let Some(&j) = pos.get(t) {
                a[i][j] -= p;
            }
        }
        b[i] = c[s].clone();
    }
    let sol = solve_linear(a, b).expect("live states leave the set with positive probability");
    let mut out = vec![Rat::zero(); n];
    for (i, &s) in idx.iter().enumerate() {
        out[s] = sol[i].clone();
    }
    out
}

/// `𝔼_s[step^{(A,B)}]` exactly, or divergence.
pub fn expected_steps_exact(chain: &FiniteChain, pair: &StreettPair) -> Vec<StepValue> {
    let n = chain.len();
    let nr = null_recurrent(chain, pair);
    // Non-B, non-divergent states; contributions come from A∖B indicators.
    let set: Vec<bool> = (0..n).map(|s| nr[s] && !pair.b[s]).collect();
    let c: Vec<Rat> = (0..n).map(|s| if set[s] && pair.a[s] { Rat::one() } else { Rat::zero() }).collect();
    let e = least_solution(chain, &set, &c);
    (0..n).map(|s| if nr[s] { StepValue::Exact(e[s].clone()) } else { StepValue::Divergent }).collect()
}

/// Limit step distribution `μK_P`, truncated at the horizon.
pub fn step_distribution_exact(chain: &FiniteChain, pair: &StreettPair, horizon: usize) -> Vec<StepDistribution> {
    let n = chain.len();
    let other: Vec<bool> = (0..n).map(|s| !pair.a[s] && !pair.b[s]).collect();
    // tails[a][s] = ℙ_s[step ≥ a]
    let mut tails: Vec<Vec<Rat>> = vec![vec![Rat::one(); n]];
    for a in 1..=horizon + 1 {
        let prev = &tails[a - 1];
        let mut known = vec![Rat::zero(); n];
        for s in 0..n {
            if !pair.b[s] && pair.a[s] {
                known[s] = chain.next_expectation(s, prev);
            }
        }
        let c: Vec<Rat> = (0..n)
            .map(|s| {
                if other[s] {
                    chain.row(s).iter().filter(|(t, _)| !other[*t]).map(|(t, p)| p * &known[*t]).sum()
                } else {
                    Rat::zero()
                }
            })
            .collect();
        let inner = least_solution(chain, &other, &c);
        tails.push((0..n).map(|s| if other[s] { inner[s].clone() } else { known[s].clone() }).collect());
    }
    (0..n)
        .map(|s| StepDistribution {
            masses: (0..=horizon).map(|m| &tails[m][s] - &tails[m + 1][s]).collect(),
            tail: tails[horizon + 1][s].clone(),
        })
        .collect()
}

/// `ℙ_s[target visited among the first horizon + 1 states]`.
pub fn bounded_reach(chain: &FiniteChain, target: &[bool], horizon: usize) -> Vec<Rat> {
    let mut cur: Vec<Rat> = target.iter().map(|&t| if t { Rat::one() } else { Rat::zero() }).collect();
    for _ in 0..horizon {
        cur = (0..chain.len()).map(|s| if target[s] { Rat::one() } else { chain.next_expectation(s, &cur) }).collect();
    }
    cur
}

/// Monte-Carlo tallies over traces `x_0 … x_horizon`.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct SampleReport {
    pub samples: usize,
    pub horizon: usize,
    /// `step_counts[m]`: traces with `m` states of `A ∖ B` before the first
    /// `B` state. Length `horizon + 2`; empty without a Streett pair.
    pub step_counts: Vec<u64>,
    /// Traces that visit `B`.
    pub b_visits: u64,
    /// Minimum priority seen, by value.
    pub min_priority: BTreeMap<usize, u64>,
}

struct RowSampler {
    den: BigUint,
    small: Option<u64>,
    cumulative: Vec<(BigUint, usize)>,
}

impl RowSampler {
    fn new(row: &[(usize, Rat)]) -> Self {
        let den = row.iter().fold(BigUint::one(), |acc, (_, p)| {
            let d = p.denom().magnitude().clone();
            num_integer::Integer::lcm(&acc, &d)
        });
        let mut acc = BigUint::zero();
        let mut cumulative = Vec::with_capacity(row.len());
        for (t, p) in row {
            acc += (p * Rat::from_integer(den.clone().into())).to_integer().magnitude().clone();
            cumulative.push((acc.clone(), *t));
        }
        RowSampler { small: den.to_u64(), den, cumulative }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let u = match self.small {
            Some(d) => BigUint::from(rng.gen_range(0..d)),
            None => rng.gen_biguint_below(&self.den),
        };
        self.cumulative.iter().find(|(c, _)| u < *c).map(|(_, t)| *t).expect("cumulative mass reaches the denominator")
    }
}

/// Deterministic given the seed. Sampling is exact: successors are drawn by
/// a uniform integer below the row's common denominator.
pub fn sample_traces(
    chain: &FiniteChain,
    pair: Option<&StreettPair>,
    s0: usize,
    horizon: usize,
    count: usize,
    seed: u64,
) -> SampleReport {
    let samplers: Vec<RowSampler> = (0..chain.len()).map(|s| RowSampler::new(chain.row(s))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut step_counts = if pair.is_some() { vec![0u64; horizon + 2] } else { Vec::new() };
    let mut b_visits = 0;
    let mut min_priority = BTreeMap::new();
    for _ in 0..count {
        let mut s = s0;
        let mut steps = 0usize;
        let mut seen_b = false;
        let mut minp = usize::MAX;
        for i in 0..=horizon {
            minp = minp.min(chain.priority(s));
            if let Some(p) = pair {
                if p.b[s] {
                    seen_b = true;
                }
                if !seen_b && p.a[s] {
                    steps += 1;
                }
            }
            if i < horizon {
                s = samplers[s].draw(&mut rng);
            }
        }
        if pair.is_some() {
            step_counts[steps] += 1;
        }
        if seen_b {
            b_visits += 1;
        }
        *min_priority.entry(minp).or_insert(0) += 1;
    }
    SampleReport { samples: count, horizon, step_counts, b_visits, min_priority }
}

/// Seeded generators for property tests and benchmarks.
pub mod testing {
    use rand::seq::SliceRandom;
    use rand::Rng;

    use crate::model::{FiniteChain, StreettPair};
    use crate::rational::{rat, Rat};

    /// Probability splits drawn from the menu `{1/4, 1/2, 3/4, 1}`.
    const SPLITS: [&[(i64, i64)]; 5] = [&[(1, 1)], &[(1, 2), (1, 2)], &[(1, 4), (3, 4)], &[(1, 4), (1, 4), (1, 2)], &[(1, 4), (1, 4), (1, 4), (1, 4)]];

    pub fn random_row<R: Rng>(rng: &mut R, n: usize) -> Vec<(usize, Rat)> {
        let usable: Vec<_> = SPLITS.iter().filter(|s| s.len() <= n).collect();
        let split = usable[rng.gen_range(0..usable.len())];
        let mut targets: Vec<usize> = (0..n).collect();
        targets.shuffle(rng);
        split.iter().zip(targets).map(|(&(a, b), t)| (t, rat(a, b))).collect()
    }

    /// Chain with `1..=max_states` states and priorities in `1..=max_priority`.
    pub fn random_chain<R: Rng>(rng: &mut R, max_states: usize, max_priority: usize) -> FiniteChain {
        let n = rng.gen_range(1..=max_states);
        let rows = (0..n).map(|_| random_row(rng, n)).collect();
        let prio = (0..n).map(|_| rng.gen_range(1..=max_priority)).collect();
        FiniteChain::new(rows, prio).expect("generated rows are stochastic")
    }

    pub fn random_pair<R: Rng>(rng: &mut R, n: usize) -> StreettPair {
        StreettPair::new((0..n).map(|_| rng.gen_bool(0.5)).collect(), (0..n).map(|_| rng.gen_bool(0.3)).collect())
    }

    /// Every stochastic row over `n` states with probabilities in
    /// `{1/4, 1/2, 1}`.
    pub fn all_rows(n: usize) -> Vec<Vec<(usize, Rat)>> {
        let mut out = Vec::new();
        // Multisets of quarter counts summing to 4, assigned to distinct targets.
        fn rec(n: usize, next: usize, left: i64, cur: &mut Vec<(usize, i64)>, out: &mut Vec<Vec<(usize, Rat)>>) {
            if left == 0 {
                out.push(cur.iter().map(|&(t, q)| (t, rat(q, 4))).collect());
                return;
            }
            for t in next..n {
                for q in [1, 2, 4] {
                    if q <= left {
                        cur.push((t, q));
                        rec(n, t + 1, left - q, cur, out);
                        cur.pop();
                    }
                }
            }
        }
        rec(n, 0, 4, &mut Vec::new(), &mut out);
        out
    }
}
