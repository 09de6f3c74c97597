use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{complement_of_union, Atom, FiniteChain, Guard, ModelError, Pcfg, PriorityPartition, Rel};
use crate::lp::{Cmp, LinearProgram, VarKind};
use crate::rational::{format_rat, rat, Rat};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Vec<Rat>),
    Infeasible,
    /// Nonlinear atoms; not decided.
    Unknown,
}

/// Decides whether a conjunction of linear atoms has a real solution.
pub fn feasibility(nvars: usize, atoms: &[Atom]) -> Feasibility {
    let mut lp = LinearProgram::new();
    for _ in 0..nvars {
        lp.add_var(VarKind::Free);
    }
    for a in atoms {
        let Some((coeffs, constant)) = a.poly.as_affine() else {
            return Feasibility::Unknown;
        };
        let cmp = match a.rel {
            Rel::Ge => Cmp::Ge,
            Rel::Gt => Cmp::Gt,
            Rel::Eq => Cmp::Eq,
        };
        lp.add_row(coeffs.into_iter().enumerate(), cmp, -constant);
    }
    match lp.feasible_point() {
        Some(p) => Feasibility::Feasible(p),
        None => Feasibility::Infeasible,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    Sample { seed: u64, count: usize },
    Solver,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub location: String,
    pub what: String,
    pub witness: Option<Vec<Rat>>,
}

impl Issue {
    pub fn describe(&self) -> String {
        match &self.witness {
            Some(w) => format!(
                "{} at {}: witness ({})",
                self.what,
                self.location,
                w.iter().map(format_rat).collect::<Vec<_>>().join(", ")
            ),
            None => format!("{} at {}", self.what, self.location),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartitionReport {
    /// Regions of different priority sharing a state.
    pub overlaps: Vec<Issue>,
    /// Two commands enabled at one state of a region.
    pub command_overlaps: Vec<Issue>,
    /// A region state with no enabled command.
    pub gaps: Vec<Issue>,
    /// Checks that could not be decided (nonlinear guards in solver mode).
    pub undecided: Vec<Issue>,
}

impl PartitionReport {
    pub fn is_ok(&self) -> bool {
        self.overlaps.is_empty() && self.command_overlaps.is_empty() && self.gaps.is_empty()
    }

    pub fn issues(&self) -> impl Iterator<Item = &Issue> {
        self.overlaps.iter().chain(&self.command_overlaps).chain(&self.gaps)
    }
}

fn sample_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rat> {
    (0..n)
        .map(|_| {
            let den = [1i64, 1, 2, 3, 4][rng.gen_range(0..5)];
            rat(rng.gen_range(-12 * den..=12 * den), den)
        })
        .collect()
}

/// Checks the partition property (same-location regions of distinct
/// priorities are disjoint) and that commands are disjoint and exhaustive on
/// every region.
pub fn validate_partition(pcfg: &Pcfg, partition: &PriorityPartition, mode: ValidationMode) -> PartitionReport {
    let mut report = PartitionReport::default();
    let n = pcfg.nvars();
    match mode {
        ValidationMode::Sample { seed, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for (l, lname) in pcfg.locations.iter().enumerate() {
                for _ in 0..count {
                    let p = sample_point(&mut rng, n);
                    let hits: Vec<usize> =
                        partition.regions_at(l).filter(|r| r.guard.holds(&p)).map(|r| r.priority).collect();
                    if hits.windows(2).any(|w| w[0] != w[1]) && report.overlaps.len() < 16 {
                        report.overlaps.push(Issue {
                            location: lname.clone(),
                            what: format!("priorities {hits:?} overlap"),
                            witness: Some(p.clone()),
                        });
                    }
                    if hits.is_empty() {
                        continue;
                    }
                    let enabled = pcfg.commands[l].iter().filter(|c| c.guard.holds(&p)).count();
                    if enabled > 1 && report.command_overlaps.len() < 16 {
                        report.command_overlaps.push(Issue {
                            location: lname.clone(),
                            what: format!("{enabled} commands enabled"),
                            witness: Some(p.clone()),
                        });
                    } else if enabled == 0 && report.gaps.len() < 16 {
                        report.gaps.push(Issue { location: lname.clone(), what: "no command enabled".into(), witness: Some(p) });
                    }
                }
            }
        }
        ValidationMode::Solver => {
            let decide = |location: &str, what: String, atoms: Vec<Atom>, sink: &mut Vec<Issue>, undecided: &mut Vec<Issue>| {
                match feasibility(n, &atoms) {
                    Feasibility::Infeasible => {}
                    Feasibility::Feasible(w) => sink.push(Issue { location: location.to_string(), what, witness: Some(w) }),
                    Feasibility::Unknown => undecided.push(Issue { location: location.to_string(), what, witness: None }),
                }
            };
            for (l, lname) in pcfg.locations.iter().enumerate() {
                let regs: Vec<_> = partition.regions_at(l).collect();
                for (i, r1) in regs.iter().enumerate() {
                    for r2 in &regs[i + 1..] {
                        if r1.priority == r2.priority {
                            continue;
                        }
                        let what = format!("priorities {} and {} overlap", r1.priority, r2.priority);
                        let atoms = r1.guard.and(&r2.guard).atoms;
                        decide(lname, what, atoms, &mut report.overlaps, &mut report.undecided);
                    }
                }
                let cmds = &pcfg.commands[l];
                for r in &regs {
                    for (a, c1) in cmds.iter().enumerate() {
                        for (b, c2) in cmds.iter().enumerate().skip(a + 1) {
                            let what = format!("commands {a} and {b} overlap in priority {}", r.priority);
                            let atoms = r.guard.and(&c1.guard).and(&c2.guard).atoms;
                            decide(lname, what, atoms, &mut report.command_overlaps, &mut report.undecided);
                        }
                    }
                    let guards: Vec<Guard> = cmds.iter().map(|c| c.guard.clone()).collect();
                    for hole in complement_of_union(&guards) {
                        let what = format!("no command enabled in priority {}", r.priority);
                        decide(lname, what, r.guard.and(&hole).atoms, &mut report.gaps, &mut report.undecided);
                    }
                }
            }
        }
    }
    report
}

fn state_label(pcfg: &Pcfg, l: usize, point: &[Rat]) -> String {
    let vals: Vec<String> = point.iter().map(crate::rational::display_rat).collect();
    format!("{}({})", pcfg.locations[l], vals.join(","))
}

/// Builds the explicit chain over an enumerated state list. States outside
/// every region become absorbing with the sink priority.
pub fn pcfg_to_finite_chain(
    pcfg: &Pcfg,
    partition: &PriorityPartition,
    states: &[(usize, Vec<Rat>)],
) -> Result<FiniteChain, ModelError> {
    let index: HashMap<(usize, Vec<Rat>), usize> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let mut rows = Vec::with_capacity(states.len());
    let mut prio = Vec::with_capacity(states.len());
    let mut labels = Vec::with_capacity(states.len());
    for (i, (l, point)) in states.iter().enumerate() {
        labels.push(state_label(pcfg, *l, point));
        match partition.locate(*l, point) {
            None => {
                rows.push(vec![(i, Rat::from_integer(1.into()))]);
                prio.push(partition.sink_priority());
            }
            Some((_, p)) => {
                let cmd = pcfg.enabled(*l, point).ok_or_else(|| ModelError::NoCommand(state_label(pcfg, *l, point)))?;
                let mut row = Vec::new();
                for b in &cmd.dist.branches {
                    let next: Vec<Rat> = b.update.iter().map(|u| u.eval(point)).collect();
                    let key = (b.target, next);
                    let j = *index.get(&key).ok_or_else(|| ModelError::EscapingState {
                        state: state_label(pcfg, *l, point),
                        successor: state_label(pcfg, key.0, &key.1),
                    })?;
                    row.push((j, b.weight.clone()));
                }
                rows.push(row);
                prio.push(p);
            }
        }
    }
    Ok(FiniteChain::with_labels(rows, prio, labels)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn strict_feasibility() {
        let n = vec!["x".to_string()];
        let g = Guard::parse(&["x > 0".into(), "x <= 0".into()], &n).unwrap();
        assert_eq!(feasibility(1, &g.atoms), Feasibility::Infeasible);
        let g = Guard::parse(&["x >= 0".into(), "x <= 0".into()], &n).unwrap();
        assert_eq!(feasibility(1, &g.atoms), Feasibility::Feasible(vec![int(0)]));
        let g = Guard::parse(&["x*x >= 1".into()], &n).unwrap();
        assert_eq!(feasibility(1, &g.atoms), Feasibility::Unknown);
    }
}
