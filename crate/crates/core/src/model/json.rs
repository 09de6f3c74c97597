//! JSON reading and canonical writing of systems and finite chains.
//!
//! Canonical output sorts object keys and prints rationals as `"num/den"`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    streett_pair_to_parity, streett_to_priority_partition, Branch, Command, Distribution, FiniteChain, Guard, ModelError,
    Pcfg, PriorityPartition, Region, SetDesc, StreettCondition, StreettPair, System,
};
use crate::poly::Polynomial;
use crate::rational::{format_rat, parse_rat, Rat};

/// A rational written either as a string (`"1/2"`, `"0.25"`) or an integer.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum RatLit {
    Str(String),
    Int(i64),
}

impl RatLit {
    pub fn value(&self) -> Result<Rat, ModelError> {
        match self {
            RatLit::Str(s) => parse_rat(s).map_err(|e| ModelError::Invalid(e.to_string())),
            RatLit::Int(i) => Ok(Rat::from_integer((*i).into())),
        }
    }

    pub fn canonical(v: &Rat) -> Self {
        RatLit::Str(format_rat(v))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBranch {
    #[serde(default = "one")]
    pub weight: RatLit,
    pub target: String,
    /// One polynomial per variable; omitted means identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub update: Option<Vec<String>>,
}

fn one() -> RatLit {
    RatLit::Int(1)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCommand {
    #[serde(default)]
    pub guard: Vec<String>,
    pub branches: Vec<RawBranch>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRegion {
    pub location: String,
    pub priority: usize,
    #[serde(default)]
    pub guard: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPiece {
    pub location: String,
    #[serde(default)]
    pub guard: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPair {
    pub a: Vec<RawPiece>,
    pub b: Vec<RawPiece>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSystem {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub vars: Vec<String>,
    pub locations: Vec<String>,
    pub commands: BTreeMap<String, Vec<RawCommand>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_priority: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<RawRegion>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub streett: Option<Vec<RawPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariant: Option<BTreeMap<String, Vec<String>>>,
}

fn parse_set(pcfg: &Pcfg, pieces: &[RawPiece]) -> Result<SetDesc, ModelError> {
    let mut out = Vec::new();
    for p in pieces {
        out.push((pcfg.location_index(&p.location)?, Guard::parse(&p.guard, &pcfg.var_names)?));
    }
    Ok(SetDesc::Symbolic(out))
}

impl RawSystem {
    pub fn into_system(self) -> Result<System, ModelError> {
        let names = self.vars.clone();
        let mut commands = vec![Vec::new(); self.locations.len()];
        for (loc, cmds) in &self.commands {
            let l = self
                .locations
                .iter()
                .position(|x| x == loc)
                .ok_or_else(|| ModelError::UnknownLocation(loc.clone()))?;
            for c in cmds {
                let guard = Guard::parse(&c.guard, &names)?;
                let mut branches = Vec::new();
                for b in &c.branches {
                    let target = self
                        .locations
                        .iter()
                        .position(|x| *x == b.target)
                        .ok_or_else(|| ModelError::UnknownLocation(b.target.clone()))?;
                    let update = match &b.update {
                        Some(us) => us.iter().map(|u| Polynomial::parse(u, &names)).collect::<Result<Vec<_>, _>>()?,
                        None => (0..names.len()).map(|i| Polynomial::var(names.len(), i)).collect(),
                    };
                    if update.len() != names.len() {
                        return Err(ModelError::UpdateArity { location: loc.clone(), got: update.len(), expected: names.len() });
                    }
                    branches.push(Branch { weight: b.weight.value()?, target, update });
                }
                commands[l].push(Command { guard, dist: Distribution { branches } });
            }
        }
        let pcfg = Pcfg::new(names.clone(), self.locations.clone(), commands)?;

        let invariant = match &self.invariant {
            Some(map) => Some(
                map.iter()
                    .map(|(loc, g)| Ok((pcfg.location_index(loc)?, Guard::parse(g, &names)?)))
                    .collect::<Result<Vec<_>, ModelError>>()?,
            ),
            None => None,
        };
        let streett = match &self.streett {
            Some(pairs) => Some(StreettCondition {
                pairs: pairs
                    .iter()
                    .map(|p| Ok((parse_set(&pcfg, &p.a)?, parse_set(&pcfg, &p.b)?)))
                    .collect::<Result<_, ModelError>>()?,
            }),
            None => None,
        };
        let partition = match (&self.partition, &streett) {
            (Some(regions), _) => {
                let mut out = Vec::new();
                for r in regions {
                    let l = pcfg.location_index(&r.location)?;
                    let mut guard = Guard::parse(&r.guard, &names)?;
                    if let Some(inv) = invariant.as_ref().and_then(|v| v.iter().find(|(x, _)| *x == l)) {
                        guard = inv.1.and(&guard);
                    }
                    out.push(Region { location: l, priority: r.priority, guard });
                }
                let d = self.max_priority.unwrap_or_else(|| out.iter().map(|r| r.priority).max().unwrap_or(1));
                PriorityPartition::new(d, out)?
            }
            (None, Some(cond)) => streett_to_priority_partition(&pcfg, cond, invariant.as_deref())?,
            (None, None) => return Err(ModelError::Invalid("input needs a `partition` or a `streett` field".into())),
        };
        Ok(System { name: self.name, description: self.description, pcfg, partition, streett, invariant })
    }

    pub fn from_system(sys: &System) -> RawSystem {
        let pcfg = &sys.pcfg;
        let names = &pcfg.var_names;
        let mut commands = BTreeMap::new();
        for (l, cmds) in pcfg.commands.iter().enumerate() {
            let raw: Vec<RawCommand> = cmds
                .iter()
                .map(|c| RawCommand {
                    guard: c.guard.to_strings(names),
                    branches: c
                        .dist
                        .branches
                        .iter()
                        .map(|b| RawBranch {
                            weight: RatLit::canonical(&b.weight),
                            target: pcfg.locations[b.target].clone(),
                            update: Some(b.update.iter().map(|u| u.display(names).to_string()).collect()),
                        })
                        .collect(),
                })
                .collect();
            commands.insert(pcfg.locations[l].clone(), raw);
        }
        let piece = |(l, g): &(usize, Guard)| RawPiece { location: pcfg.locations[*l].clone(), guard: g.to_strings(names) };
        let streett = sys.streett.as_ref().map(|c| {
            c.pairs
                .iter()
                .filter_map(|(a, b)| match (a, b) {
                    (SetDesc::Symbolic(a), SetDesc::Symbolic(b)) => {
                        Some(RawPair { a: a.iter().map(piece).collect(), b: b.iter().map(piece).collect() })
                    }
                    _ => None,
                })
                .collect()
        });
        RawSystem {
            name: sys.name.clone(),
            description: sys.description.clone(),
            vars: names.clone(),
            locations: pcfg.locations.clone(),
            commands,
            max_priority: Some(sys.partition.max_priority),
            partition: Some(
                sys.partition
                    .regions
                    .iter()
                    .map(|r| RawRegion {
                        location: pcfg.locations[r.location].clone(),
                        priority: r.priority,
                        guard: r.guard.to_strings(names),
                    })
                    .collect(),
            ),
            streett,
            // Invariants are already conjoined into the partition.
            invariant: None,
        }
    }
}

pub fn parse_system(text: &str) -> Result<System, ModelError> {
    let raw: RawSystem = serde_json::from_str(text)?;
    raw.into_system()
}

/// Canonical JSON: sorted keys, rationals as `num/den`, normalised atoms.
pub fn system_to_json(sys: &System) -> serde_json::Value {
    serde_json::to_value(RawSystem::from_system(sys)).expect("serialisable")
}

pub fn canonical_string(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("serialisable")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChain {
    pub states: Vec<String>,
    /// Per state, successor label to probability.
    pub rows: Vec<BTreeMap<String, RatLit>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<String>>,
}

/// A finite chain with an optional Streett pair. Without explicit priorities
/// the pair is converted to priorities 2/3/4.
#[derive(Debug, Clone)]
pub struct ChainInput {
    pub chain: FiniteChain,
    pub pair: Option<StreettPair>,
}

pub fn parse_chain(text: &str) -> Result<ChainInput, ModelError> {
    let raw: RawChain = serde_json::from_str(text)?;
    let idx = |name: &str| -> Result<usize, ModelError> {
        raw.states.iter().position(|s| s == name).ok_or_else(|| ModelError::UnknownLocation(name.to_string()))
    };
    if raw.rows.len() != raw.states.len() {
        return Err(ModelError::Invalid(format!("{} rows for {} states", raw.rows.len(), raw.states.len())));
    }
    let mut rows = Vec::new();
    for r in &raw.rows {
        let mut row = Vec::new();
        for (t, p) in r {
            row.push((idx(t)?, p.value()?));
        }
        rows.push(row);
    }
    let set = |names: &Option<Vec<String>>| -> Result<Vec<bool>, ModelError> {
        let mut v = vec![false; raw.states.len()];
        for n in names.iter().flatten() {
            v[idx(n)?] = true;
        }
        Ok(v)
    };
    let pair = if raw.a.is_some() || raw.b.is_some() { Some(StreettPair::new(set(&raw.a)?, set(&raw.b)?)) } else { None };
    let priority = match (&raw.priority, &pair) {
        (Some(p), _) => p.clone(),
        (None, Some(pair)) => streett_pair_to_parity(pair),
        (None, None) => return Err(ModelError::Invalid("chain needs `priority` or a Streett pair `a`/`b`".into())),
    };
    let chain = FiniteChain::with_labels(rows, priority, raw.states.clone())?;
    Ok(ChainInput { chain, pair })
}

pub fn chain_to_json(input: &ChainInput) -> serde_json::Value {
    let c = &input.chain;
    let labels = c.labels();
    let names = |v: &[bool]| -> Vec<String> { v.iter().enumerate().filter(|(_, &x)| x).map(|(i, _)| labels[i].clone()).collect() };
    let raw = RawChain {
        states: labels.to_vec(),
        rows: c
            .rows()
            .iter()
            .map(|r| r.iter().map(|(t, p)| (labels[*t].clone(), RatLit::canonical(p))).collect())
            .collect(),
        priority: Some(c.priorities().to_vec()),
        a: input.pair.as_ref().map(|p| names(&p.a)),
        b: input.pair.as_ref().map(|p| names(&p.b)),
    };
    serde_json::to_value(raw).expect("serialisable")
}
