//! JSON encodings of certificates and verdicts, and dispatch to the
//! matching checker.
//!
//! Symbolic certificates list `regions` with polynomials; finite ones list
//! `states` with rationals. Values are nested as blocks: scalar kinds use
//! `[[r]]`, flat vector kinds a single block. Regions or states left out are
//! zero.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{finite, symbolic, Kind, Lev, LexPmsMap, Verdict};
use crate::lexorder::Level;
use crate::model::json::RatLit;
use crate::model::{parity_to_streett, FiniteChain, ModelError, RegionKey, StreettPair, System};
use crate::poly::Polynomial;
use crate::rational::{format_rat, Rat};

pub const VERDICT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CertError {
    #[error("certificate JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("certificate: {0}")]
    Invalid(String),
}

/// `"*"` or `[j, k]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum LevLit {
    Star(String),
    At([usize; 2]),
}

impl LevLit {
    fn value(&self) -> Result<Lev, CertError> {
        match self {
            LevLit::Star(s) if s == "*" => Ok(Lev::Star),
            LevLit::Star(s) => Err(CertError::Invalid(format!("level `{s}` is neither `*` nor [j, k]"))),
            LevLit::At([j, k]) => Ok(Lev::At(Level::new(*j, *k))),
        }
    }

    fn from_lev(l: Lev) -> Self {
        match l {
            Lev::Star => LevLit::Star("*".into()),
            Lev::At(l) => LevLit::At([l.block, l.index]),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRegionCert {
    pub location: String,
    pub priority: usize,
    pub polys: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawStateCert {
    pub state: String,
    pub values: Vec<Vec<RatLit>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLev {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    pub level: LevLit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCert {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<Vec<RawRegionCert>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<RawStateCert>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lev: Option<Vec<RawLev>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<RatLit>,
    #[serde(default, rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<RatLit>,
    /// Streett pair index for scalar and flat-vector kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<usize>,
}

/// A parsed certificate: nested values per key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cert<K: Ord, V> {
    pub kind: Kind,
    pub shape: Vec<usize>,
    pub values: BTreeMap<K, Vec<Vec<V>>>,
    pub lev: BTreeMap<K, Lev>,
    pub epsilon: Option<Rat>,
    pub m: Option<Rat>,
    pub pair: Option<usize>,
}

pub type SymbolicCert = Cert<RegionKey, Polynomial>;
pub type FiniteCert = Cert<usize, Rat>;

fn parse_head(raw: &RawCert) -> Result<(Kind, Option<Rat>, Option<Rat>), CertError> {
    let kind = Kind::parse(&raw.kind).ok_or_else(|| CertError::Invalid(format!("unknown kind `{}`", raw.kind)))?;
    let eps = raw.epsilon.as_ref().map(RatLit::value).transpose()?;
    let m = raw.m.as_ref().map(RatLit::value).transpose()?;
    Ok((kind, eps, m))
}

fn infer_shape<V>(given: &Option<Vec<usize>>, values: &[&Vec<Vec<V>>]) -> Result<Vec<usize>, CertError> {
    let shape = match (given, values.first()) {
        (Some(s), _) => s.clone(),
        (None, Some(v)) => v.iter().map(Vec::len).collect(),
        (None, None) => vec![1],
    };
    if values.iter().any(|v| v.iter().map(Vec::len).collect::<Vec<_>>() != shape) {
        return Err(CertError::Invalid(format!("values do not match shape {shape:?}")));
    }
    Ok(shape)
}

pub fn parse_symbolic_cert(text: &str, sys: &System) -> Result<SymbolicCert, CertError> {
    let raw: RawCert = serde_json::from_str(text)?;
    let (kind, epsilon, m) = parse_head(&raw)?;
    if kind == Kind::Dvssm {
        return Err(CertError::Invalid("distribution-valued certificates are checked on finite chains only".into()));
    }
    if raw.states.is_some() {
        return Err(CertError::Invalid("`states` belongs to finite certificates; use `regions`".into()));
    }
    let names = &sys.pcfg.var_names;
    let mut values = BTreeMap::new();
    for r in raw.regions.iter().flatten() {
        let key = (sys.pcfg.location_index(&r.location)?, r.priority);
        let blocks = r
            .polys
            .iter()
            .map(|b| b.iter().map(|p| Polynomial::parse(p, names).map_err(ModelError::from)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        if values.insert(key, blocks).is_some() {
            return Err(CertError::Invalid(format!("region {}/{} given twice", r.location, r.priority)));
        }
    }
    let mut lev = BTreeMap::new();
    for l in raw.lev.iter().flatten() {
        let (Some(loc), Some(p)) = (&l.location, l.priority) else {
            return Err(CertError::Invalid("symbolic levels need `location` and `priority`".into()));
        };
        lev.insert((sys.pcfg.location_index(loc)?, p), l.level.value()?);
    }
    let shape = infer_shape(&raw.shape, &values.values().collect::<Vec<_>>())?;
    Ok(Cert { kind, shape, values, lev, epsilon, m, pair: raw.pair })
}

pub fn parse_finite_cert(text: &str, chain: &FiniteChain) -> Result<FiniteCert, CertError> {
    let raw: RawCert = serde_json::from_str(text)?;
    let (kind, epsilon, m) = parse_head(&raw)?;
    if raw.regions.is_some() {
        return Err(CertError::Invalid("`regions` belongs to symbolic certificates; use `states`".into()));
    }
    let idx = |name: &str| {
        chain.labels().iter().position(|l| l == name).ok_or_else(|| CertError::Invalid(format!("unknown state `{name}`")))
    };
    let mut values = BTreeMap::new();
    for s in raw.states.iter().flatten() {
        let blocks = s
            .values
            .iter()
            .map(|b| b.iter().map(RatLit::value).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        if values.insert(idx(&s.state)?, blocks).is_some() {
            return Err(CertError::Invalid(format!("state {} given twice", s.state)));
        }
    }
    let mut lev = BTreeMap::new();
    for l in raw.lev.iter().flatten() {
        let Some(s) = &l.state else {
            return Err(CertError::Invalid("finite levels need `state`".into()));
        };
        lev.insert(idx(s)?, l.level.value()?);
    }
    let shape = infer_shape(&raw.shape, &values.values().collect::<Vec<_>>())?;
    Ok(Cert { kind, shape, values, lev, epsilon, m, pair: raw.pair })
}

fn zero_blocks<V: Clone>(shape: &[usize], zero: V) -> Vec<Vec<V>> {
    shape.iter().map(|&m| vec![zero.clone(); m]).collect()
}

fn scalar_eps_m(epsilon: &Option<Rat>, m: &Option<Rat>) -> Result<(Rat, Rat), Verdict> {
    match (epsilon, m) {
        (Some(e), Some(m)) => Ok((e.clone(), m.clone())),
        _ => Err(Verdict::reject("an SSM needs `epsilon` and `M`", None)),
    }
}

/// Checks a symbolic certificate against a system.
pub fn check_symbolic(sys: &System, cert: &SymbolicCert) -> Verdict {
    let n = sys.pcfg.nvars();
    let pair = cert.pair.unwrap_or_else(|| sys.partition.half());
    let flat = || -> symbolic::VecCert { cert.values.iter().map(|(k, b)| (*k, b.iter().flatten().cloned().collect())).collect() };
    let scalar = || -> Result<symbolic::ScalarCert, Verdict> {
        cert.values
            .iter()
            .map(|(k, b)| match b.as_slice() {
                [v] if v.len() == 1 => Ok((*k, v[0].clone())),
                _ => Err(Verdict::reject("scalar certificates need exactly one value per region", None)),
            })
            .collect()
    };
    match cert.kind {
        Kind::Ssm => match (scalar(), scalar_eps_m(&cert.epsilon, &cert.m)) {
            (Ok(r), Ok((e, m))) => symbolic::check_ssm(sys, pair, &r, &e, &m),
            (Err(v), _) | (_, Err(v)) => v,
        },
        Kind::Gssm => match scalar() {
            Ok(r) => symbolic::check_gssm(sys, pair, &r),
            Err(v) => v,
        },
        Kind::LexGssm => symbolic::check_lexgssm(sys, pair, &flat()),
        Kind::Pmsm => symbolic::check_pmsm(sys, &flat()),
        Kind::LexPmsm => symbolic::check_nested(sys, &cert.shape, &cert.values, false),
        Kind::ReducedLexPmsm => symbolic::check_nested(sys, &cert.shape, &cert.values, true),
        Kind::LexPmsmMap => {
            let mut values = cert.values.clone();
            for k in sys.partition.keys() {
                values.entry(k).or_insert_with(|| zero_blocks(&cert.shape, Polynomial::zero(n)));
            }
            symbolic::check_lexpmsm_map(sys, &LexPmsMap { shape: cert.shape.clone(), lev: cert.lev.clone(), values })
        }
        Kind::Dvssm => Verdict::reject("distribution-valued certificates are checked on finite chains only", None),
    }
}

/// Streett pair for a finite check: the chain's own pair, or the pair
/// `pair` (default the last) derived from its priorities.
pub fn finite_pair(chain: &FiniteChain, own: Option<&StreettPair>, pair: Option<usize>) -> Result<StreettPair, String> {
    if let (Some(p), None) = (own, pair) {
        return Ok(p.clone());
    }
    let d = chain.max_priority().next_multiple_of(2).max(2);
    let pairs = parity_to_streett(chain.priorities(), d).map_err(|e| e.to_string())?;
    let i = pair.unwrap_or(d / 2);
    pairs.get(i.wrapping_sub(1)).cloned().ok_or_else(|| format!("pair {i} out of range 1..={}", d / 2))
}

/// Checks a finite certificate against a chain.
pub fn check_finite(chain: &FiniteChain, own_pair: Option<&StreettPair>, cert: &FiniteCert) -> Verdict {
    let n = chain.len();
    let full: Vec<Vec<Vec<Rat>>> =
        (0..n).map(|s| cert.values.get(&s).cloned().unwrap_or_else(|| zero_blocks(&cert.shape, Rat::zero()))).collect();
    let flat: Vec<Vec<Rat>> = full.iter().map(|b| b.iter().flatten().cloned().collect()).collect();
    let pair = || finite_pair(chain, own_pair, cert.pair);
    let scalar = || -> Result<Vec<Rat>, Verdict> {
        flat.iter()
            .map(|v| match v.as_slice() {
                [x] => Ok(x.clone()),
                _ => Err(Verdict::reject("scalar certificates need exactly one value per state", None)),
            })
            .collect()
    };
    let with_pair = |f: &dyn Fn(&StreettPair) -> Verdict| match pair() {
        Ok(p) => f(&p),
        Err(e) => Verdict::reject(e, None),
    };
    match cert.kind {
        Kind::Ssm => match (scalar(), scalar_eps_m(&cert.epsilon, &cert.m)) {
            (Ok(r), Ok((e, m))) => with_pair(&|p| finite::check_ssm(chain, p, &r, &e, &m)),
            (Err(v), _) | (_, Err(v)) => v,
        },
        Kind::Gssm => match scalar() {
            Ok(r) => with_pair(&|p| finite::check_gssm(chain, p, &r)),
            Err(v) => v,
        },
        Kind::LexGssm => with_pair(&|p| finite::check_lexgssm(chain, p, &flat)),
        Kind::Pmsm => finite::check_pmsm(chain, &flat),
        Kind::LexPmsm => finite::check_lexpmsm(chain, &full),
        Kind::ReducedLexPmsm => finite::check_reduced_lexpmsm(chain, &full),
        Kind::LexPmsmMap => finite::check_lexpmsm_map(
            chain,
            &LexPmsMap { shape: cert.shape.clone(), lev: cert.lev.clone(), values: full.into_iter().enumerate().collect() },
        ),
        Kind::Dvssm => with_pair(&|p| finite::check_dvssm(chain, p, &flat)),
    }
}

/// Symbolic LexPMSM map as certificate JSON.
pub fn map_to_json(sys: &System, map: &LexPmsMap<RegionKey, Polynomial>) -> Value {
    let names = &sys.pcfg.var_names;
    let raw = RawCert {
        kind: Kind::LexPmsmMap.name().into(),
        shape: Some(map.shape.clone()),
        regions: Some(
            map.values
                .iter()
                .map(|((l, p), blocks)| RawRegionCert {
                    location: sys.pcfg.locations[*l].clone(),
                    priority: *p,
                    polys: blocks.iter().map(|b| b.iter().map(|q| q.display(names).to_string()).collect()).collect(),
                })
                .collect(),
        ),
        states: None,
        lev: Some(
            map.lev
                .iter()
                .map(|((l, p), lev)| RawLev {
                    location: Some(sys.pcfg.locations[*l].clone()),
                    priority: Some(*p),
                    state: None,
                    level: LevLit::from_lev(*lev),
                })
                .collect(),
        ),
        epsilon: None,
        m: None,
        pair: None,
    };
    serde_json::to_value(raw).expect("serialisable")
}

/// Finite LexPMSM map (per-state constants) as certificate JSON.
pub fn finite_map_to_json(chain: &FiniteChain, map: &LexPmsMap<usize, Rat>) -> Value {
    let raw = RawCert {
        kind: Kind::LexPmsmMap.name().into(),
        shape: Some(map.shape.clone()),
        regions: None,
        states: Some(
            map.values
                .iter()
                .map(|(s, blocks)| RawStateCert {
                    state: chain.label(*s).to_string(),
                    values: blocks.iter().map(|b| b.iter().map(RatLit::canonical).collect()).collect(),
                })
                .collect(),
        ),
        lev: Some(
            map.lev
                .iter()
                .map(|(s, lev)| RawLev {
                    location: None,
                    priority: None,
                    state: Some(chain.label(*s).to_string()),
                    level: LevLit::from_lev(*lev),
                })
                .collect(),
        ),
        epsilon: None,
        m: None,
        pair: None,
    };
    serde_json::to_value(raw).expect("serialisable")
}

/// Any symbolic certificate as JSON, blocks per region.
pub fn symbolic_cert_to_json(sys: &System, cert: &SymbolicCert) -> Value {
    let names = &sys.pcfg.var_names;
    let raw = RawCert {
        kind: cert.kind.name().into(),
        shape: Some(cert.shape.clone()),
        regions: Some(
            cert.values
                .iter()
                .map(|((l, p), blocks)| RawRegionCert {
                    location: sys.pcfg.locations[*l].clone(),
                    priority: *p,
                    polys: blocks.iter().map(|b| b.iter().map(|q| q.display(names).to_string()).collect()).collect(),
                })
                .collect(),
        ),
        states: None,
        lev: (!cert.lev.is_empty()).then(|| {
            cert.lev
                .iter()
                .map(|((l, p), lev)| RawLev {
                    location: Some(sys.pcfg.locations[*l].clone()),
                    priority: Some(*p),
                    state: None,
                    level: LevLit::from_lev(*lev),
                })
                .collect()
        }),
        epsilon: cert.epsilon.as_ref().map(RatLit::canonical),
        m: cert.m.as_ref().map(RatLit::canonical),
        pair: cert.pair,
    };
    serde_json::to_value(raw).expect("serialisable")
}

/// Any finite certificate as JSON.
pub fn finite_cert_to_json(chain: &FiniteChain, cert: &FiniteCert) -> Value {
    let raw = RawCert {
        kind: cert.kind.name().into(),
        shape: Some(cert.shape.clone()),
        regions: None,
        states: Some(
            cert.values
                .iter()
                .map(|(s, blocks)| RawStateCert {
                    state: chain.label(*s).to_string(),
                    values: blocks.iter().map(|b| b.iter().map(RatLit::canonical).collect()).collect(),
                })
                .collect(),
        ),
        lev: (!cert.lev.is_empty()).then(|| {
            cert.lev
                .iter()
                .map(|(s, lev)| RawLev {
                    location: None,
                    priority: None,
                    state: Some(chain.label(*s).to_string()),
                    level: LevLit::from_lev(*lev),
                })
                .collect()
        }),
        epsilon: cert.epsilon.as_ref().map(RatLit::canonical),
        m: cert.m.as_ref().map(RatLit::canonical),
        pair: cert.pair,
    };
    serde_json::to_value(raw).expect("serialisable")
}

pub fn verdict_to_json(v: &Verdict, kind: Kind, mode: &str) -> Value {
    let mut out = json!({
        "schema_version": VERDICT_SCHEMA_VERSION,
        "verdict": v.name(),
        "kind": kind.name(),
        "mode": mode,
    });
    match v {
        Verdict::Accept { levels } => out["levels"] = json!(levels),
        Verdict::Reject { reason, witness } => {
            out["reason"] = json!(reason);
            if let Some(w) = witness {
                out["witness"] = json!({
                    "at": w.at,
                    "point": w.point.as_ref().map(|p| p.iter().map(format_rat).collect::<Vec<_>>()),
                });
            }
        }
        Verdict::Unknown { reason } => out["reason"] = json!(reason),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::json::{parse_chain, parse_system};

    #[test]
    fn finite_round_trip_and_check() {
        let input = parse_chain(
            r#"{"states":["s0","s1"],"rows":[{"s0":"1/2","s1":"1/2"},{"s1":1}],"a":["s0"],"b":["s1"]}"#,
        )
        .unwrap();
        let text = r#"{"kind":"gssm","states":[{"state":"s0","values":[["2"]]}]}"#;
        let cert = parse_finite_cert(text, &input.chain).unwrap();
        assert!(check_finite(&input.chain, input.pair.as_ref(), &cert).is_accept());
        let again = finite_cert_to_json(&input.chain, &cert).to_string();
        assert_eq!(parse_finite_cert(&again, &input.chain).unwrap(), cert);
        assert!(parse_finite_cert(r#"{"kind":"nope"}"#, &input.chain).is_err());
        assert!(parse_finite_cert(r#"{"kind":"gssm","extra":1}"#, &input.chain).is_err());
    }

    #[test]
    fn symbolic_dispatch() {
        let sys = parse_system(
            r#"{"vars":["x"],"locations":["l"],
                "commands":{"l":[{"guard":["x >= 1"],"branches":[{"target":"l","update":["x - 1"]}]},
                                 {"guard":["x < 1"],"branches":[{"target":"l"}]}]},
                "max_priority":4,
                "partition":[{"location":"l","priority":3,"guard":["x >= 1"]},
                             {"location":"l","priority":2,"guard":["x >= 0","x < 1"]}]}"#,
        )
        .unwrap();
        let cert =
            parse_symbolic_cert(r#"{"kind":"gssm","regions":[{"location":"l","priority":3,"polys":[["x"]]}]}"#, &sys).unwrap();
        let v = check_symbolic(&sys, &cert);
        assert!(v.is_accept(), "{v}");
        let j = verdict_to_json(&v, cert.kind, "symbolic");
        assert_eq!(j["verdict"], "accept");
        assert_eq!(j["schema_version"], 1);
    }
}
