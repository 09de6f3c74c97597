//! Translations between certificate classes, applied per state or region.

use std::collections::{BTreeMap, BTreeSet};

use super::json::Cert;
use super::Kind;
use crate::poly::Polynomial;
use crate::rational::Rat;

/// First `2i − 1` blocks of a full LexPMSM, flattened: a LexGSSM for the
/// Streett pair `(S≤2i−1, S≤2i−2)`.
pub fn lexpmsm_to_lexgssm<T: Clone>(blocks: &[Vec<T>], i: usize) -> Vec<T> {
    assert!(i >= 1 && 2 * i - 1 <= blocks.len(), "pair {i} needs {} blocks", 2 * i - 1);
    blocks[..2 * i - 1].iter().flatten().cloned().collect()
}

/// One LexGSSM per pair, used as the blocks of a reduced LexPMSM.
pub fn lexgssms_to_reduced<T: Clone>(per_pair: &[Vec<T>]) -> Vec<Vec<T>> {
    per_pair.to_vec()
}

/// `r'_1 = r_1`, `r'_j = flat(r_{2j−2}, r_{2j−1})`.
pub fn lexpmsm_to_reduced<T: Clone>(blocks: &[Vec<T>]) -> Vec<Vec<T>> {
    let d = blocks.len();
    let mut out = vec![blocks[0].clone()];
    for j in 2..=d.div_ceil(2) {
        let mut b = blocks[2 * j - 3].clone();
        b.extend(blocks[2 * j - 2].iter().cloned());
        out.push(b);
    }
    out
}

/// Inserts a zero block for every even priority up to `d`.
pub fn reduced_to_full<T: Clone>(blocks: &[Vec<T>], d: usize, zero: &T) -> Vec<Vec<T>> {
    assert_eq!(blocks.len(), d.div_ceil(2), "reduced certificate has the wrong number of blocks");
    (1..=d).map(|i| if i % 2 == 1 { blocks[i / 2].clone() } else { vec![zero.clone()] }).collect()
}

/// Per-state scalar `r / ε`.
pub fn ssm_to_gssm(r: &Rat, eps: &Rat) -> Rat {
    r / eps
}

pub fn ssm_to_gssm_poly(r: &Polynomial, eps: &Rat) -> Polynomial {
    r.scale(&(Rat::from_integer(1.into()) / eps))
}

/// Whole-certificate translation. `certs` holds one certificate, or one
/// LexGSSM per Streett pair when the target is a reduced LexPMSM. Keys
/// missing from a certificate are zero. `d` is the maximum priority.
pub fn translate_cert<K: Ord + Clone, V: Clone>(
    certs: &[Cert<K, V>],
    to: Kind,
    d: usize,
    pair: Option<usize>,
    zero: &V,
    divide: impl Fn(&V, &Rat) -> V,
) -> Result<Cert<K, V>, String> {
    let first = certs.first().ok_or("no certificate to translate")?;
    let keys: BTreeSet<K> = certs.iter().flat_map(|c| c.values.keys().cloned()).collect();
    let blocks_of = |c: &Cert<K, V>, k: &K| -> Vec<Vec<V>> {
        c.values.get(k).cloned().unwrap_or_else(|| c.shape.iter().map(|&m| vec![zero.clone(); m]).collect())
    };
    let build = |kind: Kind, pair: Option<usize>, f: &dyn Fn(&K) -> Vec<Vec<V>>| -> Cert<K, V> {
        let values: BTreeMap<K, Vec<Vec<V>>> = keys.iter().map(|k| (k.clone(), f(k))).collect();
        let shape = values.values().next().map(|b| b.iter().map(Vec::len).collect()).unwrap_or_else(|| vec![1]);
        Cert { kind, shape, values, lev: BTreeMap::new(), epsilon: None, m: None, pair }
    };
    if certs.len() > 1 {
        if to != Kind::ReducedLexPmsm || certs.iter().any(|c| c.kind != Kind::LexGssm) {
            return Err("several certificates translate only from LexGSSMs to a reduced LexPMSM".into());
        }
        if certs.len() != d.div_ceil(2) {
            return Err(format!("need one LexGSSM per pair: {} given, {} pairs", certs.len(), d.div_ceil(2)));
        }
        let flat = |c: &Cert<K, V>, k: &K| blocks_of(c, k).into_iter().flatten().collect::<Vec<V>>();
        return Ok(build(to, None, &|k| lexgssms_to_reduced(&certs.iter().map(|c| flat(c, k)).collect::<Vec<_>>())));
    }
    let c = first;
    match (c.kind, to) {
        (Kind::LexPmsm, Kind::LexGssm) => {
            let i = pair.unwrap_or(d.div_ceil(2));
            if i == 0 || 2 * i - 1 > c.shape.len() {
                return Err(format!("pair {i} needs {} blocks, certificate has {}", 2 * i - 1, c.shape.len()));
            }
            Ok(build(to, Some(i), &|k| vec![lexpmsm_to_lexgssm(&blocks_of(c, k), i)]))
        }
        (Kind::LexPmsm, Kind::ReducedLexPmsm) => Ok(build(to, None, &|k| lexpmsm_to_reduced(&blocks_of(c, k)))),
        (Kind::ReducedLexPmsm | Kind::LexPmsmMap, Kind::LexPmsm) => {
            if c.shape.len() != d.div_ceil(2) {
                return Err(format!("{} blocks for maximum priority {d}", c.shape.len()));
            }
            Ok(build(to, None, &|k| reduced_to_full(&blocks_of(c, k), d, zero)))
        }
        (Kind::LexPmsmMap, Kind::ReducedLexPmsm) => Ok(build(to, None, &|k| blocks_of(c, k))),
        (Kind::LexGssm, Kind::ReducedLexPmsm) if d <= 2 => Ok(build(to, None, &|k| blocks_of(c, k))),
        (Kind::Ssm, Kind::Gssm) => {
            let eps = c.epsilon.clone().ok_or("an SSM needs `epsilon`")?;
            Ok(build(to, c.pair, &|k| blocks_of(c, k).iter().map(|b| b.iter().map(|v| divide(v, &eps)).collect()).collect()))
        }
        (Kind::Gssm, Kind::LexGssm) => Ok(build(to, c.pair, &|k| blocks_of(c, k))),
        (from, to) => Err(format!("no translation from {from} to {to}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_bookkeeping() {
        let full: Vec<Vec<i64>> = vec![vec![1], vec![2, 3], vec![4], vec![5]];
        assert_eq!(lexpmsm_to_lexgssm(&full, 1), vec![1]);
        assert_eq!(lexpmsm_to_lexgssm(&full, 2), vec![1, 2, 3, 4]);
        assert_eq!(lexpmsm_to_reduced(&full), vec![vec![1], vec![2, 3, 4]]);
        let five: Vec<Vec<i64>> = vec![vec![1], vec![2], vec![3], vec![4], vec![5]];
        assert_eq!(lexpmsm_to_reduced(&five), vec![vec![1], vec![2, 3], vec![4, 5]]);
        assert_eq!(reduced_to_full(&[vec![7], vec![8, 9]], 4, &0), vec![vec![7], vec![0], vec![8, 9], vec![0]]);
        assert_eq!(reduced_to_full(&[vec![7], vec![8]], 3, &0), vec![vec![7], vec![0], vec![8]]);
    }
}
