//! Probabilistic lexicographic orders on vectors over `[0, ∞]`.
//!
//! `u ≻ v` holds at level `l` when `u_i ≥ v_i` for every `i < l` and
//! `u_l ≥ 1 + v_l`. `u ⪰ v` is `≻` together with componentwise `≥`. Nested
//! vectors are compared through their flattening.

use thiserror::Error;

use crate::rational::Ext;

pub type ExtVec = Vec<Ext>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LexError {
    #[error("vector lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("truncation index {index} outside 1..={len}")]
    BadTruncation { index: usize, len: usize },
    #[error("nested vector has an empty block")]
    EmptyBlock,
    #[error("nested shapes differ")]
    ShapeMismatch,
}

/// A position inside a nested vector, both coordinates 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Level {
    pub block: usize,
    pub index: usize,
}

impl Level {
    pub fn new(block: usize, index: usize) -> Self {
        Level { block, index }
    }

    /// 1-based flat position under the given block sizes.
    pub fn flat(&self, shape: &[usize]) -> usize {
        shape[..self.block - 1].iter().sum::<usize>() + self.index
    }

    /// Inverse of [`Level::flat`].
    pub fn from_flat(flat: usize, shape: &[usize]) -> Option<Level> {
        let mut rest = flat;
        for (j, &m) in shape.iter().enumerate() {
            if rest <= m {
                return (rest >= 1).then_some(Level { block: j + 1, index: rest });
            }
            rest -= m;
        }
        None
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.block, self.index)
    }
}

fn check_len(u: &[Ext], v: &[Ext]) -> Result<(), LexError> {
    if u.len() != v.len() {
        return Err(LexError::LengthMismatch(u.len(), v.len()));
    }
    Ok(())
}

/// Smallest witnessing level of `u ≻ v`, 1-based.
pub fn lex_gt(u: &[Ext], v: &[Ext]) -> Result<Option<usize>, LexError> {
    check_len(u, v)?;
    for (l, (a, b)) in u.iter().zip(v).enumerate() {
        if a.ge_succ(b) {
            debug_assert!(u[..l].iter().zip(v).all(|(x, y)| x.ge(y)));
            return Ok(Some(l + 1));
        }
        if !a.ge(b) {
            return Ok(None);
        }
    }
    Ok(None)
}

pub fn lex_geq(u: &[Ext], v: &[Ext]) -> Result<bool, LexError> {
    check_len(u, v)?;
    Ok(lex_gt(u, v)?.is_some() || u.iter().zip(v).all(|(a, b)| a.ge(b)))
}

fn truncate<'a>(u: &'a [Ext], v: &'a [Ext], i: usize) -> Result<(&'a [Ext], &'a [Ext]), LexError> {
    check_len(u, v)?;
    if i == 0 || i > u.len() {
        return Err(LexError::BadTruncation { index: i, len: u.len() });
    }
    Ok((&u[..i], &v[..i]))
}

pub fn lex_gt_trunc(u: &[Ext], v: &[Ext], i: usize) -> Result<Option<usize>, LexError> {
    let (a, b) = truncate(u, v, i)?;
    lex_gt(a, b)
}

pub fn lex_geq_trunc(u: &[Ext], v: &[Ext], i: usize) -> Result<bool, LexError> {
    let (a, b) = truncate(u, v, i)?;
    lex_geq(a, b)
}

/// A vector of blocks, `[0, ∞]^{m_1} × … × [0, ∞]^{m_d}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nested<T> {
    pub blocks: Vec<Vec<T>>,
}

impl<T: Clone> Nested<T> {
    pub fn new(blocks: Vec<Vec<T>>) -> Result<Self, LexError> {
        if blocks.is_empty() || blocks.iter().any(Vec::is_empty) {
            return Err(LexError::EmptyBlock);
        }
        Ok(Nested { blocks })
    }

    pub fn shape(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn flatten(&self) -> Vec<T> {
        self.blocks.iter().flatten().cloned().collect()
    }

    /// First `j` blocks.
    pub fn truncate(&self, j: usize) -> Nested<T> {
        Nested { blocks: self.blocks[..j].to_vec() }
    }
}

/// Concatenates blocks in order; rejects empty blocks.
pub fn flatten<T: Clone>(blocks: &[Vec<T>]) -> Result<Vec<T>, LexError> {
    Ok(Nested::new(blocks.to_vec())?.flatten())
}

fn same_shape(u: &Nested<Ext>, v: &Nested<Ext>) -> Result<Vec<usize>, LexError> {
    let shape = u.shape();
    if shape != v.shape() {
        return Err(LexError::ShapeMismatch);
    }
    Ok(shape)
}

pub fn nested_gt(u: &Nested<Ext>, v: &Nested<Ext>) -> Result<Option<Level>, LexError> {
    let shape = same_shape(u, v)?;
    Ok(lex_gt(&u.flatten(), &v.flatten())?.map(|l| Level::from_flat(l, &shape).expect("level inside shape")))
}

pub fn nested_geq(u: &Nested<Ext>, v: &Nested<Ext>) -> Result<bool, LexError> {
    same_shape(u, v)?;
    lex_geq(&u.flatten(), &v.flatten())
}

fn check_block_trunc(u: &Nested<Ext>, j: usize) -> Result<(), LexError> {
    if j == 0 || j > u.blocks.len() {
        return Err(LexError::BadTruncation { index: j, len: u.blocks.len() });
    }
    Ok(())
}

/// `≻⁽²⁾_j`: comparison restricted to the first `j` blocks.
pub fn nested_gt_trunc(u: &Nested<Ext>, v: &Nested<Ext>, j: usize) -> Result<Option<Level>, LexError> {
    same_shape(u, v)?;
    check_block_trunc(u, j)?;
    nested_gt(&u.truncate(j), &v.truncate(j))
}

pub fn nested_geq_trunc(u: &Nested<Ext>, v: &Nested<Ext>, j: usize) -> Result<bool, LexError> {
    same_shape(u, v)?;
    check_block_trunc(u, j)?;
    nested_geq(&u.truncate(j), &v.truncate(j))
}

/// `u ≻⁽²⁾_[(j,k)] v`: strict at exactly the given level with `≥` on every
/// earlier component.
pub fn nested_gt_at(u: &Nested<Ext>, v: &Nested<Ext>, level: Level) -> Result<bool, LexError> {
    let shape = same_shape(u, v)?;
    if level.block == 0 || level.block > shape.len() || level.index == 0 || level.index > shape[level.block - 1] {
        return Err(LexError::BadTruncation { index: level.block, len: shape.len() });
    }
    let (fu, fv) = (u.flatten(), v.flatten());
    let l = level.flat(&shape) - 1;
    Ok(fu[..l].iter().zip(&fv[..l]).all(|(a, b)| a.ge(b)) && fu[l].ge_succ(&fv[l]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn v(xs: &[i64]) -> ExtVec {
        xs.iter().map(|&x| Ext::Fin(int(x))).collect()
    }

    #[test]
    fn flat_examples() {
        assert_eq!(lex_gt(&v(&[2, 0]), &v(&[0, 5])).unwrap(), Some(1));
        let half = vec![Ext::Fin(rat(1, 2)), Ext::Fin(int(3))];
        assert_eq!(lex_gt(&v(&[1, 0]), &half).unwrap(), None);
        let inf = vec![Ext::Fin(int(0)), Ext::Inf];
        assert_eq!(lex_gt(&v(&[1, 0]), &inf).unwrap(), Some(1));
        assert!(lex_geq(&v(&[1, 0]), &inf).unwrap());
        assert!(lex_geq(&v(&[0, 5]), &v(&[0, 4])).unwrap());
        assert!(lex_geq(&v(&[3, 3]), &v(&[3, 3])).unwrap());
        assert!(lex_gt(&v(&[1]), &v(&[1, 2])).is_err());
    }

    #[test]
    fn truncation_examples() {
        assert!(lex_geq_trunc(&v(&[0, 9]), &v(&[0, 0]), 1).unwrap());
        assert_eq!(lex_gt_trunc(&v(&[0, 9]), &v(&[0, 0]), 1).unwrap(), None);
        assert_eq!(lex_gt_trunc(&v(&[3, 0]), &v(&[1, 7]), 1).unwrap(), Some(1));
        let w = vec![Ext::Fin(int(1)), Ext::Fin(int(0)), Ext::Inf];
        assert!(lex_geq_trunc(&v(&[1, 0, 0]), &w, 2).unwrap());
        assert!(lex_geq_trunc(&v(&[1]), &v(&[1]), 2).is_err());
    }

    #[test]
    fn nested_examples() {
        let n = |b: Vec<Vec<i64>>| Nested::new(b.into_iter().map(|x| v(&x)).collect()).unwrap();
        assert_eq!(nested_gt(&n(vec![vec![1, 0], vec![0, 0]]), &n(vec![vec![0, 5], vec![0, 0]])).unwrap(), Some(Level::new(1, 1)));
        assert_eq!(nested_gt(&n(vec![vec![0, 0], vec![2, 0]]), &n(vec![vec![0, 0], vec![0, 9]])).unwrap(), Some(Level::new(2, 1)));
        let e = n(vec![vec![1], vec![2, 3]]);
        assert!(nested_geq(&e, &e).unwrap());
        assert_eq!(nested_gt(&e, &e).unwrap(), None);
        assert_eq!(flatten(&[vec![1, 2], vec![3]]).unwrap(), vec![1, 2, 3]);
        assert_eq!(flatten::<i32>(&[vec![]]), Err(LexError::EmptyBlock));
        assert_eq!(flatten(&[vec![0], vec![0], vec![0]]).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn level_coordinates() {
        let shape = [2, 1, 3];
        for flat in 1..=6 {
            assert_eq!(Level::from_flat(flat, &shape).unwrap().flat(&shape), flat);
        }
        assert_eq!(Level::from_flat(3, &shape), Some(Level::new(2, 1)));
        assert_eq!(Level::from_flat(7, &shape), None);
    }
}
