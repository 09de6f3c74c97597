//! Multivariate polynomials with exact rational coefficients, a small infix
//! parser, and parametric polynomials whose coefficients are affine forms over
//! unknown template parameters.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{display_rat, parse_rat, Rat};

/// Exponent vector, one entry per program variable.
pub type Monomial = Vec<u32>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("parse error in `{text}` at byte {pos}: {msg}")]
    Parse { text: String, pos: usize, msg: String },
    #[error("division by a non-constant or zero expression in `{0}`")]
    BadDivision(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, Rat>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rat) -> Self {
        let mut p = Polynomial::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        assert!(index < nvars, "variable index out of range");
        let mut mono = vec![0; nvars];
        mono[index] = 1;
        let mut p = Polynomial::zero(nvars);
        p.add_term(mono, Rat::one());
        p
    }

    /// Builds `Σ coeffs[i]·x_i + constant`.
    pub fn affine(coeffs: &[Rat], constant: Rat) -> Self {
        let n = coeffs.len();
        let mut p = Polynomial::constant(n, constant);
        for (i, c) in coeffs.iter().enumerate() {
            let mut mono = vec![0; n];
            mono[i] = 1;
            p.add_term(mono, c.clone());
        }
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, Rat)>) -> Self {
        let mut p = Polynomial::zero(nvars);
        for (m, c) in terms {
            assert_eq!(m.len(), nvars, "exponent vector length mismatch");
            p.add_term(m, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Rat> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, mono: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(mono).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    /// Constant value if the polynomial has no variable terms.
    pub fn as_constant(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 => self.terms.get(&vec![0; self.nvars]).cloned(),
            _ => None,
        }
    }

    /// `(coefficients, constant)` when the degree is at most one.
    pub fn as_affine(&self) -> Option<(Vec<Rat>, Rat)> {
        let mut coeffs = vec![Rat::zero(); self.nvars];
        let mut constant = Rat::zero();
        for (m, c) in &self.terms {
            let deg: u32 = m.iter().sum();
            match deg {
                0 => constant = c.clone(),
                1 => {
                    let i = m.iter().position(|&e| e == 1).expect("degree one");
                    coeffs[i] = c.clone();
                }
                _ => return None,
            }
        }
        Some((coeffs, constant))
    }

    pub fn eval(&self, point: &[Rat]) -> Rat {
        assert_eq!(point.len(), self.nvars, "point dimension mismatch");
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (x, &e) in point.iter().zip(m) {
                for _ in 0..e {
                    v *= x;
                }
            }
            acc += v;
        }
        acc
    }

    pub fn scale(&self, k: &Rat) -> Self {
        if k.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Polynomial::constant(self.nvars, Rat::one());
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Composition: variable `i` is replaced by `subst[i]`. All substitutes
    /// must share one variable count, which becomes the result's.
    pub fn compose(&self, subst: &[Polynomial]) -> Polynomial {
        assert_eq!(subst.len(), self.nvars, "substitution arity mismatch");
        let target = subst.first().map(|p| p.nvars).unwrap_or(0);
        let mut out = Polynomial::zero(target);
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(target, c.clone());
            for (i, &e) in m.iter().enumerate() {
                if e > 0 {
                    term = &term * &subst[i].pow(e);
                }
            }
            out = &out + &term;
        }
        out
    }

    /// Reinterprets the polynomial over `nvars` variables where the current
    /// variables occupy indices `offset..offset + self.nvars`.
    pub fn embed(&self, nvars: usize, offset: usize) -> Polynomial {
        assert!(offset + self.nvars <= nvars);
        let mut out = Polynomial::zero(nvars);
        for (m, c) in &self.terms {
            let mut mono = vec![0; nvars];
            mono[offset..offset + self.nvars].copy_from_slice(m);
            out.add_term(mono, c.clone());
        }
        out
    }

    pub fn parse(text: &str, names: &[String]) -> Result<Polynomial, PolyError> {
        Parser::new(text, names).parse()
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, names }
    }

    /// Terms in display order: higher total degree first, then by exponents.
    fn ordered_terms(&self) -> Vec<(&Monomial, &Rat)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        v
    }
}

impl std::ops::Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars, "variable count mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl std::ops::Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl std::ops::Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars, "variable count mismatch");
        let mut out = Polynomial::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let m: Monomial = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                out.add_term(m, ca * cb);
            }
        }
        out
    }
}

pub struct PolyDisplay<'a> {
    poly: &'a Polynomial,
    names: &'a [String],
}

fn write_monomial(f: &mut fmt::Formatter<'_>, m: &Monomial, names: &[String]) -> fmt::Result {
    let mut first = true;
    for (i, &e) in m.iter().enumerate() {
        if e == 0 {
            continue;
        }
        if !first {
            f.write_str("*")?;
        }
        first = false;
        let name = names.get(i).map(String::as_str).unwrap_or("?");
        if e == 1 {
            f.write_str(name)?;
        } else {
            write!(f, "{name}^{e}")?;
        }
    }
    Ok(())
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.poly.ordered_terms();
        if terms.is_empty() {
            return f.write_str("0");
        }
        for (idx, (m, c)) in terms.into_iter().enumerate() {
            let is_const = m.iter().all(|&e| e == 0);
            let neg = c.is_negative();
            let mag = c.abs();
            if idx == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            if is_const {
                f.write_str(&display_rat(&mag))?;
            } else {
                if !mag.is_one() {
                    write!(f, "{}*", display_rat(&mag))?;
                }
                write_monomial(f, m, self.names)?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    names: &'a [String],
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, names: &'a [String]) -> Self {
        Parser { text, bytes: text.as_bytes(), pos: 0, names }
    }

    fn nvars(&self) -> usize {
        self.names.len()
    }

    fn err(&self, msg: &str) -> PolyError {
        PolyError::Parse { text: self.text.to_string(), pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<Polynomial, PolyError> {
        let p = self.expr()?;
        if self.peek().is_some() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(p)
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                b'-' => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                b'/' => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    match rhs.as_constant() {
                        Some(k) if !k.is_zero() => acc = acc.scale(&(Rat::one() / k)),
                        _ => return Err(PolyError::BadDivision(self.text.to_string())),
                    }
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let e: u32 = self.text[start..self.pos].parse().map_err(|_| self.err("expected exponent"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let p = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(p)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                let lit = &self.text[start..self.pos];
                let v = parse_rat(lit).map_err(|_| self.err("bad number"))?;
                Ok(Polynomial::constant(self.nvars(), v))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = &self.text[start..self.pos];
                let idx = self
                    .names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| PolyError::UnknownVariable(name.to_string()))?;
                Ok(Polynomial::var(self.nvars(), idx))
            }
            _ => Err(self.err("expected a number, variable or `(`")),
        }
    }
}

/// Affine form `Σ coeffs[p]·t_p + constant` over template parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LinForm {
    pub coeffs: BTreeMap<usize, Rat>,
    pub constant: Rat,
}

impl LinForm {
    pub fn constant(c: Rat) -> Self {
        LinForm { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn param(index: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(index, Rat::one());
        LinForm { coeffs, constant: Rat::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_param(&mut self, index: usize, c: &Rat) {
        if c.is_zero() {
            return;
        }
        let e = self.coeffs.entry(index).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&index);
        }
    }

    pub fn add_scaled(&mut self, other: &LinForm, k: &Rat) {
        if k.is_zero() {
            return;
        }
        for (p, c) in &other.coeffs {
            self.add_param(*p, &(c * k));
        }
        self.constant += &other.constant * k;
    }

    pub fn scale(&self, k: &Rat) -> LinForm {
        let mut out = LinForm::default();
        out.add_scaled(self, k);
        out
    }

    pub fn eval(&self, values: &[Rat]) -> Rat {
        let mut acc = self.constant.clone();
        for (p, c) in &self.coeffs {
            acc += c * &values[*p];
        }
        acc
    }

    pub fn max_param(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }
}

/// Polynomial over program variables whose coefficients are affine in the
/// template parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamPoly {
    nvars: usize,
    terms: BTreeMap<Monomial, LinForm>,
}

impl ParamPoly {
    pub fn zero(nvars: usize) -> Self {
        ParamPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, LinForm> {
        &self.terms
    }

    pub fn from_poly(p: &Polynomial) -> Self {
        let mut out = ParamPoly::zero(p.nvars());
        for (m, c) in p.terms() {
            out.add_term(m.clone(), &LinForm::constant(c.clone()), &Rat::one());
        }
        out
    }

    /// Dense template of the given degree. Parameters are allocated from
    /// `next_param` upwards, one per monomial; returns the template and the
    /// parameter indices it uses.
    pub fn template(nvars: usize, degree: u32, next_param: &mut usize) -> (ParamPoly, Vec<usize>) {
        let mut out = ParamPoly::zero(nvars);
        let mut used = Vec::new();
        for m in monomials_up_to(nvars, degree) {
            out.terms.insert(m, LinForm::param(*next_param));
            used.push(*next_param);
            *next_param += 1;
        }
        (out, used)
    }

    fn add_term(&mut self, m: Monomial, f: &LinForm, k: &Rat) {
        let e = self.terms.entry(m.clone()).or_default();
        e.add_scaled(f, k);
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add_scaled(&mut self, other: &ParamPoly, k: &Rat) {
        assert_eq!(self.nvars, other.nvars);
        for (m, f) in &other.terms {
            self.add_term(m.clone(), f, k);
        }
    }

    pub fn add_constant(&mut self, f: &LinForm) {
        self.add_term(vec![0; self.nvars], f, &Rat::one());
    }

    pub fn add_poly(&mut self, p: &Polynomial, k: &Rat) {
        self.add_scaled(&ParamPoly::from_poly(p), k);
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    /// Substitutes polynomial updates for the program variables.
    pub fn compose(&self, subst: &[Polynomial]) -> ParamPoly {
        assert_eq!(subst.len(), self.nvars);
        let target = subst.first().map(|p| p.nvars()).unwrap_or(0);
        let mut out = ParamPoly::zero(target);
        for (m, f) in &self.terms {
            let mut q = Polynomial::constant(target, Rat::one());
            for (i, &e) in m.iter().enumerate() {
                if e > 0 {
                    q = &q * &subst[i].pow(e);
                }
            }
            for (qm, qc) in q.terms() {
                out.add_term(qm.clone(), f, qc);
            }
        }
        out
    }

    /// Instantiates all parameters.
    pub fn instantiate(&self, values: &[Rat]) -> Polynomial {
        Polynomial::from_terms(self.nvars, self.terms.iter().map(|(m, f)| (m.clone(), f.eval(values))))
    }

    /// Coefficient of each degree ≤ 1 monomial: `(per-variable, constant)`.
    pub fn as_affine(&self) -> Option<(Vec<LinForm>, LinForm)> {
        let mut coeffs = vec![LinForm::default(); self.nvars];
        let mut constant = LinForm::default();
        for (m, f) in &self.terms {
            match m.iter().sum::<u32>() {
                0 => constant = f.clone(),
                1 => coeffs[m.iter().position(|&e| e == 1).expect("degree one")] = f.clone(),
                _ => return None,
            }
        }
        Some((coeffs, constant))
    }

    pub fn params(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.values().flat_map(|f| f.coeffs.keys().copied())
    }
}

/// All exponent vectors of total degree ≤ `degree`, in a fixed order.
pub fn monomials_up_to(nvars: usize, degree: u32) -> Vec<Monomial> {
    fn rec(i: usize, left: u32, cur: &mut Monomial, out: &mut Vec<Monomial>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    rec(0, degree, &mut vec![0; nvars], &mut out);
    out.sort_by(|a, b| {
        let da: u32 = a.iter().sum();
        let db: u32 = b.iter().sum();
        da.cmp(&db).then_with(|| b.cmp(a))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parse_and_print_round_trip() {
        let n = names(&["m", "n"]);
        let p = Polynomial::parse("(m + 1)^2 - 2*m - 1/2*n", &n).unwrap();
        assert_eq!(p.display(&n).to_string(), "m^2 - 1/2*n + 1");
        let q = Polynomial::parse(&p.display(&n).to_string(), &n).unwrap();
        assert_eq!(p, q);
        assert_eq!(Polynomial::parse("0", &n).unwrap().display(&n).to_string(), "0");
        assert_eq!(Polynomial::parse("-x", &names(&["x"])).unwrap().display(&names(&["x"])).to_string(), "-x");
    }

    #[test]
    fn parse_errors() {
        let n = names(&["x"]);
        assert!(matches!(Polynomial::parse("y + 1", &n), Err(PolyError::UnknownVariable(_))));
        assert!(Polynomial::parse("x +", &n).is_err());
        assert!(Polynomial::parse("1 / x", &n).is_err());
        assert!(Polynomial::parse("(x", &n).is_err());
    }

    #[test]
    fn compose_and_eval_agree() {
        let n = names(&["x", "y"]);
        let p = Polynomial::parse("x*y + 3*x - y^2", &n).unwrap();
        let sub = vec![Polynomial::parse("y + 1", &n).unwrap(), Polynomial::parse("2*x", &n).unwrap()];
        let c = p.compose(&sub);
        let pt = vec![rat(1, 3), int(-2)];
        let inner: Vec<Rat> = sub.iter().map(|s| s.eval(&pt)).collect();
        assert_eq!(c.eval(&pt), p.eval(&inner));
    }

    #[test]
    fn zero_terms_are_dropped() {
        let n = names(&["x"]);
        let p = Polynomial::parse("x - x + 0*x^2", &n).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.degree(), 0);
    }

    #[test]
    fn template_instantiates() {
        let mut next = 0;
        let (t, used) = ParamPoly::template(2, 1, &mut next);
        assert_eq!(used.len(), 3);
        let poly = t.instantiate(&[int(5), int(1), int(0)]);
        // Monomials in order 1, m, n.
        assert_eq!(poly.display(&names(&["m", "n"])).to_string(), "m + 5");
        assert_eq!(monomials_up_to(2, 2).len(), 6);
    }

    #[test]
    fn param_compose_matches_instantiated_compose() {
        let n = names(&["m", "n"]);
        let mut next = 0;
        let (t, _) = ParamPoly::template(2, 2, &mut next);
        let vals: Vec<Rat> = (0..next as i64).map(|i| rat(i - 2, 3)).collect();
        let sub = vec![Polynomial::parse("n", &n).unwrap(), Polynomial::parse("n + 1", &n).unwrap()];
        assert_eq!(t.compose(&sub).instantiate(&vals), t.instantiate(&vals).compose(&sub));
    }
}
