//! Sparse multivariate polynomials with exact rational coefficients in the
//! matrix-entry coordinates `x_{kl}` of `M_n`.
//!
//! Variables are addressed either by [`VarIndex`] (1-based row/column) or by
//! the flat index `(row-1)*n + (col-1)`. Monomials compare in graded
//! lexicographic order on the flat index, with `x11` the largest variable.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Coordinate `x_{row,col}`, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarIndex {
    pub row: usize,
    pub col: usize,
}

impl VarIndex {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn checked(row: usize, col: usize, n: usize) -> Result<Self> {
        if row == 0 || col == 0 || row > n || col > n {
            return Err(Error::VarOutOfRange { row, col, n });
        }
        Ok(Self { row, col })
    }

    pub fn flat(self, n: usize) -> usize {
        (self.row - 1) * n + (self.col - 1)
    }

    pub fn from_flat(i: usize, n: usize) -> Self {
        Self { row: i / n + 1, col: i % n + 1 }
    }

    /// Text form: `xKL` for `n <= 9`, `x[k,l]` otherwise.
    pub fn label(self, n: usize) -> String {
        if n <= 9 {
            format!("x{}{}", self.row, self.col)
        } else {
            format!("x[{},{}]", self.row, self.col)
        }
    }
}

/// A monomial stored sparsely as `(flat variable, exponent)` pairs sorted by variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    exps: Vec<(u32, u32)>,
    degree: u32,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(v: usize) -> Self {
        Self { exps: vec![(v as u32, 1)], degree: 1 }
    }

    /// Builds from arbitrary `(var, exp)` pairs, merging repeats and dropping zeros.
    pub fn from_pairs<I: IntoIterator<Item = (usize, u32)>>(pairs: I) -> Self {
        let mut m: BTreeMap<u32, u32> = BTreeMap::new();
        for (v, e) in pairs {
            if e > 0 {
                *m.entry(v as u32).or_insert(0) += e;
            }
        }
        let degree = m.values().sum();
        Self { exps: m.into_iter().collect(), degree }
    }

    pub fn from_dense(exps: &[u32]) -> Self {
        Self::from_pairs(exps.iter().enumerate().map(|(v, &e)| (v, e)))
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_one(&self) -> bool {
        self.degree == 0
    }

    pub fn exponent(&self, v: usize) -> u32 {
        self.exps
            .binary_search_by_key(&(v as u32), |(x, _)| *x)
            .map(|k| self.exps[k].1)
            .unwrap_or(0)
    }

    /// `(var, exp)` pairs with positive exponent, sorted by variable.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.exps.iter().map(|&(v, e)| (v as usize, e))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.exps.len() + other.exps.len());
        let (mut i, mut j) = (0, 0);
        while i < self.exps.len() || j < other.exps.len() {
            match (self.exps.get(i), other.exps.get(j)) {
                (Some(&(a, ea)), Some(&(b, eb))) if a == b => {
                    out.push((a, ea + eb));
                    i += 1;
                    j += 1;
                }
                (Some(&(a, ea)), Some(&(b, _))) if a < b => {
                    out.push((a, ea));
                    i += 1;
                }
                (Some(_), Some(&(b, eb))) => {
                    out.push((b, eb));
                    j += 1;
                }
                (Some(&(a, ea)), None) => {
                    out.push((a, ea));
                    i += 1;
                }
                (None, Some(&(b, eb))) => {
                    out.push((b, eb));
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Monomial { exps: out, degree: self.degree + other.degree }
    }

    /// Partial derivative in variable `v`: `(exponent, quotient monomial)`, or `None` if zero.
    pub fn diff(&self, v: usize) -> Option<(u32, Monomial)> {
        let k = self.exps.binary_search_by_key(&(v as u32), |(x, _)| *x).ok()?;
        let e = self.exps[k].1;
        let mut exps = self.exps.clone();
        if e == 1 {
            exps.remove(k);
        } else {
            exps[k].1 -= 1;
        }
        Some((e, Monomial { exps, degree: self.degree - 1 }))
    }

    pub fn format(&self, n: usize) -> String {
        if self.is_one() {
            return "1".into();
        }
        self.iter()
            .map(|(v, e)| {
                let l = VarIndex::from_flat(v, n).label(n);
                if e == 1 { l } else { format!("{l}^{e}") }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree.cmp(&other.degree).then_with(|| {
            // lexicographic with variable 0 most significant
            let (mut i, mut j) = (0, 0);
            loop {
                match (self.exps.get(i), other.exps.get(j)) {
                    (None, None) => return Ordering::Equal,
                    (Some(_), None) => return Ordering::Greater,
                    (None, Some(_)) => return Ordering::Less,
                    (Some(&(a, ea)), Some(&(b, eb))) => {
                        if a < b {
                            return Ordering::Greater;
                        }
                        if b < a {
                            return Ordering::Less;
                        }
                        if ea != eb {
                            return ea.cmp(&eb);
                        }
                        i += 1;
                        j += 1;
                    }
                }
            }
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Polynomial over the rationals in the `n^2` coordinates of `M_n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: BigRational) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, BigRational::one())
    }

    pub fn var(n: usize, v: VarIndex) -> Self {
        Self::monomial(n, Monomial::var(v.flat(n)), BigRational::one())
    }

    /// Shorthand for `x_{row,col}`; panics on an out-of-range index.
    pub fn x(n: usize, row: usize, col: usize) -> Self {
        Self::var(n, VarIndex::checked(row, col, n).expect("variable index in range"))
    }

    pub fn monomial(n: usize, m: Monomial, c: BigRational) -> Self {
        let mut p = Self::zero(n);
        p.add_term(m, c);
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nvars(&self) -> usize {
        self.n * self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending monomial order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    /// `Some(d)` if every term has degree `d`; the zero polynomial is homogeneous of any degree.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(Monomial::degree);
        let d = it.next()?;
        it.all(|e| e == d).then_some(d)
    }

    pub fn is_homogeneous_of(&self, d: u32) -> bool {
        self.terms.keys().all(|m| m.degree() == d)
    }

    fn check(&self, other: &Polynomial) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check(other)?;
        let mut acc: HashMap<Monomial, BigRational> = HashMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *acc.entry(ma.mul(mb)).or_insert_with(BigRational::zero) += ca * cb;
            }
        }
        let terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Ok(Polynomial { n: self.n, terms })
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.n);
        }
        let terms = self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect();
        Polynomial { n: self.n, terms }
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::one(self.n);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Partial derivative with respect to the flat variable `v`.
    pub fn diff(&self, v: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (m, c) in &self.terms {
            if let Some((e, q)) = m.diff(v) {
                out.add_term(q, c * rat(e as i64));
            }
        }
        out
    }

    /// Eliminates `x_nn` by the trace relation `x_nn = -(x_11 + ... + x_{n-1,n-1})`.
    pub fn substitute_trace(&self) -> Polynomial {
        let n = self.n;
        let last = VarIndex::new(n, n).flat(n);
        let mut minus_trace = Polynomial::zero(n);
        for k in 1..n {
            minus_trace.add_term(Monomial::var(VarIndex::new(k, k).flat(n)), rat(-1));
        }
        let mut powers: Vec<Polynomial> = vec![Polynomial::one(n)];
        let mut out = Polynomial::zero(n);
        for (m, c) in &self.terms {
            let e = m.exponent(last) as usize;
            if e == 0 {
                out.add_term(m.clone(), c.clone());
                continue;
            }
            while powers.len() <= e {
                let next = &powers[powers.len() - 1] * &minus_trace;
                powers.push(next);
            }
            let rest = Monomial::from_pairs(m.iter().filter(|(v, _)| *v != last));
            for (pm, pc) in &powers[e].terms {
                out.add_term(pm.mul(&rest), pc * c);
            }
        }
        out
    }

    /// Evaluates at a point given as flat, row-major complex coordinates.
    pub fn eval_complex(&self, point: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut t = Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0);
            for (v, e) in m.iter() {
                t *= point[v].powu(e);
            }
            acc += t;
        }
        acc
    }

    pub fn format(&self) -> String {
        format_poly(self)
    }

    pub fn parse(text: &str, n: usize) -> Result<Polynomial> {
        parse_poly(text, n)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $inner:ident) => {
        impl std::ops::$tr<&Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                self.$inner(rhs).expect("polynomials over the same M_n")
            }
        }
        impl std::ops::$tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$inner(&rhs).expect("polynomials over the same M_n")
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&rat(-1))
    }
}

impl std::ops::Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&rat(-1))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_poly(self))
    }
}

/// Operation selector for [`poly_arith`].
#[derive(Clone, Debug)]
pub enum PolyOp {
    Add,
    Sub,
    Mul,
    /// Multiply the first operand by a rational; the second operand is ignored
    /// apart from the dimension check.
    Scale(BigRational),
}

pub fn poly_arith(a: &Polynomial, b: &Polynomial, op: PolyOp) -> Result<Polynomial> {
    match op {
        PolyOp::Add => a.try_add(b),
        PolyOp::Sub => a.try_sub(b),
        PolyOp::Mul => a.try_mul(b),
        PolyOp::Scale(c) => {
            a.check(b)?;
            Ok(a.scale(&c))
        }
    }
}

/// Ordered basis of homogeneous degree-`m` monomials in a set of variables.
#[derive(Clone, Debug)]
pub struct HomSliceBasis {
    nvars: usize,
    vars: Vec<usize>,
    degree: u32,
    monomials: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
}

impl HomSliceBasis {
    /// All degree-`m` monomials in the variables `vars` (flat indices).
    pub fn over_vars(nvars: usize, vars: Vec<usize>, m: u32) -> Self {
        let mut monomials = Vec::new();
        let mut exps = vec![0u32; vars.len()];
        fill_compositions(&mut exps, 0, m, &mut |e| {
            monomials.push(Monomial::from_pairs(vars.iter().zip(e).map(|(&v, &x)| (v, x))));
        });
        monomials.sort();
        let index = monomials.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        Self { nvars, vars, degree: m, monomials, index }
    }

    /// All degree-`m` monomials in `nvars` variables.
    pub fn full(nvars: usize, m: u32) -> Self {
        Self::over_vars(nvars, (0..nvars).collect(), m)
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }
}

fn fill_compositions(exps: &mut [u32], pos: usize, remaining: u32, out: &mut dyn FnMut(&[u32])) {
    if exps.is_empty() {
        if remaining == 0 {
            out(exps);
        }
        return;
    }
    if pos == exps.len() - 1 {
        exps[pos] = remaining;
        out(exps);
        exps[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        exps[pos] = e;
        fill_compositions(exps, pos + 1, remaining - e, out);
    }
    exps[pos] = 0;
}

/// Basis of `P̃_m` in the `n^2` coordinates of `M_n`.
pub fn enumerate_slice(n: usize, m: u32) -> HomSliceBasis {
    HomSliceBasis::full(n * n, m)
}

/// Basis of degree-`m` monomials in the `sl_n` coordinate ring (all variables except `x_nn`).
pub fn enumerate_sl_slice(n: usize, m: u32) -> HomSliceBasis {
    let last = VarIndex::new(n, n).flat(n);
    HomSliceBasis::over_vars(n * n, (0..n * n).filter(|&v| v != last).collect(), m)
}

pub fn substitute_trace(p: &Polynomial) -> Polynomial {
    p.substitute_trace()
}

fn format_rational(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Canonical text: terms in descending graded-lex order joined by ` + ` / ` - `.
pub fn format_poly(p: &Polynomial) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms.iter().rev().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if m.is_one() {
            out.push_str(&format_rational(&a));
        } else if a.is_one() {
            out.push_str(&m.format(p.n));
        } else {
            out.push_str(&format_rational(&a));
            out.push('*');
            out.push_str(&m.format(p.n));
        }
    }
    out
}

struct Lexer<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        match self.bump() {
            Some(x) if x == c => Ok(()),
            _ => self.err(format!("expected '{}'", c as char)),
        }
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected digits");
        }
        let t = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii digits");
        Ok(t.parse().expect("digits parse as integer"))
    }

    fn small(&mut self) -> Result<usize> {
        let pos = self.pos;
        self.integer()?
            .to_usize()
            .ok_or(Error::Parse { pos, msg: "integer too large".into() })
    }

    fn digit(&mut self) -> Result<usize> {
        // single-digit index: whitespace is not allowed inside `xKL`
        match self.s.get(self.pos) {
            Some(c) if c.is_ascii_digit() => {
                self.pos += 1;
                Ok((c - b'0') as usize)
            }
            _ => self.err("expected index digit"),
        }
    }
}

/// Parses the polynomial text grammar (`3*x12^2*x21 - 1/2*x[1,1] + 4`).
pub fn parse_poly(text: &str, n: usize) -> Result<Polynomial> {
    let mut lx = Lexer { s: text.as_bytes(), pos: 0 };
    let mut out = Polynomial::zero(n);
    if lx.peek().is_none() {
        return lx.err("empty input");
    }
    let mut first = true;
    loop {
        let sign = match lx.peek() {
            None if !first => break,
            Some(b'+') => {
                lx.bump();
                1
            }
            Some(b'-') => {
                lx.bump();
                -1
            }
            _ if first => 1,
            _ => return lx.err("expected '+' or '-'"),
        };
        first = false;
        let (m, c) = parse_term(&mut lx, n)?;
        out.add_term(m, c * rat(sign));
    }
    Ok(out)
}

fn parse_term(lx: &mut Lexer<'_>, n: usize) -> Result<(Monomial, BigRational)> {
    let mut coeff = BigRational::one();
    let mut pairs: Vec<(usize, u32)> = Vec::new();
    let mut need_factor = true;
    match lx.peek() {
        Some(c) if c.is_ascii_digit() => {
            let num = lx.integer()?;
            let den = if lx.peek() == Some(b'/') {
                lx.bump();
                let pos = lx.pos;
                let d = lx.integer()?;
                if d.is_zero() {
                    return Err(Error::Parse { pos, msg: "zero denominator".into() });
                }
                d
            } else {
                BigInt::one()
            };
            coeff = BigRational::new(num, den);
            need_factor = false;
        }
        Some(b'x') => {}
        _ => return lx.err("expected coefficient or variable"),
    }
    loop {
        if !need_factor {
            if lx.peek() != Some(b'*') {
                break;
            }
            lx.bump();
        }
        need_factor = false;
        if lx.peek() != Some(b'x') {
            return lx.err("expected variable");
        }
        let var_pos = lx.pos;
        lx.bump();
        let (row, col) = if lx.s.get(lx.pos) == Some(&b'[') {
            lx.pos += 1;
            let r = lx.small()?;
            lx.expect(b',')?;
            let c = lx.small()?;
            lx.expect(b']')?;
            (r, c)
        } else {
            if n >= 10 {
                return Err(Error::Parse { pos: var_pos, msg: "bracketed x[k,l] form required for n >= 10".into() });
            }
            (lx.digit()?, lx.digit()?)
        };
        let v = VarIndex::checked(row, col, n)?;
        let mut e = 1u32;
        if lx.peek() == Some(b'^') {
            lx.bump();
            let pos = lx.pos;
            e = lx
                .integer()?
                .to_u32()
                .ok_or(Error::Parse { pos, msg: "exponent too large".into() })?;
        }
        pairs.push((v.flat(n), e));
    }
    Ok((Monomial::from_pairs(pairs), coeff))
}
