//! Exact and modular sparse linear algebra.
//!
//! Vectors are sparse, sorted by column. The exact engine keeps integer rows
//! with their content divided out (fraction-free elimination); the modular
//! engine works over `Z/pZ` for 62-bit primes. Both expose the same
//! incremental [`Echelon`] interface so callers can pick a backend by size.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Sparse vector: `(column, value)` pairs sorted by column, no zero values.
pub type SparseVec<T> = Vec<(usize, T)>;

/// Scales a rational sparse vector to a primitive integer vector with the same span.
pub fn clear_denominators(v: &[(usize, BigRational)]) -> SparseVec<BigInt> {
    let mut lcm = BigInt::one();
    for (_, q) in v {
        lcm = lcm.lcm(q.denom());
    }
    let out: SparseVec<BigInt> = v
        .iter()
        .filter(|(_, q)| !q.is_zero())
        .map(|(c, q)| (*c, q.numer() * (&lcm / q.denom())))
        .collect();
    make_primitive(out)
}

fn make_primitive(mut v: SparseVec<BigInt>) -> SparseVec<BigInt> {
    let mut g = BigInt::zero();
    for (_, x) in &v {
        g = g.gcd(x);
        if g.is_one() {
            break;
        }
    }
    if !g.is_zero() && !g.is_one() {
        for (_, x) in v.iter_mut() {
            *x /= &g;
        }
    }
    // Leading entry positive, so equal spans give equal stored rows.
    if let Some((_, lead)) = v.first() {
        if lead.sign() == Sign::Minus {
            for (_, x) in v.iter_mut() {
                *x = -&*x;
            }
        }
    }
    v
}

/// Incremental row-echelon basis.
pub trait Echelon: Send + Sync {
    /// Inserts `v`; returns `true` iff it was independent of the stored rows.
    fn insert(&mut self, v: &[(usize, BigInt)]) -> bool;
    fn contains(&self, v: &[(usize, BigInt)]) -> bool;
    fn rank(&self) -> usize;
}

/// Exact echelon form over the rationals with rows kept as primitive integer vectors.
#[derive(Clone, Debug, Default)]
pub struct ExactEchelon {
    rows: Vec<SparseVec<BigInt>>,
    // pivot column -> row index
    pivots: std::collections::HashMap<usize, usize>,
}

impl ExactEchelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> &[SparseVec<BigInt>] {
        &self.rows
    }

    /// Reduces `v` until its leading column is not a pivot. Returns the remainder.
    fn reduce(&self, v: &[(usize, BigInt)]) -> SparseVec<BigInt> {
        let mut cur: SparseVec<BigInt> = v.iter().filter(|(_, x)| !x.is_zero()).cloned().collect();
        loop {
            let Some((lead_col, lead_val)) = cur.first().cloned() else {
                return cur;
            };
            let Some(&ri) = self.pivots.get(&lead_col) else {
                return cur;
            };
            let row = &self.rows[ri];
            let piv = &row[0].1;
            // cur <- piv*cur - lead_val*row, then strip content
            let g = piv.gcd(&lead_val);
            let a = piv / &g;
            let b = &lead_val / &g;
            cur = make_primitive(axpby(&a, &cur, &(-b), row));
        }
    }
}

fn axpby(a: &BigInt, x: &[(usize, BigInt)], b: &BigInt, y: &[(usize, BigInt)]) -> SparseVec<BigInt> {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let (col, val) = match (x.get(i), y.get(j)) {
            (Some((cx, vx)), Some((cy, _))) if cx < cy => {
                i += 1;
                (*cx, a * vx)
            }
            (Some((cx, _)), Some((cy, vy))) if cy < cx => {
                j += 1;
                (*cy, b * vy)
            }
            (Some((cx, vx)), Some((_, vy))) => {
                i += 1;
                j += 1;
                (*cx, a * vx + b * vy)
            }
            (Some((cx, vx)), None) => {
                i += 1;
                (*cx, a * vx)
            }
            (None, Some((cy, vy))) => {
                j += 1;
                (*cy, b * vy)
            }
            (None, None) => unreachable!(),
        };
        if !val.is_zero() {
            out.push((col, val));
        }
    }
    out
}

impl Echelon for ExactEchelon {
    fn insert(&mut self, v: &[(usize, BigInt)]) -> bool {
        let r = self.reduce(v);
        if r.is_empty() {
            return false;
        }
        self.pivots.insert(r[0].0, self.rows.len());
        self.rows.push(r);
        true
    }

    fn contains(&self, v: &[(usize, BigInt)]) -> bool {
        self.reduce(v).is_empty()
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }
}

#[inline]
fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

fn invmod(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

/// Reduces an integer modulo `p` into `0..p`.
pub fn bigint_mod(x: &BigInt, p: u64) -> u64 {
    let r = x.mod_floor(&BigInt::from(p));
    r.to_u64().expect("residue fits in u64")
}

/// Reduces a rational modulo `p`; `None` when `p` divides the denominator.
pub fn rational_mod(q: &BigRational, p: u64) -> Option<u64> {
    let d = bigint_mod(q.denom(), p);
    if d == 0 {
        return None;
    }
    Some(mulmod(bigint_mod(q.numer(), p), invmod(d, p), p))
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Draws a uniformly random prime in `[2^61, 2^62)`.
pub fn random_prime_62<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    loop {
        let c = rng.gen_range((1u64 << 61)..(1u64 << 62)) | 1;
        if is_prime_u64(c) {
            return c;
        }
    }
}

/// Echelon form over `Z/pZ`.
#[derive(Clone, Debug)]
pub struct ModEchelon {
    p: u64,
    rows: Vec<SparseVec<u64>>,
    pivots: std::collections::HashMap<usize, usize>,
}

impl ModEchelon {
    pub fn new(p: u64) -> Self {
        Self { p, rows: Vec::new(), pivots: Default::default() }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    fn reduce_mod(&self, v: SparseVec<u64>) -> SparseVec<u64> {
        let p = self.p;
        let mut cur = v;
        loop {
            let Some(&(lead_col, lead_val)) = cur.first() else {
                return cur;
            };
            let Some(&ri) = self.pivots.get(&lead_col) else {
                return cur;
            };
            // rows are normalised so the pivot entry is 1
            let row = &self.rows[ri];
            let f = p - lead_val;
            let mut out = Vec::with_capacity(cur.len() + row.len());
            let (mut i, mut j) = (0, 0);
            while i < cur.len() || j < row.len() {
                let (col, val) = match (cur.get(i), row.get(j)) {
                    (Some(&(cx, vx)), Some(&(cy, _))) if cx < cy => {
                        i += 1;
                        (cx, vx)
                    }
                    (Some(&(cx, _)), Some(&(cy, vy))) if cy < cx => {
                        j += 1;
                        (cy, mulmod(f, vy, p))
                    }
                    (Some(&(cx, vx)), Some(&(_, vy))) => {
                        i += 1;
                        j += 1;
                        (cx, (vx + mulmod(f, vy, p)) % p)
                    }
                    (Some(&(cx, vx)), None) => {
                        i += 1;
                        (cx, vx)
                    }
                    (None, Some(&(cy, vy))) => {
                        j += 1;
                        (cy, mulmod(f, vy, p))
                    }
                    (None, None) => unreachable!(),
                };
                if val != 0 {
                    out.push((col, val));
                }
            }
            cur = out;
        }
    }

    fn lift(&self, v: &[(usize, BigInt)]) -> SparseVec<u64> {
        v.iter()
            .map(|(c, x)| (*c, bigint_mod(x, self.p)))
            .filter(|(_, x)| *x != 0)
            .collect()
    }

    pub fn insert_mod(&mut self, v: SparseVec<u64>) -> bool {
        let mut r = self.reduce_mod(v);
        if r.is_empty() {
            return false;
        }
        let inv = invmod(r[0].1, self.p);
        for (_, x) in r.iter_mut() {
            *x = mulmod(*x, inv, self.p);
        }
        self.pivots.insert(r[0].0, self.rows.len());
        self.rows.push(r);
        true
    }
}

impl Echelon for ModEchelon {
    fn insert(&mut self, v: &[(usize, BigInt)]) -> bool {
        let m = self.lift(v);
        self.insert_mod(m)
    }

    fn contains(&self, v: &[(usize, BigInt)]) -> bool {
        self.reduce_mod(self.lift(v)).is_empty()
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }
}

/// How a rank was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMethod {
    /// Exact fraction-free elimination over the rationals.
    Exact,
    /// Agreement of ranks modulo several random 62-bit primes.
    Modular,
}

impl std::fmt::Display for RankMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RankMethod::Exact => write!(f, "exact"),
            RankMethod::Modular => write!(f, "modular"),
        }
    }
}

/// Policy for choosing between exact and modular rank computation.
#[derive(Clone, Debug)]
pub struct RankPolicy {
    /// Matrices with more rows than this use the modular route.
    pub exact_limit: usize,
    pub primes: Vec<u64>,
}

impl RankPolicy {
    pub fn exact_only() -> Self {
        Self { exact_limit: usize::MAX, primes: Vec::new() }
    }

    pub fn with_random_primes<R: Rng + ?Sized>(exact_limit: usize, count: usize, rng: &mut R) -> Self {
        let primes = (0..count).map(|_| random_prime_62(rng)).collect();
        Self { exact_limit, primes }
    }
}

impl Default for RankPolicy {
    fn default() -> Self {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        Self::with_random_primes(400, 3, &mut rng)
    }
}

/// Rank of the span of `rows`.
pub fn rank_of(rows: &[SparseVec<BigInt>], policy: &RankPolicy) -> (usize, RankMethod) {
    if rows.len() <= policy.exact_limit || policy.primes.is_empty() {
        return (exact_rank(rows), RankMethod::Exact);
    }
    let ranks: Vec<usize> = policy
        .primes
        .par_iter()
        .map(|&p| {
            let mut e = ModEchelon::new(p);
            for r in rows {
                e.insert(r);
            }
            e.rank()
        })
        .collect();
    if ranks.iter().all(|&r| r == ranks[0]) {
        (ranks[0], RankMethod::Modular)
    } else {
        // a prime hit a degenerate reduction; settle it exactly
        (exact_rank(rows), RankMethod::Exact)
    }
}

pub fn exact_rank(rows: &[SparseVec<BigInt>]) -> usize {
    let mut e = ExactEchelon::new();
    for r in rows {
        e.insert(r);
    }
    e.rank()
}

/// Sparse matrix stored by columns, each column a sparse vector over row indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub cols: Vec<SparseVec<BigRational>>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, cols: vec![Vec::new(); ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let cols = (0..n).map(|i| vec![(i, BigRational::one())]).collect();
        Self { nrows: n, ncols: n, cols }
    }

    pub fn get(&self, r: usize, c: usize) -> BigRational {
        self.cols[c]
            .binary_search_by_key(&r, |(i, _)| *i)
            .map(|k| self.cols[c][k].1.clone())
            .unwrap_or_else(|_| BigRational::zero())
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// `self * other`.
    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, other.nrows, "dimension mismatch in product");
        let cols = other
            .cols
            .par_iter()
            .map(|col| {
                let mut acc: std::collections::BTreeMap<usize, BigRational> = Default::default();
                for (k, b) in col {
                    for (i, a) in &self.cols[*k] {
                        *acc.entry(*i).or_insert_with(BigRational::zero) += a * b;
                    }
                }
                acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
            })
            .collect();
        SparseMatrix { nrows: self.nrows, ncols: other.ncols, cols }
    }

    pub fn pow(&self, k: u32) -> SparseMatrix {
        assert_eq!(self.nrows, self.ncols);
        let mut acc = SparseMatrix::identity(self.nrows);
        for _ in 0..k {
            acc = self.mul(&acc);
        }
        acc
    }

    pub fn is_diagonal(&self) -> bool {
        self.cols.iter().enumerate().all(|(c, col)| col.iter().all(|(r, _)| *r == c))
    }

    /// Columns scaled to primitive integer vectors (rank preserving).
    pub fn integer_columns(&self) -> Vec<SparseVec<BigInt>> {
        self.cols.iter().filter(|c| !c.is_empty()).map(|c| clear_denominators(c)).collect()
    }

    pub fn rank(&self, policy: &RankPolicy) -> (usize, RankMethod) {
        if self.is_diagonal() {
            let r = self.cols.iter().filter(|c| !c.is_empty()).count();
            return (r, RankMethod::Exact);
        }
        rank_of(&self.integer_columns(), policy)
    }

    pub fn to_dense(&self) -> Vec<Vec<BigRational>> {
        let mut d = vec![vec![BigRational::zero(); self.ncols]; self.nrows];
        for (c, col) in self.cols.iter().enumerate() {
            for (r, v) in col {
                d[*r][c] = v.clone();
            }
        }
        d
    }

    pub fn max_abs_entry(&self) -> BigRational {
        self.cols
            .iter()
            .flatten()
            .map(|(_, v)| v.abs())
            .max()
            .unwrap_or_else(BigRational::zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn iv(v: &[(usize, i64)]) -> SparseVec<BigInt> {
        v.iter().map(|(c, x)| (*c, BigInt::from(*x))).collect()
    }

    #[test]
    fn exact_rank_of_dependent_rows() {
        let rows = vec![iv(&[(0, 1), (1, 2)]), iv(&[(0, 2), (1, 4)]), iv(&[(1, 3), (2, 1)])];
        assert_eq!(exact_rank(&rows), 2);
    }

    #[test]
    fn membership_exact_and_modular_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let p = random_prime_62(&mut rng);
        let mut e = ExactEchelon::new();
        let mut m = ModEchelon::new(p);
        for r in [iv(&[(0, 3), (2, -6)]), iv(&[(1, 5), (2, 1)])] {
            assert!(e.insert(&r));
            assert!(m.insert(&r));
        }
        let inside = iv(&[(0, 1), (1, 10), (2, 0)]);
        let inside: SparseVec<BigInt> = inside.into_iter().filter(|(_, x)| !x.is_zero()).collect();
        // 1/3*r0 + 2*r1 = (1, 10, -2+2) = (1, 10, 0)
        assert!(e.contains(&inside));
        assert!(m.contains(&inside));
        let outside = iv(&[(2, 1)]);
        assert!(!e.contains(&outside));
        assert!(!m.contains(&outside));
    }

    #[test]
    fn prime_generation_is_62_bit() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..4 {
            let p = random_prime_62(&mut rng);
            assert!(p >= 1 << 61 && p < 1 << 62);
            assert!(is_prime_u64(p));
        }
        assert!(!is_prime_u64(1 << 61));
        assert!(is_prime_u64(2305843009213693951)); // 2^61 - 1
    }

    #[test]
    fn clear_denominators_is_primitive() {
        let v = vec![
            (0, BigRational::new(BigInt::from(1), BigInt::from(2))),
            (3, BigRational::new(BigInt::from(-1), BigInt::from(3))),
        ];
        assert_eq!(clear_denominators(&v), iv(&[(0, 3), (3, -2)]));
    }

    #[test]
    fn modular_rank_policy_matches_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<SparseVec<BigInt>> = (0..40)
            .map(|i| iv(&[(i % 13, 1 + i as i64), ((i * 7) % 13, 2), ((i * 5 + 1) % 13, -3)]))
            .map(|r| {
                let mut m: std::collections::BTreeMap<usize, BigInt> = Default::default();
                for (c, x) in r {
                    *m.entry(c).or_default() += x;
                }
                m.into_iter().filter(|(_, x)| !x.is_zero()).collect()
            })
            .collect();
        let policy = RankPolicy::with_random_primes(0, 3, &mut rng);
        let (r, method) = rank_of(&rows, &policy);
        assert_eq!(method, RankMethod::Modular);
        assert_eq!(r, exact_rank(&rows));
    }
}
