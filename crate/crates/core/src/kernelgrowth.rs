//! Kernel dimensions of degree-preserving derivations on homogeneous slices.
//!
//! A degree-preserving derivation of `k[x_1..x_N]` is determined by the linear
//! forms it assigns to the variables. Its restriction to the degree-`m` slice is
//! built column by column; nullities come from exact or multi-prime modular rank.
//! Diagonal derivations also admit a weight count, which serves as an oracle.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::adjointfields::{GeneratorId, VectorField};
use crate::error::{Error, Result};
use crate::linalg::{RankMethod, RankPolicy, SparseMatrix};
use crate::polyring::{rat, HomSliceBasis, Monomial, Polynomial};

/// Derivation `D` with `D(x_i)` a linear form, stored as sparse images of the variables.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDerivation {
    nvars: usize,
    images: Vec<Vec<(usize, BigRational)>>,
}

impl LinearDerivation {
    pub fn new(nvars: usize, images: Vec<Vec<(usize, BigRational)>>) -> Result<Self> {
        if images.len() != nvars {
            return Err(Error::DimensionMismatch { left: nvars, right: images.len() });
        }
        if let Some(v) = images.iter().flatten().map(|(v, _)| *v).find(|&v| v >= nvars) {
            return Err(Error::Precondition(format!("image uses variable {v} >= {nvars}")));
        }
        Ok(Self { nvars, images })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// From a vector field with linear components; the component at `x_kl` is `D(x_kl)`.
    pub fn from_field(v: &VectorField) -> Result<Self> {
        let n = v.n();
        let mut images = vec![Vec::new(); n * n];
        for (var, p) in v.components() {
            if !p.is_homogeneous_of(1) {
                return Err(Error::Grading(format!(
                    "component {var} is not linear, so the field does not preserve degree"
                )));
            }
            images[var] = p.terms().map(|(m, c)| (m.iter().next().expect("linear monomial").0, c.clone())).collect();
        }
        Self::new(n * n, images)
    }

    /// `x ∂/∂w + y ∂/∂x` on `k[w, x, y]`.
    pub fn chain3() -> Self {
        Self { nvars: 3, images: vec![vec![(1, rat(1))], vec![(2, rat(1))], vec![]] }
    }

    /// `D(x_i) = w_i x_i`.
    pub fn diagonal(weights: &[i64]) -> Self {
        let images = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| if w == 0 { vec![] } else { vec![(i, rat(w))] })
            .collect();
        Self { nvars: weights.len(), images }
    }

    /// `y ∂/∂x + Ψ` on `k[x, y] ⊗ k[u_1..u_N]`; `x`, `y` are variables 0 and 1.
    pub fn adjoin(psi: &LinearDerivation) -> Self {
        let mut images = vec![vec![(1, rat(1))], vec![]];
        for img in &psi.images {
            images.push(img.iter().map(|(v, c)| (v + 2, c.clone())).collect());
        }
        Self { nvars: psi.nvars + 2, images }
    }

    pub fn is_diagonal(&self) -> bool {
        self.images.iter().enumerate().all(|(i, img)| img.iter().all(|(v, _)| *v == i))
    }

    /// Integer weights of a diagonal derivation.
    pub fn weights(&self) -> Option<WeightSystem> {
        if !self.is_diagonal() {
            return None;
        }
        let mut w = Vec::with_capacity(self.nvars);
        for img in &self.images {
            match img.first() {
                None => w.push(0),
                Some((_, c)) if c.is_integer() => w.push(c.numer().to_i64()?),
                Some(_) => return None,
            }
        }
        Some(WeightSystem { weights: w })
    }

    /// `D(m)` for a monomial, as `(monomial, coefficient)` terms (unmerged).
    fn apply_monomial(&self, m: &Monomial) -> Vec<(Monomial, BigRational)> {
        let mut out = Vec::new();
        for (v, _) in m.iter() {
            let (e, q) = m.diff(v).expect("variable occurs in monomial");
            for (w, c) in &self.images[v] {
                out.push((q.mul(&Monomial::var(*w)), c * rat(e as i64)));
            }
        }
        out
    }
}

/// Matrix of a derivation restricted to the degree-`m` slice.
#[derive(Clone, Debug)]
pub struct HomSliceOperator {
    pub m: u32,
    pub basis: HomSliceBasis,
    pub matrix: SparseMatrix,
}

impl HomSliceOperator {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Column `j` is `D` applied to the `j`-th basis monomial.
pub fn restrict(d: &LinearDerivation, m: u32) -> HomSliceOperator {
    let basis = HomSliceBasis::full(d.nvars, m);
    let cols = basis
        .monomials()
        .par_iter()
        .map(|mono| {
            let mut acc: BTreeMap<usize, BigRational> = BTreeMap::new();
            for (t, c) in d.apply_monomial(mono) {
                let r = basis.position(&t).expect("degree preserved");
                *acc.entry(r).or_insert_with(BigRational::zero) += c;
            }
            acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
        })
        .collect();
    let k = basis.len();
    HomSliceOperator { m, basis, matrix: SparseMatrix { nrows: k, ncols: k, cols } }
}

/// Restriction of an adjoint field; errors unless every component is linear.
pub fn restrict_field(v: &VectorField, m: u32) -> Result<HomSliceOperator> {
    Ok(restrict(&LinearDerivation::from_field(v)?, m))
}

/// Nullity of the operator or its square.
pub fn kernel_dim(op: &HomSliceOperator, power: u32, policy: &RankPolicy) -> Result<(usize, RankMethod)> {
    if !(1..=2).contains(&power) {
        return Err(Error::Precondition(format!("power must be 1 or 2, got {power}")));
    }
    let mat = if power == 1 { op.matrix.clone() } else { op.matrix.mul(&op.matrix) };
    let (r, method) = mat.rank(policy);
    Ok((op.dim() - r, method))
}

/// Eigenvalues of the coordinates under a diagonal derivation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightSystem {
    pub weights: Vec<i64>,
}

impl WeightSystem {
    pub fn from_field(v: &VectorField) -> Result<Self> {
        LinearDerivation::from_field(v)?
            .weights()
            .ok_or_else(|| Error::Precondition("field is not diagonal in the coordinates".into()))
    }
}

/// Number of degree-`m` monomials of total weight zero.
pub fn weight_kernel_dim(ws: &WeightSystem, m: u32) -> u128 {
    let m = m as usize;
    let maxw: i64 = ws.weights.iter().map(|w| w.abs()).max().unwrap_or(0) * m as i64;
    let off = maxw as usize;
    let width = 2 * off + 1;
    // table[deg][weight + off]
    let mut table = vec![vec![0u128; width]; m + 1];
    table[0][off] = 1;
    for &w in &ws.weights {
        // unbounded multiplicity of each variable: iterate degrees upward
        for deg in 1..=m {
            for idx in 0..width {
                let src = idx as i64 - w;
                if src >= 0 && (src as usize) < width {
                    let add = table[deg - 1][src as usize];
                    if add != 0 {
                        table[deg][idx] += add;
                    }
                }
            }
        }
    }
    table[m][off]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DimMethod {
    Exact,
    Modular,
    /// Weight count of a diagonal derivation.
    Weight,
}

impl From<RankMethod> for DimMethod {
    fn from(m: RankMethod) -> Self {
        match m {
            RankMethod::Exact => DimMethod::Exact,
            RankMethod::Modular => DimMethod::Modular,
        }
    }
}

impl std::fmt::Display for DimMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DimMethod::Exact => "exact",
            DimMethod::Modular => "modular",
            DimMethod::Weight => "weight",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GrowthRecord {
    pub m: u32,
    pub slice_dim: usize,
    pub dim_ker: usize,
    pub dim_ker_sq: usize,
    pub method: DimMethod,
}

fn slice_dim(nvars: usize, m: u32) -> usize {
    binom(nvars as u64 + m as u64 - 1, m as u64).to_usize().unwrap_or(usize::MAX)
}

/// Kernel dimensions of `D` and `D²` on one slice.
pub fn growth_record(d: &LinearDerivation, m: u32, policy: &RankPolicy) -> Result<GrowthRecord> {
    if let Some(ws) = d.weights() {
        // diagonal: D and D² share the kernel spanned by weight-zero monomials
        let k = weight_kernel_dim(&ws, m) as usize;
        return Ok(GrowthRecord { m, slice_dim: slice_dim(d.nvars, m), dim_ker: k, dim_ker_sq: k, method: DimMethod::Weight });
    }
    let op = restrict(d, m);
    let (r1, r2) = rayon::join(|| kernel_dim(&op, 1, policy), || kernel_dim(&op, 2, policy));
    let ((k1, m1), (k2, m2)) = (r1?, r2?);
    let method = if m1 == RankMethod::Modular || m2 == RankMethod::Modular { DimMethod::Modular } else { DimMethod::Exact };
    Ok(GrowthRecord { m, slice_dim: op.dim(), dim_ker: k1, dim_ker_sq: k2, method })
}

/// Brute-force records for `m = 0..=m_max`, ignoring the diagonal shortcut.
pub fn brute_force_records(d: &LinearDerivation, m_max: u32, policy: &RankPolicy) -> Result<Vec<GrowthRecord>> {
    (0..=m_max)
        .into_par_iter()
        .map(|m| {
            let op = restrict(d, m);
            let (k1, a) = kernel_dim(&op, 1, policy)?;
            let (k2, b) = kernel_dim(&op, 2, policy)?;
            let method = if a == RankMethod::Modular || b == RankMethod::Modular { DimMethod::Modular } else { DimMethod::Exact };
            Ok(GrowthRecord { m, slice_dim: op.dim(), dim_ker: k1, dim_ker_sq: k2, method })
        })
        .collect()
}

/// Kernel dims of the chain derivation on `k[w, x, y]` for `m = 1..=m_max`.
pub fn chain_kernel_dims(m_max: u32, policy: &RankPolicy) -> Result<Vec<GrowthRecord>> {
    if m_max < 1 {
        return Err(Error::Precondition("m_max must be at least 1".into()));
    }
    let d = LinearDerivation::chain3();
    (1..=m_max).into_par_iter().map(|m| growth_record(&d, m, policy)).collect()
}

/// Jordan block sizes (descending) of a nilpotent operator, from ranks of its powers.
pub fn jordan_blocks(op: &HomSliceOperator, policy: &RankPolicy) -> Result<Vec<usize>> {
    let n = op.dim();
    let mut ranks = vec![n];
    let mut power = SparseMatrix::identity(n);
    while *ranks.last().expect("non-empty") > 0 {
        if ranks.len() > n + 1 {
            return Err(Error::Precondition("operator is not nilpotent".into()));
        }
        power = op.matrix.mul(&power);
        ranks.push(power.rank(policy).0);
    }
    // blocks of size >= k: r_{k-1} - r_k
    let at_least: Vec<usize> = ranks.windows(2).map(|w| w[0] - w[1]).collect();
    let mut blocks = Vec::new();
    for k in (1..=at_least.len()).rev() {
        let exactly = at_least[k - 1] - at_least.get(k).copied().unwrap_or(0);
        blocks.extend(std::iter::repeat(k).take(exactly));
    }
    Ok(blocks)
}

/// Jordan blocks of `Θ12` on linear forms in `n^2` coordinates.
pub fn jordan_blocks_theta12(n: usize) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::Precondition(format!("n must be at least 2, got {n}")));
    }
    let op = restrict_field(&GeneratorId::Theta(1, 2).field(n)?, 1)?;
    jordan_blocks(&op, &RankPolicy::exact_only())
}

/// `{3} ∪ {2}^(2n-4) ∪ {1}^((n-2)^2+1)`, descending.
pub fn expected_theta12_blocks(n: usize) -> Vec<usize> {
    let mut v = vec![3];
    v.extend(std::iter::repeat(2).take(2 * n - 4));
    v.extend(std::iter::repeat(1).take((n - 2) * (n - 2) + 1));
    v
}

/// `Σ_{k=0}^{m} (1 + k) · d_{m-k}`.
pub fn adjoin_bound_check(psi_dims: &[u64], m: usize) -> Result<u64> {
    if psi_dims.len() <= m {
        return Err(Error::Precondition(format!("need kernel dims for degrees 0..={m}, got {}", psi_dims.len())));
    }
    Ok((0..=m).map(|k| (1 + k as u64) * psi_dims[m - k]).sum())
}

/// Empirical growth degree of an integer sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EmpiricalDegree {
    /// Least `k` such that `(k+1)`-th differences with step `period` vanish on the window.
    pub degree: Option<u32>,
    pub period: u32,
}

/// Finds the least `k` (then the least period `p <= max_period`) such that the
/// `(k+1)`-th finite differences with step `p` vanish and at least two such
/// differences exist. Returns `degree: None` when the window is too short.
pub fn empirical_degree(values: &[i128], max_period: u32) -> EmpiricalDegree {
    let len = values.len();
    for k in 0..len as u32 {
        let mut any_window = false;
        for p in 1..=max_period.max(1) {
            let need = p as usize * (k as usize + 1) + 2;
            if need > len {
                continue;
            }
            any_window = true;
            let mut cur: Vec<i128> = values.to_vec();
            for _ in 0..=k {
                cur = (p as usize..cur.len()).map(|i| cur[i] - cur[i - p as usize]).collect();
            }
            if cur.iter().all(|&x| x == 0) {
                return EmpiricalDegree { degree: Some(k), period: p };
            }
        }
        if !any_window {
            break;
        }
    }
    EmpiricalDegree { degree: None, period: 0 }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GrowthTable {
    pub label: String,
    pub records: Vec<GrowthRecord>,
    /// Degree estimated from `dim_ker_sq`.
    pub empirical: EmpiricalDegree,
    /// The bound `nvars - 1` for the slice-kernel growth.
    pub bound: u32,
    pub within_bound: Option<bool>,
}

/// Kernel dimensions for `m = 0..=m_max` with an empirical growth degree.
pub fn growth_table(label: &str, d: &LinearDerivation, m_max: u32, policy: &RankPolicy) -> Result<GrowthTable> {
    let records: Vec<GrowthRecord> =
        (0..=m_max).into_par_iter().map(|m| growth_record(d, m, policy)).collect::<Result<_>>()?;
    let seq: Vec<i128> = records.iter().map(|r| r.dim_ker_sq as i128).collect();
    let empirical = empirical_degree(&seq, 6);
    let bound = d.nvars.saturating_sub(1) as u32;
    Ok(GrowthTable {
        label: label.to_string(),
        records,
        empirical,
        bound,
        within_bound: empirical.degree.map(|k| k <= bound),
    })
}

/// CSV with columns `n,field,m,slice_dim,dim_ker,dim_ker_sq,method,empirical_degree`.
pub fn growth_csv(n: usize, table: &GrowthTable) -> String {
    let mut s = String::from("n,field,m,slice_dim,dim_ker,dim_ker_sq,method,empirical_degree\n");
    let deg = table.empirical.degree.map(|d| d.to_string()).unwrap_or_default();
    for r in &table.records {
        s.push_str(&format!(
            "{n},{},{},{},{},{},{},{deg}\n",
            table.label, r.m, r.slice_dim, r.dim_ker, r.dim_ker_sq, r.method
        ));
    }
    s
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConjectureProbe {
    pub nvars: usize,
    pub table: GrowthTable,
    /// The conjectured bound `N - 2` on the growth degree of `dim K_m`.
    pub conjectured_bound: u32,
    /// Degree estimated from `dim_ker`.
    pub kernel_degree: EmpiricalDegree,
    /// `Some(true)` if the window is consistent with the bound; never a proof.
    pub consistent: Option<bool>,
}

pub fn conjecture_probe(label: &str, d: &LinearDerivation, m_max: u32, policy: &RankPolicy) -> Result<ConjectureProbe> {
    let table = growth_table(label, d, m_max, policy)?;
    let seq: Vec<i128> = table.records.iter().map(|r| r.dim_ker as i128).collect();
    let kernel_degree = empirical_degree(&seq, 6);
    let conjectured_bound = d.nvars.saturating_sub(2) as u32;
    Ok(ConjectureProbe {
        nvars: d.nvars,
        table,
        conjectured_bound,
        kernel_degree,
        consistent: kernel_degree.degree.map(|k| k <= conjectured_bound),
    })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct JetRow {
    pub m: u32,
    pub lhs: String,
    pub rhs: String,
    pub ker_theta_sq: u64,
    pub ker_xi_sq: u64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct JetTable {
    pub n: usize,
    pub k: u64,
    pub rows: Vec<JetRow>,
    /// Least `m` from which the inequality holds through the end of the window.
    pub threshold: Option<u32>,
}

/// `C(m + n², n²)` against `k · max(dim ker(Θ12² | P_m), dim ker(Ξ1² | P_m))`, where
/// `P_m` is all polynomials of degree at most `m` (cumulative over slices).
pub fn jet_inequality(n: usize, k: u64, m_max: u32, policy: &RankPolicy) -> Result<JetTable> {
    if n < 2 || k < 1 {
        return Err(Error::Precondition(format!("need n >= 2 and k >= 1, got n = {n}, k = {k}")));
    }
    let theta = LinearDerivation::from_field(&GeneratorId::Theta(1, 2).field(n)?)?;
    let xi = LinearDerivation::from_field(&GeneratorId::Xi(1).field(n)?)?;
    let (th, xr) = rayon::join(
        || growth_table("theta12", &theta, m_max, policy),
        || growth_table("xi1", &xi, m_max, policy),
    );
    let (th, xr) = (th?, xr?);
    let mut rows = Vec::new();
    let (mut ct, mut cx) = (0u64, 0u64);
    let n2 = (n * n) as u64;
    for m in 0..=m_max {
        ct += th.records[m as usize].dim_ker_sq as u64;
        cx += xr.records[m as usize].dim_ker_sq as u64;
        let lhs = binom(m as u64 + n2, n2);
        let rhs = BigUint::from(k) * BigUint::from(ct.max(cx));
        rows.push(JetRow { m, lhs: lhs.to_string(), rhs: rhs.to_string(), ker_theta_sq: ct, ker_xi_sq: cx, holds: lhs >= rhs });
    }
    let threshold = rows.iter().rposition(|r| !r.holds).map_or(Some(0), |i| {
        if i + 1 < rows.len() {
            Some(rows[i + 1].m)
        } else {
            None
        }
    });
    Ok(JetTable { n, k, rows, threshold })
}

pub fn binom(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of multisets of size `k` from `r` kinds.
pub fn multichoose(r: u64, k: u64) -> BigUint {
    if r == 0 {
        return if k == 0 { BigUint::one() } else { BigUint::zero() };
    }
    binom(r + k - 1, k)
}

/// The closed-form sum for `dim ker(Ξ1 | P̃_m)` as printed, with factors
/// `C(4n-4+k-1, k) · C(4n-4+k-1, ℓ) · C((n-2)²+2+m-s-1, m-s)`.
pub fn xi_kernel_printed_formula(n: usize, m: u32) -> BigUint {
    xi_kernel_sum(m, |k, l, z| {
        let a = 4 * n as u64 - 4;
        let zero_kinds = ((n - 2) * (n - 2) + 2) as u64;
        binom(a + k - 1, k) * binom(a + k - 1, l) * binom(zero_kinds + z - 1, z)
    })
}

/// The same sum with the multiplicities `2(n-2)` of the eigenvalues `±1`.
pub fn xi_kernel_corrected_formula(n: usize, m: u32) -> BigUint {
    xi_kernel_sum(m, |k, l, z| {
        let pm1 = 2 * (n as u64 - 2);
        let zero_kinds = ((n - 2) * (n - 2) + 2) as u64;
        multichoose(pm1, k) * multichoose(pm1, l) * multichoose(zero_kinds, z)
    })
}

fn xi_kernel_sum(m: u32, term: impl Fn(u64, u64, u64) -> BigUint) -> BigUint {
    let m = m as i64;
    let mut total = BigUint::zero();
    for p in 0..=m {
        for q in 0..=m - p {
            for k in 0..=m - p - q {
                for l in 0..=m - p - q - k {
                    if 2 * (p - q) + (k - l) != 0 {
                        continue;
                    }
                    let s = p + q + k + l;
                    total += term(k as u64, l as u64, (m - s) as u64);
                }
            }
        }
    }
    total
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct XiFormulaRow {
    pub n: usize,
    pub m: u32,
    pub weight_count: String,
    pub corrected: String,
    pub printed: String,
    pub printed_matches: bool,
}

/// Side-by-side comparison of the weight count with both closed forms.
pub fn xi_formula_report(n: usize, m_max: u32) -> Result<Vec<XiFormulaRow>> {
    let ws = WeightSystem::from_field(&GeneratorId::Xi(1).field(n)?)?;
    Ok((0..=m_max)
        .map(|m| {
            let dp = BigUint::from(weight_kernel_dim(&ws, m));
            let printed = xi_kernel_printed_formula(n, m);
            XiFormulaRow {
                n,
                m,
                weight_count: dp.to_string(),
                corrected: xi_kernel_corrected_formula(n, m).to_string(),
                printed_matches: printed == dp,
                printed: printed.to_string(),
            }
        })
        .collect())
}

/// Evaluates `D` on a polynomial in the derivation's variables (test helper and CLI use).
pub fn apply_derivation(d: &LinearDerivation, p: &Polynomial) -> Polynomial {
    let mut out = Polynomial::zero(p.n());
    for (m, c) in p.terms() {
        for (t, e) in d.apply_monomial(m) {
            out.add_term(t, c * e);
        }
    }
    out
}
