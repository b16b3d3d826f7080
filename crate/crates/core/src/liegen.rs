//! Degree-graded Lie-bracket closure of overshear fields.
//!
//! Elements live in the free module `R ⊗ sl_n` over a coefficient ring `R`
//! (the `sl_n` coordinate ring with `x_nn` eliminated by the trace, or the full
//! `gl_n` ring). An element `Σ f_k V_k` pairs one coefficient with each basis
//! generator; the bracket is
//! `[fV, gW] = f V(g) W - g W(f) V + f g [V, W]` with `[V, W]` the bracket of
//! derivations expanded in the generator basis. Graded spans are stored as
//! coefficient vectors over `P̃_d × basis` and reduced incrementally.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::adjointfields::{self, GeneratorId, OvershearClass, VectorField};
use crate::error::{Error, Result};
use crate::linalg::{clear_denominators, exact_rank, Echelon, ExactEchelon, ModEchelon, RankMethod, SparseVec};
use crate::polyring::{
    enumerate_sl_slice, enumerate_slice, rat, HomSliceBasis, Monomial, Polynomial, VarIndex,
};

/// Coefficient ring of the module.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffRing {
    /// Polynomials on `sl_n`: `x_nn` replaced by `-(x_11 + ... + x_{n-1,n-1})`.
    Sl,
    /// Polynomials on `M_n` in all `n^2` coordinates.
    Gl,
}

impl CoeffRing {
    pub fn normalize(self, p: Polynomial) -> Polynomial {
        match self {
            CoeffRing::Sl => p.substitute_trace(),
            CoeffRing::Gl => p,
        }
    }

    pub fn slice(self, n: usize, d: u32) -> HomSliceBasis {
        match self {
            CoeffRing::Sl => enumerate_sl_slice(n, d),
            CoeffRing::Gl => enumerate_slice(n, d),
        }
    }
}

/// Generator basis of `sl_n` with its fields and structure constants.
#[derive(Clone, Debug)]
pub struct LieContext {
    n: usize,
    ring: CoeffRing,
    gens: Vec<GeneratorId>,
    fields: Vec<VectorField>,
    index: HashMap<GeneratorId, usize>,
    // structure[i][j] = expansion of the derivation bracket [V_i, V_j]
    structure: Vec<Vec<Vec<(usize, BigRational)>>>,
}

type DenseMatrix = Vec<Vec<i64>>;

fn generator_matrix(g: GeneratorId, n: usize) -> DenseMatrix {
    let mut m = vec![vec![0i64; n]; n];
    for (r, c, v) in g.matrix_entries() {
        m[r - 1][c - 1] = v as i64;
    }
    m
}

fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let n = a.len();
    let mut out = vec![vec![0i64; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] != 0 {
                for j in 0..n {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    out
}

impl LieContext {
    pub fn new(n: usize, ring: CoeffRing) -> Result<Self> {
        if n < 2 {
            return Err(Error::Precondition(format!("sl_n needs n >= 2, got {n}")));
        }
        let gens = GeneratorId::basis(n);
        let fields = gens.iter().map(|g| g.field(n)).collect::<Result<Vec<_>>>()?;
        let index = gens.iter().enumerate().map(|(i, g)| (*g, i)).collect::<HashMap<_, _>>();
        let mats: Vec<DenseMatrix> = gens.iter().map(|g| generator_matrix(*g, n)).collect();
        let mut structure = vec![vec![Vec::new(); gens.len()]; gens.len()];
        for i in 0..gens.len() {
            for j in 0..gens.len() {
                // X -> [M, X] turns matrix commutators into negated field brackets.
                let ab = matmul(&mats[i], &mats[j]);
                let ba = matmul(&mats[j], &mats[i]);
                let mut c = vec![vec![0i64; n]; n];
                for r in 0..n {
                    for s in 0..n {
                        c[r][s] = ba[r][s] - ab[r][s];
                    }
                }
                structure[i][j] = decompose(&c, &index);
            }
        }
        Ok(Self { n, ring, gens, fields, index, structure })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ring(&self) -> CoeffRing {
        self.ring
    }

    pub fn generators(&self) -> &[GeneratorId] {
        &self.gens
    }

    pub fn index_of(&self, g: GeneratorId) -> Result<usize> {
        self.index
            .get(&g)
            .copied()
            .ok_or_else(|| Error::InvalidGenerator(format!("{g:?} is not a basis generator for n = {}", self.n)))
    }

    /// Structure constants of `[V_i, V_j]` in the generator basis.
    pub fn structure(&self, i: usize, j: usize) -> &[(usize, BigRational)] {
        &self.structure[i][j]
    }

    /// `V_k(p)` in the coefficient ring.
    pub fn derive(&self, k: usize, p: &Polynomial) -> Polynomial {
        let raw = adjointfields::apply(&self.fields[k], p).expect("coefficients share n");
        self.ring.normalize(raw)
    }

    pub fn element(&self, f: Polynomial, g: GeneratorId) -> Result<ModuleElement> {
        let k = self.index_of(g)?;
        let mut e = ModuleElement::zero(self.n, self.gens.len());
        e.coeffs[k] = self.ring.normalize(f);
        Ok(e)
    }

    /// Bracket of module elements.
    pub fn bracket(&self, a: &ModuleElement, b: &ModuleElement) -> ModuleElement {
        let mut out = ModuleElement::zero(self.n, self.gens.len());
        for (i, f) in a.nonzero() {
            for (j, g) in b.nonzero() {
                let vg = self.derive(i, g);
                if !vg.is_zero() {
                    out.coeffs[j] = &out.coeffs[j] + &(f * &vg);
                }
                let wf = self.derive(j, f);
                if !wf.is_zero() {
                    out.coeffs[i] = &out.coeffs[i] - &(g * &wf);
                }
                let sc = &self.structure[i][j];
                if !sc.is_empty() {
                    let fg = f * g;
                    for (k, c) in sc {
                        out.coeffs[*k] = &out.coeffs[*k] + &fg.scale(c);
                    }
                }
            }
        }
        out
    }

    /// Component form `Σ f_k · field(V_k)`.
    pub fn to_vector_field(&self, e: &ModuleElement) -> VectorField {
        let mut out = VectorField::zero(self.n);
        for (k, f) in e.nonzero() {
            out = &out + &adjointfields::scale_field(f, &self.fields[k]).expect("same n");
        }
        out
    }
}

fn decompose(c: &DenseMatrix, index: &HashMap<GeneratorId, usize>) -> Vec<(usize, BigRational)> {
    let n = c.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && c[a][b] != 0 {
                out.push((index[&GeneratorId::Theta(a + 1, b + 1)], rat(c[a][b])));
            }
        }
    }
    // diag(h) = Σ c_a H_a with c_a = h_1 + ... + h_a
    let mut acc = 0;
    for a in 0..n - 1 {
        acc += c[a][a];
        if acc != 0 {
            out.push((index[&GeneratorId::Xi(a + 1)], rat(acc)));
        }
    }
    out.sort_by_key(|(k, _)| *k);
    out
}

/// Element `Σ f_k V_k` of the free module; coefficients indexed like [`GeneratorId::basis`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModuleElement {
    coeffs: Vec<Polynomial>,
}

impl ModuleElement {
    pub fn zero(n: usize, ngens: usize) -> Self {
        Self { coeffs: vec![Polynomial::zero(n); ngens] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Polynomial::is_zero)
    }

    pub fn coeffs(&self) -> &[Polynomial] {
        &self.coeffs
    }

    fn nonzero(&self) -> impl Iterator<Item = (usize, &Polynomial)> {
        self.coeffs.iter().enumerate().filter(|(_, p)| !p.is_zero())
    }

    pub fn add(&self, other: &ModuleElement) -> ModuleElement {
        ModuleElement { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, c: &BigRational) -> ModuleElement {
        ModuleElement { coeffs: self.coeffs.iter().map(|p| p.scale(c)).collect() }
    }

    /// Common homogeneous degree of all non-zero coefficients.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut d = None;
        for (_, p) in self.nonzero() {
            let e = p.homogeneous_degree()?;
            if d.is_some_and(|x| x != e) {
                return None;
            }
            d = Some(e);
        }
        d
    }

    /// Coefficient vector over `basis × generators` (generator-major).
    pub fn vectorize(&self, basis: &HomSliceBasis) -> Result<SparseVec<BigRational>> {
        let len = basis.len();
        let mut out = Vec::new();
        for (k, p) in self.nonzero() {
            for (m, c) in p.terms() {
                let pos = basis.position(m).ok_or_else(|| {
                    Error::Grading(format!("monomial of degree {} outside the degree-{} slice", m.degree(), basis.degree()))
                })?;
                out.push((k * len + pos, c.clone()));
            }
        }
        out.sort_by_key(|(c, _)| *c);
        Ok(out)
    }

    pub fn unvectorize(v: &[(usize, BigRational)], basis: &HomSliceBasis, n: usize, ngens: usize) -> ModuleElement {
        let mut e = ModuleElement::zero(n, ngens);
        let len = basis.len();
        for (c, q) in v {
            let (k, pos) = (c / len, c % len);
            e.coeffs[k].add_term(basis.monomials()[pos].clone(), q.clone());
        }
        e
    }
}

/// Component-form vector of a field whose components are homogeneous of degree `m`,
/// indexed over `P̃_m` (all `n^2` variables) × component variable.
pub fn vectorize_field(v: &VectorField, m: u32) -> Result<SparseVec<BigRational>> {
    let n = v.n();
    let basis = enumerate_slice(n, m);
    let stride = n * n;
    let mut out = Vec::new();
    for (var, p) in v.components() {
        for (mono, c) in p.terms() {
            let pos = basis.position(mono).ok_or_else(|| {
                Error::Grading(format!("component x{} has a term of degree {}, expected {m}", var, mono.degree()))
            })?;
            out.push((pos * stride + var, c.clone()));
        }
    }
    out.sort_by_key(|(c, _)| *c);
    Ok(out)
}

pub fn unvectorize_field(v: &[(usize, BigRational)], n: usize, m: u32) -> VectorField {
    let basis = enumerate_slice(n, m);
    let stride = n * n;
    let mut comps: BTreeMap<usize, Polynomial> = BTreeMap::new();
    for (c, q) in v {
        let (pos, var) = (c / stride, c % stride);
        comps
            .entry(var)
            .or_insert_with(|| Polynomial::zero(n))
            .add_term(basis.monomials()[pos].clone(), q.clone());
    }
    VectorField::from_components(n, comps)
}

/// A seed overshear `f · V`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Seed {
    pub coeff: Polynomial,
    pub generator: GeneratorId,
    pub class: OvershearClass,
}

#[derive(Clone, Debug)]
pub struct SeedSet {
    pub n: usize,
    pub ring: CoeffRing,
    pub seeds: Vec<Seed>,
}

impl SeedSet {
    pub fn contains(&self, f: &Polynomial, g: GeneratorId) -> bool {
        let f = self.ring.normalize(f.clone());
        self.seeds.iter().any(|s| s.generator == g && s.coeff == f)
    }

    pub fn of_degree(&self, d: u32) -> impl Iterator<Item = &Seed> {
        self.seeds.iter().filter(move |s| s.coeff.homogeneous_degree() == Some(d))
    }
}

/// All `(monomial f, generator V)` with `deg f <= 2` and `V²(f) = 0` in the coefficient ring,
/// including the constant seeds `1 · V`.
pub fn build_seeds(ctx: &LieContext) -> SeedSet {
    let n = ctx.n;
    let mut seeds = Vec::new();
    for d in 0..=2 {
        let basis = ctx.ring.slice(n, d);
        for m in basis.monomials() {
            let f = Polynomial::monomial(n, m.clone(), BigRational::one());
            for (k, g) in ctx.gens.iter().enumerate() {
                let once = ctx.derive(k, &f);
                let class = if once.is_zero() {
                    OvershearClass::Shear
                } else if ctx.derive(k, &once).is_zero() {
                    OvershearClass::Overshear
                } else {
                    continue;
                };
                seeds.push(Seed { coeff: f.clone(), generator: *g, class });
            }
        }
    }
    SeedSet { n, ring: ctx.ring, seeds }
}

/// How a graded span performs its row reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanMode {
    Exact,
    /// Reduction modulo the given prime; the rank is a lower bound for the rational rank.
    Modular(u64),
}

#[derive(Clone, Debug)]
enum SpanEchelon {
    Exact(ExactEchelon),
    Modular(ModEchelon),
}

impl SpanEchelon {
    fn as_dyn(&self) -> &dyn Echelon {
        match self {
            SpanEchelon::Exact(e) => e,
            SpanEchelon::Modular(e) => e,
        }
    }

    fn as_dyn_mut(&mut self) -> &mut dyn Echelon {
        match self {
            SpanEchelon::Exact(e) => e,
            SpanEchelon::Modular(e) => e,
        }
    }
}

/// Span of module elements with homogeneous degree-`d` coefficients.
#[derive(Clone, Debug)]
pub struct GradedSpan {
    n: usize,
    ngens: usize,
    degree: u32,
    basis: HomSliceBasis,
    mode: SpanMode,
    echelon: SpanEchelon,
    elements: Vec<ModuleElement>,
}

impl GradedSpan {
    pub fn new(ctx: &LieContext, degree: u32, mode: SpanMode) -> Self {
        let echelon = match mode {
            SpanMode::Exact => SpanEchelon::Exact(ExactEchelon::new()),
            SpanMode::Modular(p) => SpanEchelon::Modular(ModEchelon::new(p)),
        };
        Self {
            n: ctx.n,
            ngens: ctx.gens.len(),
            degree,
            basis: ctx.ring.slice(ctx.n, degree),
            mode,
            echelon,
            elements: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn mode(&self) -> SpanMode {
        self.mode
    }

    pub fn basis(&self) -> &HomSliceBasis {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.echelon.as_dyn().rank()
    }

    /// `|P̃_d| · (n^2 - 1)`.
    pub fn target_rank(&self) -> usize {
        self.basis.len() * self.ngens
    }

    pub fn is_full(&self) -> bool {
        self.rank() == self.target_rank()
    }

    /// Elements that raised the rank when inserted; they span the space.
    pub fn elements(&self) -> &[ModuleElement] {
        &self.elements
    }

    fn row(&self, e: &ModuleElement) -> Result<SparseVec<BigInt>> {
        Ok(clear_denominators(&e.vectorize(&self.basis)?))
    }

    /// Inserts `e`; returns whether the rank increased.
    pub fn insert(&mut self, e: ModuleElement) -> Result<bool> {
        if e.is_zero() {
            return Ok(false);
        }
        let row = self.row(&e)?;
        let grew = self.echelon.as_dyn_mut().insert(&row);
        if grew {
            self.elements.push(e);
        }
        Ok(grew)
    }

    /// Exact membership test.
    pub fn contains(&self, e: &ModuleElement) -> Result<bool> {
        if e.is_zero() {
            return Ok(true);
        }
        let row = self.row(e)?;
        if self.is_full() {
            // modular rank never exceeds the rational one, so a full span is certified
            return Ok(true);
        }
        match &self.echelon {
            SpanEchelon::Exact(ech) => Ok(ech.contains(&row)),
            SpanEchelon::Modular(_) => {
                let mut ech = ExactEchelon::new();
                for el in &self.elements {
                    ech.insert(&self.row(el)?);
                }
                Ok(ech.contains(&row))
            }
        }
    }

    /// `f · V` for a degree-`d` monomial `f`.
    pub fn contains_term(&self, ctx: &LieContext, f: &Polynomial, g: GeneratorId) -> Result<bool> {
        self.contains(&ctx.element(f.clone(), g)?)
    }

    /// Rank of the component-form image after trace substitution; at least the free-module
    /// rank is not implied, since the image satisfies module relations.
    pub fn image_rank(&self, ctx: &LieContext) -> Result<usize> {
        let rows: Vec<SparseVec<BigInt>> = self
            .elements
            .iter()
            .map(|e| {
                let v = ctx.to_vector_field(e).substitute_trace();
                vectorize_field(&v, self.degree + 1).map(|r| clear_denominators(&r))
            })
            .collect::<Result<_>>()?;
        Ok(exact_rank(&rows))
    }
}

/// Limits on closure work.
#[derive(Clone, Copy, Debug, Default)]
pub struct Budget {
    pub deadline: Option<Instant>,
    pub max_brackets: Option<u64>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn with_millis(ms: u64) -> Self {
        Self { deadline: Some(Instant::now() + std::time::Duration::from_millis(ms)), max_brackets: None }
    }

    fn exhausted(&self, brackets: u64) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d) || self.max_brackets.is_some_and(|m| brackets >= m)
    }
}

#[derive(Clone, Debug)]
pub struct ClosureConfig {
    pub max_degree: u32,
    /// Spans with at most this target rank are reduced exactly; larger ones modulo `prime`.
    pub exact_limit: usize,
    pub prime: u64,
    pub budget: Budget,
}

impl ClosureConfig {
    pub fn new(max_degree: u32) -> Self {
        Self { max_degree, exact_limit: 400, prime: (1u64 << 61) - 1, budget: Budget::unlimited() }
    }
}

#[derive(Clone, Debug)]
pub struct ClosureResult {
    pub n: usize,
    pub ring: CoeffRing,
    pub spans: BTreeMap<u32, GradedSpan>,
    /// False when the budget ran out before the fixed point at every degree.
    pub complete: bool,
    pub brackets_evaluated: u64,
}

const CHUNK: usize = 512;

struct Closure<'a> {
    ctx: &'a LieContext,
    budget: Budget,
    brackets: u64,
}

impl Closure<'_> {
    fn out_of_budget(&self) -> bool {
        self.budget.exhausted(self.brackets)
    }

    /// Brackets of the given pairs, evaluated in parallel and inserted in order.
    /// Returns false if the budget ran out.
    fn insert_brackets(&mut self, span: &mut GradedSpan, pairs: Vec<(ModuleElement, ModuleElement)>) -> Result<bool> {
        for chunk in pairs.chunks(CHUNK) {
            if span.is_full() {
                return Ok(true);
            }
            if self.out_of_budget() {
                return Ok(false);
            }
            let ctx = self.ctx;
            let results: Vec<ModuleElement> = chunk.par_iter().map(|(a, b)| ctx.bracket(a, b)).collect();
            self.brackets += chunk.len() as u64;
            for r in results {
                span.insert(r)?;
                if span.is_full() {
                    return Ok(true);
                }
            }
        }
        Ok(true)
    }

    /// Closes `span` under brackets with the degree-0 generators, starting at element `cursor`.
    fn saturate(&mut self, span: &mut GradedSpan, cursor: &mut usize, gens: &[ModuleElement]) -> Result<bool> {
        while *cursor < span.elements.len() && !span.is_full() {
            let end = span.elements.len();
            let pairs: Vec<(ModuleElement, ModuleElement)> = span.elements[*cursor..end]
                .iter()
                .flat_map(|e| gens.iter().map(move |g| (g.clone(), e.clone())))
                .collect();
            *cursor = end;
            if !self.insert_brackets(span, pairs)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Graded bracket closure of `seeds` up to coefficient degree `config.max_degree`.
///
/// Degrees are processed in increasing order; degree `d` receives its seeds, the
/// brackets of spans of degrees `i + j = d` with `i, j >= 1`, and is then closed under
/// brackets with the constant generators. Lower degrees are final when `d` starts, so
/// this reaches the fixed point.
pub fn closure(ctx: &LieContext, seeds: &SeedSet, config: &ClosureConfig) -> Result<ClosureResult> {
    if seeds.n != ctx.n || seeds.ring != ctx.ring {
        return Err(Error::Precondition("seed set built for a different context".into()));
    }
    let mut run = Closure { ctx, budget: config.budget, brackets: 0 };
    let mut spans: BTreeMap<u32, GradedSpan> = BTreeMap::new();
    let mut complete = true;
    let mut gens0: Vec<ModuleElement> = Vec::new();
    'degrees: for d in 0..=config.max_degree {
        let target = ctx.ring.slice(ctx.n, d).len() * ctx.gens.len();
        let mode = if target <= config.exact_limit { SpanMode::Exact } else { SpanMode::Modular(config.prime) };
        let mut span = GradedSpan::new(ctx, d, mode);
        for s in seeds.of_degree(d) {
            span.insert(ctx.element(s.coeff.clone(), s.generator)?)?;
        }
        if d == 0 {
            gens0 = span.elements.clone();
        }
        let mut cursor = 0;
        if !run.saturate(&mut span, &mut cursor, &gens0)? {
            complete = false;
            spans.insert(d, span);
            break 'degrees;
        }
        for i in 1..=d / 2 {
            let j = d - i;
            if span.is_full() {
                break;
            }
            let (a, b) = (&spans[&i], &spans[&j]);
            let mut pairs = Vec::new();
            for (x, ea) in a.elements.iter().enumerate() {
                let start = if i == j { x + 1 } else { 0 };
                for eb in &b.elements[start..] {
                    pairs.push((ea.clone(), eb.clone()));
                }
            }
            if !run.insert_brackets(&mut span, pairs)? || !run.saturate(&mut span, &mut cursor, &gens0)? {
                complete = false;
                spans.insert(d, span);
                break 'degrees;
            }
        }
        spans.insert(d, span);
    }
    Ok(ClosureResult { n: ctx.n, ring: ctx.ring, spans, complete, brackets_evaluated: run.brackets })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Witness {
    pub coefficient: String,
    pub generator: String,
}

/// Per-degree closure report.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct DegreeReport {
    pub n: usize,
    pub degree: u32,
    pub ring: CoeffRing,
    pub target_rank: usize,
    pub achieved_rank: usize,
    pub method: RankMethod,
    pub full: bool,
    pub missing_witnesses: Vec<Witness>,
}

/// Reports for every computed degree; lists up to `max_witnesses` missing `f · V` per degree.
pub fn closure_report(ctx: &LieContext, result: &ClosureResult, max_witnesses: usize) -> Result<Vec<DegreeReport>> {
    let mut out = Vec::new();
    for (d, span) in &result.spans {
        let mut missing = Vec::new();
        if !span.is_full() {
            'outer: for m in span.basis.monomials() {
                let f = Polynomial::monomial(ctx.n, m.clone(), BigRational::one());
                for g in &ctx.gens {
                    if missing.len() >= max_witnesses {
                        break 'outer;
                    }
                    if !span.contains_term(ctx, &f, *g)? {
                        missing.push(Witness { coefficient: f.format(), generator: g.label(ctx.n) });
                    }
                }
            }
        }
        out.push(DegreeReport {
            n: ctx.n,
            degree: *d,
            ring: ctx.ring,
            target_rank: span.target_rank(),
            achieved_rank: span.rank(),
            method: match span.mode {
                SpanMode::Exact => RankMethod::Exact,
                SpanMode::Modular(_) => RankMethod::Modular,
            },
            full: span.is_full(),
            missing_witnesses: missing,
        });
    }
    Ok(out)
}

/// Named bracket identities from the degree induction.
#[derive(Clone, Debug, PartialEq)]
pub enum Identity {
    /// `[x22 Θ12, Θ21] = x22 Ξ1 + x12 Θ12`
    DegreeOne,
    /// `2 [x12 Ξ1, x12 Θ12] - [x12² Ξ1, Θ12] = 6 x12² Θ12`
    DegreeTwo,
    /// `d [x12 Ξ1, x12^d Θ12] - [x12^d Ξ1, x12 Θ12] = 2 (d² + d - 2) x12^{d+1} Θ12`
    Power(u32),
    /// `[a f Θ, g Λ] - [f Θ, a g Λ] = -f g (Θ(a) Λ + Λ(a) Θ)`
    CrossTerm { a: Polynomial, f: Polynomial, g: Polynomial, theta: GeneratorId, lambda: GeneratorId },
    /// `[Θ21, f Θ12] = f Ξ1 - Θ21(f) Θ12`
    Hyperbolic(Polynomial),
    /// `[x12² Θ21, Θ12] = 2 x12 Θ12(x12) Θ21 - x12² Ξ1`
    ShearDetour,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct IdentityReport {
    pub id: String,
    pub name: String,
    pub n: usize,
    pub passed: bool,
    pub lhs: String,
    pub rhs: String,
    pub residual: String,
    /// `c` with `lhs = c · rhs`, when such a scalar exists and `rhs != 0`.
    pub lhs_over_rhs: Option<String>,
}

fn x(n: usize, r: usize, c: usize) -> Polynomial {
    Polynomial::x(n, r, c)
}

fn sf(p: &Polynomial, g: GeneratorId) -> Result<VectorField> {
    adjointfields::scale_field(p, &g.field(p.n())?)
}

fn br(a: &VectorField, b: &VectorField) -> Result<VectorField> {
    adjointfields::bracket(a, b)
}

const T12: GeneratorId = GeneratorId::Theta(1, 2);
const T21: GeneratorId = GeneratorId::Theta(2, 1);
const XI1: GeneratorId = GeneratorId::Xi(1);

/// Selector names accepted by [`Identity::id`] filters.
pub const IDENTITY_IDS: [&str; 9] =
    ["d1", "d2-hyperbolic", "power-2", "power-3", "power-4", "power-5", "cross-term", "hyperbolic", "detour"];

impl Identity {
    /// Short selector: `d1`, `d2-hyperbolic`, `power-<d>`, `cross-term`, `hyperbolic`, `detour`.
    pub fn id(&self) -> String {
        match self {
            Identity::DegreeOne => "d1".into(),
            Identity::DegreeTwo => "d2-hyperbolic".into(),
            Identity::Power(d) => format!("power-{d}"),
            Identity::CrossTerm { .. } => "cross-term".into(),
            Identity::Hyperbolic(_) => "hyperbolic".into(),
            Identity::ShearDetour => "detour".into(),
        }
    }

    pub fn name(&self, n: usize) -> String {
        match self {
            Identity::DegreeOne => "d=1: [x22 Theta12, Theta21] = x22 Xi1 + x12 Theta12".into(),
            Identity::DegreeTwo => "d=2: 2[x12 Xi1, x12 Theta12] - [x12^2 Xi1, Theta12] = 6 x12^2 Theta12".into(),
            Identity::Power(d) => format!(
                "power d={d}: {d}[x12 Xi1, x12^{d} Theta12] - [x12^{d} Xi1, x12 Theta12] = {} x12^{} Theta12",
                2 * (d * d + d - 2),
                d + 1
            ),
            Identity::CrossTerm { a, f, g, theta, lambda } => format!(
                "cross term: a={a}, f={f}, g={g}, Theta={}, Lambda={}",
                theta.label(n),
                lambda.label(n)
            ),
            Identity::Hyperbolic(f) => format!("hyperbolic: [Theta21, f Theta12] = f Xi1 - Theta21(f) Theta12, f={f}"),
            Identity::ShearDetour => "detour: [x12^2 Theta21, Theta12] = 2 x12 Theta12(x12) Theta21 - x12^2 Xi1".into(),
        }
    }

    /// Both sides in component form.
    pub fn sides(&self, n: usize) -> Result<(VectorField, VectorField)> {
        let one = Polynomial::one(n);
        let x12 = x(n, 1, 2);
        Ok(match self {
            Identity::DegreeOne => {
                let x22 = x(n, 2, 2);
                let lhs = br(&sf(&x22, T12)?, &sf(&one, T21)?)?;
                let rhs = &sf(&x22, XI1)? + &sf(&x12, T12)?;
                (lhs, rhs)
            }
            Identity::DegreeTwo => {
                let x12sq = x12.pow(2);
                let a = br(&sf(&x12, XI1)?, &sf(&x12, T12)?)?.scale(&rat(2));
                let b = br(&sf(&x12sq, XI1)?, &sf(&one, T12)?)?;
                (&a - &b, sf(&x12sq.scale(&rat(6)), T12)?)
            }
            Identity::Power(d) => {
                let d = *d;
                let xd = x12.pow(d);
                let a = br(&sf(&x12, XI1)?, &sf(&xd, T12)?)?.scale(&rat(d as i64));
                let b = br(&sf(&xd, XI1)?, &sf(&x12, T12)?)?;
                let c = 2 * (d as i64 * d as i64 + d as i64 - 2);
                (&a - &b, sf(&x12.pow(d + 1).scale(&rat(c)), T12)?)
            }
            Identity::CrossTerm { a, f, g, theta, lambda } => {
                let af = a * f;
                let ag = a * g;
                let lhs = &br(&sf(&af, *theta)?, &sf(g, *lambda)?)? - &br(&sf(f, *theta)?, &sf(&ag, *lambda)?)?;
                let fg = f * g;
                let ta = adjointfields::apply(&theta.field(n)?, a)?;
                let la = adjointfields::apply(&lambda.field(n)?, a)?;
                let inner = &sf(&(&fg * &ta), *lambda)? + &sf(&(&fg * &la), *theta)?;
                (lhs, inner.scale(&rat(-1)))
            }
            Identity::Hyperbolic(f) => {
                let lhs = br(&sf(&one, T21)?, &sf(f, T12)?)?;
                let t21f = adjointfields::apply(&T21.field(n)?, f)?;
                (lhs, &sf(f, XI1)? - &sf(&t21f, T12)?)
            }
            Identity::ShearDetour => {
                let x12sq = x12.pow(2);
                let lhs = br(&sf(&x12sq, T21)?, &sf(&one, T12)?)?;
                let t12x12 = adjointfields::apply(&T12.field(n)?, &x12)?;
                let rhs = &sf(&(&x12 * &t12x12).scale(&rat(2)), T21)? - &sf(&x12sq, XI1)?;
                (lhs, rhs)
            }
        })
    }
}

fn proportionality(lhs: &VectorField, rhs: &VectorField) -> Option<BigRational> {
    let (c_r, m, v) = rhs.terms().into_iter().next()?;
    let c_l = lhs.component(VarIndex::from_flat(v, rhs.n())).coeff(&m);
    let c = c_l / c_r;
    (lhs == &rhs.scale(&c)).then_some(c)
}

/// Computes both sides and compares them exactly.
pub fn verify_identity(id: &Identity, n: usize) -> Result<IdentityReport> {
    let (lhs, rhs) = id.sides(n)?;
    let residual = &lhs - &rhs;
    let ratio = proportionality(&lhs, &rhs).map(|c| {
        if c.is_integer() {
            c.numer().to_string()
        } else {
            format!("{}/{}", c.numer(), c.denom())
        }
    });
    Ok(IdentityReport {
        id: id.id(),
        name: id.name(n),
        n,
        passed: residual.is_zero(),
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        residual: residual.to_string(),
        lhs_over_rhs: ratio,
    })
}

fn random_monomial<R: Rng>(n: usize, degree: u32, rng: &mut R) -> Polynomial {
    let mut m = Monomial::one();
    for _ in 0..degree {
        m = m.mul(&Monomial::var(rng.gen_range(0..n * n)));
    }
    Polynomial::monomial(n, m, BigRational::one())
}

/// The fixed catalog: degree-one and degree-two cases, the power step for `d = 2..=5`,
/// `samples` seeded cross-term instances, hyperbolic steps and the shear detour.
pub fn catalog(n: usize, samples: usize, seed: u64) -> Vec<Identity> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Identity::DegreeOne, Identity::DegreeTwo];
    out.extend((2..=5).map(Identity::Power));
    let gens = GeneratorId::basis(n);
    for _ in 0..samples {
        let a = random_monomial(n, 1, &mut rng);
        let f = random_monomial(n, rng.gen_range(0..=2), &mut rng);
        let g = random_monomial(n, rng.gen_range(0..=2), &mut rng);
        let theta = *gens.choose(&mut rng).expect("non-empty basis");
        let lambda = *gens.choose(&mut rng).expect("non-empty basis");
        out.push(Identity::CrossTerm { a, f, g, theta, lambda });
    }
    out.push(Identity::Hyperbolic(x(n, 1, 1)));
    out.push(Identity::Hyperbolic(&x(n, 1, 2) * &x(n, 2, 1)));
    let d = rng.gen_range(2..=3);
    out.push(Identity::Hyperbolic(random_monomial(n, d, &mut rng)));
    out.push(Identity::ShearDetour);
    out
}

pub fn verify_catalog(n: usize, samples: usize, seed: u64) -> Result<Vec<IdentityReport>> {
    catalog(n, samples, seed).iter().map(|id| verify_identity(id, n)).collect()
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CrossImageReport {
    pub n: usize,
    pub rank: usize,
    pub target_rank: usize,
    pub x12_in_span: bool,
    /// Number of `(a, b, c, d)` with `Θ12(x_cd) = 0` that were evaluated.
    pub images: usize,
    pub passed: bool,
}

/// Span of `Θ_ab(x_cd)` over all `a != b` and `x_cd ∈ ker Θ12`, as linear forms on `sl_n`.
pub fn verify_cross_image(n: usize) -> Result<CrossImageReport> {
    if n < 3 {
        return Err(Error::Precondition(format!("cross-image span needs n >= 3, got {n}")));
    }
    let basis = enumerate_sl_slice(n, 1);
    let t12 = T12.field(n)?;
    let mut ech = ExactEchelon::new();
    let mut images = 0;
    for c in 1..=n {
        for d in 1..=n {
            let xcd = x(n, c, d);
            if !adjointfields::apply(&t12, &xcd)?.is_zero() {
                continue;
            }
            for a in 1..=n {
                for b in (1..=n).filter(|&b| b != a) {
                    let img = adjointfields::apply(&make_theta_field(n, a, b)?, &xcd)?.substitute_trace();
                    images += 1;
                    if img.is_zero() {
                        continue;
                    }
                    ech.insert(&clear_denominators(&linear_vector(&img, &basis)?));
                }
            }
        }
    }
    let x12v = clear_denominators(&linear_vector(&x(n, 1, 2), &basis)?);
    let x12_in_span = ech.contains(&x12v);
    let rank = ech.rank();
    let target_rank = n * n - 2;
    Ok(CrossImageReport { n, rank, target_rank, x12_in_span, images, passed: rank == target_rank && !x12_in_span })
}

fn make_theta_field(n: usize, a: usize, b: usize) -> Result<VectorField> {
    adjointfields::make_theta(n, a, b)
}

fn linear_vector(p: &Polynomial, basis: &HomSliceBasis) -> Result<SparseVec<BigRational>> {
    let mut v = Vec::new();
    for (m, c) in p.terms() {
        let pos = basis
            .position(m)
            .ok_or_else(|| Error::Grading("expected a linear form on sl_n".into()))?;
        v.push((pos, c.clone()));
    }
    v.sort_by_key(|(c, _)| *c);
    Ok(v)
}

/// Shuffles seed insertion order; used to check order independence.
pub fn shuffled(seeds: &SeedSet, seed: u64) -> SeedSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = seeds.clone();
    s.seeds.shuffle(&mut rng);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::parse_poly;

    fn p(s: &str, n: usize) -> Polynomial {
        parse_poly(s, n).unwrap()
    }

    fn ctx(n: usize) -> LieContext {
        LieContext::new(n, CoeffRing::Sl).unwrap()
    }

    #[test]
    fn structure_constants_match_field_brackets() {
        for n in 2..=3 {
            let c = LieContext::new(n, CoeffRing::Gl).unwrap();
            for i in 0..c.gens.len() {
                for j in 0..c.gens.len() {
                    let direct = adjointfields::bracket(&c.fields[i], &c.fields[j]).unwrap();
                    let mut via = VectorField::zero(n);
                    for (k, q) in c.structure(i, j) {
                        via = &via + &c.fields[*k].scale(q);
                    }
                    assert_eq!(direct, via);
                }
            }
        }
        let c = ctx(2);
        let (t12, t21, xi) = (c.index_of(T12).unwrap(), c.index_of(T21).unwrap(), c.index_of(XI1).unwrap());
        assert_eq!(c.structure(t12, t21), &[(xi, rat(-1))]);
        assert_eq!(c.structure(xi, t12), &[(t12, rat(-2))]);
    }

    #[test]
    fn module_bracket_is_compatible_with_component_bracket() {
        let c = LieContext::new(3, CoeffRing::Gl).unwrap();
        let a = c.element(p("x11*x23", 3), GeneratorId::Theta(1, 2)).unwrap().add(&c.element(p("x32", 3), XI1).unwrap());
        let b = c.element(p("x21^2", 3), GeneratorId::Theta(3, 1)).unwrap();
        let lhs = c.to_vector_field(&c.bracket(&a, &b));
        let rhs = adjointfields::bracket(&c.to_vector_field(&a), &c.to_vector_field(&b)).unwrap();
        assert_eq!(lhs, rhs);

        let s = ctx(3);
        let a = s.element(p("x11*x22", 3), GeneratorId::Theta(2, 3)).unwrap();
        let b = s.element(p("x13", 3), GeneratorId::Xi(2)).unwrap();
        let lhs = s.to_vector_field(&s.bracket(&a, &b)).substitute_trace();
        let rhs = adjointfields::bracket(&s.to_vector_field(&a), &s.to_vector_field(&b)).unwrap().substitute_trace();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn seed_examples() {
        let s2 = build_seeds(&ctx(2));
        assert!(s2.contains(&p("x21", 2), T12));
        assert!(s2.contains(&p("x11", 2), T12));
        assert!(!s2.contains(&p("x12", 2), T12));
        assert!(s2.contains(&Polynomial::one(2), XI1));
        let s3 = build_seeds(&ctx(3));
        assert!(s3.contains(&p("x21*x31", 3), T12));
        let c = ctx(3);
        for s in &s3.seeds {
            let k = c.index_of(s.generator).unwrap();
            assert!(c.derive(k, &c.derive(k, &s.coeff)).is_zero());
        }
    }

    #[test]
    fn vectorize_round_trips() {
        let c = ctx(3);
        let e = c.element(p("2*x11*x21 - x32^2", 3), GeneratorId::Theta(1, 3)).unwrap();
        let basis = c.ring.slice(3, 2);
        let v = e.vectorize(&basis).unwrap();
        assert_eq!(ModuleElement::unvectorize(&v, &basis, 3, 8), e);
        assert!(c.element(p("x11", 3), T12).unwrap().vectorize(&basis).is_err());

        let f = adjointfields::scale_field(&p("x21", 3), &T12.field(3).unwrap()).unwrap();
        let fv = vectorize_field(&f, 2).unwrap();
        assert_eq!(fv.len(), 6);
        assert_eq!(unvectorize_field(&fv, 3, 2), f);
        assert!(vectorize_field(&VectorField::zero(3), 1).unwrap().is_empty());
        assert!(matches!(vectorize_field(&f, 1), Err(Error::Grading(_))));
    }

    #[test]
    fn closure_low_degrees() {
        let c = ctx(2);
        let seeds = build_seeds(&c);
        let r = closure(&c, &seeds, &ClosureConfig::new(1)).unwrap();
        assert!(r.complete);
        assert_eq!(r.spans[&0].rank(), 3);
        assert!(r.spans[&1].contains_term(&c, &p("x12", 2), T12).unwrap());
        assert!(r.spans[&1].is_full());
        assert!(r.spans[&1].contains(&ModuleElement::zero(2, 3)).unwrap());

        let c3 = ctx(3);
        let r3 = closure(&c3, &build_seeds(&c3), &ClosureConfig::new(2)).unwrap();
        assert!(r3.spans[&1].contains_term(&c3, &p("x11", 3), XI1).unwrap());
        assert!(r3.spans[&2].contains_term(&c3, &p("x12^2", 3), T12).unwrap());
    }

    #[test]
    fn seed_order_does_not_change_the_span() {
        let c = ctx(2);
        let seeds = build_seeds(&c);
        let a = closure(&c, &seeds, &ClosureConfig::new(2)).unwrap();
        let b = closure(&c, &shuffled(&seeds, 9), &ClosureConfig::new(2)).unwrap();
        for d in 0..=2 {
            assert_eq!(a.spans[&d].rank(), b.spans[&d].rank());
            for e in b.spans[&d].elements() {
                assert!(a.spans[&d].contains(e).unwrap());
            }
        }
    }

    #[test]
    fn budget_yields_partial_result() {
        let c = ctx(3);
        let mut cfg = ClosureConfig::new(3);
        cfg.budget.max_brackets = Some(10);
        let r = closure(&c, &build_seeds(&c), &cfg).unwrap();
        assert!(!r.complete);
        let rep = closure_report(&c, &r, 4).unwrap();
        assert!(rep.iter().any(|d| !d.full && !d.missing_witnesses.is_empty()));
    }

    #[test]
    fn degree_one_image_has_relations() {
        // The component-form image is smaller than the free-module span: ad(X)X = 0.
        let c = ctx(2);
        let r = closure(&c, &build_seeds(&c), &ClosureConfig::new(1)).unwrap();
        let span = &r.spans[&1];
        assert_eq!(span.rank(), 9);
        assert!(span.image_rank(&c).unwrap() < 9);
    }

    #[test]
    fn catalog_identities_that_hold_with_the_derivation_bracket() {
        for n in 2..=3 {
            for id in catalog(n, 8, 1) {
                if matches!(id, Identity::CrossTerm { .. }) {
                    assert!(verify_identity(&id, n).unwrap().passed, "{}", id.name(n));
                }
            }
        }
    }

    #[test]
    fn catalog_values_under_the_derivation_bracket() {
        let n = 3;
        let x12 = p("x12", n);
        let (lhs, _) = Identity::DegreeOne.sides(n).unwrap();
        let want = &sf(&p("x22", n), XI1).unwrap() + &sf(&x12, T12).unwrap();
        assert_eq!(lhs, want.scale(&rat(-1)));

        let r = verify_identity(&Identity::DegreeTwo, n).unwrap();
        assert_eq!(r.lhs_over_rhs.as_deref(), Some("1/3"));
        for d in 2..=5u32 {
            let (lhs, _) = Identity::Power(d).sides(n).unwrap();
            let c = 2 * (d as i64 * d as i64 - d as i64);
            assert_eq!(lhs, sf(&x12.pow(d + 1).scale(&rat(c)), T12).unwrap());
        }
        let f = p("x11*x21", n);
        let (lhs, _) = Identity::Hyperbolic(f.clone()).sides(n).unwrap();
        let t21f = adjointfields::apply(&T21.field(n).unwrap(), &f).unwrap();
        assert_eq!(lhs, &sf(&f, XI1).unwrap() + &sf(&t21f, T12).unwrap());
        let (lhs, rhs) = Identity::ShearDetour.sides(n).unwrap();
        assert_eq!(lhs, rhs.scale(&rat(-1)));
    }

    #[test]
    fn cross_image() {
        let r3 = verify_cross_image(3).unwrap();
        assert_eq!((r3.rank, r3.x12_in_span), (7, false));
        let r4 = verify_cross_image(4).unwrap();
        assert_eq!((r4.rank, r4.x12_in_span), (14, false));
        assert!(matches!(verify_cross_image(2), Err(Error::Precondition(_))));
    }
}
