//! Fundamental vector fields of the adjoint action of `sl_n` on `M_n`.
//!
//! `Θ_ab` is the field `X ↦ [E_ab, X]` and `Ξ_a` the field `X ↦ [H_a, X]`
//! with `H_a = E_aa - E_{a+1,a+1}`. Fields are stored componentwise: the
//! component at `x_kl` is the coefficient of `∂/∂x_kl`.
//!
//! The bracket is the commutator of derivations, `[v, w](x) = v(w(x)) - w(v(x))`.
//! With this sign the map `M ↦ (X ↦ [M, X])` is an anti-homomorphism, so
//! `[Θ12, Θ21] = -Ξ1`; it is the sign produced by the flow commutator
//! `ψ_{-s} ∘ φ_{-s} ∘ ψ_s ∘ φ_s`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polyring::{parse_poly, rat, Monomial, Polynomial, VarIndex};

/// Basis element of `sl_n`: `E_ab` (`a != b`) or `H_a` (`1 <= a <= n-1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeneratorId {
    Theta(usize, usize),
    Xi(usize),
}

impl GeneratorId {
    pub fn validate(self, n: usize) -> Result<Self> {
        match self {
            GeneratorId::Theta(a, b) => {
                if a == b {
                    return Err(Error::InvalidGenerator(format!("Theta({a},{b}) requires a != b")));
                }
                if a == 0 || b == 0 || a > n || b > n {
                    return Err(Error::InvalidGenerator(format!("Theta({a},{b}) out of range for n = {n}")));
                }
            }
            GeneratorId::Xi(a) => {
                if a == 0 || a >= n {
                    return Err(Error::InvalidGenerator(format!("Xi({a}) requires 1 <= a <= {}", n.saturating_sub(1))));
                }
            }
        }
        Ok(self)
    }

    /// All `n^2 - 1` basis generators: `Θ_ab` in lexicographic order, then `Ξ_1 .. Ξ_{n-1}`.
    pub fn basis(n: usize) -> Vec<GeneratorId> {
        let mut out = Vec::with_capacity(n * n - 1);
        for a in 1..=n {
            for b in 1..=n {
                if a != b {
                    out.push(GeneratorId::Theta(a, b));
                }
            }
        }
        out.extend((1..n).map(GeneratorId::Xi));
        out
    }

    /// Vector field of this generator.
    pub fn field(self, n: usize) -> Result<VectorField> {
        match self.validate(n)? {
            GeneratorId::Theta(a, b) => make_theta(n, a, b),
            GeneratorId::Xi(a) => make_xi(n, a),
        }
    }

    /// The matrix `E_ab` or `H_a` as a dense row-major list of `(row, col, value)` entries.
    pub fn matrix_entries(self) -> Vec<(usize, usize, f64)> {
        match self {
            GeneratorId::Theta(a, b) => vec![(a, b, 1.0)],
            GeneratorId::Xi(a) => vec![(a, a, 1.0), (a + 1, a + 1, -1.0)],
        }
    }

    /// ASCII label: `Theta12`, `Xi1` (bracketed indices when `n >= 10`).
    pub fn label(self, n: usize) -> String {
        match self {
            GeneratorId::Theta(a, b) if n <= 9 => format!("Theta{a}{b}"),
            GeneratorId::Theta(a, b) => format!("Theta[{a},{b}]"),
            GeneratorId::Xi(a) => format!("Xi{a}"),
        }
    }

    /// Label in the notation of the printed tables: `Θ12`, `Ξ1`.
    pub fn symbol(self, n: usize) -> String {
        match self {
            GeneratorId::Theta(a, b) if n <= 9 => format!("Θ{a}{b}"),
            GeneratorId::Theta(a, b) => format!("Θ[{a},{b}]"),
            GeneratorId::Xi(a) => format!("Ξ{a}"),
        }
    }

    /// Parses `Theta12`, `theta[1,2]`, `Xi1`, `xi1`.
    pub fn parse(s: &str, n: usize) -> Result<GeneratorId> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || Error::InvalidGenerator(format!("cannot parse generator '{s}'"));
        let id = if let Some(rest) = t.strip_prefix("theta") {
            let (a, b) = parse_index_pair(rest).ok_or_else(bad)?;
            GeneratorId::Theta(a, b)
        } else if let Some(rest) = t.strip_prefix("xi") {
            GeneratorId::Xi(rest.parse().map_err(|_| bad())?)
        } else {
            return Err(bad());
        };
        id.validate(n)
    }
}

fn parse_index_pair(s: &str) -> Option<(usize, usize)> {
    if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        let (a, b) = inner.split_once(',')?;
        return Some((a.trim().parse().ok()?, b.trim().parse().ok()?));
    }
    let bytes = s.as_bytes();
    if bytes.len() == 2 && bytes.iter().all(u8::is_ascii_digit) {
        return Some(((bytes[0] - b'0') as usize, (bytes[1] - b'0') as usize));
    }
    None
}

/// Polynomial vector field on `M_n`, keyed by flat coordinate index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VectorField {
    n: usize,
    components: BTreeMap<usize, Polynomial>,
}

impl VectorField {
    pub fn zero(n: usize) -> Self {
        Self { n, components: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, v: VarIndex) -> Polynomial {
        self.components.get(&v.flat(self.n)).cloned().unwrap_or_else(|| Polynomial::zero(self.n))
    }

    /// Non-zero components as `(flat index, coefficient)` in index order.
    pub fn components(&self) -> impl Iterator<Item = (usize, &Polynomial)> {
        self.components.iter().map(|(k, p)| (*k, p))
    }

    pub fn add_component(&mut self, v: usize, p: &Polynomial) {
        let cur = self.components.remove(&v).unwrap_or_else(|| Polynomial::zero(self.n));
        let next = &cur + p;
        if !next.is_zero() {
            self.components.insert(v, next);
        }
    }

    pub fn from_components(n: usize, comps: impl IntoIterator<Item = (usize, Polynomial)>) -> Self {
        let mut f = Self::zero(n);
        for (v, p) in comps {
            f.add_component(v, &p);
        }
        f
    }

    fn check(&self, other_n: usize) -> Result<()> {
        if self.n != other_n {
            return Err(Error::DimensionMismatch { left: self.n, right: other_n });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &VectorField) -> Result<VectorField> {
        self.check(other.n)?;
        let mut out = self.clone();
        for (v, p) in &other.components {
            out.add_component(*v, p);
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &VectorField) -> Result<VectorField> {
        self.try_add(&other.scale(&rat(-1)))
    }

    pub fn scale(&self, c: &BigRational) -> VectorField {
        if c.is_zero() {
            return VectorField::zero(self.n);
        }
        let components = self.components.iter().map(|(v, p)| (*v, p.scale(c))).collect();
        VectorField { n: self.n, components }
    }

    /// `Some(d)` if every component is homogeneous of degree `d`.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut d = None;
        for p in self.components.values() {
            let e = p.homogeneous_degree()?;
            match d {
                None => d = Some(e),
                Some(x) if x != e => return None,
                _ => {}
            }
        }
        d
    }

    /// Applies the trace substitution to every component coefficient.
    pub fn substitute_trace(&self) -> VectorField {
        VectorField::from_components(self.n, self.components.iter().map(|(v, p)| (*v, p.substitute_trace())))
    }

    /// Component values at a point (flat row-major coordinates).
    pub fn eval_complex(&self, point: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n * self.n];
        for (v, p) in &self.components {
            out[*v] = p.eval_complex(point);
        }
        out
    }

    /// Expanded terms `(coefficient, monomial, component)` in table order.
    pub fn terms(&self) -> Vec<(BigRational, Monomial, usize)> {
        let mut out = Vec::new();
        for (v, p) in &self.components {
            for (m, c) in p.terms().rev() {
                out.push((c.clone(), m.clone(), *v));
            }
        }
        out
    }

    /// Table-style rendering: `+ x21 ∂11 - x11 ∂12 + ...`.
    pub fn format_terms(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let n = self.n;
        let parts: Vec<String> = self
            .terms()
            .into_iter()
            .map(|(c, m, v)| {
                let sign = if c.is_negative() { "-" } else { "+" };
                let a = c.abs();
                let coeff = if a == rat(1) { String::new() } else { format!("{a}") };
                let mono = if m.is_one() { String::new() } else { m.format(n) };
                let sep = if coeff.is_empty() || mono.is_empty() { "" } else { "*" };
                let d = VarIndex::from_flat(v, n);
                let dl = if n <= 9 { format!("∂{}{}", d.row, d.col) } else { format!("∂[{},{}]", d.row, d.col) };
                format!("{sign} {coeff}{sep}{mono} {dl}")
            })
            .collect();
        parts.join(" ")
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format_terms())
    }
}

impl std::ops::Add<&VectorField> for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        self.try_add(rhs).expect("fields over the same M_n")
    }
}

impl std::ops::Sub<&VectorField> for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        self.try_sub(rhs).expect("fields over the same M_n")
    }
}

/// `Θ_ab = Σ_k (x_bk ∂/∂x_ak - x_ka ∂/∂x_kb)`.
pub fn make_theta(n: usize, a: usize, b: usize) -> Result<VectorField> {
    GeneratorId::Theta(a, b).validate(n)?;
    let mut f = VectorField::zero(n);
    for k in 1..=n {
        f.add_component(VarIndex::new(a, k).flat(n), &Polynomial::x(n, b, k));
        f.add_component(VarIndex::new(k, b).flat(n), &-Polynomial::x(n, k, a));
    }
    Ok(f)
}

/// `Ξ_a = Σ_k (x_ak ∂_ak - x_{a+1,k} ∂_{a+1,k} - x_ka ∂_ka + x_{k,a+1} ∂_{k,a+1})`.
pub fn make_xi(n: usize, a: usize) -> Result<VectorField> {
    GeneratorId::Xi(a).validate(n)?;
    let mut f = VectorField::zero(n);
    for k in 1..=n {
        f.add_component(VarIndex::new(a, k).flat(n), &Polynomial::x(n, a, k));
        f.add_component(VarIndex::new(a + 1, k).flat(n), &-Polynomial::x(n, a + 1, k));
        f.add_component(VarIndex::new(k, a).flat(n), &-Polynomial::x(n, k, a));
        f.add_component(VarIndex::new(k, a + 1).flat(n), &Polynomial::x(n, k, a + 1));
    }
    Ok(f)
}

/// Derivation action `v(p) = Σ v_kl ∂p/∂x_kl`.
pub fn apply(v: &VectorField, p: &Polynomial) -> Result<Polynomial> {
    v.check(p.n())?;
    let mut out = Polynomial::zero(v.n);
    for (var, comp) in &v.components {
        let d = p.diff(*var);
        if !d.is_zero() {
            out = &out + &(comp * &d);
        }
    }
    Ok(out)
}

/// `v^k(p)`.
pub fn apply_power(v: &VectorField, p: &Polynomial, k: u32) -> Result<Polynomial> {
    let mut cur = p.clone();
    for _ in 0..k {
        cur = apply(v, &cur)?;
    }
    Ok(cur)
}

/// Lie bracket of derivations: component `kl` is `v(w_kl) - w(v_kl)`.
pub fn bracket(v: &VectorField, w: &VectorField) -> Result<VectorField> {
    v.check(w.n)?;
    let n = v.n;
    let mut keys: Vec<usize> = v.components.keys().chain(w.components.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let mut out = VectorField::zero(n);
    for k in keys {
        let wk = w.components.get(&k).cloned().unwrap_or_else(|| Polynomial::zero(n));
        let vk = v.components.get(&k).cloned().unwrap_or_else(|| Polynomial::zero(n));
        let c = &apply(v, &wk)? - &apply(w, &vk)?;
        out.add_component(k, &c);
    }
    Ok(out)
}

/// Componentwise product `p · v`.
pub fn scale_field(p: &Polynomial, v: &VectorField) -> Result<VectorField> {
    v.check(p.n())?;
    if p.is_zero() {
        return Ok(VectorField::zero(v.n));
    }
    Ok(VectorField::from_components(v.n, v.components.iter().map(|(k, c)| (*k, p * c))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OvershearClass {
    Shear,
    Overshear,
    Neither,
}

/// Shear if `Θ(f) = 0`, overshear if `Θ²(f) = 0` but `Θ(f) != 0`.
pub fn overshear_class(f: &Polynomial, g: GeneratorId) -> Result<OvershearClass> {
    let theta = g.field(f.n())?;
    let once = apply(&theta, f)?;
    if once.is_zero() {
        return Ok(OvershearClass::Shear);
    }
    if apply(&theta, &once)?.is_zero() {
        Ok(OvershearClass::Overshear)
    } else {
        Ok(OvershearClass::Neither)
    }
}

/// `div v = Σ ∂v_kl/∂x_kl`.
pub fn divergence(v: &VectorField) -> Polynomial {
    let mut out = Polynomial::zero(v.n);
    for (k, c) in &v.components {
        out = &out + &c.diff(*k);
    }
    out
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ComponentEntry {
    pub var: String,
    pub poly: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GeneratorRow {
    pub generator: String,
    pub components: Vec<ComponentEntry>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ActionTable {
    /// Column headers (generators).
    pub generators: Vec<String>,
    /// Row headers (linear monomials).
    pub monomials: Vec<String>,
    /// `entries[row][col]` = generator applied to monomial, as polynomial text.
    pub entries: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TablesReport {
    pub n: usize,
    pub fields: Vec<GeneratorRow>,
    pub action: ActionTable,
}

/// Generator fields and their action on linear monomials, in canonical text form.
pub fn emit_tables(n: usize) -> Result<TablesReport> {
    if !(2..=9).contains(&n) && n < 10 {
        return Err(Error::Precondition(format!("tables need n >= 2, got {n}")));
    }
    let gens = GeneratorId::basis(n);
    let mut fields = Vec::new();
    let mut gfields = Vec::new();
    for g in &gens {
        let f = g.field(n)?;
        let components = f
            .components()
            .map(|(v, p)| ComponentEntry { var: VarIndex::from_flat(v, n).label(n), poly: p.format() })
            .collect();
        fields.push(GeneratorRow { generator: g.label(n), components });
        gfields.push(f);
    }
    let mut entries = Vec::new();
    let mut monomials = Vec::new();
    for v in 0..n * n {
        let x = Polynomial::var(n, VarIndex::from_flat(v, n));
        monomials.push(VarIndex::from_flat(v, n).label(n));
        let row: Result<Vec<String>> = gfields.iter().map(|f| apply(f, &x).map(|p| p.format())).collect();
        entries.push(row?);
    }
    let action = ActionTable { generators: gens.iter().map(|g| g.label(n)).collect(), monomials, entries };
    Ok(TablesReport { n, fields, action })
}

/// Plain-text rendering mirroring the printed tables.
pub fn render_tables_text(report: &TablesReport) -> Result<String> {
    let n = report.n;
    let mut s = String::new();
    for g in GeneratorId::basis(n) {
        s.push_str(&format!("{} = {}\n", g.symbol(n), g.field(n)?.format_terms()));
    }
    s.push('\n');
    let gens: Vec<String> = GeneratorId::basis(n).iter().map(|g| g.symbol(n)).collect();
    s.push_str(&format!("{:>8} | {}\n", "", gens.iter().map(|g| format!("{g:>14}")).collect::<Vec<_>>().join(" ")));
    for (mono, row) in report.action.monomials.iter().zip(&report.action.entries) {
        s.push_str(&format!(
            "{:>8} | {}\n",
            mono,
            row.iter().map(|e| format!("{e:>14}")).collect::<Vec<_>>().join(" ")
        ));
    }
    Ok(s)
}

const GOLDEN_SL3_FIELDS: &str = include_str!("../data/sl3_fields.txt");
const GOLDEN_SL3_ACTION: &str = include_str!("../data/sl3_action.txt");

type TermMultiset = Vec<(BigRational, Monomial, usize)>;

fn parse_golden_field(line: &str, n: usize) -> Result<(GeneratorId, TermMultiset)> {
    let (name, body) = line
        .split_once('=')
        .ok_or_else(|| Error::Parse { pos: 0, msg: format!("golden line without '=': {line}") })?;
    let g = GeneratorId::parse(name, n)?;
    let mut terms = Vec::new();
    let toks: Vec<&str> = body.split_whitespace().collect();
    let mut i = 0;
    while i < toks.len() {
        // sign, monomial-with-coefficient, dKL
        let sign = match toks[i] {
            "+" => 1,
            "-" => -1,
            t => return Err(Error::Parse { pos: i, msg: format!("expected sign, got {t}") }),
        };
        let p = parse_poly(toks[i + 1], n)?;
        let d = toks[i + 2]
            .strip_prefix('d')
            .ok_or_else(|| Error::Parse { pos: i + 2, msg: "expected dKL".into() })?;
        let d = parse_index_pair(d).ok_or_else(|| Error::Parse { pos: i + 2, msg: "bad derivative index".into() })?;
        let var = VarIndex::checked(d.0, d.1, n)?.flat(n);
        for (m, c) in p.terms() {
            terms.push((c * rat(sign), m.clone(), var));
        }
        i += 3;
    }
    Ok((g, terms))
}

fn sorted(mut t: TermMultiset) -> TermMultiset {
    t.sort_by(|a, b| (a.2, &a.1, &a.0).cmp(&(b.2, &b.1, &b.0)));
    t
}

/// Outcome of comparing the computed `sl_3` tables against the embedded golden copy.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GoldenComparison {
    pub fields_checked: usize,
    pub action_entries_checked: usize,
    pub mismatches: Vec<String>,
}

impl GoldenComparison {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.fields_checked == 8 && self.action_entries_checked == 72
    }
}

/// Structural (term-multiset) comparison of the `n = 3` fields and action table with the golden data.
pub fn compare_with_golden_sl3() -> Result<GoldenComparison> {
    let n = 3;
    let mut mismatches = Vec::new();
    let mut fields_checked = 0;
    for line in GOLDEN_SL3_FIELDS.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (g, golden) = parse_golden_field(line, n)?;
        let computed = g.field(n)?.terms();
        if sorted(golden) != sorted(computed) {
            mismatches.push(format!("field {} differs", g.label(n)));
        }
        fields_checked += 1;
    }
    let mut lines = GOLDEN_SL3_ACTION.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header: Vec<GeneratorId> = lines
        .next()
        .ok_or_else(|| Error::Parse { pos: 0, msg: "empty action table".into() })?
        .split('|')
        .skip(1)
        .map(|s| GeneratorId::parse(s, n))
        .collect::<Result<_>>()?;
    let fields: Vec<VectorField> = header.iter().map(|g| g.field(n)).collect::<Result<_>>()?;
    let mut action_entries_checked = 0;
    for line in lines {
        let cells: Vec<&str> = line.split('|').map(str::trim).collect();
        let x = parse_poly(cells[0], n)?;
        for (j, cell) in cells[1..].iter().enumerate() {
            let golden = parse_poly(cell, n)?;
            let computed = apply(&fields[j], &x)?;
            if golden != computed {
                mismatches.push(format!("{}({}) = {} but golden has {}", header[j].label(n), cells[0], computed, golden));
            }
            action_entries_checked += 1;
        }
    }
    Ok(GoldenComparison { fields_checked, action_entries_checked, mismatches })
}
