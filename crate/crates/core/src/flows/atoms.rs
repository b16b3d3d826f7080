use serde::{Deserialize, Serialize};

use super::fibre::char_poly;
use super::matrix::{c, ComplexMatrix, MatrixJson, C64};
use crate::adjointfields::{apply, overshear_class, GeneratorId, OvershearClass};
use crate::error::{Error, Result};
use crate::polyring::Polynomial;

/// `ε(ζ) = (e^ζ − 1)/ζ`, entire with `ε(0) = 1`.
pub fn epsilon(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        // Σ_{k<8} ζ^k/(k+1)!
        let mut term = c(1.0, 0.0);
        let mut sum = term;
        for k in 1..8 {
            term = term * z / ((k + 1) as f64);
            sum += term;
        }
        return sum;
    }
    let (x, y) = (z.re, z.im);
    let half = (y / 2.0).sin();
    let em1 = c(x.exp_m1() * y.cos() - 2.0 * half * half, x.exp() * y.sin());
    em1 / z
}

/// `exp(s·B)·A·exp(−s·B)` for `B = E_ab` (exactly `I + s·E_ab`) or `B = H_a`.
pub fn generator_flow(g: GeneratorId, s: C64, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.n();
    g.validate(n)?;
    match g {
        GeneratorId::Theta(p, q) => {
            let (p, q) = (p - 1, q - 1);
            // (I + sE)A: row p += s·row q; then ·(I − sE): col q −= s·col p
            let mut m = a.clone();
            for j in 0..n {
                let v = m.get(p, j) + s * m.get(q, j);
                m.set(p, j, v);
            }
            for i in 0..n {
                let v = m.get(i, q) - s * m.get(i, p);
                m.set(i, q, v);
            }
            Ok(m)
        }
        GeneratorId::Xi(k) => {
            let h = |i: usize| -> f64 {
                if i + 1 == k {
                    1.0
                } else if i == k {
                    -1.0
                } else {
                    0.0
                }
            };
            let mut m = a.clone();
            for i in 0..n {
                for j in 0..n {
                    let w = h(i) - h(j);
                    if w != 0.0 {
                        let v = m.get(i, j) * (s * w).exp();
                        m.set(i, j, v);
                    }
                }
            }
            m.check_finite()?;
            Ok(m)
        }
    }
}

fn generator_matrix(g: GeneratorId, n: usize) -> ComplexMatrix {
    let mut b = ComplexMatrix::zeros(n);
    for (r, col, v) in g.matrix_entries() {
        b.set(r - 1, col - 1, c(v, 0.0));
    }
    b
}

/// `f(A)·[B, A]`, the value at `A` of the field `f·Θ_ab` or `f·Ξ_a`.
pub fn field_at_point(f: &Polynomial, g: GeneratorId, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.n();
    if f.n() != n {
        return Err(Error::DimensionMismatch { left: f.n(), right: n });
    }
    g.validate(n)?;
    let b = generator_matrix(g, n);
    Ok(b.commutator(a)?.scale(f.eval_complex(a.entries())))
}

/// Overshear `f·V` with `V²(f) = 0`, `V = Θ_ab` or `Ξ_a`.
///
/// `Ξ_a` acts diagonally on monomials, so `Ξ_a²(f) = 0` forces `Ξ_a(f) = 0`
/// and every accepted `Ξ_a` coefficient is a shear.
#[derive(Debug, Clone, PartialEq)]
pub struct Overshear {
    generator: GeneratorId,
    f: Polynomial,
    vf: Polynomial,
    class: OvershearClass,
}

impl Overshear {
    pub fn new(generator: GeneratorId, f: Polynomial) -> Result<Self> {
        let n = f.n();
        let field = generator.field(n)?;
        let class = overshear_class(&f, generator)?;
        if class == OvershearClass::Neither {
            return Err(Error::Precondition(format!(
                "{} is not an overshear coefficient for {}",
                f.format(),
                generator.label(n)
            )));
        }
        let vf = apply(&field, &f)?;
        Ok(Self { generator, f, vf, class })
    }

    pub fn generator(&self) -> GeneratorId {
        self.generator
    }

    pub fn coefficient(&self) -> &Polynomial {
        &self.f
    }

    pub fn class(&self) -> OvershearClass {
        self.class
    }

    /// Time-`t` flow `ψ_t(A) = exp(sB)·A·exp(−sB)` with `s = ε(t·(Vf)(A))·t·f(A)`.
    pub fn flow(&self, t: C64, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.n() != self.f.n() {
            return Err(Error::DimensionMismatch { left: self.f.n(), right: a.n() });
        }
        let s = self.flow_parameter(t, a);
        generator_flow(self.generator, s, a)
    }

    pub fn flow_parameter(&self, t: C64, a: &ComplexMatrix) -> C64 {
        let x = a.entries();
        let fa = self.f.eval_complex(x);
        match self.class {
            OvershearClass::Shear => t * fa,
            _ => epsilon(t * self.vf.eval_complex(x)) * t * fa,
        }
    }
}

/// Matrix Möbius map `γ·(A − αI)·(I − ᾱA)^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moebius {
    alpha: C64,
    gamma: C64,
}

impl Moebius {
    pub fn new(alpha: C64, gamma: C64) -> Result<Self> {
        if !(alpha.norm() < 1.0) {
            return Err(Error::Precondition(format!("|alpha| = {} must be < 1", alpha.norm())));
        }
        if (gamma.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(format!("|gamma| = {} must be 1", gamma.norm())));
        }
        Ok(Self { alpha, gamma })
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn gamma(&self) -> C64 {
        self.gamma
    }

    pub fn inverse(&self) -> Self {
        Self { alpha: -self.alpha * self.gamma, gamma: self.gamma.conj() }
    }

    pub fn apply_scalar(&self, z: C64) -> C64 {
        self.gamma * (z - self.alpha) / (c(1.0, 0.0) - self.alpha.conj() * z)
    }

    pub fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = a.n();
        let id = ComplexMatrix::identity(n);
        let num = a.try_sub(&ComplexMatrix::scalar(n, self.alpha))?;
        let den = id.try_sub(&a.scale(self.alpha.conj()))?;
        // num and den commute, so den^{-1}·num equals num·den^{-1}
        let q = den
            .solve(&num)
            .map_err(|e| Error::Numeric(format!("I - conj(alpha)·A is singular (input outside the ball?): {e}")))?;
        Ok(q.scale(self.gamma))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Overshear { map: Overshear, t: C64 },
    Moebius(Moebius),
    Transpose,
    Conjugate { g: ComplexMatrix, g_inv: ComplexMatrix },
}

impl Atom {
    pub fn overshear(generator: GeneratorId, f: Polynomial, t: C64) -> Result<Self> {
        Ok(Atom::Overshear { map: Overshear::new(generator, f)?, t })
    }

    pub fn moebius(alpha: C64, gamma: C64) -> Result<Self> {
        Ok(Atom::Moebius(Moebius::new(alpha, gamma)?))
    }

    pub fn conjugate(g: ComplexMatrix) -> Result<Self> {
        g.check_finite()?;
        let d = g.det();
        if (d - c(1.0, 0.0)).norm() >= 1e-10 {
            return Err(Error::Precondition(format!("conjugating matrix has det {d}, expected 1")));
        }
        let g_inv = g.inverse()?;
        Ok(Atom::Conjugate { g, g_inv })
    }

    pub fn is_fibre_preserving(&self) -> bool {
        !matches!(self, Atom::Moebius(_))
    }

    pub fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        let out = match self {
            Atom::Overshear { map, t } => map.flow(*t, a)?,
            Atom::Moebius(m) => m.apply(a)?,
            Atom::Transpose => a.transpose(),
            Atom::Conjugate { g, g_inv } => g.try_mul(a)?.try_mul(g_inv)?,
        };
        out.check_finite()?;
        Ok(out)
    }

    pub fn inverse(&self) -> Self {
        match self {
            Atom::Overshear { map, t } => Atom::Overshear { map: map.clone(), t: -*t },
            Atom::Moebius(m) => Atom::Moebius(m.inverse()),
            Atom::Transpose => Atom::Transpose,
            Atom::Conjugate { g, g_inv } => Atom::Conjugate { g: g_inv.clone(), g_inv: g.clone() },
        }
    }

    fn to_json(&self) -> AtomJson {
        let pair = |z: C64| [z.re, z.im];
        match self {
            Atom::Overshear { map, t } => match map.generator {
                GeneratorId::Theta(a, b) => {
                    AtomJson::Overshear { theta: Some([a, b]), xi: None, f: map.f.format(), t: pair(*t) }
                }
                GeneratorId::Xi(a) => AtomJson::Overshear { theta: None, xi: Some(a), f: map.f.format(), t: pair(*t) },
            },
            Atom::Moebius(m) => AtomJson::Moebius { alpha: pair(m.alpha), gamma: pair(m.gamma) },
            Atom::Transpose => AtomJson::Transpose {},
            Atom::Conjugate { g, .. } => AtomJson::Conjugate { g: g.to_json_value() },
        }
    }

    fn from_json(j: &AtomJson, n: usize) -> Result<Self> {
        let z = |p: &[f64; 2]| c(p[0], p[1]);
        match j {
            AtomJson::Overshear { theta, xi, f, t } => {
                let g = match (theta, xi) {
                    (Some([a, b]), None) => GeneratorId::Theta(*a, *b),
                    (None, Some(a)) => GeneratorId::Xi(*a),
                    _ => {
                        return Err(Error::Parse {
                            pos: 0,
                            msg: "overshear needs exactly one of \"theta\" or \"xi\"".into(),
                        })
                    }
                };
                Atom::overshear(g.validate(n)?, Polynomial::parse(f, n)?, z(t))
            }
            AtomJson::Moebius { alpha, gamma } => Atom::moebius(z(alpha), z(gamma)),
            AtomJson::Transpose {} => Ok(Atom::Transpose),
            AtomJson::Conjugate { g } => {
                let g = ComplexMatrix::from_json_value(g)?;
                if g.n() != n {
                    return Err(Error::DimensionMismatch { left: n, right: g.n() });
                }
                Atom::conjugate(g)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum AtomJson {
    Overshear {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<[usize; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        xi: Option<usize>,
        f: String,
        t: [f64; 2],
    },
    Moebius {
        alpha: [f64; 2],
        gamma: [f64; 2],
    },
    Transpose {},
    Conjugate {
        g: MatrixJson,
    },
}

/// Atoms applied left to right.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AutomorphismWord {
    pub atoms: Vec<Atom>,
}

impl AutomorphismWord {
    pub fn new(atoms: Vec<Atom>) -> Self {
        Self { atoms }
    }

    pub fn is_fibre_preserving(&self) -> bool {
        self.atoms.iter().all(Atom::is_fibre_preserving)
    }

    pub fn inverse(&self) -> Self {
        Self { atoms: self.atoms.iter().rev().map(Atom::inverse).collect() }
    }

    pub fn to_json(&self) -> String {
        let v: Vec<AtomJson> = self.atoms.iter().map(Atom::to_json).collect();
        serde_json::to_string(&v).expect("word serializes")
    }

    pub fn from_json(s: &str, n: usize) -> Result<Self> {
        let v: Vec<AtomJson> =
            serde_json::from_str(s).map_err(|e| Error::Parse { pos: e.column(), msg: e.to_string() })?;
        Ok(Self { atoms: v.iter().map(|a| Atom::from_json(a, n)).collect::<Result<_>>()? })
    }
}

pub fn apply_word(w: &AutomorphismWord, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut cur = a.clone();
    for atom in &w.atoms {
        cur = atom.apply(&cur)?;
    }
    Ok(cur)
}

/// Largest `|π_j(word(A)) − π_j(A)|`.
pub fn fibre_drift(w: &AutomorphismWord, a: &ComplexMatrix) -> Result<f64> {
    char_poly(&apply_word(w, a)?).max_distance(&char_poly(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::fibre::in_spectral_ball;

    fn x(n: usize, r: usize, col: usize) -> Polynomial {
        Polynomial::x(n, r, col)
    }

    fn sample2() -> ComplexMatrix {
        ComplexMatrix::from_rows(vec![vec![c(0.2, 0.1), c(-0.3, 0.2)], vec![c(0.4, -0.1), c(-0.1, 0.05)]]).unwrap()
    }

    #[test]
    fn epsilon_values() {
        assert_eq!(epsilon(c(0.0, 0.0)), c(1.0, 0.0));
        assert!((epsilon(c(1.0, 0.0)) - c(std::f64::consts::E - 1.0, 0.0)).norm() < 1e-15);
        for z in [c(1e-4, 2e-4), c(0.3, -2.0), c(-5.0, 1.0), c(2e-3, 0.0), c(9.9e-4, 0.0)] {
            let lhs = epsilon(-z) * z.exp();
            let rhs = epsilon(z);
            assert!((lhs - rhs).norm() <= 1e-14 * rhs.norm(), "{z}");
        }
        // both sides of the series/closed-form switch against the real expm1 oracle
        for x in [1e-9f64, 3e-4, 0.999_999e-3, 1e-3, 1.000_001e-3, 0.2, -0.7, 12.0] {
            let want = x.exp_m1() / x;
            let got = epsilon(c(x, 0.0));
            assert!((got.re - want).abs() <= 1e-14 * want.abs() && got.im == 0.0, "{x}");
        }
    }

    #[test]
    fn shear_example() {
        let a = sample2();
        let t = c(0.7, -0.2);
        let atom = Atom::overshear(GeneratorId::Theta(1, 2), x(2, 2, 1), t).unwrap();
        let s = t * a.get(1, 0);
        let mut m = ComplexMatrix::identity(2);
        m.set(0, 1, s);
        let mut minv = ComplexMatrix::identity(2);
        minv.set(0, 1, -s);
        let want = m.try_mul(&a).unwrap().try_mul(&minv).unwrap();
        assert!(atom.apply(&a).unwrap().distance(&want).unwrap() < 1e-15);
    }

    #[test]
    fn overshear_example_closed_form() {
        // s = (e^{t·a21} − 1)·a11/a21
        let a = sample2();
        let t = c(0.5, 0.3);
        let o = Overshear::new(GeneratorId::Theta(1, 2), x(2, 1, 1)).unwrap();
        assert_eq!(o.class(), OvershearClass::Overshear);
        let a11 = a.get(0, 0);
        let a21 = a.get(1, 0);
        let s = ((t * a21).exp() - c(1.0, 0.0)) * a11 / a21;
        assert!((o.flow_parameter(t, &a) - s).norm() < 1e-15);
        let want = generator_flow(GeneratorId::Theta(1, 2), s, &a).unwrap();
        assert!(o.flow(t, &a).unwrap().distance(&want).unwrap() < 1e-15);
    }

    #[test]
    fn zero_time_is_identity() {
        let a = sample2();
        let o = Overshear::new(GeneratorId::Theta(2, 1), x(2, 2, 2)).unwrap();
        assert_eq!(o.flow(c(0.0, 0.0), &a).unwrap(), a);
    }

    #[test]
    fn invalid_atoms() {
        assert!(matches!(
            Atom::overshear(GeneratorId::Theta(1, 2), x(2, 1, 2), c(1.0, 0.0)),
            Err(Error::Precondition(_))
        ));
        assert!(Atom::overshear(GeneratorId::Theta(1, 1), Polynomial::one(2), c(1.0, 0.0)).is_err());
        assert!(Atom::moebius(c(1.0, 0.0), c(1.0, 0.0)).is_err());
        assert!(Atom::moebius(c(0.1, 0.0), c(1.1, 0.0)).is_err());
        assert!(Atom::conjugate(ComplexMatrix::identity(2).scale(c(2.0, 0.0))).is_err());
    }

    #[test]
    fn xi_shears_only() {
        // x11·x22 is Ξ1-invariant, x11 is not and Ξ1 has no proper overshears
        let f = &x(2, 1, 1) * &x(2, 2, 2);
        let o = Overshear::new(GeneratorId::Xi(1), f).unwrap();
        assert_eq!(o.class(), OvershearClass::Shear);
        assert!(Overshear::new(GeneratorId::Xi(1), x(2, 1, 2)).is_err());
    }

    #[test]
    fn moebius_examples() {
        let a = sample2();
        let id = Moebius::new(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!(id.apply(&a).unwrap().distance(&a).unwrap() < 1e-15);
        let m = Moebius::new(c(0.3, -0.2), C64::from_polar(1.0, 0.4)).unwrap();
        let z = m.apply(&ComplexMatrix::zeros(2)).unwrap();
        let want = ComplexMatrix::scalar(2, -m.gamma() * m.alpha());
        assert!(z.distance(&want).unwrap() < 1e-15);
        let back = m.inverse().apply(&m.apply(&a).unwrap()).unwrap();
        assert!(back.distance(&a).unwrap() < 1e-12);
        for w in [c(0.5, 0.1), c(-0.2, 0.7)] {
            assert!((m.inverse().apply_scalar(m.apply_scalar(w)) - w).norm() < 1e-14);
        }
    }

    #[test]
    fn moebius_rotation_scales_fibre() {
        let a = sample2();
        let g = C64::from_polar(1.0, 1.1);
        let m = Moebius::new(c(0.0, 0.0), g).unwrap();
        let p0 = char_poly(&a);
        let p1 = char_poly(&m.apply(&a).unwrap());
        for j in 0..2 {
            assert!((p1.pi[j] - p0.pi[j] * g.powu(j as u32 + 1)).norm() < 1e-10);
        }
    }

    #[test]
    fn words() {
        let a = sample2();
        assert_eq!(apply_word(&AutomorphismWord::default(), &a).unwrap(), a);
        let tt = AutomorphismWord::new(vec![Atom::Transpose, Atom::Transpose]);
        assert_eq!(apply_word(&tt, &a).unwrap(), a);
        let g = ComplexMatrix::from_rows(vec![vec![c(1.0, 0.0), c(0.5, 0.5)], vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
        let w = AutomorphismWord::new(vec![
            Atom::overshear(GeneratorId::Theta(1, 2), x(2, 1, 1), c(0.3, 0.0)).unwrap(),
            Atom::Transpose,
            Atom::conjugate(g).unwrap(),
            Atom::overshear(GeneratorId::Theta(2, 1), &x(2, 1, 2) * &x(2, 1, 2), c(-0.4, 0.2)).unwrap(),
        ]);
        assert!(w.is_fibre_preserving());
        assert!(fibre_drift(&w, &a).unwrap() < 1e-10);
        let back = apply_word(&w.inverse(), &apply_word(&w, &a).unwrap()).unwrap();
        assert!(back.distance(&a).unwrap() < 1e-12);
        let with_m = AutomorphismWord::new(vec![Atom::moebius(c(0.4, 0.1), c(0.0, 1.0)).unwrap(), Atom::Transpose]);
        assert!(in_spectral_ball(&apply_word(&with_m, &a).unwrap()).unwrap());
    }

    #[test]
    fn word_json_round_trip() {
        let s = r#"[{"overshear":{"theta":[1,2],"f":"x11","t":[0.3,0.0]}},{"moebius":{"alpha":[0.2,0.1],"gamma":[1,0]}},{"transpose":{}},{"overshear":{"xi":1,"f":"x12*x21","t":[0.1,0.0]}},{"conjugate":{"g":[[[1,0],[2,0]],[[0,0],[1,0]]]}}]"#;
        let w = AutomorphismWord::from_json(s, 2).unwrap();
        assert_eq!(w.atoms.len(), 5);
        let again = AutomorphismWord::from_json(&w.to_json(), 2).unwrap();
        assert_eq!(again, w);
        assert!(AutomorphismWord::from_json(r#"[{"overshear":{"theta":[1,1],"f":"1","t":[0,0]}}]"#, 2).is_err());
        assert!(AutomorphismWord::from_json(r#"[{"rotate":{}}]"#, 2).is_err());
        assert!(AutomorphismWord::from_json(r#"[{"overshear":{"theta":[1,2],"f":"x12","t":[1,0]}}]"#, 2).is_err());
    }

    #[test]
    fn field_at_point_examples() {
        let e21 = ComplexMatrix::elementary(2, 2, 1).unwrap();
        let v = field_at_point(&Polynomial::one(2), GeneratorId::Theta(1, 2), &e21).unwrap();
        assert_eq!(v, ComplexMatrix::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]));
        let a = sample2();
        let v1 = field_at_point(&x(2, 2, 1), GeneratorId::Theta(1, 2), &a).unwrap();
        let mut a2 = a.clone();
        a2.set(1, 0, a.get(1, 0) * 2.0);
        let v2 = field_at_point(&x(2, 2, 1), GeneratorId::Theta(1, 2), &a2).unwrap();
        let base = field_at_point(&Polynomial::one(2), GeneratorId::Theta(1, 2), &a2).unwrap();
        assert!(v2.distance(&base.scale(a.get(1, 0) * 2.0)).unwrap() < 1e-15);
        assert!(v1.frobenius_norm() > 0.0);
    }
}
