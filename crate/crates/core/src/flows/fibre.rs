use serde::{Deserialize, Serialize};

use super::matrix::{c, ComplexMatrix, C64};
use crate::error::{Error, Result};

const ABERTH_MAX_ITER: usize = 200;
const ABERTH_TOL: f64 = 1e-13;

/// `(π_1, …, π_n)` with `χ_A(λ) = λⁿ + Σ (−1)ʲ π_j λ^{n−j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FibreCoordinates {
    pub pi: Vec<C64>,
}

impl FibreCoordinates {
    pub fn n(&self) -> usize {
        self.pi.len()
    }

    /// Monic characteristic polynomial, highest degree first.
    pub fn monic_coeffs(&self) -> Vec<C64> {
        let mut out = vec![c(1.0, 0.0)];
        for (j, p) in self.pi.iter().enumerate() {
            out.push(if (j + 1) % 2 == 0 { *p } else { -*p });
        }
        out
    }

    pub fn from_roots(roots: &[C64]) -> Self {
        // elementary symmetric functions
        let mut e = vec![c(1.0, 0.0)];
        for &r in roots {
            e.push(c(0.0, 0.0));
            for j in (1..e.len()).rev() {
                let prev = e[j - 1];
                e[j] += prev * r;
            }
        }
        Self { pi: e[1..].to_vec() }
    }

    pub fn max_distance(&self, other: &Self) -> Result<f64> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch { left: self.n(), right: other.n() });
        }
        Ok(self.pi.iter().zip(&other.pi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

/// Faddeev–LeVerrier recursion.
pub fn char_poly(a: &ComplexMatrix) -> FibreCoordinates {
    let n = a.n();
    // coefficients of det(λI − A) = Σ c_k λ^k, c_n = 1
    let mut coeff = vec![c(0.0, 0.0); n + 1];
    coeff[n] = c(1.0, 0.0);
    let mut m = ComplexMatrix::zeros(n);
    for k in 1..=n {
        let mut next = a.try_mul(&m).expect("same size");
        for i in 0..n {
            let d = next.get(i, i) + coeff[n - k + 1];
            next.set(i, i, d);
        }
        let am = a.try_mul(&next).expect("same size");
        coeff[n - k] = -am.trace() / (k as f64);
        m = next;
    }
    let pi = (1..=n)
        .map(|j| {
            let cj = coeff[n - j];
            if j % 2 == 0 { cj } else { -cj }
        })
        .collect();
    FibreCoordinates { pi }
}

fn horner(coeffs: &[C64], z: C64) -> (C64, C64, f64) {
    let mut p = c(0.0, 0.0);
    let mut dp = c(0.0, 0.0);
    let mut bound = 0.0;
    let az = z.norm();
    for &a in coeffs {
        dp = dp * z + p;
        p = p * z + a;
        bound = bound * az + a.norm();
    }
    (p, dp, bound)
}

/// All roots of a polynomial (highest degree first) by Aberth–Ehrlich.
pub fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let lead = coeffs.iter().position(|z| *z != c(0.0, 0.0));
    let Some(lead) = lead else {
        return Err(Error::Numeric("zero polynomial has no finite root set".into()));
    };
    let mut p: Vec<C64> = coeffs[lead..].iter().map(|z| z / coeffs[lead]).collect();
    let mut roots = Vec::new();
    while p.len() > 1 && *p.last().unwrap() == c(0.0, 0.0) {
        p.pop();
        roots.push(c(0.0, 0.0));
    }
    let k = p.len() - 1;
    if k == 0 {
        return Ok(roots);
    }
    if k == 1 {
        roots.push(-p[1]);
        return Ok(roots);
    }
    let center = -p[1] / (k as f64);
    let radius = (1..=k).map(|i| p[i].norm().powf(1.0 / i as f64)).fold(0.0, f64::max).max(1e-3);
    let mut z: Vec<C64> = (0..k)
        .map(|j| {
            let ang = 2.0 * std::f64::consts::PI * j as f64 / k as f64 + 0.7;
            center + C64::from_polar(radius, ang)
        })
        .collect();
    let eps = f64::EPSILON;
    let mut done = vec![false; k];
    for _ in 0..ABERTH_MAX_ITER {
        let mut all = true;
        for i in 0..k {
            if done[i] {
                continue;
            }
            let (pv, dpv, bound) = horner(&p, z[i]);
            if pv.norm() <= 4.0 * eps * (k as f64) * bound {
                done[i] = true;
                continue;
            }
            let ratio = pv / dpv;
            let s: C64 = (0..k).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let corr = ratio / (c(1.0, 0.0) - ratio * s);
            if !(corr.re.is_finite() && corr.im.is_finite()) {
                return Err(Error::Numeric(format!("root iteration diverged at index {i}")));
            }
            z[i] -= corr;
            if corr.norm() <= ABERTH_TOL * z[i].norm().max(1.0) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all && done.iter().all(|&d| d) {
            roots.extend(z);
            return Ok(roots);
        }
    }
    let worst = z
        .iter()
        .map(|&zi| {
            let (pv, _, bound) = horner(&p, zi);
            pv.norm() / bound.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    Err(Error::Numeric(format!(
        "Aberth iteration did not converge in {ABERTH_MAX_ITER} steps (degree {k}, worst relative residual {worst:e})"
    )))
}

pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<C64>> {
    poly_roots(&char_poly(a).monic_coeffs())
}

pub fn spectral_radius(a: &ComplexMatrix) -> Result<f64> {
    a.check_finite()?;
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

pub fn in_spectral_ball(a: &ComplexMatrix) -> Result<bool> {
    Ok(spectral_radius(a)? < 1.0)
}

/// Schur–Cohn test: every root of the monic polynomial lies in the open
/// unit disc.
pub fn schur_cohn_stable(coeffs_high_first: &[C64]) -> bool {
    // ascending order: p(z) = Σ a_i z^i
    let mut a: Vec<C64> = coeffs_high_first.iter().rev().copied().collect();
    while a.len() > 1 {
        let k = a.len() - 1;
        let a0 = a[0];
        let ak = a[k];
        if a0.norm() >= ak.norm() {
            return false;
        }
        // conj(a_k)·p − a_0·p*, divided by z
        let next: Vec<C64> = (1..=k).map(|i| ak.conj() * a[i] - a0 * a[k - i].conj()).collect();
        a = next;
    }
    true
}

pub fn in_symmetrized_polydisc(p: &FibreCoordinates) -> bool {
    schur_cohn_stable(&p.monic_coeffs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn char_poly_examples() {
        assert_eq!(char_poly(&ComplexMatrix::zeros(3)).pi, vec![c(0.0, 0.0); 3]);
        assert_eq!(char_poly(&ComplexMatrix::identity(2)).pi, vec![c(2.0, 0.0), c(1.0, 0.0)]);
        let nil = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert_eq!(char_poly(&nil).pi, vec![c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn char_poly_matches_cofactor_oracle_3x3() {
        let a = ComplexMatrix::from_rows(vec![
            vec![c(1.0, 0.5), c(2.0, 0.0), c(-1.0, 0.0)],
            vec![c(0.3, 0.0), c(0.0, -1.0), c(4.0, 0.0)],
            vec![c(0.0, 0.0), c(1.5, 0.2), c(2.0, 0.0)],
        ])
        .unwrap();
        let m = |i: usize, j: usize| a.get(i, j);
        let tr = m(0, 0) + m(1, 1) + m(2, 2);
        let minors = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)
            + m(1, 1) * m(2, 2)
            - m(1, 2) * m(2, 1);
        let det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
        let pi = char_poly(&a).pi;
        assert!((pi[0] - tr).norm() < 1e-13);
        assert!((pi[1] - minors).norm() < 1e-13);
        assert!((pi[2] - det).norm() < 1e-12);
    }

    #[test]
    fn spectral_radius_examples() {
        let d = ComplexMatrix::diagonal(&[c(0.5, 0.0), c(-0.25, 0.0)]);
        assert!((spectral_radius(&d).unwrap() - 0.5).abs() < 1e-12);
        let nil = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert_eq!(spectral_radius(&nil).unwrap(), 0.0);
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 4.0], &[0.01, 0.0]]).unwrap();
        assert!((spectral_radius(&m).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn ball_and_polydisc_examples() {
        assert!(in_spectral_ball(&ComplexMatrix::zeros(2)).unwrap());
        assert!(!in_spectral_ball(&ComplexMatrix::diagonal(&[c(1.0, 0.0), c(0.0, 0.0)])).unwrap());
        let p = FibreCoordinates { pi: vec![c(0.0, 0.0), c(0.25, 0.0)] };
        assert!(in_symmetrized_polydisc(&p));
        let roots = poly_roots(&p.monic_coeffs()).unwrap();
        for r in roots {
            assert!((r.norm() - 0.5).abs() < 1e-13 && r.re.abs() < 1e-13);
        }
        let q = FibreCoordinates { pi: vec![c(0.0, 0.0), c(-1.0, 0.0)] };
        assert!(!in_symmetrized_polydisc(&q));
    }

    #[test]
    fn roots_of_known_polynomial() {
        let want = [c(0.3, 0.1), c(-0.7, 0.0), c(0.0, 0.9), c(0.2, -0.4), c(-0.1, -0.1)];
        let f = FibreCoordinates::from_roots(&want);
        let mut got = poly_roots(&f.monic_coeffs()).unwrap();
        for w in want {
            let (idx, d) = got
                .iter()
                .enumerate()
                .map(|(i, g)| (i, (g - w).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(d < 1e-12, "{w} off by {d}");
            got.remove(idx);
        }
    }

    fn arb_roots() -> impl Strategy<Value = Vec<C64>> {
        prop::collection::vec((-1.2f64..1.2, -1.2f64..1.2).prop_map(|(a, b)| c(a, b)), 1..7)
    }

    proptest! {
        #[test]
        fn schur_cohn_agrees_with_roots(roots in arb_roots()) {
            let margin = roots.iter().map(|r| (r.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min);
            prop_assume!(margin > 1e-6);
            let f = FibreCoordinates::from_roots(&roots);
            let inside = roots.iter().all(|r| r.norm() < 1.0);
            prop_assert_eq!(in_symmetrized_polydisc(&f), inside);
            let found = poly_roots(&f.monic_coeffs()).unwrap();
            let inside_found = found.iter().all(|r| r.norm() < 1.0);
            prop_assert_eq!(inside_found, inside);
        }
    }
}
