use std::sync::Arc;

use num_complex::Complex64;

use super::atoms::{generator_flow, Overshear};
use super::matrix::{c, ComplexMatrix};
use crate::adjointfields::GeneratorId;
use crate::error::{Error, Result};
use crate::polyring::Polynomial;

/// A family `t ↦ A_t` of maps on matrices with `A_0 = id` (real times).
pub trait Algorithm: Send + Sync {
    fn eval(&self, t: f64, a: &ComplexMatrix) -> Result<ComplexMatrix>;
}

pub type AlgorithmRef = Arc<dyn Algorithm>;

pub struct IdentityFlow;

impl Algorithm for IdentityFlow {
    fn eval(&self, _t: f64, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(a.clone())
    }
}

/// Exact flow of an overshear field `f·V`.
pub struct FieldFlow(pub Overshear);

impl FieldFlow {
    pub fn new(generator: GeneratorId, f: Polynomial) -> Result<Self> {
        Ok(Self(Overshear::new(generator, f)?))
    }

    /// Flow of the generator field itself (`f = 1`).
    pub fn generator(generator: GeneratorId, n: usize) -> Result<Self> {
        Self::new(generator, Polynomial::one(n))
    }
}

impl Algorithm for FieldFlow {
    fn eval(&self, t: f64, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.0.flow(c(t, 0.0), a)
    }
}

/// `φ_t ∘ ψ_t`: `second` is applied first.
pub struct SumAlgorithm {
    first: AlgorithmRef,
    second: AlgorithmRef,
}

impl Algorithm for SumAlgorithm {
    fn eval(&self, t: f64, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.first.eval(t, &self.second.eval(t, a)?)
    }
}

/// `ψ_{−s} ∘ φ_{−s} ∘ ψ_s ∘ φ_s` with `s = √t`; negative `t` swaps the
/// roles of the two flows.
pub struct BracketAlgorithm {
    phi: AlgorithmRef,
    psi: AlgorithmRef,
}

impl BracketAlgorithm {
    /// The group commutator at signed root time `s`, for any real `s`.
    pub fn commutator_at(&self, s: f64, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        commutator(&*self.phi, &*self.psi, s, a)
    }
}

fn commutator(phi: &dyn Algorithm, psi: &dyn Algorithm, s: f64, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let x = phi.eval(s, a)?;
    let x = psi.eval(s, &x)?;
    let x = phi.eval(-s, &x)?;
    psi.eval(-s, &x)
}

impl Algorithm for BracketAlgorithm {
    fn eval(&self, t: f64, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        let s = t.abs().sqrt();
        if t >= 0.0 {
            commutator(&*self.phi, &*self.psi, s, a)
        } else {
            commutator(&*self.psi, &*self.phi, s, a)
        }
    }
}

/// Algorithm for `Θ + Ξ` from algorithms for `Θ` (`phi`) and `Ξ` (`psi`).
pub fn algorithm_sum(phi: AlgorithmRef, psi: AlgorithmRef) -> AlgorithmRef {
    Arc::new(SumAlgorithm { first: phi, second: psi })
}

/// Algorithm for the bracket of the fields behind `phi` and `psi`.
pub fn algorithm_bracket(phi: AlgorithmRef, psi: AlgorithmRef) -> AlgorithmRef {
    Arc::new(BracketAlgorithm { phi, psi })
}

/// `n_steps` applications of `alg` with step `t / n_steps`.
pub fn iterate_algorithm(alg: &dyn Algorithm, t: f64, n_steps: usize, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if n_steps == 0 {
        return Err(Error::Precondition("n_steps must be >= 1".into()));
    }
    let h = t / n_steps as f64;
    let mut cur = a.clone();
    for step in 0..n_steps {
        cur = alg.eval(h, &cur)?;
        if !cur.is_finite() {
            return Err(Error::Numeric(format!("iteration diverged at step {}", step + 1)));
        }
    }
    Ok(cur)
}

/// Symmetric second difference `(C(s) + C(−s) − 2A) / (2s²)` of the group
/// commutator, an `O(s²)` estimate of the bracket field at `A`.
pub fn bracket_derivative(phi: &dyn Algorithm, psi: &dyn Algorithm, a: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    let plus = commutator(phi, psi, s, a)?;
    let minus = commutator(phi, psi, -s, a)?;
    let two_a = a.scale(c(2.0, 0.0));
    Ok(plus.try_add(&minus)?.try_sub(&two_a)?.scale(c(1.0 / (2.0 * s * s), 0.0)))
}

/// Central difference `(ψ_h(A) − ψ_{−h}(A)) / 2h`.
pub fn central_difference(alg: &dyn Algorithm, a: &ComplexMatrix, h: f64) -> Result<ComplexMatrix> {
    let p = alg.eval(h, a)?;
    let m = alg.eval(-h, a)?;
    Ok(p.try_sub(&m)?.scale(Complex64::new(1.0 / (2.0 * h), 0.0)))
}

/// Forward difference `(ψ_h(A) − A) / h`.
pub fn forward_difference(alg: &dyn Algorithm, a: &ComplexMatrix, h: f64) -> Result<ComplexMatrix> {
    Ok(alg.eval(h, a)?.try_sub(a)?.scale(Complex64::new(1.0 / h, 0.0)))
}

/// Exact flow of `Θ_ab + Θ_ba`: conjugation by `exp(t(E_ab + E_ba))`, whose
/// restriction to the `{a, b}` block is `[[cosh t, sinh t], [sinh t, cosh t]]`.
pub fn symmetric_pair_flow(a_idx: usize, b_idx: usize, t: f64, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.n();
    GeneratorId::Theta(a_idx, b_idx).validate(n)?;
    let (p, q) = (a_idx - 1, b_idx - 1);
    let mut g = ComplexMatrix::identity(n);
    let mut gi = ComplexMatrix::identity(n);
    let (ch, sh) = (t.cosh(), t.sinh());
    for (m, sgn) in [(&mut g, 1.0), (&mut gi, -1.0)] {
        m.set(p, p, c(ch, 0.0));
        m.set(q, q, c(ch, 0.0));
        m.set(p, q, c(sgn * sh, 0.0));
        m.set(q, p, c(sgn * sh, 0.0));
    }
    g.try_mul(a)?.try_mul(&gi)
}

/// Conjugation by `exp(s·B)` for a single generator with real time.
pub fn generator_flow_real(g: GeneratorId, s: f64, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    generator_flow(g, c(s, 0.0), a)
}

/// Errors `‖iterate(alg, t, N) − reference‖` for each `N` in `steps`.
pub fn convergence_errors(
    alg: &dyn Algorithm,
    t: f64,
    steps: &[usize],
    a: &ComplexMatrix,
    reference: &ComplexMatrix,
) -> Result<Vec<f64>> {
    steps.iter().map(|&k| iterate_algorithm(alg, t, k, a)?.distance(reference)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjointfields::{bracket, GeneratorId as G};
    use crate::flows::atoms::field_at_point;

    fn sample2() -> ComplexMatrix {
        ComplexMatrix::from_rows(vec![vec![c(0.2, 0.1), c(-0.3, 0.2)], vec![c(0.4, -0.1), c(-0.1, 0.05)]]).unwrap()
    }

    fn flow(g: G, n: usize) -> AlgorithmRef {
        Arc::new(FieldFlow::generator(g, n).unwrap())
    }

    #[test]
    fn sum_with_identity_is_the_flow() {
        let a = sample2();
        let phi = flow(G::Theta(1, 2), 2);
        let alg = algorithm_sum(phi.clone(), Arc::new(IdentityFlow));
        for t in [-0.7, 0.0, 0.3, 1.5] {
            assert_eq!(alg.eval(t, &a).unwrap(), phi.eval(t, &a).unwrap());
        }
    }

    #[test]
    fn exact_flow_iterates_to_itself() {
        let a = sample2();
        let phi = FieldFlow::new(G::Theta(1, 2), Polynomial::x(2, 1, 1)).unwrap();
        let once = phi.eval(0.8, &a).unwrap();
        for k in [1, 2, 5, 16] {
            let it = iterate_algorithm(&phi, 0.8, k, &a).unwrap();
            assert!(it.distance(&once).unwrap() < 1e-13, "k = {k}");
        }
        assert!(iterate_algorithm(&phi, 0.8, 0, &a).is_err());
    }

    #[test]
    fn commuting_bracket_is_higher_order() {
        // Θ12 and Θ13 commute for n = 3
        let a = ComplexMatrix::from_rows(vec![
            vec![c(0.1, 0.0), c(0.2, 0.1), c(0.0, 0.3)],
            vec![c(-0.2, 0.0), c(0.3, -0.1), c(0.1, 0.0)],
            vec![c(0.05, 0.05), c(0.0, 0.0), c(-0.2, 0.1)],
        ])
        .unwrap();
        let alg = algorithm_bracket(flow(G::Theta(1, 2), 3), flow(G::Theta(1, 3), 3));
        for t in [1e-2, 1e-4] {
            let d = alg.eval(t, &a).unwrap().distance(&a).unwrap();
            assert!(d < 1e-12 + 10.0 * t.powf(1.5), "t = {t}: {d}");
        }
    }

    #[test]
    fn bracket_derivative_is_the_field_bracket() {
        let a = sample2();
        let phi = FieldFlow::generator(G::Theta(1, 2), 2).unwrap();
        let psi = FieldFlow::generator(G::Theta(2, 1), 2).unwrap();
        let est = bracket_derivative(&phi, &psi, &a, 1e-3).unwrap();
        let b = bracket(&G::Theta(1, 2).field(2).unwrap(), &G::Theta(2, 1).field(2).unwrap()).unwrap();
        let vals = b.eval_complex(a.entries());
        let want = ComplexMatrix::from_row_major(2, vals).unwrap();
        assert!(est.distance(&want).unwrap() < 1e-5);
        let xi = field_at_point(&Polynomial::one(2), G::Xi(1), &a).unwrap();
        assert!(est.try_add(&xi).unwrap().frobenius_norm() < 1e-5);
    }

    #[test]
    fn negative_time_swaps_roles() {
        let a = sample2();
        let phi = flow(G::Theta(1, 2), 2);
        let psi = flow(G::Theta(2, 1), 2);
        let ab = algorithm_bracket(phi.clone(), psi.clone());
        let ba = algorithm_bracket(psi, phi);
        assert_eq!(ab.eval(-0.04, &a).unwrap(), ba.eval(0.04, &a).unwrap());
    }

    #[test]
    fn sum_algorithm_converges_to_symmetric_flow() {
        let a = sample2();
        let alg = algorithm_sum(flow(G::Theta(1, 2), 2), flow(G::Theta(2, 1), 2));
        let reference = symmetric_pair_flow(1, 2, 0.1, &a).unwrap();
        let errs = convergence_errors(&*alg, 0.1, &[8, 16, 32, 64, 128], &a, &reference).unwrap();
        for w in errs.windows(2) {
            assert!(w[1] < w[0] + 1e-12);
            assert!((w[0] / w[1] - 2.0).abs() < 0.1, "first order: {errs:?}");
        }
    }

    #[test]
    fn symmetric_pair_flow_derivative() {
        let a = sample2();
        let h = 1e-5;
        let p = symmetric_pair_flow(1, 2, h, &a).unwrap();
        let m = symmetric_pair_flow(1, 2, -h, &a).unwrap();
        let d = p.try_sub(&m).unwrap().scale(c(0.5 / h, 0.0));
        let e12 = field_at_point(&Polynomial::one(2), G::Theta(1, 2), &a).unwrap();
        let e21 = field_at_point(&Polynomial::one(2), G::Theta(2, 1), &a).unwrap();
        assert!(d.distance(&e12.try_add(&e21).unwrap()).unwrap() < 1e-9);
    }
}
