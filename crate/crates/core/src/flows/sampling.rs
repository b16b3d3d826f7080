use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::atoms::{Atom, AutomorphismWord};
use super::matrix::{c, ComplexMatrix, C64};
use crate::adjointfields::GeneratorId;
use crate::error::Result;
use crate::liegen::{build_seeds, CoeffRing, LieContext};
use crate::polyring::Polynomial;

pub const BALL_SAMPLE_RADIUS: f64 = 0.9;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_disc<R: Rng>(rng: &mut R, radius: f64) -> C64 {
    let r = radius * rng.gen::<f64>().sqrt();
    C64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
}

fn gaussian<R: Rng>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed unitary via Gram–Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for q in &cols {
                let dot: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= dot * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    let mut q = ComplexMatrix::zeros(n);
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            q.set(i, j, *z);
        }
    }
    q
}

/// `Q·T·Q*` with `T` upper triangular, eigenvalues uniform in the disc of
/// radius `0.9` and strictly upper entries uniform in `[−off, off]²`.
pub fn random_ball_matrix_with<R: Rng>(rng: &mut R, n: usize, off: f64) -> ComplexMatrix {
    let mut t = ComplexMatrix::zeros(n);
    for i in 0..n {
        t.set(i, i, uniform_disc(rng, BALL_SAMPLE_RADIUS));
        for j in i + 1..n {
            t.set(i, j, c(rng.gen_range(-off..=off), rng.gen_range(-off..=off)));
        }
    }
    let q = random_unitary(rng, n);
    q.try_mul(&t).and_then(|m| m.try_mul(&q.adjoint())).expect("square")
}

pub fn random_ball_matrix<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    random_ball_matrix_with(rng, n, 0.5)
}

/// Overshear and shear coefficients of degree at most two, per `Θ_ab`.
pub fn overshear_catalog(n: usize) -> Result<Vec<(GeneratorId, Polynomial)>> {
    let ctx = LieContext::new(n, CoeffRing::Gl)?;
    let seeds = build_seeds(&ctx);
    Ok(seeds
        .seeds
        .into_iter()
        .filter(|s| matches!(s.generator, GeneratorId::Theta(..)))
        .map(|s| (s.generator, s.coeff))
        .collect())
}

pub struct AtomSampler {
    n: usize,
    catalog: Vec<(GeneratorId, Polynomial)>,
    max_time: f64,
}

impl AtomSampler {
    pub fn new(n: usize, max_time: f64) -> Result<Self> {
        Ok(Self { n, catalog: overshear_catalog(n)?, max_time })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn catalog(&self) -> &[(GeneratorId, Polynomial)] {
        &self.catalog
    }

    pub fn overshear_parts<R: Rng>(&self, rng: &mut R) -> (GeneratorId, Polynomial) {
        self.catalog[rng.gen_range(0..self.catalog.len())].clone()
    }

    pub fn overshear<R: Rng>(&self, rng: &mut R) -> Result<Atom> {
        let (g, f) = self.overshear_parts(rng);
        Atom::overshear(g, f, uniform_disc(rng, self.max_time))
    }

    pub fn moebius<R: Rng>(&self, rng: &mut R) -> Result<Atom> {
        let alpha = uniform_disc(rng, 0.5);
        let gamma = C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        Atom::moebius(alpha, gamma)
    }

    /// Product of two elementary unipotent matrices, so `det G = 1` exactly.
    pub fn conjugate<R: Rng>(&self, rng: &mut R) -> Result<Atom> {
        let n = self.n;
        let mut g = ComplexMatrix::identity(n);
        for _ in 0..2 {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let mut e = ComplexMatrix::identity(n);
            e.set(a, b, uniform_disc(rng, 1.0));
            g = g.try_mul(&e)?;
        }
        Atom::conjugate(g)
    }

    pub fn atom<R: Rng>(&self, rng: &mut R, allow_moebius: bool) -> Result<Atom> {
        let k = rng.gen_range(0..if allow_moebius { 4 } else { 3 });
        match k {
            0 => self.overshear(rng),
            1 => self.conjugate(rng),
            2 => Ok(Atom::Transpose),
            _ => self.moebius(rng),
        }
    }

    pub fn word<R: Rng>(&self, rng: &mut R, len: usize, allow_moebius: bool) -> Result<AutomorphismWord> {
        Ok(AutomorphismWord::new((0..len).map(|_| self.atom(rng, allow_moebius)).collect::<Result<_>>()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::fibre::spectral_radius;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = rng_from_seed(3);
        for n in 1..6 {
            let q = random_unitary(&mut rng, n);
            let qq = q.adjoint().try_mul(&q).unwrap();
            assert!(qq.distance(&ComplexMatrix::identity(n)).unwrap() < 1e-13);
        }
    }

    #[test]
    fn samples_are_in_the_ball_and_deterministic() {
        let mut rng = rng_from_seed(11);
        for n in 1..6 {
            for _ in 0..20 {
                let a = random_ball_matrix(&mut rng, n);
                assert!(spectral_radius(&a).unwrap() < BALL_SAMPLE_RADIUS + 1e-9);
            }
        }
        let a = random_ball_matrix(&mut rng_from_seed(5), 3);
        let b = random_ball_matrix(&mut rng_from_seed(5), 3);
        assert_eq!(a, b);
    }

    #[test]
    fn catalog_contents() {
        let cat = overshear_catalog(2).unwrap();
        assert!(cat.contains(&(GeneratorId::Theta(1, 2), Polynomial::x(2, 1, 1))));
        assert!(cat.contains(&(GeneratorId::Theta(1, 2), Polynomial::one(2))));
        assert!(!cat.iter().any(|(g, f)| *g == GeneratorId::Theta(1, 2) && *f == Polynomial::x(2, 1, 2)));
    }
}
