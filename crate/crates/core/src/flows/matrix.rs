use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex64::new(re, im)
}

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![c(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = c(1.0, 0.0);
        }
        m
    }

    pub fn scalar(n: usize, z: C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = z;
        }
        m
    }

    /// `E_ab` with 1-based indices.
    pub fn elementary(n: usize, a: usize, b: usize) -> Result<Self> {
        if a == 0 || b == 0 || a > n || b > n {
            return Err(Error::VarOutOfRange { row: a, col: b, n });
        }
        let mut m = Self::zeros(n);
        m.data[(a - 1) * n + (b - 1)] = c(1.0, 0.0);
        Ok(m)
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &z) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = z;
        }
        m
    }

    pub fn from_row_major(n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { left: n * n, right: data.len() });
        }
        let m = Self { n, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { left: n, right: row.len() });
            }
            data.extend(row);
        }
        Self::from_row_major(n, data)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| c(x, 0.0)).collect()).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entries in row-major order, matching the flat variable layout of the
    /// polynomial ring.
    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    /// 0-based access.
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.n + j] = z;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Numeric("matrix has non-finite entries".into()))
        }
    }

    fn same_size(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_size(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { n: self.n, data })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.same_size(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { n: self.n, data })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_size(other)?;
        let n = self.n;
        let mut out = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == c(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(Self { n, data: out })
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|a| a * z).collect() }
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[j * n + i] = self.data[i * n + j];
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = self.transpose();
        for z in &mut m.data {
            *z = z.conj();
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.try_sub(other)?.frobenius_norm())
    }

    fn lu(&self) -> Result<(Vec<C64>, Vec<usize>, bool)> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd = false;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm()))
                .unwrap_or(k);
            if a[p * n + k].norm() <= 1e-14 * scale {
                return Err(Error::Numeric(format!("singular matrix (pivot {} at column {k})", a[p * n + k].norm())));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                odd = !odd;
            }
            let piv = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / piv;
                a[i * n + k] = l;
                for j in k + 1..n {
                    let u = a[k * n + j];
                    a[i * n + j] -= l * u;
                }
            }
        }
        Ok((a, perm, odd))
    }

    /// Solves `self · X = rhs`.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        self.same_size(rhs)?;
        let n = self.n;
        let (lu, perm, _) = self.lu()?;
        let mut x = Self::zeros(n);
        for col in 0..n {
            let mut y: Vec<C64> = (0..n).map(|i| rhs.data[perm[i] * n + col]).collect();
            for i in 0..n {
                for k in 0..i {
                    let t = lu[i * n + k] * y[k];
                    y[i] -= t;
                }
            }
            for i in (0..n).rev() {
                for k in i + 1..n {
                    let t = lu[i * n + k] * y[k];
                    y[i] -= t;
                }
                y[i] /= lu[i * n + i];
            }
            for i in 0..n {
                x.data[i * n + col] = y[i];
            }
        }
        x.check_finite()?;
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Self> {
        self.solve(&Self::identity(self.n))
    }

    pub fn det(&self) -> C64 {
        match self.lu() {
            Ok((lu, _, odd)) => {
                let d: C64 = (0..self.n).map(|i| lu[i * self.n + i]).product();
                if odd { -d } else { d }
            }
            Err(_) => c(0.0, 0.0),
        }
    }

    pub fn to_json_value(&self) -> MatrixJson {
        MatrixJson(
            (0..self.n)
                .map(|i| (0..self.n).map(|j| { let z = self.get(i, j); [z.re, z.im] }).collect())
                .collect(),
        )
    }

    pub fn from_json_value(m: &MatrixJson) -> Result<Self> {
        Self::from_rows(m.0.iter().map(|r| r.iter().map(|p| c(p[0], p[1])).collect()).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("matrix serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: MatrixJson =
            serde_json::from_str(s).map_err(|e| Error::Parse { pos: e.column(), msg: e.to_string() })?;
        Self::from_json_value(&m)
    }
}

/// JSON layout: array of rows, each entry a `[re, im]` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(pub Vec<Vec<[f64; 2]>>);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_inverse() {
        let a = ComplexMatrix::from_rows(vec![
            vec![c(2.0, 1.0), c(0.5, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(3.0, 0.5), c(0.2, 0.0)],
        ])
        .unwrap();
        let inv = a.inverse().unwrap();
        let id = a.try_mul(&inv).unwrap();
        assert!(id.distance(&ComplexMatrix::identity(3)).unwrap() < 1e-13);
        let d = a.det();
        let expected = {
            // cofactor expansion along the second row
            let m = |i: usize, j: usize| a.get(i, j);
            -(m(0, 0) * m(2, 1) - m(0, 1) * m(2, 0))
        };
        assert!((d - expected).norm() < 1e-13);
    }

    #[test]
    fn singular_is_error() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(a.inverse(), Err(Error::Numeric(_))));
    }

    #[test]
    fn json_round_trip() {
        let a = ComplexMatrix::from_rows(vec![vec![c(1.0, -2.0), c(0.0, 0.5)], vec![c(3.0, 0.0), c(-1.0, 1.0)]]).unwrap();
        let s = a.to_json();
        assert_eq!(s, "[[[1.0,-2.0],[0.0,0.5]],[[3.0,0.0],[-1.0,1.0]]]");
        assert_eq!(ComplexMatrix::from_json(&s).unwrap(), a);
        assert!(ComplexMatrix::from_json("[[[1,0]],[[1,0]]]").is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(ComplexMatrix::from_row_major(1, vec![c(f64::NAN, 0.0)]).is_err());
    }
}
