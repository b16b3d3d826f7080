use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use specball::adjointfields::{self, compare_with_golden_sl3, emit_tables, render_tables_text, GeneratorId};
use specball::flows::{self, AutomorphismWord, ComplexMatrix, C64};
use specball::kernelgrowth::{brute_force_records, jet_inequality, jordan_blocks_theta12, LinearDerivation};
use specball::liegen::{self, build_seeds, closure, closure_report, ClosureConfig, CoeffRing, LieContext};
use specball::linalg::RankPolicy;
use specball::polyring::{Polynomial, VarIndex};
use specball::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numeric(_) => PyArithmeticError::new_err(e.to_string()),
        Error::Resource(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

type Rows = Vec<Vec<C64>>;

fn matrix(rows: Rows) -> PyResult<ComplexMatrix> {
    ComplexMatrix::from_rows(rows).map_err(to_py)
}

fn rows(m: &ComplexMatrix) -> Rows {
    (0..m.n()).map(|i| (0..m.n()).map(|j| m.get(i, j)).collect()).collect()
}

fn ring(name: &str) -> PyResult<CoeffRing> {
    match name {
        "sl" => Ok(CoeffRing::Sl),
        "gl" => Ok(CoeffRing::Gl),
        _ => Err(PyValueError::new_err(format!("unknown ring '{name}', expected 'sl' or 'gl'"))),
    }
}

/// Polynomial with rational coefficients in the entries `x_kl` of an `n×n` matrix.
#[pyclass(name = "Polynomial", module = "specball_py")]
struct PyPolynomial {
    inner: Polynomial,
}

#[pymethods]
impl PyPolynomial {
    #[new]
    fn new(text: &str, n: usize) -> PyResult<Self> {
        Ok(Self { inner: Polynomial::parse(text, n).map_err(to_py)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn degree(&self) -> Option<u32> {
        self.inner.degree()
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    /// Partial derivative by `x_{row,col}` (1-based).
    fn diff(&self, row: usize, col: usize) -> PyResult<Self> {
        let v = VarIndex::checked(row, col, self.inner.n()).map_err(to_py)?;
        Ok(Self { inner: self.inner.diff(v.flat(self.inner.n())) })
    }

    fn eval(&self, rows_: Rows) -> PyResult<C64> {
        let m = matrix(rows_)?;
        if m.n() != self.inner.n() {
            return Err(to_py(Error::DimensionMismatch { left: self.inner.n(), right: m.n() }));
        }
        Ok(self.inner.eval_complex(m.entries()))
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.try_add(&other.inner).map_err(to_py)? })
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.try_sub(&other.inner).map_err(to_py)? })
    }

    fn __mul__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.try_mul(&other.inner).map_err(to_py)? })
    }

    fn __pow__(&self, e: u32, _modulo: Option<u32>) -> Self {
        Self { inner: self.inner.pow(e) }
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __str__(&self) -> String {
        self.inner.format()
    }

    fn __repr__(&self) -> String {
        format!("Polynomial('{}', n={})", self.inner.format(), self.inner.n())
    }
}

/// Polynomial vector field on `M_n`.
#[pyclass(name = "VectorField", module = "specball_py")]
struct PyVectorField {
    inner: adjointfields::VectorField,
}

#[pymethods]
impl PyVectorField {
    /// Field of a basis generator such as `"Theta12"` or `"Xi1"`.
    #[staticmethod]
    fn generator(label: &str, n: usize) -> PyResult<Self> {
        let g = GeneratorId::parse(label, n).map_err(to_py)?;
        Ok(Self { inner: g.field(n).map_err(to_py)? })
    }

    /// `f · V`.
    fn scaled(&self, f: &PyPolynomial) -> PyResult<Self> {
        Ok(Self { inner: adjointfields::scale_field(&f.inner, &self.inner).map_err(to_py)? })
    }

    /// Derivation commutator `self∘other − other∘self`.
    fn bracket(&self, other: &Self) -> PyResult<Self> {
        Ok(Self { inner: adjointfields::bracket(&self.inner, &other.inner).map_err(to_py)? })
    }

    fn apply(&self, p: &PyPolynomial) -> PyResult<PyPolynomial> {
        Ok(PyPolynomial { inner: adjointfields::apply(&self.inner, &p.inner).map_err(to_py)? })
    }

    fn divergence(&self) -> PyPolynomial {
        PyPolynomial { inner: adjointfields::divergence(&self.inner) }
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.try_add(&other.inner).map_err(to_py)? })
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.try_sub(&other.inner).map_err(to_py)? })
    }

    fn __neg__(&self) -> Self {
        Self { inner: self.inner.scale(&specball::polyring::rat(-1)) }
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __str__(&self) -> String {
        self.inner.format_terms()
    }

    fn __repr__(&self) -> String {
        format!("VectorField({})", self.inner.format_terms())
    }
}

/// Text rendering of the generator fields and their action on linear monomials.
#[pyfunction]
fn tables_text(n: usize) -> PyResult<String> {
    render_tables_text(&emit_tables(n).map_err(to_py)?).map_err(to_py)
}

/// True when the computed `n = 3` tables match the embedded reference copy.
#[pyfunction]
fn golden_tables_match() -> PyResult<bool> {
    Ok(compare_with_golden_sl3().map_err(to_py)?.passed())
}

/// `(id, passed, lhs_over_rhs)` for each identity of the bracket catalog.
#[pyfunction]
#[pyo3(signature = (n, samples = 8, seed = 0))]
fn verify_identities(n: usize, samples: usize, seed: u64) -> PyResult<Vec<(String, bool, Option<String>)>> {
    let reports = liegen::verify_catalog(n, samples, seed).map_err(to_py)?;
    Ok(reports.into_iter().map(|r| (r.id, r.passed, r.lhs_over_rhs)).collect())
}

/// `(degree, rank, target_rank, full)` per degree of the bracket closure.
#[pyfunction]
#[pyo3(signature = (n, max_degree, ring_name = "sl"))]
fn closure_ranks(py: Python<'_>, n: usize, max_degree: u32, ring_name: &str) -> PyResult<Vec<(u32, usize, usize, bool)>> {
    let r = ring(ring_name)?;
    py.detach(|| {
        let ctx = LieContext::new(n, r)?;
        let seeds = build_seeds(&ctx);
        let res = closure(&ctx, &seeds, &ClosureConfig::new(max_degree))?;
        closure_report(&ctx, &res, 0)
    })
    .map(|reports| reports.into_iter().map(|d| (d.degree, d.achieved_rank, d.target_rank, d.full)).collect())
    .map_err(to_py)
}

/// `(rank, target_rank, x12_in_span)` of the cross-image span.
#[pyfunction]
fn cross_image(n: usize) -> PyResult<(usize, usize, bool)> {
    let r = liegen::verify_cross_image(n).map_err(to_py)?;
    Ok((r.rank, r.target_rank, r.x12_in_span))
}

/// `(m, dim ker V, dim ker V²)` on homogeneous slices, `m = 0..=m_max`.
#[pyfunction]
fn kernel_dims(py: Python<'_>, generator: &str, n: usize, m_max: u32) -> PyResult<Vec<(u32, usize, usize)>> {
    let g = GeneratorId::parse(generator, n).map_err(to_py)?;
    let d = LinearDerivation::from_field(&g.field(n).map_err(to_py)?).map_err(to_py)?;
    let recs = py.detach(|| brute_force_records(&d, m_max, &RankPolicy::default())).map_err(to_py)?;
    Ok(recs.into_iter().map(|r| (r.m, r.dim_ker, r.dim_ker_sq)).collect())
}

#[pyfunction]
fn theta12_jordan_blocks(n: usize) -> PyResult<Vec<usize>> {
    jordan_blocks_theta12(n).map_err(to_py)
}

/// Rows `(m, lhs, rhs, holds)` and the threshold from which the inequality holds.
#[pyfunction]
fn jet_table(py: Python<'_>, n: usize, k: u64, m_max: u32) -> PyResult<(Vec<(u32, String, String, bool)>, Option<u32>)> {
    let t = py.detach(|| jet_inequality(n, k, m_max, &RankPolicy::default())).map_err(to_py)?;
    Ok((t.rows.into_iter().map(|r| (r.m, r.lhs, r.rhs, r.holds)).collect(), t.threshold))
}

/// `(π_1, …, π_n)` of a square complex matrix.
#[pyfunction]
fn char_poly(a: Rows) -> PyResult<Vec<C64>> {
    Ok(flows::char_poly(&matrix(a)?).pi)
}

#[pyfunction]
fn spectral_radius(a: Rows) -> PyResult<f64> {
    flows::spectral_radius(&matrix(a)?).map_err(to_py)
}

#[pyfunction]
fn in_spectral_ball(a: Rows) -> PyResult<bool> {
    flows::in_spectral_ball(&matrix(a)?).map_err(to_py)
}

#[pyfunction]
fn epsilon(z: C64) -> C64 {
    flows::epsilon(z)
}

/// Time-`t` map of the overshear `f · generator`.
#[pyfunction]
fn overshear_flow(generator: &str, f: &str, t: C64, a: Rows) -> PyResult<Rows> {
    let m = matrix(a)?;
    let n = m.n();
    let g = GeneratorId::parse(generator, n).map_err(to_py)?;
    let f = Polynomial::parse(f, n).map_err(to_py)?;
    let o = flows::Overshear::new(g, f).map_err(to_py)?;
    Ok(rows(&o.flow(t, &m).map_err(to_py)?))
}

#[pyfunction]
fn moebius(alpha: C64, gamma: C64, a: Rows) -> PyResult<Rows> {
    let mo = flows::Moebius::new(alpha, gamma).map_err(to_py)?;
    Ok(rows(&mo.apply(&matrix(a)?).map_err(to_py)?))
}

/// Applies a JSON automorphism word left to right.
#[pyfunction]
fn apply_word(word_json: &str, a: Rows) -> PyResult<Rows> {
    let m = matrix(a)?;
    let w = AutomorphismWord::from_json(word_json, m.n()).map_err(to_py)?;
    Ok(rows(&flows::apply_word(&w, &m).map_err(to_py)?))
}

/// Seeded random matrix with spectral radius below `0.9`.
#[pyfunction]
#[pyo3(signature = (n, seed = 0))]
fn random_ball_matrix(n: usize, seed: u64) -> Rows {
    rows(&flows::random_ball_matrix(&mut flows::rng_from_seed(seed), n))
}

#[pymodule]
fn specball_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPolynomial>()?;
    m.add_class::<PyVectorField>()?;
    m.add_function(wrap_pyfunction!(tables_text, m)?)?;
    m.add_function(wrap_pyfunction!(golden_tables_match, m)?)?;
    m.add_function(wrap_pyfunction!(verify_identities, m)?)?;
    m.add_function(wrap_pyfunction!(closure_ranks, m)?)?;
    m.add_function(wrap_pyfunction!(cross_image, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_dims, m)?)?;
    m.add_function(wrap_pyfunction!(theta12_jordan_blocks, m)?)?;
    m.add_function(wrap_pyfunction!(jet_table, m)?)?;
    m.add_function(wrap_pyfunction!(char_poly, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_radius, m)?)?;
    m.add_function(wrap_pyfunction!(in_spectral_ball, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(overshear_flow, m)?)?;
    m.add_function(wrap_pyfunction!(moebius, m)?)?;
    m.add_function(wrap_pyfunction!(apply_word, m)?)?;
    m.add_function(wrap_pyfunction!(random_ball_matrix, m)?)?;
    Ok(())
}
