//! Computational toolkit for the adjoint vector fields on `M_n(C)`, the
//! Lie-bracket generation of polynomial fibre-preserving fields, kernel
//! growth of degree-preserving derivations, and numeric automorphisms of the
//! spectral ball.

pub mod adjointfields;
pub mod cli;
pub mod error;
pub mod flows;
pub mod kernelgrowth;
pub mod liegen;
pub mod linalg;
pub mod polyring;

pub use error::{Error, Result};
