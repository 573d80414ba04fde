//! Complex linear algebra used throughout the solver.

pub mod dense;
pub mod factor;
pub mod gmres;
pub mod mtx;
pub mod sparse;

pub use dense::{hermitian_generalized_eig, GeneralizedEigen};
pub use factor::{factorize, Factorization};
pub use gmres::{gmres, GmresConfig, NormMode};
pub use sparse::{ComplexSparseMatrix, CsrMatrix, RealSparseMatrix, Scalar, SparsityPattern};

use crate::c64;

/// Hermitian inner product `y^H x`.
pub fn dot(x: &[c64], y: &[c64]) -> c64 {
    x.iter().zip(y).map(|(a, b)| b.conj() * a).sum()
}

pub fn norm2(x: &[c64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: c64, x: &[c64], y: &mut [c64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(x: &[c64], y: &[c64]) -> Vec<c64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn add(x: &[c64], y: &[c64]) -> Vec<c64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}
