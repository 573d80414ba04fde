//! Dense Hermitian generalized eigenproblems.

use faer::{Mat, Side};

use crate::{c64, MsgfemError, Result};

/// Eigenvalues of `M` below this fraction of the largest one are deflated.
pub const DEFLATION_TOLERANCE: f64 = 1e-12;

/// Solution of `A x = lambda M x` restricted to the range of `M`.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    /// Eigenvalues in decreasing order.
    pub values: Vec<f64>,
    /// `M`-orthonormal eigenvectors, one per column, matching `values`.
    pub vectors: Mat<c64>,
}

/// Solves `A x = lambda M x` for Hermitian `A` and Hermitian positive
/// semidefinite `M`.
///
/// `M` is diagonalized as `Q diag(s) Q^H`; directions with
/// `s <= DEFLATION_TOLERANCE * max(s)` are dropped, and the reduced Hermitian
/// problem `W^H A W` with `W = Q_+ diag(s_+)^{-1/2}` is solved densely.
pub fn hermitian_generalized_eig(a: &Mat<c64>, m: &Mat<c64>) -> Result<GeneralizedEigen> {
    let n = a.nrows();
    if a.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(MsgfemError::DimensionMismatch { expected: n, found: m.nrows() });
    }
    if n == 0 {
        return Ok(GeneralizedEigen { values: Vec::new(), vectors: Mat::zeros(0, 0) });
    }
    let m_h = hermitian_part(m);
    let eig_m = m_h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| MsgfemError::InvalidParameter(format!("eigensolver failed: {e:?}")))?;
    let s = eig_m.S();
    let q = eig_m.U();
    let s_max = (0..n).map(|i| s[i].re).fold(0.0, f64::max);
    if !(s_max > 0.0) {
        return Ok(GeneralizedEigen { values: Vec::new(), vectors: Mat::zeros(n, 0) });
    }
    let kept: Vec<usize> = (0..n).filter(|&i| s[i].re > DEFLATION_TOLERANCE * s_max).collect();
    let r = kept.len();
    let w = Mat::<c64>::from_fn(n, r, |i, j| q[(i, kept[j])] * (1.0 / s[kept[j]].re.sqrt()));
    let reduced = hermitian_part(&(w.adjoint() * a * &w));
    let eig = reduced
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| MsgfemError::InvalidParameter(format!("eigensolver failed: {e:?}")))?;
    let vals = eig.S();
    let y = eig.U();
    // faer returns ascending order
    let values: Vec<f64> = (0..r).rev().map(|i| vals[i].re).collect();
    let y_desc = Mat::<c64>::from_fn(r, r, |i, j| y[(i, r - 1 - j)]);
    let vectors = &w * &y_desc;
    Ok(GeneralizedEigen { values, vectors })
}

/// `(X + X^H) / 2`
pub fn hermitian_part(x: &Mat<c64>) -> Mat<c64> {
    Mat::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] + x[(j, i)].conj()) * 0.5)
}
