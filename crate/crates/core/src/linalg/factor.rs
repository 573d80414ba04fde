//! Sparse LU factorizations backed by faer.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::linalg::LuError;
use faer::{Mat, MatMut};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::{CsrMatrix, Scalar};
use crate::{c64, MsgfemError, Result};

/// Solution growth beyond which a factorization is treated as numerically singular.
const SINGULAR_GROWTH: f64 = 1e14;

/// A factorized square sparse matrix.
pub struct Factorization {
    n: usize,
    lu: Option<Lu<usize, c64>>,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("n", &self.n).finish()
    }
}

/// Factorizes `a`, failing with [`MsgfemError::SingularMatrix`] when it is
/// structurally or numerically singular.
pub fn factorize<T: Scalar>(a: &CsrMatrix<T>) -> Result<Factorization> {
    if a.nrows() != a.ncols() {
        return Err(MsgfemError::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Factorization { n, lu: None });
    }
    let csc = a.to_faer();
    let singular = |e: LuError| match e {
        LuError::SymbolicSingular { index } => {
            MsgfemError::SingularMatrix(format!("no pivot available at step {index}"))
        }
        LuError::Generic(err) => MsgfemError::SingularMatrix(format!("{err:?}")),
    };
    let symbolic = SymbolicLu::try_new(csc.symbolic()).map_err(|e| MsgfemError::SingularMatrix(format!("{e:?}")))?;
    let lu = Lu::try_new_with_symbolic(symbolic, csc.as_ref()).map_err(singular)?;
    let f = Factorization { n, lu: Some(lu) };
    f.probe_singularity(a.max_abs())?;
    Ok(f)
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    fn probe_singularity(&self, a_max: f64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let b: Vec<c64> = (0..self.n).map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let b_max = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let x = self.solve(&b);
        let x_max = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if !x_max.is_finite() || a_max * x_max > SINGULAR_GROWTH * b_max {
            return Err(MsgfemError::SingularMatrix(format!(
                "solution growth {:.3e} exceeds threshold",
                a_max * x_max / b_max
            )));
        }
        Ok(())
    }

    pub fn solve(&self, b: &[c64]) -> Vec<c64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [c64]) {
        assert_eq!(x.len(), self.n, "solve dimension mismatch");
        if let Some(lu) = &self.lu {
            let mat = MatMut::from_column_major_slice_mut(x, self.n, 1);
            lu.solve_in_place(mat);
        }
    }

    /// Solves with the plain transpose `A^T x = b`.
    pub fn solve_transpose_in_place(&self, x: &mut [c64]) {
        assert_eq!(x.len(), self.n, "solve dimension mismatch");
        if let Some(lu) = &self.lu {
            let mat = MatMut::from_column_major_slice_mut(x, self.n, 1);
            lu.solve_transpose_in_place(mat);
        }
    }

    /// Solves for every column of `rhs` in place.
    pub fn solve_mat_in_place(&self, rhs: &mut Mat<c64>) {
        assert_eq!(rhs.nrows(), self.n, "solve dimension mismatch");
        if let Some(lu) = &self.lu {
            lu.solve_in_place(rhs.as_mut());
        }
    }
}
