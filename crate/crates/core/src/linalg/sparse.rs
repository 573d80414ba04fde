//! Compressed sparse row storage.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::{c64, MsgfemError, Result};

/// Scalar types storable in a [`CsrMatrix`].
pub trait Scalar:
    Copy
    + Debug
    + Zero
    + One
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Mul<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn to_c64(self) -> c64;
    fn modulus(self) -> f64;
    /// Product with a complex number, promoted to complex.
    fn mul_c64(self, z: c64) -> c64;
}

impl Scalar for f64 {
    #[inline]
    fn to_c64(self) -> c64 {
        c64::new(self, 0.0)
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn mul_c64(self, z: c64) -> c64 {
        z * self
    }
}

impl Scalar for c64 {
    #[inline]
    fn to_c64(self) -> c64 {
        self
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn mul_c64(self, z: c64) -> c64 {
        self * z
    }
}

/// Row-compressed sparsity structure with sorted, unique column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityPattern {
    nrows: usize,
    ncols: usize,
    offsets: Arc<[usize]>,
    indices: Arc<[usize]>,
}

impl SparsityPattern {
    /// Pattern of a finite-element matrix: every pair of nodes sharing an
    /// element is coupled. `elements` yields the node list of each element.
    pub fn from_elements<'a, I>(n: usize, elements: I) -> Self
    where
        I: IntoIterator<Item = &'a [usize]>,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for el in elements {
            for &a in el {
                rows[a].extend_from_slice(el);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut indices = Vec::new();
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            indices.extend_from_slice(row);
            offsets.push(indices.len());
            *row = Vec::new();
        }
        Self { nrows: n, ncols: n, offsets: offsets.into(), indices: indices.into() }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Position of `(row, col)` in the value array.
    #[inline]
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let (lo, hi) = (self.offsets[row], self.offsets[row + 1]);
        self.indices[lo..hi].binary_search(&col).ok().map(|p| lo + p)
    }

    pub fn zeros<T: Scalar>(&self) -> CsrMatrix<T> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            offsets: self.offsets.clone(),
            indices: self.indices.clone(),
            values: vec![T::zero(); self.indices.len()],
        }
    }
}

/// Sparse matrix in compressed sparse row format.
///
/// Invariants: `offsets` is nondecreasing with `offsets[nrows] == nnz`, and the
/// column indices of every row are strictly increasing. Matrices derived from
/// one another share their index arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    offsets: Arc<[usize]>,
    indices: Arc<[usize]>,
    values: Vec<T>,
}

pub type ComplexSparseMatrix = CsrMatrix<c64>;
pub type RealSparseMatrix = CsrMatrix<f64>;

impl<T: Scalar> CsrMatrix<T> {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut trip: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        for &(r, c, _) in &trip {
            if r >= nrows {
                return Err(MsgfemError::IndexOutOfRange { index: r, len: nrows });
            }
            if c >= ncols {
                return Err(MsgfemError::IndexOutOfRange { index: c, len: ncols });
            }
        }
        trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut offsets = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut values: Vec<T> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            offsets[i + 1] += offsets[i];
        }
        Ok(Self { nrows, ncols, offsets: offsets.into(), indices: indices.into(), values })
    }

    /// Builds a matrix from raw CSR arrays, validating the structural invariants.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        let m = Self { nrows, ncols, offsets: offsets.into(), indices: indices.into(), values };
        m.check_invariants()?;
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            offsets: (0..=n).collect::<Vec<_>>().into(),
            indices: (0..n).collect::<Vec<_>>().into(),
            values: vec![T::one(); n],
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        let bad = |msg: &str| Err(MsgfemError::InvalidParameter(format!("CSR invariant violated: {msg}")));
        if self.offsets.len() != self.nrows + 1 || self.offsets[0] != 0 {
            return bad("offsets length");
        }
        if self.offsets[self.nrows] != self.indices.len() || self.indices.len() != self.values.len() {
            return bad("nnz");
        }
        for r in 0..self.nrows {
            let (lo, hi) = (self.offsets[r], self.offsets[r + 1]);
            if lo > hi {
                return bad("offsets not monotone");
            }
            let row = &self.indices[lo..hi];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return bad("column indices not strictly increasing");
            }
            if row.last().is_some_and(|&c| c >= self.ncols) {
                return bad("column index out of range");
            }
        }
        Ok(())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => T::zero(),
        }
    }

    /// Adds `v` to an entry that already exists in the pattern.
    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: T) {
        let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
        let p = self.indices[lo..hi]
            .binary_search(&j)
            .unwrap_or_else(|_| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[lo + p] += v;
    }

    /// True when both matrices have identical structure.
    pub fn same_pattern<U>(&self, other: &CsrMatrix<U>) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && (Arc::ptr_eq(&self.indices, &other.indices) || (self.offsets == other.offsets && self.indices == other.indices))
    }

    pub fn pattern(&self) -> SparsityPattern {
        SparsityPattern {
            nrows: self.nrows,
            ncols: self.ncols,
            offsets: self.offsets.clone(),
            indices: self.indices.clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }

    /// `y = A x` for a complex vector `x`.
    pub fn mul_vec(&self, x: &[c64]) -> Vec<c64> {
        let mut y = vec![c64::new(0.0, 0.0); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[c64], y: &mut [c64]) {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        assert_eq!(y.len(), self.nrows, "matvec dimension mismatch");
        for (i, yi) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
            let mut acc = c64::new(0.0, 0.0);
            for p in lo..hi {
                acc += self.values[p].mul_c64(x[self.indices[p]]);
            }
            *yi = acc;
        }
    }

    /// `A X` for a dense matrix `X`.
    pub fn mul_dense(&self, x: &faer::Mat<c64>) -> faer::Mat<c64> {
        assert_eq!(x.nrows(), self.ncols, "matmul dimension mismatch");
        let mut out = faer::Mat::<c64>::zeros(self.nrows, x.ncols());
        for j in 0..x.ncols() {
            let xj = x.col_as_slice(j);
            let yj = out.col_as_slice_mut(j);
            self.mul_vec_into(xj, yj);
        }
        out
    }

    /// Hermitian quadratic form `x^H A x`.
    pub fn quadratic_form(&self, x: &[c64]) -> c64 {
        let mut acc = c64::new(0.0, 0.0);
        for (i, xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            let mut row = c64::new(0.0, 0.0);
            for (&c, &v) in cols.iter().zip(vals) {
                row += v.mul_c64(x[c]);
            }
            acc += xi.conj() * row;
        }
        acc
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in self.indices.iter() {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let offsets = counts.clone();
        let mut next = counts;
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let p = next[c];
                indices[p] = r;
                values[p] = v;
                next[c] += 1;
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, offsets: offsets.into(), indices: indices.into(), values }
    }

    /// Extracts `A[rows, cols]`; `cols` must be sorted increasingly.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        debug_assert!(cols.windows(2).all(|w| w[0] < w[1]));
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            let (rc, rv) = self.row(r);
            // merge the sorted row with the sorted column selection
            let (mut a, mut b) = (0, 0);
            while a < rc.len() && b < cols.len() {
                match rc[a].cmp(&cols[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        indices.push(b);
                        values.push(rv[a]);
                        a += 1;
                        b += 1;
                    }
                }
            }
            offsets.push(indices.len());
        }
        Self { nrows: rows.len(), ncols: cols.len(), offsets: offsets.into(), indices: indices.into(), values }
    }

    /// Entrywise map into another scalar type, keeping the pattern.
    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            offsets: self.offsets.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn to_complex(&self) -> ComplexSparseMatrix {
        self.map(|v| v.to_c64())
    }

    /// `sum_k coeff_k * A_k` over matrices that share one sparsity pattern.
    pub fn linear_combination(terms: &[(c64, &Self)]) -> Result<ComplexSparseMatrix> {
        let first = terms.first().ok_or_else(|| MsgfemError::InvalidParameter("empty combination".into()))?.1;
        for (_, m) in terms {
            if !m.same_pattern(first) {
                return Err(MsgfemError::InvalidParameter("patterns differ in linear combination".into()));
            }
        }
        let values = (0..first.nnz())
            .map(|p| terms.iter().map(|(c, m)| m.values[p].mul_c64(*c)).sum())
            .collect();
        Ok(CsrMatrix {
            nrows: first.nrows,
            ncols: first.ncols,
            offsets: first.offsets.clone(),
            indices: first.indices.clone(),
            values,
        })
    }

    /// Zeroes the rows and columns flagged in `mask` and puts `diag` on their diagonal.
    pub fn eliminate_symmetric(&mut self, mask: &[bool], diag: T) {
        for r in 0..self.nrows {
            let (lo, hi) = (self.offsets[r], self.offsets[r + 1]);
            for p in lo..hi {
                let c = self.indices[p];
                if mask[r] || mask[c] {
                    self.values[p] = if r == c { diag } else { T::zero() };
                }
            }
        }
    }

    pub fn to_dense(&self) -> faer::Mat<c64> {
        let mut m = faer::Mat::<c64>::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                m[(r, c)] = v.to_c64();
            }
        }
        m
    }

    /// Converts to faer's compressed-column representation.
    pub fn to_faer(&self) -> faer::sparse::SparseColMat<usize, c64> {
        let t = self.transpose();
        // CSR of A^T is CSC of A
        let symbolic = faer::sparse::SymbolicSparseColMat::<usize>::new_checked(
            self.nrows,
            self.ncols,
            t.offsets.to_vec(),
            None,
            t.indices.to_vec(),
        );
        faer::sparse::SparseColMat::new(symbolic, t.values.into_iter().map(|v| v.to_c64()).collect())
    }
}
