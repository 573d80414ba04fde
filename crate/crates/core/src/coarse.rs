//! Local eigenproblems on discrete Helmholtz-harmonic spaces and the coarse
//! space built from their eigenvectors.
//!
//! On an oversampling domain the harmonic space consists of local functions
//! `phi` whose Helmholtz residual vanishes against every test function that is
//! zero on the artificial boundary. The local eigenproblem reads
//! `A_k(chi phi, chi v) = lambda A(phi, v)` for all harmonic `v`, with `A_k`
//! the energy form with the `k^2 V^2` term and `A` either the stiffness form or
//! the same energy form.

use std::collections::HashMap;
use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::linalg::{factorize, hermitian_generalized_eig, ComplexSparseMatrix, CsrMatrix, Factorization};
use crate::partition::DecompositionPlan;
use crate::problem::{LocalSystem, NormKind};
use crate::{c64, MsgfemError, Result};

/// How many eigenvectors to keep per subdomain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenRequest {
    /// The `n` largest eigenpairs.
    Count(usize),
    /// Every eigenpair with `lambda > rho^2`.
    AboveThreshold(f64),
    /// The `n` largest eigenpairs, or all of them when fewer exist.
    AtMost(usize),
}

/// Realization of the local eigenproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigRoute {
    /// Explicit harmonic basis from one local Dirichlet solve per interface node.
    #[default]
    Harmonic,
    /// Saddle-point pencil with the harmonicity constraint as a Lagrange multiplier.
    Mixed,
}

/// Eigenpairs of one local eigenproblem.
#[derive(Debug, Clone)]
pub struct LocalEigenBasis {
    pub subdomain: usize,
    /// Every computed eigenvalue, largest first.
    pub values: Vec<f64>,
    /// Selected eigenvectors over the local nodes, one per column, matching the
    /// leading entries of `values`.
    pub vectors: Mat<c64>,
    /// Directions removed because the right-hand form was numerically singular
    /// or the eigenvalue was a numerical zero.
    pub deflated: usize,
}

impl LocalEigenBasis {
    pub fn n_selected(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn selected_values(&self) -> &[f64] {
        &self.values[..self.n_selected()]
    }

    /// Keeps the leading `n` selected eigenvectors.
    pub fn truncate(mut self, n: usize) -> Self {
        if n < self.n_selected() {
            self.vectors = self.vectors.subcols(0, n).to_owned();
        }
        self
    }

    /// Keeps the selected eigenvectors whose eigenvalue exceeds `rho^2`.
    pub fn select_by_tolerance(self, rho: f64) -> Self {
        let n = count_above(&self.values[..self.n_selected()], rho);
        self.truncate(n)
    }
}

/// Eigenvalues at or below this fraction of the largest one are numerical
/// zeros: their `chi phi` vanishes and would make the coarse matrix singular.
pub const NEGLIGIBLE_EIGENVALUE: f64 = 1e-10;

/// Number of leading eigenvalues that are not numerical zeros.
fn significant(values: &[f64]) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    values.iter().take_while(|&&l| l > NEGLIGIBLE_EIGENVALUE * top && l > 0.0).count()
}

/// Number of leading entries strictly above `rho^2`.
fn count_above(values: &[f64], rho: f64) -> usize {
    values.iter().take_while(|&&l| l > rho * rho).count()
}

/// Dense copy of selected rows and columns of a sparse matrix.
fn dense_block(a: &ComplexSparseMatrix, rows: &[usize], cols: &[usize]) -> Mat<c64> {
    a.submatrix(rows, cols).to_dense()
}

/// Basis of the discrete harmonic space: column `g` is the harmonic function
/// equal to 1 at interface node `g` and 0 at the other interface nodes.
pub fn harmonic_basis(loc: &LocalSystem, subdomain: usize) -> Result<Mat<c64>> {
    let n = loc.dim();
    let (interior, interface) = (&loc.interior, &loc.interface);
    let b_ii = loc.b.submatrix(interior, interior);
    let factor = factorize(&b_ii).map_err(|_| MsgfemError::SingularLocalMatrix { subdomain })?;
    let mut x = dense_block(&loc.b, interior, interface);
    for v in x.as_mut().col_iter_mut().flat_map(|c| c.iter_mut()) {
        *v = -*v;
    }
    factor.solve_mat_in_place(&mut x);
    let mut phi = Mat::<c64>::zeros(n, interface.len());
    for g in 0..interface.len() {
        for (r, &li) in interior.iter().enumerate() {
            phi[(li, g)] = x[(r, g)];
        }
        phi[(interface[g], g)] = c64::new(1.0, 0.0);
    }
    Ok(phi)
}

fn scale_rows(x: &Mat<c64>, d: &[f64]) -> Mat<c64> {
    Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * d[i])
}

pub(crate) fn selection_count(values: &[f64], request: EigenRequest, subdomain: usize) -> Result<usize> {
    match request {
        // an oversampling domain without artificial boundary has nothing to contribute
        EigenRequest::Count(_) if values.is_empty() => Ok(0),
        EigenRequest::Count(n) => {
            if n > values.len() {
                return Err(MsgfemError::TooFewHarmonicDofs { subdomain, requested: n, available: values.len() });
            }
            Ok(n)
        }
        EigenRequest::AtMost(n) => Ok(n.min(values.len())),
        EigenRequest::AboveThreshold(rho) => {
            if !(rho > 0.0) {
                return Err(MsgfemError::InvalidParameter(format!("rho must be positive, got {rho}")));
            }
            Ok(count_above(values, rho))
        }
    }
}

/// Solves the local eigenproblem of one subdomain.
///
/// `chi` holds the partition-of-unity weights on the local nodes.
pub fn solve_local_eigenproblem(
    loc: &LocalSystem,
    chi: &[f64],
    request: EigenRequest,
    rhs_form: NormKind,
    route: EigRoute,
    subdomain: usize,
) -> Result<LocalEigenBasis> {
    if chi.len() != loc.dim() {
        return Err(MsgfemError::DimensionMismatch { expected: loc.dim(), found: chi.len() });
    }
    if let EigenRequest::Count(0) | EigenRequest::AtMost(0) = request {
        return Ok(LocalEigenBasis { subdomain, values: Vec::new(), vectors: Mat::zeros(loc.dim(), 0), deflated: 0 });
    }
    match route {
        EigRoute::Harmonic => harmonic_route(loc, chi, request, rhs_form, subdomain),
        EigRoute::Mixed => mixed_route(loc, chi, request, rhs_form, subdomain),
    }
}

fn harmonic_route(
    loc: &LocalSystem,
    chi: &[f64],
    request: EigenRequest,
    rhs_form: NormKind,
    subdomain: usize,
) -> Result<LocalEigenBasis> {
    let phi = harmonic_basis(loc, subdomain)?;
    let r = {
        let k_phi = loc.energy_matrix(rhs_form).to_complex().mul_dense(&phi);
        phi.adjoint() * &k_phi
    };
    let l = {
        let d_phi = scale_rows(&phi, chi);
        let k_d_phi = loc.energy_matrix(NormKind::Ak).to_complex().mul_dense(&d_phi);
        d_phi.adjoint() * &k_d_phi
    };
    let eig = hermitian_generalized_eig(&l, &r).map_err(|e| MsgfemError::EigSolveFailure { subdomain, reason: e.to_string() })?;
    let mut values = eig.values;
    values.truncate(significant(&values));
    let deflated = phi.ncols() - values.len();
    let n = selection_count(&values, request, subdomain)?;
    let vectors = &phi * eig.vectors.subcols(0, n);
    Ok(LocalEigenBasis { subdomain, values, vectors, deflated })
}

fn mixed_route(
    loc: &LocalSystem,
    chi: &[f64],
    request: EigenRequest,
    rhs_form: NormKind,
    subdomain: usize,
) -> Result<LocalEigenBasis> {
    let n = loc.dim();
    let ni = loc.interior.len();
    let all: Vec<usize> = (0..n).collect();
    // saddle-point matrix [[K, C^H], [C, 0]] with the harmonicity rows C
    let k = loc.energy_matrix(rhs_form);
    let c = loc.b.submatrix(&loc.interior, &all);
    let mut trip: Vec<(usize, usize, c64)> = Vec::with_capacity(k.nnz() + 2 * c.nnz());
    for i in 0..n {
        let (cols, vals) = k.row(i);
        trip.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, c64::new(v, 0.0))));
    }
    for r in 0..ni {
        let (cols, vals) = c.row(r);
        for (&j, &v) in cols.iter().zip(vals) {
            trip.push((n + r, j, v));
            trip.push((j, n + r, v.conj()));
        }
    }
    let saddle = CsrMatrix::from_triplets(n + ni, n + ni, trip)?;
    let factor = factorize(&saddle).map_err(|_| MsgfemError::SingularLocalMatrix { subdomain })?;
    // left-hand form D K_k D = W W^H, W = D L with K_k = L L^H
    let kk = loc.energy_matrix(NormKind::Ak).to_dense();
    let chol = kk
        .llt(faer::Side::Lower)
        .map_err(|e| MsgfemError::EigSolveFailure { subdomain, reason: format!("{e:?}") })?;
    let lower = chol.L().to_owned();
    let mut w = Mat::<c64>::zeros(n + ni, n);
    for i in 0..n {
        for j in 0..=i {
            w[(i, j)] = lower[(i, j)] * chi[i];
        }
    }
    let mut minv_w = w.clone();
    factor.solve_mat_in_place(&mut minv_w);
    let t = crate::linalg::dense::hermitian_part(&(w.adjoint() * &minv_w));
    let identity = Mat::<c64>::identity(n, n);
    let eig = hermitian_generalized_eig(&t, &identity)
        .map_err(|e| MsgfemError::EigSolveFailure { subdomain, reason: e.to_string() })?;
    let harmonic_dim = loc.interface.len().min(eig.values.len());
    let mut values: Vec<f64> = eig.values[..harmonic_dim].to_vec();
    values.truncate(significant(&values));
    let deflated = loc.interface.len() - values.len();
    let count = selection_count(&values, request, subdomain)?;
    // x = M^{-1} W y / lambda, normalized in the right-hand form
    let k_c = k.to_complex();
    let mut vectors = Mat::<c64>::zeros(n, count);
    for j in 0..count {
        let y = eig.vectors.col(j);
        let lambda = values[j];
        let mut x = vec![c64::new(0.0, 0.0); n];
        for (i, xi) in x.iter_mut().enumerate() {
            let mut acc = c64::new(0.0, 0.0);
            for l in 0..n {
                acc += minv_w[(i, l)] * y[l];
            }
            *xi = acc / lambda;
        }
        let norm = k_c.quadratic_form(&x).re.max(0.0).sqrt();
        for (i, xi) in x.iter().enumerate() {
            vectors[(i, j)] = xi / norm;
        }
    }
    Ok(LocalEigenBasis { subdomain, values, vectors, deflated })
}

/// Coarse space spanned by the partition-of-unity weighted eigenvectors of all
/// subdomains, stored per subdomain on the support of its weight.
pub struct CoarseSpace {
    /// Global nodes carrying each subdomain's columns.
    pub supports: Vec<Vec<usize>>,
    /// Column values on `supports[i]`, one column per computed eigenvector;
    /// shared between truncations of the same space.
    pub coefficients: Arc<Vec<Mat<c64>>>,
    /// Leading columns of each subdomain in use.
    pub counts: Vec<usize>,
    /// Starting column of each subdomain; the last entry is the dimension.
    pub offsets: Vec<usize>,
    /// `E_0^T B E_0` with the plain (unconjugated) transpose.
    pub b0: ComplexSparseMatrix,
    factor: Factorization,
    n_global: usize,
}

impl std::fmt::Debug for CoarseSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoarseSpace").field("dim", &self.dim()).field("offsets", &self.offsets).finish()
    }
}

impl CoarseSpace {
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn n_local(&self) -> Vec<usize> {
        self.counts.clone()
    }

    /// Columns available for truncation, per subdomain.
    pub fn n_available(&self) -> Vec<usize> {
        self.coefficients.iter().map(|c| c.ncols()).collect()
    }

    /// `E_0^T r`
    pub fn restrict(&self, r: &[c64]) -> Vec<c64> {
        let mut out = vec![c64::new(0.0, 0.0); self.dim()];
        for (i, (support, c)) in self.supports.iter().zip(self.coefficients.iter()).enumerate() {
            for j in 0..self.counts[i] {
                let col = c.col_as_slice(j);
                out[self.offsets[i] + j] = support.iter().zip(col).map(|(&q, &v)| v * r[q]).sum();
            }
        }
        out
    }

    /// `E_0 y`
    pub fn prolong(&self, y: &[c64]) -> Vec<c64> {
        let mut out = vec![c64::new(0.0, 0.0); self.n_global];
        for (i, (support, c)) in self.supports.iter().zip(self.coefficients.iter()).enumerate() {
            for j in 0..self.counts[i] {
                let yj = y[self.offsets[i] + j];
                for (&q, &v) in support.iter().zip(c.col_as_slice(j)) {
                    out[q] += v * yj;
                }
            }
        }
        out
    }

    /// `B_0^{-1} y`
    pub fn solve(&self, y: &[c64]) -> Vec<c64> {
        self.factor.solve(y)
    }

    /// `E_0 B_0^{-1} E_0^T r`
    pub fn correction(&self, r: &[c64]) -> Vec<c64> {
        if self.dim() == 0 {
            return vec![c64::new(0.0, 0.0); self.n_global];
        }
        self.prolong(&self.solve(&self.restrict(r)))
    }

    /// Coarse space spanned by the leading `counts[i]` columns of each
    /// subdomain; `b` must be the matrix this space was assembled with.
    pub fn truncated(&self, b: &ComplexSparseMatrix, counts: &[usize]) -> Result<CoarseSpace> {
        let available = self.n_available();
        if counts.len() != available.len() {
            return Err(MsgfemError::DimensionMismatch { expected: available.len(), found: counts.len() });
        }
        for (i, (&n, &a)) in counts.iter().zip(&available).enumerate() {
            if n > a {
                return Err(MsgfemError::TooFewHarmonicDofs { subdomain: i, requested: n, available: a });
            }
        }
        build(b, self.supports.clone(), self.coefficients.clone(), counts.to_vec(), self.n_global)
    }

    /// `E_0` as a sparse matrix.
    pub fn e0_matrix(&self) -> ComplexSparseMatrix {
        let mut trip = Vec::new();
        for (i, (support, c)) in self.supports.iter().zip(self.coefficients.iter()).enumerate() {
            for j in 0..self.counts[i] {
                for (&q, &v) in support.iter().zip(c.col_as_slice(j)) {
                    trip.push((q, self.offsets[i] + j, v));
                }
            }
        }
        CsrMatrix::from_triplets(self.n_global, self.dim(), trip).expect("indices in range")
    }
}

/// Builds `E_0` and factorizes `B_0 = E_0^T B E_0`. `b` must be complex
/// symmetric, as every Helmholtz matrix assembled by this crate is.
pub fn assemble_coarse(b: &ComplexSparseMatrix, plan: &DecompositionPlan, bases: &[LocalEigenBasis]) -> Result<CoarseSpace> {
    if bases.len() != plan.len() {
        return Err(MsgfemError::DimensionMismatch { expected: plan.len(), found: bases.len() });
    }
    let n_global = b.nrows();
    let mut supports = Vec::with_capacity(plan.len());
    let mut coefficients = Vec::with_capacity(plan.len());
    for (s, basis) in plan.subdomains.iter().zip(bases) {
        if basis.vectors.nrows() != s.nodes.len() {
            return Err(MsgfemError::DimensionMismatch { expected: s.nodes.len(), found: basis.vectors.nrows() });
        }
        let c = Mat::<c64>::from_fn(s.pu_support.len(), basis.n_selected(), |r, j| {
            basis.vectors[(s.pu_local[r], j)] * s.pu_weights[r]
        });
        supports.push(s.pu_support.clone());
        coefficients.push(c);
    }
    let counts = coefficients.iter().map(|c| c.ncols()).collect();
    build(b, supports, Arc::new(coefficients), counts, n_global)
}

fn build(
    b: &ComplexSparseMatrix,
    supports: Vec<Vec<usize>>,
    coefficients: Arc<Vec<Mat<c64>>>,
    counts: Vec<usize>,
    n_global: usize,
) -> Result<CoarseSpace> {
    let mut offsets = vec![0usize];
    for &n in &counts {
        offsets.push(offsets.last().unwrap() + n);
    }
    let b0 = coarse_matrix(b, &supports, &coefficients, &counts, &offsets, n_global);
    let factor = factorize(&b0).map_err(|_| MsgfemError::SingularCoarseMatrix)?;
    Ok(CoarseSpace { supports, coefficients, counts, offsets, b0, factor, n_global })
}

fn coarse_matrix(
    b: &ComplexSparseMatrix,
    supports: &[Vec<usize>],
    coefficients: &[Mat<c64>],
    counts: &[usize],
    offsets: &[usize],
    n_global: usize,
) -> ComplexSparseMatrix {
    // node -> (subdomain, row in its support), compressed
    let mut count = vec![0usize; n_global + 1];
    for s in supports {
        for &q in s {
            count[q + 1] += 1;
        }
    }
    for q in 0..n_global {
        count[q + 1] += count[q];
    }
    let mut owners = vec![(0u32, 0u32); count[n_global]];
    let mut next = count.clone();
    for (i, s) in supports.iter().enumerate() {
        for (r, &q) in s.iter().enumerate() {
            owners[next[q]] = (i as u32, r as u32);
            next[q] += 1;
        }
    }
    let dim = *offsets.last().unwrap();
    let mut trip: Vec<(usize, usize, c64)> = Vec::new();
    for (i, (support, c)) in supports.iter().zip(coefficients).enumerate() {
        let ni = counts[i];
        if ni == 0 {
            continue;
        }
        // Y = B[:, P_i] C_i, stored on the rows it touches
        let mut row_slot: HashMap<usize, usize> = HashMap::new();
        let mut y: Vec<c64> = Vec::new();
        for (a, &p) in support.iter().enumerate() {
            let (cols, vals) = b.row(p);
            for (&r, &v) in cols.iter().zip(vals) {
                let slot = *row_slot.entry(r).or_insert_with(|| {
                    y.extend(std::iter::repeat(c64::new(0.0, 0.0)).take(ni));
                    y.len() / ni - 1
                });
                let yr = &mut y[slot * ni..(slot + 1) * ni];
                for (l, yl) in yr.iter_mut().enumerate() {
                    *yl += v * c[(a, l)];
                }
            }
        }
        let mut blocks: HashMap<usize, Vec<c64>> = HashMap::new();
        let mut rows: Vec<(usize, usize)> = row_slot.into_iter().collect();
        rows.sort_unstable();
        for (r, slot) in rows {
            let yr = &y[slot * ni..(slot + 1) * ni];
            for &(j, rj) in &owners[count[r]..count[r + 1]] {
                let (j, rj) = (j as usize, rj as usize);
                let cj = &coefficients[j];
                let nj = counts[j];
                if nj == 0 {
                    continue;
                }
                let block = blocks.entry(j).or_insert_with(|| vec![c64::new(0.0, 0.0); nj * ni]);
                for l in 0..nj {
                    let w = cj[(rj, l)];
                    for (col, &yv) in yr.iter().enumerate() {
                        block[l * ni + col] += w * yv;
                    }
                }
            }
        }
        let mut keys: Vec<usize> = blocks.keys().copied().collect();
        keys.sort_unstable();
        for j in keys {
            let block = &blocks[&j];
            let nj = counts[j];
            for l in 0..nj {
                for col in 0..ni {
                    trip.push((offsets[j] + l, offsets[i] + col, block[l * ni + col]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(dim, dim, trip).expect("coarse indices in range")
}

/// Rows `subdomain,j,lambda` for every computed eigenvalue.
pub fn eigenvalue_csv(bases: &[LocalEigenBasis]) -> String {
    let mut out = String::from("subdomain,j,lambda\n");
    for b in bases {
        for (j, l) in b.values.iter().enumerate() {
            out.push_str(&format!("{},{},{:e}\n", b.subdomain, j + 1, l));
        }
    }
    out
}
