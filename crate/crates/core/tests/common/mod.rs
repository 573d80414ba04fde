//! Independent brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use msgfem::c64;
use msgfem::linalg::{CsrMatrix, Scalar};

pub type Dense = Vec<Vec<c64>>;

pub fn dense<T: Scalar>(a: &CsrMatrix<T>) -> Dense {
    let d = a.to_dense();
    (0..d.nrows()).map(|i| (0..d.ncols()).map(|j| d[(i, j)]).collect()).collect()
}

pub fn zeros(n: usize, m: usize) -> Dense {
    vec![vec![c64::new(0.0, 0.0); m]; n]
}

pub fn matvec(a: &Dense, x: &[c64]) -> Vec<c64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut c = zeros(n, m);
    for i in 0..n {
        for l in 0..k {
            let ail = a[i][l];
            for j in 0..m {
                c[i][j] += ail * b[l][j];
            }
        }
    }
    c
}

pub fn transpose(a: &Dense) -> Dense {
    let m = a.first().map_or(0, Vec::len);
    (0..m).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

/// Gaussian elimination with partial pivoting.
pub fn solve(a: &Dense, b: &[c64]) -> Vec<c64> {
    let n = a.len();
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| m[p][col].norm().total_cmp(&m[q][col].norm())).unwrap();
        m.swap(col, piv);
        x.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f.norm() == 0.0 {
                continue;
            }
            for j in col..n {
                let v = m[col][j];
                m[row][j] -= f * v;
            }
            let v = x[col];
            x[row] -= f * v;
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= m[i][j] * x[j];
        }
        x[i] = acc / m[i][i];
    }
    x
}

pub fn inverse(a: &Dense) -> Dense {
    let n = a.len();
    let cols: Vec<Vec<c64>> = (0..n)
        .map(|j| {
            let mut e = vec![c64::new(0.0, 0.0); n];
            e[j] = c64::new(1.0, 0.0);
            solve(a, &e)
        })
        .collect();
    transpose(&cols)
}

/// Number of eigenvalues of the Hermitian pencil `(A, M)` below `sigma`, from
/// the inertia of `A - sigma M` (M positive definite).
pub fn count_below(a: &Dense, m: &Dense, sigma: f64) -> usize {
    let n = a.len();
    let mut t: Dense = (0..n).map(|i| (0..n).map(|j| a[i][j] - m[i][j] * sigma).collect()).collect();
    let mut negatives = 0;
    for k in 0..n {
        let p = t[k][k].re;
        if p < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let f = t[i][k] / p;
            for j in k..n {
                let v = t[k][j];
                t[i][j] -= f * v;
            }
        }
    }
    negatives
}

/// All eigenvalues of the Hermitian pencil `(A, M)` by inertia bisection, ascending.
pub fn pencil_eigenvalues(a: &Dense, m: &Dense, tol: f64) -> Vec<f64> {
    let n = a.len();
    let mut lo = -1.0;
    while count_below(a, m, lo) > 0 {
        lo *= 2.0;
    }
    let mut hi = 1.0;
    while count_below(a, m, hi) < n {
        hi *= 2.0;
    }
    (0..n)
        .map(|k| {
            // smallest sigma with more than k eigenvalues below it
            let (mut l, mut h) = (lo, hi);
            while h - l > tol {
                let mid = 0.5 * (l + h);
                if count_below(a, m, mid) > k {
                    h = mid;
                } else {
                    l = mid;
                }
            }
            0.5 * (l + h)
        })
        .collect()
}

/// Grows a set of cells by `layers` rounds of adding every cell that shares a
/// vertex with the set.
pub fn flood_fill(seed: &BTreeSet<(usize, usize)>, layers: usize, nx: usize, ny: usize) -> BTreeSet<(usize, usize)> {
    let mut set = seed.clone();
    for _ in 0..layers {
        let mut next = set.clone();
        for &(i, j) in &set {
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny {
                        next.insert((a as usize, b as usize));
                    }
                }
            }
        }
        set = next;
    }
    set
}
