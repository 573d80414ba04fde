//! Generalized minimal residual method in a Euclidean or weighted norm.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::RealSparseMatrix;
use crate::report::SolveReport;
use crate::{c64, MsgfemError, Result};

/// Norm in which residuals are minimized and measured.
#[derive(Debug, Clone, Default)]
pub enum NormMode {
    #[default]
    Euclidean,
    /// `||v||_b = sqrt(v^H N v)` for a symmetric positive definite `N`.
    Energy(Arc<RealSparseMatrix>),
}

#[derive(Debug, Clone)]
pub struct GmresConfig {
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    /// Krylov dimension after which the method restarts; `None` never restarts.
    pub restart: Option<usize>,
    pub norm_mode: NormMode,
    /// Checks the operator for linearity on random vectors before iterating.
    pub linearity_probe: bool,
    /// Return an unconverged report instead of failing once `max_iterations` is spent.
    pub allow_unconverged: bool,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_tolerance: 1e-6,
            restart: None,
            norm_mode: NormMode::Euclidean,
            linearity_probe: cfg!(debug_assertions),
            allow_unconverged: false,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0) {
            return Err(MsgfemError::InvalidParameter("relative_tolerance must be positive".into()));
        }
        if self.restart == Some(0) {
            return Err(MsgfemError::InvalidParameter("restart must be at least 1".into()));
        }
        Ok(())
    }
}

impl NormMode {
    /// `N v`, or `v` itself for the Euclidean norm.
    pub fn weight(&self, v: &[c64]) -> Vec<c64> {
        match self {
            NormMode::Euclidean => v.to_vec(),
            NormMode::Energy(n) => n.mul_vec(v),
        }
    }

    pub fn norm(&self, v: &[c64]) -> f64 {
        let w = self.weight(v);
        super::dot(v, &w).re.max(0.0).sqrt()
    }
}

fn probe_linearity<F: FnMut(&[c64]) -> Vec<c64>>(op: &mut F, n: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11ea);
    let mut rand_vec = || -> Vec<c64> { (0..n).map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect() };
    let x = rand_vec();
    let y = rand_vec();
    let alpha = c64::new(0.7, -1.3);
    let combo: Vec<c64> = x.iter().zip(&y).map(|(a, b)| alpha * a + b).collect();
    let lhs = op(&combo);
    let ox = op(&x);
    let oy = op(&y);
    let rhs: Vec<c64> = ox.iter().zip(&oy).map(|(a, b)| alpha * a + b).collect();
    let diff = super::norm2(&super::sub(&lhs, &rhs));
    let scale = super::norm2(&rhs).max(super::norm2(&lhs)).max(f64::MIN_POSITIVE);
    assert!(diff <= 1e-8 * scale, "GMRES operator failed the linearity probe (relative defect {:.3e})", diff / scale);
}

/// Solves `op(x) = rhs` starting from `x0`.
///
/// Returns the solution and a report whose residual history is measured in
/// the configured norm. Fails with [`MsgfemError::Stagnation`] when the
/// tolerance is not met within `max_iterations`, unless `allow_unconverged` is set.
pub fn gmres<F>(mut op: F, rhs: &[c64], x0: &[c64], cfg: &GmresConfig) -> Result<(Vec<c64>, SolveReport)>
where
    F: FnMut(&[c64]) -> Vec<c64>,
{
    cfg.validate()?;
    let n = rhs.len();
    if x0.len() != n {
        return Err(MsgfemError::DimensionMismatch { expected: n, found: x0.len() });
    }
    if cfg.linearity_probe && n > 0 {
        probe_linearity(&mut op, n);
    }
    let mut x = x0.to_vec();
    let mut report = SolveReport::default();
    let mut r = super::sub(rhs, &op(&x));
    let beta0 = cfg.norm_mode.norm(&r);
    report.residual_history.push(beta0);
    if beta0 == 0.0 {
        report.converged = true;
        report.exact_solution = true;
        return Ok((x, report));
    }
    let target = cfg.relative_tolerance * beta0;
    let cycle_len = cfg.restart.unwrap_or(cfg.max_iterations).max(1);
    let mut beta = beta0;
    let zero = c64::new(0.0, 0.0);

    while report.iterations < cfg.max_iterations {
        let m = cycle_len.min(cfg.max_iterations - report.iterations);
        // Krylov basis, its weighted images, Hessenberg columns, rotations
        let mut v: Vec<Vec<c64>> = Vec::with_capacity(m + 1);
        let mut z: Vec<Vec<c64>> = Vec::with_capacity(m + 1);
        let mut h: Vec<Vec<c64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<c64> = Vec::with_capacity(m);
        let mut g = vec![zero; m + 1];
        g[0] = c64::new(beta, 0.0);
        let v0: Vec<c64> = r.iter().map(|a| a / beta).collect();
        z.push(cfg.norm_mode.weight(&v0));
        v.push(v0);
        let mut k = 0;
        let mut done = false;
        while k < m {
            let mut w = op(&v[k]);
            let mut col = vec![zero; k + 2];
            for i in 0..=k {
                let hik = super::dot(&w, &z[i]);
                col[i] = hik;
                super::axpy(-hik, &v[i], &mut w);
            }
            let wz = cfg.norm_mode.weight(&w);
            let hnext = super::dot(&w, &wz).re.max(0.0).sqrt();
            col[k + 1] = c64::new(hnext, 0.0);
            for i in 0..k {
                let (a, b) = (col[i], col[i + 1]);
                col[i] = cs[i] * a + sn[i] * b;
                col[i + 1] = -sn[i].conj() * a + cs[i] * b;
            }
            let (a, b) = (col[k], col[k + 1]);
            let rr = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if a.norm() == 0.0 {
                (0.0, c64::new(1.0, 0.0))
            } else {
                (a.norm() / rr, (a / a.norm()) * b.conj() / rr)
            };
            col[k] = c * a + s * b;
            col[k + 1] = zero;
            cs.push(c);
            sn.push(s);
            g[k + 1] = -s.conj() * g[k];
            g[k] *= c;
            h.push(col);
            k += 1;
            report.iterations += 1;
            let res = g[k].norm();
            report.residual_history.push(res);
            let column_scale = h[k - 1][k - 1].norm().max(hnext);
            if hnext <= 1e-14 * column_scale.max(f64::MIN_POSITIVE) {
                report.exact_solution = true;
                done = true;
                break;
            }
            if res <= target {
                done = true;
                break;
            }
            let vk: Vec<c64> = w.iter().map(|a| a / hnext).collect();
            let zk: Vec<c64> = wz.iter().map(|a| a / hnext).collect();
            v.push(vk);
            z.push(zk);
        }
        // back substitution for the upper-triangular system
        let mut y = vec![zero; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc -= h[j][i] * y[j];
            }
            y[i] = acc / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            super::axpy(*yj, &v[j], &mut x);
        }
        if done {
            report.converged = true;
            return Ok((x, report));
        }
        r = super::sub(rhs, &op(&x));
        beta = cfg.norm_mode.norm(&r);
        if beta <= target {
            report.converged = true;
            return Ok((x, report));
        }
    }
    if cfg.allow_unconverged {
        return Ok((x, report));
    }
    Err(MsgfemError::Stagnation {
        iterations: report.iterations,
        relative_residual: report.relative_residual(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;

    fn diag_op(d: Vec<c64>) -> impl FnMut(&[c64]) -> Vec<c64> {
        move |x: &[c64]| x.iter().zip(&d).map(|(a, b)| a * b).collect()
    }

    #[test]
    fn identity_converges_in_one_step() {
        let rhs = vec![c64::new(1.0, 2.0), c64::new(-3.0, 0.5)];
        let (x, rep) = gmres(|x: &[c64]| x.to_vec(), &rhs, &[c64::new(0.0, 0.0); 2], &GmresConfig::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(super::super::norm2(&super::super::sub(&x, &rhs)) < 1e-14);
    }

    #[test]
    fn finite_termination_on_two_by_two() {
        let op = diag_op(vec![c64::new(1.0, 0.0), c64::new(2.0, 0.0)]);
        let rhs = vec![c64::new(1.0, 0.0); 2];
        let (x, rep) = gmres(op, &rhs, &[c64::new(0.0, 0.0); 2], &GmresConfig::default()).unwrap();
        assert!(rep.iterations <= 2);
        assert!((x[0] - c64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((x[1] - c64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn stagnation_is_reported() {
        // cyclic shift: GMRES makes no progress until the last step
        let n = 8;
        let op = |x: &[c64]| -> Vec<c64> { (0..x.len()).map(|i| x[(i + 1) % x.len()]).collect() };
        let mut rhs = vec![c64::new(0.0, 0.0); n];
        rhs[0] = c64::new(1.0, 0.0);
        let cfg = GmresConfig { max_iterations: 3, ..Default::default() };
        match gmres(op, &rhs, &vec![c64::new(0.0, 0.0); n], &cfg) {
            Err(MsgfemError::Stagnation { iterations, relative_residual }) => {
                assert_eq!(iterations, 3);
                assert!((relative_residual - 1.0).abs() < 1e-12);
            }
            other => panic!("expected stagnation, got {other:?}"),
        }
    }

    #[test]
    fn energy_norm_history_is_monotone_and_restart_works() {
        let n = 40;
        let mut t = Vec::new();
        let mut tw = Vec::new();
        for i in 0..n {
            t.push((i, i, c64::new(3.0 + (i as f64 * 0.37).sin(), 0.4)));
            tw.push((i, i, 1.0 + i as f64 / n as f64));
            if i + 1 < n {
                t.push((i, i + 1, c64::new(-1.0, 0.2)));
                t.push((i + 1, i, c64::new(-0.8, 0.0)));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, t).unwrap();
        let w = Arc::new(CsrMatrix::from_triplets(n, n, tw).unwrap());
        let rhs: Vec<c64> = (0..n).map(|i| c64::new(1.0, i as f64 * 0.1)).collect();
        for restart in [None, Some(5)] {
            let cfg = GmresConfig {
                norm_mode: NormMode::Energy(w.clone()),
                restart,
                relative_tolerance: 1e-10,
                ..Default::default()
            };
            let (x, rep) = gmres(|v: &[c64]| a.mul_vec(v), &rhs, &vec![c64::new(0.0, 0.0); n], &cfg).unwrap();
            for pair in rep.residual_history.windows(2) {
                assert!(pair[1] <= pair[0] * (1.0 + 1e-12));
            }
            let res = super::super::sub(&rhs, &a.mul_vec(&x));
            assert!(cfg.norm_mode.norm(&res) <= 1e-9 * cfg.norm_mode.norm(&rhs));
        }
    }
}
