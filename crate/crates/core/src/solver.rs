//! The MS-GFEM map, the two-level hybrid restricted additive Schwarz
//! preconditioner and the iterative solvers built on it.
//!
//! With local matrices `B_i`, partition-of-unity weights `chi_i` and coarse
//! space `E_0`, the preconditioner is
//!
//! ```text
//! M^{-1} r = z + E_0 B_0^{-1} E_0^T (r - B z),    z = sum_i chi_i B_i^{-1} E_i^T r,
//! ```
//!
//! and `M^{-1} B` coincides with the MS-GFEM map
//! `G(v) = sum_i chi_i pi_i(v) + pi_S(v - sum_i chi_i pi_i(v))`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarse::{assemble_coarse, selection_count, solve_local_eigenproblem, CoarseSpace, EigRoute, EigenRequest, LocalEigenBasis};
use crate::fespace::FeSpace;
use crate::linalg::{self, factorize, gmres, ComplexSparseMatrix, Factorization, GmresConfig, NormMode};
use crate::partition::DecompositionPlan;
use crate::problem::assembly::assemble_local_with_mask;
use crate::problem::{AssembledSystem, NormKind, ProblemSpec};
use crate::report::{NlocSummary, SolveReport, Timings};
use crate::{c64, MsgfemError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerMode {
    #[default]
    TwoLevelHybrid,
    OneLevelOras,
    CoarseOnly,
}

/// Condition imposed on the artificial boundary of the local problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalMode {
    /// `-i k V` impedance term.
    #[default]
    Impedance,
    /// Homogeneous Dirichlet condition.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditioningSide {
    #[default]
    Left,
    Right,
}

/// Whether local factorizations are kept between applications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalFactorPolicy {
    #[default]
    Keep,
    /// Keep only the local matrices and refactorize on every application,
    /// trading time for memory on large decompositions.
    Recompute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetupOptions {
    pub mode: PreconditionerMode,
    pub local_mode: LocalMode,
    pub eigen: EigenRequest,
    pub eig_route: EigRoute,
    /// Right-hand form of the local eigenproblems.
    pub rhs_form: NormKind,
    pub factor_policy: LocalFactorPolicy,
}

impl Default for SetupOptions {
    fn default() -> Self {
        Self {
            mode: PreconditionerMode::TwoLevelHybrid,
            local_mode: LocalMode::Impedance,
            eigen: EigenRequest::Count(10),
            eig_route: EigRoute::Harmonic,
            rhs_form: NormKind::A,
            factor_policy: LocalFactorPolicy::Keep,
        }
    }
}

/// A factorized local problem and where its unknowns live globally.
struct LocalSolver {
    /// Global indices of the local unknowns.
    dofs: Vec<usize>,
    /// Positions within `dofs` carrying a nonzero weight, and the weights.
    pu_pos: Vec<usize>,
    pu_weights: Vec<f64>,
    store: LocalStore,
}

enum LocalStore {
    Factor(Factorization),
    Matrix(ComplexSparseMatrix),
}

impl LocalSolver {
    fn solve_in_place(&self, x: &mut [c64]) {
        match &self.store {
            LocalStore::Factor(f) => f.solve_in_place(x),
            LocalStore::Matrix(m) => factorize(m).expect("local matrix was factorized during setup").solve_in_place(x),
        }
    }

    fn solve_restricted(&self, global_rhs: &[c64]) -> Vec<c64> {
        let mut x: Vec<c64> = self.dofs.iter().map(|&q| global_rhs[q]).collect();
        self.solve_in_place(&mut x);
        x
    }
}

pub struct Preconditioner<'a> {
    system: &'a AssembledSystem,
    locals: Vec<LocalSolver>,
    coarse: Option<CoarseSpace>,
    mode: PreconditionerMode,
    local_mode: LocalMode,
    /// All computed local eigenvalues, per subdomain.
    eigenvalues: Vec<Vec<f64>>,
    n_loc: Vec<usize>,
    timings: Timings,
}

impl std::fmt::Debug for Preconditioner<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Preconditioner")
            .field("mode", &self.mode)
            .field("local_mode", &self.local_mode)
            .field("subdomains", &self.locals.len())
            .field("coarse_dim", &self.coarse_dim())
            .finish()
    }
}

struct SubdomainSetup {
    solver: LocalSolver,
    basis: Option<LocalEigenBasis>,
    eig_s: f64,
    factor_s: f64,
}

fn setup_subdomain(
    space: &FeSpace,
    spec: &ProblemSpec,
    system: &AssembledSystem,
    plan: &DecompositionPlan,
    i: usize,
    opts: &SetupOptions,
) -> Result<SubdomainSetup> {
    let sub = &plan.subdomains[i];
    let loc = assemble_local_with_mask(space, spec, &plan.oversampled_triangles(i), &system.dirichlet)?;
    debug_assert_eq!(loc.nodes, sub.nodes);
    let t0 = Instant::now();
    let basis = if opts.mode == PreconditionerMode::OneLevelOras {
        None
    } else {
        Some(solve_local_eigenproblem(&loc, &sub.chi_local(), opts.eigen, opts.rhs_form, opts.eig_route, i)?)
    };
    let eig_s = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let (local_pos, matrix): (Vec<usize>, _) = match opts.local_mode {
        LocalMode::Impedance => ((0..loc.dim()).collect(), loc.b_impedance()),
        LocalMode::Dirichlet => (loc.interior.clone(), loc.b_dirichlet()),
    };
    let factor = factorize(&matrix).map_err(|_| MsgfemError::SingularLocalMatrix { subdomain: i })?;
    let factor_s = t1.elapsed().as_secs_f64();
    let store = match opts.factor_policy {
        LocalFactorPolicy::Keep => LocalStore::Factor(factor),
        LocalFactorPolicy::Recompute => {
            drop(factor);
            LocalStore::Matrix(matrix)
        }
    };
    let dofs: Vec<usize> = local_pos.iter().map(|&l| loc.nodes[l]).collect();
    let mut pu_pos = Vec::with_capacity(sub.pu_support.len());
    let mut pu_weights = Vec::with_capacity(sub.pu_support.len());
    for (&q, &w) in sub.pu_support.iter().zip(&sub.pu_weights) {
        if let Ok(p) = dofs.binary_search(&q) {
            pu_pos.push(p);
            pu_weights.push(w);
        }
    }
    Ok(SubdomainSetup { solver: LocalSolver { dofs, pu_pos, pu_weights, store }, basis, eig_s, factor_s })
}

impl<'a> Preconditioner<'a> {
    /// Assembles and factorizes every local problem, solves the local
    /// eigenproblems and builds the coarse space as required by `opts.mode`.
    pub fn setup(
        space: &FeSpace,
        spec: &ProblemSpec,
        system: &'a AssembledSystem,
        plan: &DecompositionPlan,
        opts: &SetupOptions,
    ) -> Result<Self> {
        if plan.n_global != system.dim() {
            return Err(MsgfemError::DimensionMismatch { expected: system.dim(), found: plan.n_global });
        }
        let parts: Vec<SubdomainSetup> = (0..plan.len())
            .into_par_iter()
            .map(|i| setup_subdomain(space, spec, system, plan, i, opts))
            .collect::<Result<_>>()?;
        let mut timings = Timings::default();
        let mut locals = Vec::with_capacity(parts.len());
        let mut bases = Vec::with_capacity(parts.len());
        for part in parts {
            timings.eigensolve_s += part.eig_s;
            timings.factorization_s += part.factor_s;
            locals.push(part.solver);
            if let Some(b) = part.basis {
                bases.push(b);
            }
        }
        let eigenvalues = bases.iter().map(|b| b.values.clone()).collect();
        let n_loc: Vec<usize> = bases.iter().map(|b| b.n_selected()).collect();
        let coarse = if opts.mode == PreconditionerMode::OneLevelOras {
            None
        } else {
            let t = Instant::now();
            let c = assemble_coarse(&system.b, plan, &bases)?;
            timings.factorization_s += t.elapsed().as_secs_f64();
            Some(c)
        };
        Ok(Self { system, locals, coarse, mode: opts.mode, local_mode: opts.local_mode, eigenvalues, n_loc, timings })
    }

    /// Rebuilds the coarse space from a subset of the eigenvectors computed
    /// during setup, without solving the local eigenproblems again.
    pub fn reselect(&mut self, request: EigenRequest) -> Result<()> {
        let coarse = self.coarse.as_ref().ok_or(MsgfemError::NotSetUp("no coarse space to reselect from"))?;
        let available = coarse.n_available();
        let counts = available
            .iter()
            .zip(&self.eigenvalues)
            .enumerate()
            .map(|(i, (&n, values))| selection_count(&values[..n], request, i))
            .collect::<Result<Vec<_>>>()?;
        let t = Instant::now();
        let fresh = coarse.truncated(&self.system.b, &counts)?;
        self.timings.factorization_s += t.elapsed().as_secs_f64();
        self.coarse = Some(fresh);
        self.n_loc = counts;
        Ok(())
    }

    pub fn mode(&self) -> PreconditionerMode {
        self.mode
    }

    pub fn local_mode(&self) -> LocalMode {
        self.local_mode
    }

    pub fn system(&self) -> &AssembledSystem {
        self.system
    }

    pub fn coarse(&self) -> Option<&CoarseSpace> {
        self.coarse.as_ref()
    }

    pub fn coarse_dim(&self) -> usize {
        self.coarse.as_ref().map_or(0, |c| c.dim())
    }

    pub fn eigenvalues(&self) -> &[Vec<f64>] {
        &self.eigenvalues
    }

    pub fn n_loc(&self) -> &[usize] {
        &self.n_loc
    }

    pub fn setup_timings(&self) -> &Timings {
        &self.timings
    }

    fn blank_report(&self) -> SolveReport {
        SolveReport {
            coarse_dim: self.coarse.as_ref().map(|c| c.dim()),
            n_loc: (!self.n_loc.is_empty()).then(|| NlocSummary::from_counts(&self.n_loc)),
            timings: self.timings.clone(),
            ..Default::default()
        }
    }

    fn check_len(&self, v: &[c64]) -> Result<()> {
        if v.len() != self.system.dim() {
            return Err(MsgfemError::DimensionMismatch { expected: self.system.dim(), found: v.len() });
        }
        Ok(())
    }

    /// Sums the weighted local contributions in subdomain order.
    fn gather(&self, parts: Vec<Vec<c64>>, out: &mut [c64]) {
        for (s, x) in self.locals.iter().zip(parts) {
            for (&p, &w) in s.pu_pos.iter().zip(&s.pu_weights) {
                out[s.dofs[p]] += x[p] * w;
            }
        }
    }

    /// One-level pass `sum_i chi_i B_i^{-1} E_i^T r`; entries at Dirichlet
    /// nodes are passed through unchanged.
    pub fn local_pass(&self, r: &[c64]) -> Vec<c64> {
        let parts: Vec<Vec<c64>> = self.locals.par_iter().map(|s| s.solve_restricted(r)).collect();
        let mut z = vec![c64::new(0.0, 0.0); r.len()];
        self.gather(parts, &mut z);
        for (q, &d) in self.system.dirichlet.iter().enumerate() {
            if d {
                z[q] = r[q];
            }
        }
        z
    }

    fn apply_unchecked(&self, r: &[c64]) -> Vec<c64> {
        match self.mode {
            PreconditionerMode::OneLevelOras => self.local_pass(r),
            PreconditionerMode::CoarseOnly => {
                let mut z = self.coarse.as_ref().expect("coarse space set up").correction(r);
                for (q, &d) in self.system.dirichlet.iter().enumerate() {
                    if d {
                        z[q] = r[q];
                    }
                }
                z
            }
            PreconditionerMode::TwoLevelHybrid => {
                let mut z = self.local_pass(r);
                let bz = self.system.b.mul_vec(&z);
                let res = linalg::sub(r, &bz);
                let c = self.coarse.as_ref().expect("coarse space set up").correction(&res);
                for (zi, ci) in z.iter_mut().zip(&c) {
                    *zi += ci;
                }
                z
            }
        }
    }

    /// Transpose of [`Preconditioner::local_pass`]: weights first, then local solves.
    fn local_pass_transpose(&self, r: &[c64]) -> Vec<c64> {
        let parts: Vec<Vec<c64>> = self
            .locals
            .par_iter()
            .map(|s| {
                let mut x = vec![c64::new(0.0, 0.0); s.dofs.len()];
                for (&p, &w) in s.pu_pos.iter().zip(&s.pu_weights) {
                    x[p] = r[s.dofs[p]] * w;
                }
                s.solve_in_place(&mut x);
                x
            })
            .collect();
        let mut z = vec![c64::new(0.0, 0.0); r.len()];
        for (s, x) in self.locals.iter().zip(parts) {
            for (&q, v) in s.dofs.iter().zip(x) {
                z[q] += v;
            }
        }
        for (q, &d) in self.system.dirichlet.iter().enumerate() {
            if d {
                z[q] = r[q];
            }
        }
        z
    }

    /// `M^{-T} r` (plain transpose). Local and coarse matrices are complex
    /// symmetric, so only the order of weighting and solving changes.
    pub fn apply_transpose(&self, r: &[c64]) -> Result<Vec<c64>> {
        self.check_len(r)?;
        Ok(match self.mode {
            PreconditionerMode::OneLevelOras => self.local_pass_transpose(r),
            PreconditionerMode::CoarseOnly => self.apply_unchecked(r),
            PreconditionerMode::TwoLevelHybrid => {
                let c = self.coarse.as_ref().expect("coarse space set up").correction(r);
                let rest = linalg::sub(r, &self.system.b.mul_vec(&c));
                linalg::add(&c, &self.local_pass_transpose(&rest))
            }
        })
    }

    /// `M^{-1} r`
    pub fn apply(&self, r: &[c64]) -> Result<Vec<c64>> {
        self.check_len(r)?;
        Ok(self.apply_unchecked(r))
    }

    /// Local solution `pi_i(v) = B_i^{-1} E_i^T B v` on the unknowns of subdomain `i`,
    /// computed from the rows of `B` belonging to the subdomain.
    pub fn local_projection(&self, i: usize, v: &[c64]) -> Result<Vec<c64>> {
        self.check_len(v)?;
        let s = self.locals.get(i).ok_or(MsgfemError::IndexOutOfRange { index: i, len: self.locals.len() })?;
        Ok(self.local_projection_unchecked(s, v))
    }

    fn local_projection_unchecked(&self, s: &LocalSolver, v: &[c64]) -> Vec<c64> {
        let b = &self.system.b;
        let mut x: Vec<c64> = s
            .dofs
            .iter()
            .map(|&q| {
                let (cols, vals) = b.row(q);
                cols.iter().zip(vals).map(|(&c, &a)| a * v[c]).sum()
            })
            .collect();
        s.solve_in_place(&mut x);
        x
    }

    /// The MS-GFEM map `G(v) = sum_i chi_i pi_i(v) + pi_S(v - sum_i chi_i pi_i(v))`.
    pub fn msgfem_map(&self, v: &[c64]) -> Result<Vec<c64>> {
        self.check_len(v)?;
        let coarse = match (self.mode, &self.coarse) {
            (PreconditionerMode::TwoLevelHybrid, Some(c)) => c,
            _ => return Err(MsgfemError::NotSetUp("the MS-GFEM map needs the two-level hybrid mode")),
        };
        let parts: Vec<Vec<c64>> = self.locals.par_iter().map(|s| self.local_projection_unchecked(s, v)).collect();
        let mut z = vec![c64::new(0.0, 0.0); v.len()];
        self.gather(parts, &mut z);
        for (q, &d) in self.system.dirichlet.iter().enumerate() {
            if d {
                z[q] = v[q];
            }
        }
        let remainder = linalg::sub(v, &z);
        let correction = coarse.correction(&self.system.b.mul_vec(&remainder));
        Ok(linalg::add(&z, &correction))
    }

    /// One-shot MS-GFEM approximation: the particular function
    /// `u_p = sum_i chi_i psi_i` with `psi_i` solving the local problem with the
    /// global right-hand side, plus the coarse correction
    /// `E_0 B_0^{-1} E_0^T (F - B u_p)`.
    pub fn one_shot(&self) -> Result<Vec<c64>> {
        let coarse = self.coarse.as_ref().ok_or(MsgfemError::NotSetUp("one-shot solve needs a coarse space"))?;
        let f = &self.system.f;
        let particular = self.local_pass(f);
        let residual = linalg::sub(f, &self.system.b.mul_vec(&particular));
        Ok(linalg::add(&particular, &coarse.correction(&residual)))
    }

    /// Relative `A,k` error of the one-shot approximation against `u`.
    pub fn lambda_one_shot(&self, u: &[c64]) -> Result<f64> {
        let ug = self.one_shot()?;
        let diff = linalg::sub(u, &ug);
        Ok(self.system.energy_norm(&diff, NormKind::Ak) / self.system.energy_norm(u, NormKind::Ak))
    }
}

/// Estimates `sup_v ||v - G(v)||_{A,k} / ||v||_{A,k}`, the largest relative
/// one-shot error over all data, by power iteration on `T^* T` with
/// `T = I - M^{-1} B` and the adjoint taken in the `A,k` inner product.
///
/// The estimate approaches the norm from below.
pub fn contraction_estimate(p: &Preconditioner<'_>, iterations: usize, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let sys = p.system;
    let n = sys.dim();
    let k = sys.energy_matrix(NormKind::Ak);
    let k_factor = factorize(&k)?;
    let t = |v: &[c64]| linalg::sub(v, &p.apply_unchecked(&sys.b.mul_vec(v)));
    let conj = |v: &[c64]| -> Vec<c64> { v.iter().map(|a| a.conj()).collect() };
    // T^H x = conj(T^T conj x) with T^T = I - B M^{-T}
    let t_adjoint = |y: &[c64]| -> Result<Vec<c64>> {
        let ky = conj(&k.mul_vec(y));
        let tt = linalg::sub(&ky, &sys.b.mul_vec(&p.apply_transpose(&ky)?));
        let mut w = conj(&tt);
        k_factor.solve_in_place(&mut w);
        Ok(w)
    };
    let knorm = |v: &[c64]| k.quadratic_form(v).re.max(0.0).sqrt();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<c64> = (0..n)
        .map(|q| if sys.dirichlet[q] { c64::new(0.0, 0.0) } else { c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) })
        .collect();
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let nv = knorm(&v);
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|a| *a /= nv);
        let tv = t(&v);
        estimate = f64::max(estimate, knorm(&tv));
        v = t_adjoint(&tv)?;
    }
    Ok(estimate)
}

#[derive(Debug, Clone)]
pub struct RichardsonConfig {
    pub max_iterations: usize,
    /// Stops once the preconditioned residual has been reduced by this factor.
    pub relative_tolerance: f64,
    pub norm_mode: NormMode,
}

impl Default for RichardsonConfig {
    fn default() -> Self {
        Self { max_iterations: 100, relative_tolerance: 1e-6, norm_mode: NormMode::Euclidean }
    }
}

/// Consecutive non-contracting steps after which Richardson gives up.
const DIVERGENCE_STEPS: usize = 5;

/// Preconditioned Richardson iteration `x_{j+1} = x_j + M^{-1}(F - B x_j)`.
///
/// The residual history holds `||M^{-1}(F - B x_j)||` in the configured norm.
/// When `exact` is given, the `A,k` errors of the iterates are recorded and
/// drive the divergence check; otherwise the residuals do.
pub fn richardson_solve(
    p: &Preconditioner<'_>,
    x0: &[c64],
    cfg: &RichardsonConfig,
    exact: Option<&[c64]>,
) -> Result<(Vec<c64>, SolveReport)> {
    p.check_len(x0)?;
    let t = Instant::now();
    let sys = p.system;
    let mut report = p.blank_report();
    let mut x = x0.to_vec();
    let error = |x: &[c64]| exact.map(|u| sys.energy_norm(&linalg::sub(u, x), NormKind::Ak));
    let mut z = p.apply_unchecked(&linalg::sub(&sys.f, &sys.b.mul_vec(&x)));
    let r0 = cfg.norm_mode.norm(&z);
    report.residual_history.push(r0);
    if let Some(e) = error(&x) {
        report.error_history.push(e);
    }
    let mut bad_steps = 0;
    while r0 > 0.0 && report.iterations < cfg.max_iterations {
        if report.residual_history.last().unwrap() / r0 <= cfg.relative_tolerance {
            break;
        }
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        report.iterations += 1;
        z = p.apply_unchecked(&linalg::sub(&sys.f, &sys.b.mul_vec(&x)));
        report.residual_history.push(cfg.norm_mode.norm(&z));
        if let Some(e) = error(&x) {
            report.error_history.push(e);
        }
        let hist = if exact.is_some() { &report.error_history } else { &report.residual_history };
        let ratio = hist[hist.len() - 1] / hist[hist.len() - 2];
        bad_steps = if ratio > 1.0 { bad_steps + 1 } else { 0 };
        if bad_steps >= DIVERGENCE_STEPS {
            return Err(MsgfemError::Diverged { consecutive: bad_steps, last_ratio: ratio });
        }
    }
    report.converged = report.relative_residual() <= cfg.relative_tolerance;
    report.timings.solve_s = t.elapsed().as_secs_f64();
    Ok((x, report))
}

/// Preconditioned GMRES for `B x = F` from a zero initial guess.
pub fn gmres_solve(p: &Preconditioner<'_>, cfg: &GmresConfig, side: PreconditioningSide) -> Result<(Vec<c64>, SolveReport)> {
    let t = Instant::now();
    let sys = p.system;
    let n = sys.dim();
    let zero = vec![c64::new(0.0, 0.0); n];
    let (x, rep) = match side {
        PreconditioningSide::Left => {
            let rhs = p.apply_unchecked(&sys.f);
            gmres(|v: &[c64]| p.apply_unchecked(&sys.b.mul_vec(v)), &rhs, &zero, cfg)?
        }
        PreconditioningSide::Right => {
            let (y, rep) = gmres(|v: &[c64]| sys.b.mul_vec(&p.apply_unchecked(v)), &sys.f, &zero, cfg)?;
            (p.apply_unchecked(&y), rep)
        }
    };
    let mut report = p.blank_report();
    report.iterations = rep.iterations;
    report.residual_history = rep.residual_history;
    report.converged = rep.converged;
    report.exact_solution = rep.exact_solution;
    report.timings.solve_s = t.elapsed().as_secs_f64();
    Ok((x, report))
}
