//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the process
//! exits non-zero when any criterion fails.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- 1 2 3`.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use msgfem::coarse::{harmonic_basis, solve_local_eigenproblem, EigRoute, EigenRequest};
use msgfem::experiments::{run, ExperimentConfig, ExperimentKind, ResultRow};
use msgfem::fespace::FeSpace;
use msgfem::linalg::{self, GmresConfig, NormMode};
use msgfem::mesh::{Mesh, Rect};
use msgfem::partition::{DecompositionPlan, PartitionParams};
use msgfem::problem::{assemble_global, assemble_local, AssembledSystem, LocalSystem, NormKind, ProblemSpec};
use msgfem::solver::{gmres_solve, richardson_solve, Preconditioner, PreconditioningSide, RichardsonConfig, SetupOptions};
use msgfem::c64;

// pinned tolerances
const MAP_TOL: f64 = 1e-11;
const EIG_REL_TOL: f64 = 1e-7;
const PROJECTION_SLACK: f64 = 1e-6;
const CONTRACTION_SLACK: f64 = 1.05;
const GMRES_SLACK: f64 = 1e-10;
const ITERATION_BAND: usize = 1;
const CONTRAST_ITERATION_BAND: usize = 2;
const COARSE_SIZE_BAND: f64 = 0.10;
const DECAY_FACTOR: f64 = 10.0;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

type Outcome = Result<Verdict, msgfem::MsgfemError>;

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<c64> {
    (0..n).map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn unit_square(n: usize, degree: usize) -> FeSpace {
    FeSpace::new(Mesh::new(Rect::unit_square(), n, n).unwrap(), degree).unwrap()
}

fn diagonal_wave(k: f64) -> ProblemSpec {
    ProblemSpec::plane_wave(k, [std::f64::consts::FRAC_1_SQRT_2; 2])
}

fn zero(n: usize) -> Vec<c64> {
    vec![c64::new(0.0, 0.0); n]
}

fn criterion_1() -> Outcome {
    let space = unit_square(16, 1);
    let spec = diagonal_wave(10.0);
    let sys = assemble_global(&space, &spec)?;
    let plan = DecompositionPlan::new(&space, PartitionParams::square(2, 2, 2), Some(&sys.dirichlet))?;
    let opts = SetupOptions { eigen: EigenRequest::Count(3), ..Default::default() };
    let p = Preconditioner::setup(&space, &spec, &sys, &plan, &opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let v = random_vec(&mut rng, sys.dim());
        let g = p.msgfem_map(&v)?;
        let mb = p.apply(&sys.b.mul_vec(&v))?;
        worst = worst.max(linalg::norm2(&linalg::sub(&g, &mb)) / linalg::norm2(&v));
    }
    Ok(Verdict::new(worst <= MAP_TOL, format!("max |G(v) - M^-1 B v| / |v| = {worst:.2e}")))
}

/// Interior subdomain of a 24x24 P1 mesh split 3x3 with one overlap and one
/// oversampling layer (169 local dofs).
fn small_local_problem() -> Result<(LocalSystem, Vec<f64>), msgfem::MsgfemError> {
    let space = unit_square(24, 1);
    let spec = diagonal_wave(10.0);
    let sys = assemble_global(&space, &spec)?;
    let plan = DecompositionPlan::new(&space, PartitionParams::square(3, 1, 1), Some(&sys.dirichlet))?;
    let loc = assemble_local(&space, &spec, &plan.oversampled_triangles(4))?;
    let chi = plan.subdomains[4].chi_local();
    Ok((loc, chi))
}

fn criterion_2() -> Outcome {
    let (loc, chi) = small_local_problem()?;
    let request = EigenRequest::Count(10);
    let harmonic = solve_local_eigenproblem(&loc, &chi, request, NormKind::A, EigRoute::Harmonic, 4)?;
    let mixed = solve_local_eigenproblem(&loc, &chi, request, NormKind::A, EigRoute::Mixed, 4)?;
    let worst = harmonic.values[..10]
        .iter()
        .zip(&mixed.values[..10])
        .map(|(a, b)| (a - b).abs() / a.abs())
        .fold(0.0, f64::max);
    Ok(Verdict::new(
        loc.dim() <= 200 && worst <= EIG_REL_TOL,
        format!("{} dofs, max relative eigenvalue gap {worst:.2e}", loc.dim()),
    ))
}

fn criterion_3() -> Outcome {
    let (loc, chi) = small_local_problem()?;
    let basis = solve_local_eigenproblem(&loc, &chi, EigenRequest::AtMost(usize::MAX), NormKind::A, EigRoute::Harmonic, 4)?;
    let phi = harmonic_basis(&loc, 4)?;
    let a = loc.energy_matrix(NormKind::A);
    let ak = loc.energy_matrix(NormKind::Ak);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let coeffs = random_vec(&mut rng, phi.ncols());
        let v: Vec<c64> = (0..phi.nrows()).map(|i| (0..phi.ncols()).map(|j| phi[(i, j)] * coeffs[j]).sum()).collect();
        let v_norm = a.quadratic_form(&v).re.sqrt();
        let av = a.mul_vec(&v);
        let mut rest = v.clone();
        for n in 1..=10 {
            // remove the component along eigenvector n
            let col: Vec<c64> = (0..rest.len()).map(|i| basis.vectors[(i, n - 1)]).collect();
            let c: c64 = col.iter().zip(&av).map(|(p, q)| p.conj() * q).sum();
            linalg::axpy(-c, &col, &mut rest);
            let cut: Vec<c64> = rest.iter().zip(&chi).map(|(x, w)| x * w).collect();
            let err = ak.quadratic_form(&cut).re.max(0.0).sqrt();
            let bound = basis.values[n].sqrt() * v_norm;
            worst = worst.max(err / bound);
        }
    }
    Ok(Verdict::new(
        worst <= 1.0 + PROJECTION_SLACK,
        format!("max error / (lambda_(n+1)^(1/2) |v|) = {worst:.6}"),
    ))
}

/// k = 40, P2 with h ~ k^(-5/4) (104 cells per side), 4x4 subdomains,
/// two overlap and two oversampling layers, 15 eigenvectors per subdomain.
fn plane_wave_k40() -> (FeSpace, ProblemSpec, AssembledSystem) {
    let space = unit_square(104, 2);
    let spec = diagonal_wave(40.0);
    let sys = assemble_global(&space, &spec).unwrap();
    (space, spec, sys)
}

fn criteria_4_and_5() -> (Outcome, Outcome) {
    let (space, spec, sys) = plane_wave_k40();
    let result = (|| {
        let plan = DecompositionPlan::new(&space, PartitionParams::square(4, 2, 2), Some(&sys.dirichlet))?;
        let opts = SetupOptions { eigen: EigenRequest::Count(15), ..Default::default() };
        let p = Preconditioner::setup(&space, &spec, &sys, &plan, &opts)?;
        let u = sys.solve_direct()?;
        let lambda = p.lambda_one_shot(&u)?;
        let norm = NormMode::Energy(Arc::new(sys.energy_matrix(NormKind::Ak)));
        let rcfg = RichardsonConfig { max_iterations: 5, relative_tolerance: 0.0, norm_mode: norm.clone() };
        let (_, rich) = richardson_solve(&p, &zero(sys.dim()), &rcfg, Some(&u))?;
        let gcfg = GmresConfig {
            max_iterations: 5,
            relative_tolerance: 1e-300,
            norm_mode: norm,
            linearity_probe: false,
            allow_unconverged: true,
            ..Default::default()
        };
        let (_, gm) = gmres_solve(&p, &gcfg, PreconditioningSide::Left)?;
        Ok((lambda, rich, gm))
    })();
    let (lambda, rich, gm) = match result {
        Ok(r) => r,
        Err(e) => {
            let msg = format!("error: {e}");
            return (Err(e), Ok(Verdict::new(false, msg)));
        }
    };
    let ratios: Vec<f64> = rich.error_history.windows(2).map(|w| w[1] / w[0]).collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let c4 = Verdict::new(
        ratios.len() == 5 && lambda < 1.0 && worst <= CONTRACTION_SLACK * lambda,
        format!("Lambda = {lambda:.4}, step ratios {}", fmt_list(&ratios)),
    );
    let steps = gm.residual_history.len().min(rich.residual_history.len()).min(6);
    let ok = steps == 6
        && (0..steps).all(|j| gm.residual_history[j] <= rich.residual_history[j] * (1.0 + GMRES_SLACK));
    let c5 = Verdict::new(
        ok,
        format!(
            "GMRES {} vs Richardson {}",
            fmt_list(&gm.residual_history[..steps]),
            fmt_list(&rich.residual_history[..steps])
        ),
    );
    (Ok(c4), Ok(c5))
}

fn fmt_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", items.join(", "))
}

fn config(text: &str) -> Result<ExperimentConfig, msgfem::MsgfemError> {
    let cfg = ExperimentConfig::from_toml(text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn iterations(rows: &[ResultRow]) -> Vec<usize> {
    rows.iter().map(|r| r.iterations.unwrap_or(usize::MAX)).collect()
}

fn within(x: usize, target: usize, band: usize) -> bool {
    x + band >= target && x <= target + band
}

fn criterion_6() -> Outcome {
    let cfg = config(include_str!("../../../configs/h_robustness.toml"))?;
    let out = run(ExperimentKind::HRobustness, &cfg)?;
    // rows ordered by mesh, then n_loc
    let it = iterations(&out.rows);
    let by_n = |n: usize| -> Vec<usize> { out.rows.iter().filter(|r| r.n_loc == Some(n)).map(|r| r.iterations.unwrap_or(usize::MAX)).collect() };
    let (i20, i25) = (by_n(20), by_n(25));
    let pass = i20.len() == 2
        && i25.len() == 2
        && i20.iter().all(|&x| within(x, 4, ITERATION_BAND))
        && i25.iter().all(|&x| within(x, 3, ITERATION_BAND))
        && i20[0] == i20[1]
        && i25[0] == i25[1];
    Ok(Verdict::new(pass, format!("iterations (h, n_loc) = {it:?} for n_loc 20 -> {i20:?}, 25 -> {i25:?}")))
}

fn criterion_7() -> Outcome {
    let cfg = config(include_str!("../../../configs/subdomain_scaling.toml"))?;
    let out = run(ExperimentKind::SubdomainScaling, &cfg)?;
    let pairs: Vec<(usize, usize, usize)> = out
        .rows
        .iter()
        .filter_map(|r| Some((r.mx, r.n_loc?, r.iterations.unwrap_or(usize::MAX))))
        .collect();
    let hit = |m: usize, n: usize| pairs.iter().any(|&(pm, pn, it)| pm == m && pn == n && within(it, 4, ITERATION_BAND));
    Ok(Verdict::new(hit(16, 15) && hit(32, 10), format!("(m, n_loc, iterations) = {pairs:?}")))
}

fn criterion_8() -> Outcome {
    let cfg = config(include_str!("../../../configs/high_contrast.toml"))?;
    let out = run(ExperimentKind::HighContrast, &cfg)?;
    let rows: Vec<(f64, usize, usize)> = out
        .rows
        .iter()
        .map(|r| (r.rho.unwrap_or(f64::NAN), r.iterations.unwrap_or(usize::MAX), r.coarse_dim.unwrap_or(0)))
        .collect();
    let find = |rho: f64| rows.iter().find(|r| (r.0 - rho).abs() <= 1e-12 * rho).copied();
    let pass = match (find(0.125), find(0.03125)) {
        (Some(a), Some(b)) => {
            within(a.1, 9, CONTRAST_ITERATION_BAND)
                && (a.2 as f64 - 1536.0).abs() <= COARSE_SIZE_BAND * 1536.0
                && within(b.1, 5, CONTRAST_ITERATION_BAND)
        }
        _ => false,
    };
    Ok(Verdict::new(pass, format!("(rho, iterations, coarse dim) = {rows:?}")))
}

/// k = 40 on the P2 mesh with h ~ k^(-5/4), 8x8 subdomains, two overlap layers.
fn criterion_9() -> Outcome {
    let space = unit_square(104, 2);
    let spec = diagonal_wave(40.0);
    let sys = assemble_global(&space, &spec)?;
    let mut roots = Vec::new();
    for layers in [0, 2, 4] {
        let plan = DecompositionPlan::new(&space, PartitionParams::square(8, 2, layers), Some(&sys.dirichlet))?;
        // subdomain (1, 1) touches no boundary
        let i = plan.subdomains.iter().position(|s| s.grid_pos == (1, 1)).unwrap();
        let loc = assemble_local(&space, &spec, &plan.oversampled_triangles(i))?;
        let chi = plan.subdomains[i].chi_local();
        let basis = solve_local_eigenproblem(&loc, &chi, EigenRequest::Count(20), NormKind::A, EigRoute::Harmonic, i)?;
        roots.push(basis.values[19].sqrt());
    }
    Ok(Verdict::new(
        DECAY_FACTOR * roots[2] <= roots[0],
        format!("lambda_20^(1/2) with 0/2/4 oversampling layers = {}", fmt_list(&roots)),
    ))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures = Vec::new();
    for trial in 0..6 {
        let degree = 1 + trial % 2;
        let m = rng.gen_range(2..=3);
        let n = m * rng.gen_range(4..=6);
        let k = rng.gen_range(2.0..12.0);
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let space = unit_square(n, degree);
        let spec = ProblemSpec::plane_wave(k, [angle.cos(), angle.sin()]);
        let sys = assemble_global(&space, &spec)?;
        let plan = DecompositionPlan::new(&space, PartitionParams::square(m, 1, rng.gen_range(0..=2)), Some(&sys.dirichlet))?;
        let dim = sys.dim();

        // partition of unity reconstructs any vector
        let v = random_vec(&mut rng, dim);
        let mut sum = zero(dim);
        for i in 0..plan.len() {
            plan.pu_multiply_add(i, &plan.restrict(i, &v)?, &mut sum)?;
        }
        if linalg::norm2(&linalg::sub(&sum, &v)) > 1e-12 * linalg::norm2(&v) {
            failures.push(format!("trial {trial}: PU reconstruction"));
        }

        // restriction after extension is the identity
        for i in 0..plan.len() {
            let local = random_vec(&mut rng, plan.subdomains[i].n_local());
            if plan.restrict(i, &plan.extend(i, &local)?)? != local {
                failures.push(format!("trial {trial}: restrict/extend on subdomain {i}"));
            }
        }

        // B is complex symmetric and linear in each argument
        let (x, y) = (random_vec(&mut rng, dim), random_vec(&mut rng, dim));
        let alpha = c64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let form = |a: &[c64], b: &[c64]| -> c64 { a.iter().zip(&sys.b.mul_vec(b)).map(|(p, q)| p * q).sum() };
        let xy = form(&x, &y);
        let yx = form(&y, &x);
        let ax: Vec<c64> = x.iter().map(|z| alpha * z).collect();
        if (xy - yx).norm() > 1e-10 * xy.norm() || (form(&ax, &y) - alpha * xy).norm() > 1e-10 * xy.norm() {
            failures.push(format!("trial {trial}: symmetry/linearity of B"));
        }

        // B = S - k^2 M - i k G away from Dirichlet rows
        let s = sys.stiffness.mul_vec(&x);
        let mm = sys.mass.mul_vec(&x);
        let g = sys.boundary_mass.mul_vec(&x);
        let bx = sys.b.mul_vec(&x);
        let mut defect: f64 = 0.0;
        for q in 0..dim {
            let free_row = !sys.dirichlet[q];
            if free_row && !touches_dirichlet(&sys, q) {
                let expected = s[q] - k * k * mm[q] - c64::new(0.0, k) * g[q];
                defect = defect.max((bx[q] - expected).norm());
            }
        }
        if defect > 1e-9 * linalg::norm2(&bx) {
            failures.push(format!("trial {trial}: B decomposition defect {defect:.2e}"));
        }

        // preconditioned GMRES residuals never increase
        let opts = SetupOptions { eigen: EigenRequest::AtMost(3), ..Default::default() };
        let p = Preconditioner::setup(&space, &spec, &sys, &plan, &opts)?;
        let (_, rep) = gmres_solve(&p, &GmresConfig { max_iterations: 40, allow_unconverged: true, ..Default::default() }, PreconditioningSide::Left)?;
        if rep.residual_history.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
            failures.push(format!("trial {trial}: GMRES residual increased"));
        }
    }
    let detail = if failures.is_empty() { "6 randomized instances".to_string() } else { failures.join("; ") };
    Ok(Verdict::new(failures.is_empty(), detail))
}

/// Rows coupled to a Dirichlet node have their Dirichlet columns removed.
fn touches_dirichlet(sys: &AssembledSystem, q: usize) -> bool {
    let (cols, _) = sys.stiffness.row(q);
    cols.iter().any(|&c| sys.dirichlet[c])
}

fn report(id: usize, name: &str, started: Instant, outcome: Outcome) -> bool {
    let secs = started.elapsed().as_secs_f64();
    let (pass, detail) = match outcome {
        Ok(v) => (v.pass, v.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!("criterion {id:>2} {:<4} {name} ({secs:.1} s): {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn main() -> ExitCode {
    msgfem::init_thread_pool();
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let on = |id: usize| wanted.is_empty() || wanted.contains(&id);
    let mut all = true;
    let simple: [(usize, &str, fn() -> Outcome); 3] = [
        (1, "operator/matrix identity", criterion_1),
        (2, "mixed vs harmonic eigenproblem", criterion_2),
        (3, "n-width projection bound", criterion_3),
    ];
    for (id, name, f) in simple {
        if on(id) {
            let t = Instant::now();
            all &= report(id, name, t, f());
        }
    }
    if on(4) || on(5) {
        let t = Instant::now();
        let (c4, c5) = criteria_4_and_5();
        if on(4) {
            all &= report(4, "Richardson contraction at the one-shot rate", t, c4);
        }
        if on(5) {
            all &= report(5, "GMRES residual below Richardson", t, c5);
        }
    }
    let rest: [(usize, &str, fn() -> Outcome); 5] = [
        (6, "mesh-size robustness", criterion_6),
        (7, "subdomain scaling", criterion_7),
        (8, "high contrast", criterion_8),
        (9, "eigenvalue decay with oversampling", criterion_9),
        (10, "invariant suite", criterion_10),
    ];
    for (id, name, f) in rest {
        if on(id) {
            let t = Instant::now();
            all &= report(id, name, t, f());
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
