//! Experiment drivers. Each sweeps the configured parameters and returns one
//! row per point.

use std::time::Instant;

use super::config::{
    lcm, round_up, BoundaryDataConfig, ExperimentConfig, ExperimentKind, MediumConfig, MeshRule, Selection, SolverMethod, SourceConfig,
};
use super::output::ResultRow;
use crate::coarse::EigenRequest;
use crate::fespace::FeSpace;
use crate::linalg::{self, GmresConfig, NormMode};
use crate::mesh::{BoundaryTag, Mesh, Rect};
use crate::partition::{DecompositionPlan, PartitionParams};
use crate::problem::assembly::assemble_local_with_mask;
use crate::problem::{
    assemble_global, h1_seminorm_error, AssembledSystem, BoundaryKind, CoefficientField, NormKind, ProblemSpec, ScalarFn,
    Source,
};
use crate::problem::{ingest_raster_velocity, RasterGrid};
use crate::solver::{gmres_solve, richardson_solve, Preconditioner, PreconditionerMode, RichardsonConfig, SetupOptions};
use crate::{c64, MsgfemError, Result};

/// Rows plus any warnings raised while running.
#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub warnings: Vec<String>,
}

/// A discretized problem at one sweep point.
pub struct Instance {
    pub space: FeSpace,
    pub spec: ProblemSpec,
    pub system: AssembledSystem,
    pub k: f64,
    pub frequency: Option<f64>,
    pub epsilon: Option<f64>,
    /// Plane-wave direction when the plane wave is the exact solution.
    pub exact_direction: Option<[f64; 2]>,
}

impl Instance {
    fn base_row(&self, kind: ExperimentKind) -> ResultRow {
        let mesh = self.space.mesh();
        ResultRow {
            experiment: kind.name().to_string(),
            k: self.k,
            frequency: self.frequency,
            nx: mesh.nx,
            ny: mesh.ny,
            h: mesh.h(),
            degree: self.space.degree(),
            dofs: self.space.dim(),
            epsilon: self.epsilon,
            ..Default::default()
        }
    }
}

fn default_direction(kind: ExperimentKind) -> [f64; 2] {
    match kind {
        ExperimentKind::PlaneWaveScaling | ExperimentKind::StabilityCs => [0.6, 0.8],
        _ => [std::f64::consts::FRAC_1_SQRT_2; 2],
    }
}

fn normalized(d: [f64; 2]) -> Result<[f64; 2]> {
    let n = d[0].hypot(d[1]);
    if !(n > 0.0) {
        return Err(MsgfemError::Config("plane-wave direction must be nonzero".into()));
    }
    Ok([d[0] / n, d[1] / n])
}

/// The medium as loaded once per run.
enum Medium {
    Constant,
    Inclusions(Vec<f64>),
    Raster { grid: RasterGrid, beta_scaled: bool },
}

impl Medium {
    fn load(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(match &cfg.problem.medium {
            MediumConfig::Constant => Medium::Constant,
            MediumConfig::PeriodicInclusions { epsilons } => {
                if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
                    return Err(MsgfemError::Config("inclusion epsilons must lie in (0, 1]".into()));
                }
                Medium::Inclusions(epsilons.clone())
            }
            MediumConfig::Raster { path, width, depth, beta_scaled } => {
                if !(*width > 0.0 && *depth > 0.0) {
                    return Err(MsgfemError::Config("raster width and depth must be positive".into()));
                }
                let rect = Rect::new(0.0, -depth, *width, 0.0);
                let v = ingest_raster_velocity(path, rect)?;
                let CoefficientField::Raster { grid } = v else { unreachable!("raster ingestion returns a raster") };
                Medium::Raster { grid, beta_scaled: *beta_scaled }
            }
        })
    }

    fn epsilons(&self) -> Vec<Option<f64>> {
        match self {
            Medium::Inclusions(e) => e.iter().map(|&x| Some(x)).collect(),
            _ => vec![None],
        }
    }

    fn rect(&self) -> Rect {
        match self {
            Medium::Raster { grid, .. } => grid.rect,
            _ => Rect::unit_square(),
        }
    }
}

/// Mesh sizes `(nx, ny)` for a sweep point.
fn mesh_sizes(cfg: &ExperimentConfig, medium: &Medium, k: f64, eps: Option<f64>, mx: usize, my: usize) -> Result<Vec<(usize, usize)>> {
    let rect = medium.rect();
    // inclusion edges sit at multiples of eps / 4
    let align = eps.map_or(1, |e| (4.0 / e).round() as usize);
    match &cfg.problem.mesh {
        MeshRule::Elements { elements } => Ok(elements.iter().map(|&n| (n * mx / my.max(1), n)).collect()),
        MeshRule::Rule { rule } => {
            let k_eff = eps.map_or(k, |e| k / e);
            let n = rule.eval(k_eff).ceil() as usize;
            let ny = round_up(n.max(1), lcm(my, align));
            let nx = round_up((ny as f64 * rect.width() / rect.height()).round() as usize, lcm(mx, align));
            Ok(vec![(nx, ny)])
        }
        MeshRule::PerWavelength { per_wavelength } => {
            let v_max = match medium {
                Medium::Raster { grid, .. } => grid.values.iter().fold(0.0f64, |a, &b| a.max(b)),
                _ => 1.0,
            };
            let h = 2.0 * std::f64::consts::PI / (k * v_max) / per_wavelength;
            let nx = round_up((rect.width() / h).ceil() as usize, mx);
            let ny = round_up((rect.height() / h).ceil() as usize, my);
            Ok(vec![(nx, ny)])
        }
    }
}

fn build_spec(cfg: &ExperimentConfig, kind: ExperimentKind, medium: &Medium, k: f64, eps: Option<f64>) -> Result<(ProblemSpec, Option<[f64; 2]>)> {
    let p = &cfg.problem;
    let direction = normalized(p.direction.unwrap_or_else(|| default_direction(kind)))?;
    let mut spec = match p.boundary_data {
        BoundaryDataConfig::PlaneWave => ProblemSpec::plane_wave(k, direction),
        BoundaryDataConfig::Zero => ProblemSpec::homogeneous(k),
    };
    spec.beta = CoefficientField::constant(p.beta);
    let rect = medium.rect();
    match medium {
        Medium::Constant => {}
        Medium::Inclusions(_) => spec.a = CoefficientField::PeriodicInclusions { eps: eps.expect("epsilon for inclusions") },
        Medium::Raster { grid, beta_scaled } => {
            let v = CoefficientField::Raster { grid: grid.clone() };
            spec.beta = if *beta_scaled { v.clone().scaled(k) } else { v.clone() };
            spec.v = v;
            spec.boundary[BoundaryTag::ALL.iter().position(|&t| t == BoundaryTag::Top).unwrap()] = BoundaryKind::Dirichlet;
            if p.boundary_data == BoundaryDataConfig::PlaneWave {
                return Err(MsgfemError::Config("raster media need boundary_data = \"zero\"".into()));
            }
        }
    }
    spec.source = match p.source {
        SourceConfig::None => Source::None,
        SourceConfig::Constant { value } => Source::Function(ScalarFn::new(move |_, _| c64::new(value, 0.0))),
        SourceConfig::Point { x, y } => match medium {
            Medium::Raster { .. } => Source::Point { x: rect.x0 + x * rect.width(), y: rect.y1 - y * rect.height(), amplitude: c64::new(1.0, 0.0) },
            _ => Source::Point { x, y, amplitude: c64::new(1.0, 0.0) },
        },
    };
    let exact = matches!(medium, Medium::Constant)
        && matches!(p.source, SourceConfig::None)
        && p.boundary_data == BoundaryDataConfig::PlaneWave
        && p.beta == 1.0;
    Ok((spec, exact.then_some(direction)))
}

fn build_instance(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    medium: &Medium,
    (k, frequency): (f64, Option<f64>),
    eps: Option<f64>,
    (nx, ny): (usize, usize),
    warnings: &mut Vec<String>,
) -> Result<Instance> {
    let mesh = Mesh::new(medium.rect(), nx, ny)?;
    let (spec, exact_direction) = build_spec(cfg, kind, medium, k, eps)?;
    let v_max = spec.v.bounds().1;
    let per_wavelength = 2.0 * std::f64::consts::PI / (k * v_max) / mesh.h();
    if per_wavelength < 4.0 {
        warnings.push(format!("k = {k}: only {per_wavelength:.2} elements per wavelength"));
    }
    let space = FeSpace::new(mesh, cfg.problem.degree)?;
    let system = assemble_global(&space, &spec)?;
    Ok(Instance { space, spec, system, k, frequency, epsilon: eps, exact_direction })
}

/// Every instance of the sweep with the decomposition parameters `(mx, my)`.
fn for_each_point(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    out: &mut ExperimentOutput,
    mut body: impl FnMut(&Instance, usize, usize, &mut ExperimentOutput) -> Result<()>,
) -> Result<()> {
    let medium = Medium::load(cfg)?;
    for k in cfg.wavenumbers() {
        for eps in medium.epsilons() {
            for my in cfg.subdomain_counts(k.0) {
                let mx = my * cfg.partition.aspect;
                for sizes in mesh_sizes(cfg, &medium, k.0, eps, mx, my)? {
                    let inst = build_instance(cfg, kind, &medium, k, eps, sizes, &mut out.warnings)?;
                    body(&inst, mx, my, out)?;
                }
            }
        }
    }
    Ok(())
}

/// Decomposition of `inst` for one oversampling width.
fn plan_for(cfg: &ExperimentConfig, inst: &Instance, mx: usize, my: usize, oversampling: &super::config::Width) -> Result<DecompositionPlan> {
    let mesh = inst.space.mesh();
    let big_h = mesh.rect.height() / my as f64;
    let h = mesh.hy();
    let params = PartitionParams {
        mx,
        my,
        overlap_layers: cfg.partition.overlap.layers(h, big_h)?,
        oversampling_layers: oversampling.layers(h, big_h)?,
    };
    DecompositionPlan::new(&inst.space, params, Some(&inst.system.dirichlet))
}

fn decorate(row: &mut ResultRow, plan: &DecompositionPlan, inst: &Instance) {
    row.mx = plan.params.mx;
    row.my = plan.params.my;
    row.overlap_layers = plan.params.overlap_layers;
    row.oversampling_layers = plan.params.oversampling_layers;
    row.h_over_h_star = plan.summary(&inst.space).h_over_h_star;
}

fn setup_options(cfg: &ExperimentConfig, eigen: EigenRequest) -> SetupOptions {
    SetupOptions {
        mode: cfg.solver.mode,
        local_mode: cfg.solver.local_mode,
        eigen,
        eig_route: cfg.coarse.route,
        rhs_form: cfg.coarse.rhs_form,
        factor_policy: cfg.solver.factor_policy,
    }
}

/// One eigensolve per decomposition serves every selection of the sweep.
fn widest_request(selections: &[Selection], k: f64) -> EigenRequest {
    let counts = selections.iter().filter_map(|s| match s {
        Selection::Count(n) => Some(*n),
        Selection::Tolerance(_) => None,
    });
    if let Some(n) = counts.max() {
        return EigenRequest::Count(n);
    }
    let rho = selections
        .iter()
        .filter_map(|s| match s {
            Selection::Tolerance(r) => Some(r.eval(k)),
            Selection::Count(_) => None,
        })
        .fold(f64::INFINITY, f64::min);
    EigenRequest::AboveThreshold(rho)
}

fn request_for(selection: Selection, k: f64) -> EigenRequest {
    match selection {
        Selection::Count(n) => EigenRequest::Count(n),
        Selection::Tolerance(r) => EigenRequest::AboveThreshold(r.eval(k)),
    }
}

/// GMRES or Richardson with the two-level (or configured) preconditioner.
fn run_solver_sweep(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::default();
    let one_level = cfg.solver.mode == PreconditionerMode::OneLevelOras;
    let selections = if one_level { Vec::new() } else { cfg.selections()? };
    for_each_point(cfg, kind, &mut out, |inst, mx, my, out| {
        let reference = if cfg.solver.measure_lambda { Some(inst.system.solve_direct()?) } else { None };
        for oversampling in &cfg.partition.oversampling {
            let plan = plan_for(cfg, inst, mx, my, oversampling)?;
            let request = if one_level { EigenRequest::Count(0) } else { widest_request(&selections, inst.k) };
            let t = Instant::now();
            let mut pre = Preconditioner::setup(&inst.space, &inst.spec, &inst.system, &plan, &setup_options(cfg, request))?;
            let base_setup = t.elapsed().as_secs_f64();
            let points: Vec<Option<Selection>> = if one_level { vec![None] } else { selections.iter().map(|&s| Some(s)).collect() };
            for selection in points {
                let t = Instant::now();
                if let Some(s) = selection {
                    pre.reselect(request_for(s, inst.k))?;
                }
                let setup_s = base_setup + t.elapsed().as_secs_f64();
                let mut row = inst.base_row(kind);
                decorate(&mut row, &plan, inst);
                row.mode = serde_json::to_value(cfg.solver.mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                match selection {
                    Some(Selection::Count(n)) => row.n_loc = Some(n),
                    Some(Selection::Tolerance(r)) => row.rho = Some(r.eval(inst.k)),
                    None => {}
                }
                if !one_level {
                    row.coarse_dim = Some(pre.coarse_dim());
                }
                if let Some(u) = &reference {
                    if !one_level {
                        row.lambda_oneshot = Some(pre.lambda_one_shot(u)?);
                    }
                }
                let t = Instant::now();
                let history = solve_point(cfg, &pre, reference.as_deref(), &mut row)?;
                if cfg.output.timings {
                    row.setup_s = Some(setup_s);
                    row.solve_s = Some(t.elapsed().as_secs_f64());
                }
                if kind == ExperimentKind::ResidualCurves {
                    for (j, r) in history.iter().enumerate() {
                        out.rows.push(ResultRow { step: Some(j), residual: Some(*r), ..row.clone() });
                    }
                } else {
                    out.rows.push(row);
                }
            }
        }
        Ok(())
    })?;
    Ok(out)
}

/// Runs the configured iteration; fills iterations and status, returns the residual history.
fn solve_point(cfg: &ExperimentConfig, pre: &Preconditioner<'_>, reference: Option<&[c64]>, row: &mut ResultRow) -> Result<Vec<f64>> {
    let s = &cfg.solver;
    let norm_mode = match s.norm {
        super::config::NormChoice::Euclidean => NormMode::Euclidean,
        super::config::NormChoice::Energy => NormMode::Energy(std::sync::Arc::new(pre.system().energy_matrix(NormKind::Ak))),
    };
    let result = match s.method {
        SolverMethod::Gmres => {
            let gcfg = GmresConfig {
                max_iterations: s.max_iterations,
                relative_tolerance: s.tolerance,
                restart: s.restart,
                norm_mode,
                linearity_probe: false,
                allow_unconverged: true,
            };
            gmres_solve(pre, &gcfg, s.side).map(|(_, rep)| rep)
        }
        SolverMethod::Richardson => {
            let rcfg = RichardsonConfig { max_iterations: s.max_iterations, relative_tolerance: s.tolerance, norm_mode };
            let zero = vec![c64::new(0.0, 0.0); pre.system().dim()];
            richardson_solve(pre, &zero, &rcfg, reference).map(|(_, rep)| rep)
        }
    };
    match result {
        Ok(rep) => {
            row.iterations = Some(rep.iterations);
            row.status = Some(if rep.converged { "converged" } else { "not_converged" }.to_string());
            Ok(rep.residual_history)
        }
        Err(MsgfemError::Diverged { .. }) => {
            row.status = Some("diverged".to_string());
            Ok(Vec::new())
        }
        Err(e) => Err(e),
    }
}

fn plane_wave_exact(inst: &Instance) -> Result<[f64; 2]> {
    inst.exact_direction
        .ok_or_else(|| MsgfemError::Config("this experiment needs the plane wave as exact solution (constant medium, no source, beta = 1)".into()))
}

/// `|v|_{H1}` of a discrete function through the stiffness matrix.
fn discrete_h1(system: &AssembledSystem, v: &[c64]) -> f64 {
    system.stiffness.quadratic_form(v).re.max(0.0).sqrt()
}

/// Smallest uniform eigenvector count meeting the accuracy criterion
/// `|u_h - u_G|_{H1} <= |u - u_h|_{H1}`: doubling bracket, then linear scan.
pub fn find_n_min(pre: &mut Preconditioner<'_>, u_h: &[c64], fe_error: f64, n_max: usize) -> Result<(usize, f64)> {
    let check = |n: usize, pre: &mut Preconditioner<'_>| -> Result<Option<f64>> {
        pre.reselect(EigenRequest::AtMost(n))?;
        let ug = pre.one_shot()?;
        let err = discrete_h1(pre.system(), &linalg::sub(u_h, &ug));
        Ok((err <= fe_error).then_some(err))
    };
    let mut lo = 0;
    let mut hi = 1;
    while hi < n_max && check(hi, pre)?.is_none() {
        lo = hi;
        hi = (2 * hi).min(n_max);
    }
    for n in lo + 1..=hi {
        if let Some(e) = check(n, pre)? {
            return Ok((n, e));
        }
    }
    Err(MsgfemError::CriterionUnreachable { max_tried: n_max })
}

fn run_plane_wave_scaling(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let kind = ExperimentKind::PlaneWaveScaling;
    let mut out = ExperimentOutput::default();
    for_each_point(cfg, kind, &mut out, |inst, mx, my, out| {
        let d = plane_wave_exact(inst)?;
        let u_h = inst.system.solve_direct()?;
        let k = inst.k;
        let fe_error = h1_seminorm_error(&inst.space, &u_h, |x, y| crate::problem::assembly::plane_wave_gradient(k, d, x, y));
        for oversampling in &cfg.partition.oversampling {
            let plan = plan_for(cfg, inst, mx, my, oversampling)?;
            let opts = SetupOptions { mode: PreconditionerMode::TwoLevelHybrid, ..setup_options(cfg, EigenRequest::AtMost(cfg.coarse.n_max)) };
            let mut pre = Preconditioner::setup(&inst.space, &inst.spec, &inst.system, &plan, &opts)?;
            let (n_min, err) = find_n_min(&mut pre, &u_h, fe_error, cfg.coarse.n_max)?;
            let mut row = inst.base_row(kind);
            decorate(&mut row, &plan, inst);
            row.n_min = Some(n_min);
            row.n_loc = Some(n_min);
            row.coarse_dim = Some(pre.coarse_dim());
            row.fe_h1_error = Some(fe_error);
            row.gfem_h1_error = Some(err);
            out.rows.push(row);
        }
        Ok(())
    })?;
    Ok(out)
}

/// `C_S` for one subdomain: local particular solve error over the oversampling
/// domain relative to the solution on the enlarged domain.
pub fn stability_constant(inst: &Instance, plan: &DecompositionPlan, i: usize, u_h: &[c64]) -> Result<f64> {
    let space = &inst.space;
    let dirichlet = &inst.system.dirichlet;
    let loc = assemble_local_with_mask(space, &inst.spec, &plan.oversampled_triangles(i), dirichlet)?;
    let factor = linalg::factorize(&loc.b_impedance())?;
    let mut psi: Vec<c64> = loc.nodes.iter().map(|&q| inst.system.f[q]).collect();
    factor.solve_in_place(&mut psi);
    let diff: Vec<c64> = loc.nodes.iter().zip(&psi).map(|(&q, p)| u_h[q] - p).collect();
    let num = loc.energy_matrix(NormKind::Ak).quadratic_form(&diff).re.max(0.0).sqrt();
    let enlarged = assemble_local_with_mask(space, &inst.spec, &plan.enlarged_triangles(space, i), dirichlet)?;
    let ue: Vec<c64> = enlarged.nodes.iter().map(|&q| u_h[q]).collect();
    let den = enlarged.energy_matrix(NormKind::Ak).quadratic_form(&ue).re.max(0.0).sqrt();
    Ok(num / den)
}

fn run_stability_cs(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let kind = ExperimentKind::StabilityCs;
    let mut out = ExperimentOutput::default();
    // first (kh)^{-1/2} and C_S seen per (subdomain label, oversampling index)
    let mut anchors: std::collections::HashMap<(String, usize), (f64, f64)> = Default::default();
    for_each_point(cfg, kind, &mut out, |inst, mx, my, out| {
        let u_h = inst.system.solve_direct()?;
        for (w, oversampling) in cfg.partition.oversampling.iter().enumerate() {
            let plan = plan_for(cfg, inst, mx, my, oversampling)?;
            let find = |gx: usize, gy: usize| plan.subdomains.iter().position(|s| s.grid_pos == (gx, gy));
            let mut picks = vec![("interior".to_string(), find(mx / 2, my / 2))];
            if mx > 1 {
                picks.push(("boundary".to_string(), find(0, my / 2)));
            }
            for (label, idx) in picks {
                let i = idx.expect("grid position exists");
                let c_s = stability_constant(inst, &plan, i, &u_h)?;
                let kh = inst.k * inst.space.mesh().h();
                let (kh0, c0) = *anchors.entry((label.clone(), w)).or_insert((kh, c_s));
                let mut row = inst.base_row(kind);
                decorate(&mut row, &plan, inst);
                row.subdomain = Some(label);
                row.c_s = Some(c_s);
                row.c_s_envelope = Some(c0 * (kh0 / kh).sqrt());
                out.rows.push(row);
            }
        }
        Ok(())
    })?;
    Ok(out)
}

/// Runs the experiment named in `kind` (or in the configuration).
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if let Some(named) = cfg.experiment {
        if named != kind {
            return Err(MsgfemError::Config(format!("config is for {named}, asked to run {kind}")));
        }
    }
    match kind {
        ExperimentKind::PlaneWaveScaling => run_plane_wave_scaling(cfg),
        ExperimentKind::StabilityCs => run_stability_cs(cfg),
        ExperimentKind::HighContrast => {
            if !matches!(cfg.problem.medium, MediumConfig::PeriodicInclusions { .. }) {
                return Err(MsgfemError::Config("high_contrast needs medium.kind = \"periodic_inclusions\"".into()));
            }
            run_solver_sweep(cfg, kind)
        }
        ExperimentKind::RasterMedium => {
            if !matches!(cfg.problem.medium, MediumConfig::Raster { .. }) {
                return Err(MsgfemError::Config("raster_medium needs medium.kind = \"raster\"".into()));
            }
            run_solver_sweep(cfg, kind)
        }
        ExperimentKind::ResidualCurves | ExperimentKind::RhoTables | ExperimentKind::HRobustness | ExperimentKind::SubdomainScaling => {
            run_solver_sweep(cfg, kind)
        }
    }
}

/// Builds the instance of the first sweep point; used by the matrix export
/// and eigenvalue dump commands.
pub fn first_instance(cfg: &ExperimentConfig) -> Result<(Instance, usize, usize)> {
    cfg.validate()?;
    let kind = cfg.experiment.unwrap_or(ExperimentKind::HRobustness);
    let medium = Medium::load(cfg)?;
    let k = *cfg.wavenumbers().first().ok_or_else(|| MsgfemError::Config("no wavenumber given".into()))?;
    let eps = medium.epsilons()[0];
    let my = *cfg.subdomain_counts(k.0).first().ok_or_else(|| MsgfemError::Config("no subdomain count given".into()))?;
    let mx = my * cfg.partition.aspect;
    let sizes = *mesh_sizes(cfg, &medium, k.0, eps, mx, my)?.first().ok_or_else(|| MsgfemError::Config("no mesh size given".into()))?;
    let inst = build_instance(cfg, kind, &medium, k, eps, sizes, &mut Vec::new())?;
    Ok((inst, mx, my))
}

/// Local eigenvalues of every subdomain for the first sweep point and the
/// first oversampling width.
pub fn eigenvalue_dump(cfg: &ExperimentConfig) -> Result<Vec<crate::coarse::LocalEigenBasis>> {
    let (inst, mx, my) = first_instance(cfg)?;
    let plan = plan_for(cfg, &inst, mx, my, &cfg.partition.oversampling[0])?;
    let request = match cfg.selections() {
        Ok(s) => widest_request(&s, inst.k),
        Err(_) => EigenRequest::AtMost(cfg.coarse.n_max),
    };
    (0..plan.len())
        .map(|i| {
            let loc = assemble_local_with_mask(&inst.space, &inst.spec, &plan.oversampled_triangles(i), &inst.system.dirichlet)?;
            crate::coarse::solve_local_eigenproblem(&loc, &plan.subdomains[i].chi_local(), request, cfg.coarse.rhs_form, cfg.coarse.route, i)
        })
        .collect()
}
