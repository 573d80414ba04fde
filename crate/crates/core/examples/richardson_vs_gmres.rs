//! Runs the preconditioned Richardson iteration (repeated one-shot solves)
//! and GMRES side by side in the same energy norm.

use std::sync::Arc;

use msgfem::c64;
use msgfem::coarse::EigenRequest;
use msgfem::fespace::FeSpace;
use msgfem::linalg::{GmresConfig, NormMode};
use msgfem::mesh::{Mesh, Rect};
use msgfem::partition::{DecompositionPlan, PartitionParams};
use msgfem::problem::{assemble_global, NormKind, ProblemSpec};
use msgfem::solver::{contraction_estimate, gmres_solve, richardson_solve, Preconditioner, PreconditioningSide, RichardsonConfig, SetupOptions};

fn main() -> msgfem::Result<()> {
    let space = FeSpace::new(Mesh::new(Rect::unit_square(), 48, 48)?, 2)?;
    let spec = ProblemSpec::plane_wave(24.0, [0.6, 0.8]);
    let sys = assemble_global(&space, &spec)?;
    let plan = DecompositionPlan::new(&space, PartitionParams::square(4, 2, 2), Some(&sys.dirichlet))?;
    let opts = SetupOptions { eigen: EigenRequest::Count(10), ..Default::default() };
    let p = Preconditioner::setup(&space, &spec, &sys, &plan, &opts)?;

    let u = sys.solve_direct()?;
    let norm = NormMode::Energy(Arc::new(sys.energy_matrix(NormKind::Ak)));
    let steps = 8;
    let rcfg = RichardsonConfig { max_iterations: steps, relative_tolerance: 0.0, norm_mode: norm.clone() };
    let (_, rich) = richardson_solve(&p, &vec![c64::new(0.0, 0.0); sys.dim()], &rcfg, Some(&u))?;
    let gcfg = GmresConfig { max_iterations: steps, relative_tolerance: 1e-14, norm_mode: norm, allow_unconverged: true, ..Default::default() };
    let (_, gm) = gmres_solve(&p, &gcfg, PreconditioningSide::Left)?;

    println!("one-shot error {:.4}", p.lambda_one_shot(&u)?);
    println!("power-iteration estimate of the worst-case contraction {:.4}", contraction_estimate(&p, 30, 7)?);
    println!("step  Richardson   GMRES        error ratio");
    for j in 0..rich.residual_history.len().min(gm.residual_history.len()) {
        let ratio = if j == 0 { f64::NAN } else { rich.error_history[j] / rich.error_history[j - 1] };
        println!("{j:>4}  {:.4e}  {:.4e}  {ratio:.4}", rich.residual_history[j], gm.residual_history[j]);
    }
    Ok(())
}
