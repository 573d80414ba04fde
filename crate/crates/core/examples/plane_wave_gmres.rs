//! Solves a plane-wave Helmholtz problem with the two-level preconditioner
//! inside GMRES and compares against the direct solve and the exact solution.

use msgfem::coarse::EigenRequest;
use msgfem::fespace::FeSpace;
use msgfem::linalg::{self, GmresConfig};
use msgfem::mesh::{Mesh, Rect};
use msgfem::partition::{DecompositionPlan, PartitionParams};
use msgfem::problem::{assemble_global, h1_seminorm_error, plane_wave_gradient, NormKind, ProblemSpec};
use msgfem::solver::{gmres_solve, Preconditioner, PreconditioningSide, SetupOptions};

fn main() -> msgfem::Result<()> {
    let k = 20.0;
    let d = [std::f64::consts::FRAC_1_SQRT_2; 2];
    let space = FeSpace::new(Mesh::new(Rect::unit_square(), 44, 44)?, 2)?;
    let spec = ProblemSpec::plane_wave(k, d);
    let sys = assemble_global(&space, &spec)?;
    let plan = DecompositionPlan::new(&space, PartitionParams::square(4, 2, 2), Some(&sys.dirichlet))?;
    println!("{} dofs, {} subdomains", sys.dim(), plan.len());

    let opts = SetupOptions { eigen: EigenRequest::Count(12), ..Default::default() };
    let p = Preconditioner::setup(&space, &spec, &sys, &plan, &opts)?;
    println!("coarse dimension {}", p.coarse_dim());

    let (x, report) = gmres_solve(&p, &GmresConfig::default(), PreconditioningSide::Left)?;
    println!("GMRES: {} iterations, converged {}", report.iterations, report.converged);
    for (j, r) in report.residual_history.iter().enumerate() {
        println!("  step {j:>2}  residual {r:.3e}");
    }

    let u = sys.solve_direct()?;
    let diff = sys.energy_norm(&linalg::sub(&u, &x), NormKind::Ak) / sys.energy_norm(&u, NormKind::Ak);
    println!("relative A,k distance to the direct solve {diff:.2e}");
    let fe = h1_seminorm_error(&space, &u, |x, y| plane_wave_gradient(k, d, x, y));
    println!("H1 seminorm error of the FE solution against the exact plane wave {fe:.3e}");
    println!("one-shot error {:.3e}", p.lambda_one_shot(&u)?);
    Ok(())
}
