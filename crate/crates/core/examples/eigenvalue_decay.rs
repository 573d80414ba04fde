//! Prints the local eigenvalues of an interior subdomain for growing
//! oversampling, showing the faster decay on larger oversampling domains.

use msgfem::coarse::{solve_local_eigenproblem, EigRoute, EigenRequest};
use msgfem::fespace::FeSpace;
use msgfem::mesh::{Mesh, Rect};
use msgfem::partition::{DecompositionPlan, PartitionParams};
use msgfem::problem::{assemble_global, assemble_local, NormKind, ProblemSpec};

fn main() -> msgfem::Result<()> {
    let k = 40.0;
    let space = FeSpace::new(Mesh::new(Rect::unit_square(), 104, 104)?, 2)?;
    let spec = ProblemSpec::homogeneous(k);
    let sys = assemble_global(&space, &spec)?;
    println!("layers  n=1        n=5        n=10       n=20       n=30");
    for layers in [0, 1, 2, 4, 6] {
        let plan = DecompositionPlan::new(&space, PartitionParams::square(8, 2, layers), Some(&sys.dirichlet))?;
        let i = plan.subdomains.iter().position(|s| s.grid_pos == (3, 3)).expect("interior subdomain");
        let loc = assemble_local(&space, &spec, &plan.oversampled_triangles(i))?;
        let chi = plan.subdomains[i].chi_local();
        let basis = solve_local_eigenproblem(&loc, &chi, EigenRequest::AtMost(30), NormKind::A, EigRoute::Harmonic, i)?;
        let at = |n: usize| basis.values.get(n - 1).map_or(f64::NAN, |l| l.sqrt());
        println!(
            "{layers:>6}  {:.3e}  {:.3e}  {:.3e}  {:.3e}  {:.3e}",
            at(1),
            at(5),
            at(10),
            at(20),
            at(30)
        );
    }
    Ok(())
}
