//! Writes the global Helmholtz matrix in Matrix Market format and reads it back.

use msgfem::c64;
use msgfem::fespace::FeSpace;
use msgfem::linalg::{self, mtx};
use msgfem::mesh::{Mesh, Rect};
use msgfem::problem::{assemble_global, ProblemSpec};

fn main() -> msgfem::Result<()> {
    let space = FeSpace::new(Mesh::new(Rect::unit_square(), 8, 8)?, 2)?;
    let sys = assemble_global(&space, &ProblemSpec::plane_wave(5.0, [1.0, 0.0]))?;
    let mut text = Vec::new();
    mtx::write_matrix_market(&sys.b, &mut text)?;
    let head: Vec<&str> = std::str::from_utf8(&text).unwrap().lines().take(4).collect();
    println!("{}", head.join("\n"));
    let back = mtx::read_matrix_market(text.as_slice())?;
    let x: Vec<c64> = (0..sys.dim()).map(|i| c64::new(i as f64, 1.0)).collect();
    let diff = linalg::norm2(&linalg::sub(&back.mul_vec(&x), &sys.b.mul_vec(&x)));
    println!("{} x {} matrix with {} entries, round-trip defect {diff:.1e}", back.nrows(), back.ncols(), back.nnz());
    Ok(())
}
