//! Finite-element toolkit for heterogeneous Helmholtz problems built around a
//! multiscale spectral generalized FEM (MS-GFEM) coarse space and the
//! two-level hybrid restricted additive Schwarz preconditioner derived from it.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: complex sparse storage, sparse LU, dense Hermitian
//!   generalized eigensolver, GMRES and Matrix Market I/O.
//! - [`mesh`] and [`fespace`]: structured triangulations of rectangles and
//!   P1/P2 Lagrange spaces.
//! - [`problem`]: coefficient fields, sources and the assembly of every
//!   global and local sesquilinear form.
//! - [`partition`]: overlapping decompositions, oversampling domains and the
//!   partition of unity.
//! - [`coarse`]: local particular solves, local eigenproblems on the discrete
//!   Helmholtz-harmonic space and the coarse space.
//! - [`solver`]: the MS-GFEM map, the preconditioner, Richardson and GMRES
//!   drivers.
//! - [`experiments`]: configuration-driven benchmark harness.

pub mod coarse;
pub mod error;
pub mod experiments;
pub mod fespace;
pub mod linalg;
pub mod mesh;
pub mod partition;
pub mod problem;
pub mod quadrature;
pub mod report;
pub mod solver;

pub use error::{MsgfemError, Result};
pub use num_complex::Complex64 as c64;

/// Caps the global rayon pool at `MSGFEM_THREADS` workers when the variable is
/// set. Safe to call more than once; only the first call has an effect.
pub fn init_thread_pool() {
    if let Some(n) = std::env::var("MSGFEM_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
