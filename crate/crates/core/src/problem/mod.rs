//! The heterogeneous Helmholtz model problem: coefficients, data and the
//! discrete sesquilinear forms.

pub mod assembly;
pub mod coefficient;

pub use assembly::{
    assemble_global, assemble_local, h1_seminorm_error, plane_wave_gradient, plane_wave_value, AssembledSystem, BoundaryData, BoundaryKind, LocalSystem,
    NormKind, ProblemSpec, ScalarFn, Source,
};
pub use coefficient::{ingest_raster_velocity, parse_raster_velocity, CoefficientField, RasterGrid};
