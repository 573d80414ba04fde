//! Result rows and their CSV form.

use std::io::Write;

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// One line of experiment output. Columns that do not apply stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub k: f64,
    pub frequency: Option<f64>,
    /// Elements per side in `x`.
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub degree: usize,
    pub dofs: usize,
    pub mx: usize,
    pub my: usize,
    pub overlap_layers: usize,
    pub oversampling_layers: usize,
    /// Interior subdomain width over oversampling-domain width.
    pub h_over_h_star: f64,
    pub epsilon: Option<f64>,
    pub n_loc: Option<usize>,
    pub rho: Option<f64>,
    pub mode: String,
    pub iterations: Option<usize>,
    /// `converged`, `not_converged` or `diverged`.
    pub status: Option<String>,
    pub coarse_dim: Option<usize>,
    /// Relative `A,k` error of the one-shot approximation.
    pub lambda_oneshot: Option<f64>,
    /// `|u - u_h|_{H1}` against the analytic plane wave.
    pub fe_h1_error: Option<f64>,
    /// `|u_h - u_G|_{H1}` at `n_min`.
    pub gfem_h1_error: Option<f64>,
    pub n_min: Option<usize>,
    pub subdomain: Option<String>,
    pub c_s: Option<f64>,
    /// `(kh)^{-1/2}` scaled to match the first `c_s` of the same subdomain.
    pub c_s_envelope: Option<f64>,
    pub step: Option<usize>,
    pub residual: Option<f64>,
    pub setup_s: Option<f64>,
    pub solve_s: Option<f64>,
}

/// Writes the schema line, the resolved configuration as comments, the
/// header and the rows. Without rows only the comment lines are written.
pub fn write_csv<W: Write>(mut out: W, cfg: &ExperimentConfig, rows: &[ResultRow]) -> Result<()> {
    writeln!(out, "# schema={SCHEMA_VERSION}")?;
    for line in cfg.to_toml().lines() {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> crate::MsgfemError {
    crate::MsgfemError::Io(std::io::Error::other(e))
}
