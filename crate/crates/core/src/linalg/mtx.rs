//! Matrix Market coordinate format for complex sparse matrices.

use std::io::{BufRead, Write};

use super::sparse::ComplexSparseMatrix;
use crate::{c64, MsgfemError, Result};

pub const HEADER: &str = "%%MatrixMarket matrix coordinate complex general";

/// Writes `a` with 1-based indices, one entry per line, full precision.
pub fn write_matrix_market<W: Write>(a: &ComplexSparseMatrix, mut out: W) -> Result<()> {
    writeln!(out, "{HEADER}")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, v) in cols.iter().zip(vals) {
            writeln!(out, "{} {} {:e} {:e}", i + 1, j + 1, v.re, v.im)?;
        }
    }
    Ok(())
}

pub fn read_matrix_market<R: BufRead>(input: R) -> Result<ComplexSparseMatrix> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| MsgfemError::MalformedFile("empty file".into()))??;
    if header.trim() != HEADER {
        return Err(MsgfemError::MalformedFile(format!("unsupported header '{}'", header.trim())));
    }
    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(MsgfemError::MalformedFile(format!("bad size line '{line}'")));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|_| MsgfemError::MalformedFile(format!("bad integer '{s}'")));
                size = Some((p(fields[0])?, p(fields[1])?, p(fields[2])?));
            }
            Some((m, n, _)) => {
                if fields.len() != 4 {
                    return Err(MsgfemError::MalformedFile(format!("bad entry line '{line}'")));
                }
                let idx = |s: &str, bound: usize| -> Result<usize> {
                    match s.parse::<usize>() {
                        Ok(v) if v >= 1 && v <= bound => Ok(v - 1),
                        _ => Err(MsgfemError::MalformedFile(format!("index '{s}' out of range"))),
                    }
                };
                let num = |s: &str| s.parse::<f64>().map_err(|_| MsgfemError::MalformedFile(format!("bad number '{s}'")));
                triplets.push((idx(fields[0], m)?, idx(fields[1], n)?, c64::new(num(fields[2])?, num(fields[3])?)));
            }
        }
    }
    let (m, n, nnz) = size.ok_or_else(|| MsgfemError::MalformedFile("missing size line".into()))?;
    if triplets.len() != nnz {
        return Err(MsgfemError::MalformedFile(format!("expected {nnz} entries, found {}", triplets.len())));
    }
    ComplexSparseMatrix::from_triplets(m, n, triplets)
}
