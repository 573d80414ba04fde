//! Scalar coefficient fields.

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::mesh::Rect;
use crate::{MsgfemError, Result};

/// Piecewise-constant values on a uniform grid over a rectangle. Row 0 is the
/// top of the rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterGrid {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    /// Row-major values, `ny` rows of `nx` entries.
    pub values: Vec<f64>,
}

impl RasterGrid {
    pub fn new(rect: Rect, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(MsgfemError::InvalidDimensions { nx, ny });
        }
        if values.len() != nx * ny {
            return Err(MsgfemError::DimensionMismatch { expected: nx * ny, found: values.len() });
        }
        Ok(Self { rect, nx, ny, values })
    }

    /// Value of the cell containing `(x, y)`; points outside are clamped to the
    /// nearest cell.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let r = &self.rect;
        let col = ((x - r.x0) / r.width() * self.nx as f64).floor();
        let row = ((r.y1 - y) / r.height() * self.ny as f64).floor();
        let col = (col.max(0.0) as usize).min(self.nx - 1);
        let row = (row.max(0.0) as usize).min(self.ny - 1);
        self.values[row * self.nx + col]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientField {
    Constant { value: f64 },
    Raster { grid: RasterGrid },
    /// `eps^2` inside the inclusions, 1 elsewhere. The inclusions are the
    /// cells `eps * (j + (lo, hi)^2)` intersected with `(lo, hi)^2`.
    PeriodicInclusions { eps: f64 },
    Scaled { base: Box<CoefficientField>, factor: f64 },
}

/// Window of the periodic inclusions, both in the unit cell and in the domain.
const INCLUSION_WINDOW: (f64, f64) = (0.25, 0.75);

impl CoefficientField {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self::Scaled { base: Box::new(self), factor }
    }

    pub fn is_inside_inclusion(eps: f64, x: f64, y: f64) -> bool {
        let (lo, hi) = INCLUSION_WINDOW;
        let inside = |t: f64| t > lo && t < hi;
        let frac = |t: f64| t / eps - (t / eps).floor();
        inside(x) && inside(y) && inside(frac(x)) && inside(frac(y))
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Raster { grid } => grid.sample(x, y),
            Self::PeriodicInclusions { eps } => {
                if Self::is_inside_inclusion(*eps, x, y) {
                    eps * eps
                } else {
                    1.0
                }
            }
            Self::Scaled { base, factor } => factor * base.eval(x, y),
        }
    }

    /// Lower and upper bounds of the field.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Self::Constant { value } => (*value, *value),
            Self::Raster { grid } => grid
                .values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))),
            Self::PeriodicInclusions { eps } => ((eps * eps).min(1.0), (eps * eps).max(1.0)),
            Self::Scaled { base, factor } => {
                let (lo, hi) = base.bounds();
                let (a, b) = (factor * lo, factor * hi);
                (a.min(b), a.max(b))
            }
        }
    }

    /// Fails unless the field is bounded below by a positive constant.
    pub fn check_positive(&self, name: &str) -> Result<()> {
        let (lo, hi) = self.bounds();
        if !(lo > 0.0) || !hi.is_finite() {
            return Err(MsgfemError::CoefficientOutOfBounds(format!("{name} has range [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// Reads a velocity raster and returns the field `V = 1 / velocity`.
///
/// The format is a first line `nx ny` followed by `ny` lines of `nx` positive
/// numbers separated by spaces or commas, the first line being the top row.
pub fn ingest_raster_velocity(path: impl AsRef<Path>, rect: Rect) -> Result<CoefficientField> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_raster_velocity(std::io::BufReader::new(file), rect)
}

pub fn parse_raster_velocity<R: BufRead>(input: R, rect: Rect) -> Result<CoefficientField> {
    let mut lines = input.lines().filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()));
    let split = |s: &str| -> Vec<String> {
        s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).map(str::to_owned).collect()
    };
    let header = lines.next().ok_or_else(|| MsgfemError::MalformedFile("empty raster".into()))??;
    let dims = split(&header);
    if dims.len() != 2 {
        return Err(MsgfemError::MalformedFile(format!("expected 'nx ny', found '{header}'")));
    }
    let parse_dim = |s: &str| s.parse::<usize>().map_err(|_| MsgfemError::MalformedFile(format!("bad dimension '{s}'")));
    let (nx, ny) = (parse_dim(&dims[0])?, parse_dim(&dims[1])?);
    let mut values = Vec::with_capacity(nx * ny);
    for row in 0..ny {
        let line = lines
            .next()
            .ok_or_else(|| MsgfemError::MalformedFile(format!("expected {ny} rows, found {row}")))??;
        let fields = split(&line);
        if fields.len() != nx {
            return Err(MsgfemError::MalformedFile(format!("row {row} has {} values, expected {nx}", fields.len())));
        }
        for (col, f) in fields.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| MsgfemError::MalformedFile(format!("bad number '{f}'")))?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(MsgfemError::NonpositiveVelocity { row, col, value: v });
            }
            values.push(1.0 / v);
        }
    }
    if let Some(extra) = lines.next() {
        return Err(MsgfemError::MalformedFile(format!("trailing data '{}'", extra?)));
    }
    Ok(CoefficientField::Raster { grid: RasterGrid::new(rect, nx, ny, values)? })
}
