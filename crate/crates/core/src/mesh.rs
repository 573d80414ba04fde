//! Structured triangulations of a rectangle.
//!
//! Each Cartesian cell is split along its lower-left to upper-right diagonal
//! into triangle `A = (v00, v10, v11)` and triangle `B = (v00, v11, v01)`, both
//! positively oriented. Vertex `(i, j)` has index `j * (nx + 1) + i` and the
//! triangles of cell `(i, j)` have indices `2 * (j * nx + i)` and that plus one.

use serde::{Deserialize, Serialize};

use crate::{MsgfemError, Result};

/// Axis-aligned rectangle `(x0, x1) x (y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn unit_square() -> Self {
        Self::new(0.0, 0.0, 1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let tol = 1e-12 * self.width().max(self.height());
        x >= self.x0 - tol && x <= self.x1 + tol && y >= self.y0 - tol && y <= self.y1 + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    Left,
    Right,
    Top,
    Bottom,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [BoundaryTag::Left, BoundaryTag::Right, BoundaryTag::Top, BoundaryTag::Bottom];

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            BoundaryTag::Left => [-1.0, 0.0],
            BoundaryTag::Right => [1.0, 0.0],
            BoundaryTag::Top => [0.0, 1.0],
            BoundaryTag::Bottom => [0.0, -1.0],
        }
    }
}

/// A triangle edge lying on the domain boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub triangle: usize,
    /// Local vertex indices (0..3) of the edge endpoints within the triangle.
    pub local: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
}

impl Mesh {
    pub fn new(rect: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || !(rect.width() > 0.0) || !(rect.height() > 0.0) {
            return Err(MsgfemError::InvalidDimensions { nx, ny });
        }
        Ok(Self { rect, nx, ny })
    }

    pub fn hx(&self) -> f64 {
        self.rect.width() / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.rect.height() / self.ny as f64
    }

    /// Largest element edge length (the cell diagonal).
    pub fn h(&self) -> f64 {
        self.hx().hypot(self.hy())
    }

    pub fn n_vertices(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn n_triangles(&self) -> usize {
        2 * self.nx * self.ny
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn vertex_coords(&self, v: usize) -> [f64; 2] {
        let i = v % (self.nx + 1);
        let j = v / (self.nx + 1);
        [self.rect.x0 + i as f64 * self.hx(), self.rect.y0 + j as f64 * self.hy()]
    }

    /// Cell `(i, j)` containing triangle `t`.
    #[inline]
    pub fn cell_of(&self, t: usize) -> (usize, usize) {
        let c = t / 2;
        (c % self.nx, c / self.nx)
    }

    /// The three vertices of triangle `t`, counter-clockwise.
    pub fn triangle(&self, t: usize) -> [usize; 3] {
        let (i, j) = self.cell_of(t);
        let v00 = self.vertex_index(i, j);
        let v10 = self.vertex_index(i + 1, j);
        let v11 = self.vertex_index(i + 1, j + 1);
        let v01 = self.vertex_index(i, j + 1);
        if t % 2 == 0 {
            [v00, v10, v11]
        } else {
            [v00, v11, v01]
        }
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        self.triangle(t).map(|v| self.vertex_coords(v))
    }

    /// Signed area (positive for counter-clockwise orientation).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_coords(t);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn boundary_edges(&self) -> Vec<BoundaryEdge> {
        let mut edges = Vec::with_capacity(2 * (self.nx + self.ny));
        let tri = |i: usize, j: usize, upper: bool| 2 * (j * self.nx + i) + usize::from(upper);
        for i in 0..self.nx {
            edges.push(BoundaryEdge { triangle: tri(i, 0, false), local: [0, 1], tag: BoundaryTag::Bottom });
            edges.push(BoundaryEdge { triangle: tri(i, self.ny - 1, true), local: [1, 2], tag: BoundaryTag::Top });
        }
        for j in 0..self.ny {
            edges.push(BoundaryEdge { triangle: tri(self.nx - 1, j, false), local: [1, 2], tag: BoundaryTag::Right });
            edges.push(BoundaryEdge { triangle: tri(0, j, true), local: [2, 0], tag: BoundaryTag::Left });
        }
        edges
    }

    /// Triangle sharing local edge `e` of triangle `t`, where edge `e` joins
    /// local vertices `e` and `(e + 1) % 3`.
    pub fn edge_neighbor(&self, t: usize, e: usize) -> Option<usize> {
        let (i, j) = self.cell_of(t);
        let cell = |i: usize, j: usize| 2 * (j * self.nx + i);
        match (t % 2, e) {
            (0, 0) => (j > 0).then(|| cell(i, j - 1) + 1),
            (0, 1) => (i + 1 < self.nx).then(|| cell(i + 1, j) + 1),
            (0, 2) => Some(t + 1),
            (1, 0) => Some(t - 1),
            (1, 1) => (j + 1 < self.ny).then(|| cell(i, j + 1)),
            (1, 2) => (i > 0).then(|| cell(i - 1, j)),
            _ => panic!("edge index {e} out of range"),
        }
    }

    /// Triangle containing the point together with its barycentric coordinates.
    pub fn locate(&self, x: f64, y: f64) -> Result<(usize, [f64; 3])> {
        if !self.rect.contains(x, y) {
            return Err(MsgfemError::PointOutsideDomain(x, y));
        }
        let sx = (x - self.rect.x0) / self.hx();
        let sy = (y - self.rect.y0) / self.hy();
        let i = (sx.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (sy.floor().max(0.0) as usize).min(self.ny - 1);
        let s = (sx - i as f64).clamp(0.0, 1.0);
        let t = (sy - j as f64).clamp(0.0, 1.0);
        let cell = j * self.nx + i;
        if t <= s {
            Ok((2 * cell, [1.0 - s, s - t, t]))
        } else {
            Ok((2 * cell + 1, [1.0 - t, s, t - s]))
        }
    }
}
