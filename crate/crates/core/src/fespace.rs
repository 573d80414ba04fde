//! Continuous Lagrange finite-element spaces of degree 1 and 2.
//!
//! Degree-`p` nodes sit on a `(p nx + 1) x (p ny + 1)` lattice. Mesh vertices
//! come first (in vertex order), followed by the remaining lattice points in
//! row-major lattice order. Element nodes are listed as the three vertices
//! followed, for degree 2, by the midpoints of edges 01, 12 and 20.

use crate::c64;
use crate::mesh::{BoundaryTag, Mesh};
use crate::{MsgfemError, Result};

/// Gradients of the barycentric coordinates and the area of a triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub area: f64,
    pub grad_bary: [[f64; 2]; 3],
    pub vertices: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(v: [[f64; 2]; 3]) -> Self {
        let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        let grad = |a: usize, b: usize| [(v[a][1] - v[b][1]) / det, (v[b][0] - v[a][0]) / det];
        Self { area: 0.5 * det, grad_bary: [grad(1, 2), grad(2, 0), grad(0, 1)], vertices: v }
    }

    pub fn point(&self, l: [f64; 3]) -> [f64; 2] {
        let v = &self.vertices;
        [
            l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
            l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
        ]
    }
}

/// Local basis values at barycentric point `l`; the first `n_local(degree)` entries are used.
pub fn shape_values(degree: usize, l: [f64; 3]) -> [f64; 6] {
    if degree == 1 {
        [l[0], l[1], l[2], 0.0, 0.0, 0.0]
    } else {
        [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[2] * l[0],
        ]
    }
}

pub fn shape_gradients(degree: usize, l: [f64; 3], g: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut out = [[0.0; 2]; 6];
    if degree == 1 {
        out[..3].copy_from_slice(g);
        return out;
    }
    for d in 0..2 {
        for a in 0..3 {
            out[a][d] = (4.0 * l[a] - 1.0) * g[a][d];
        }
        for (k, (a, b)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            out[3 + k][d] = 4.0 * (l[a] * g[b][d] + l[b] * g[a][d]);
        }
    }
    out
}

pub fn n_local(degree: usize) -> usize {
    if degree == 1 {
        3
    } else {
        6
    }
}

#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Mesh,
    degree: usize,
    /// Lattice position of every node.
    node_lattice: Vec<(usize, usize)>,
    /// Node index of every lattice point, row-major.
    lattice_node: Vec<usize>,
    /// Element connectivity, `n_local(degree)` entries per triangle.
    elements: Vec<usize>,
    boundary_nodes: [Vec<usize>; 4],
}

impl FeSpace {
    pub fn new(mesh: Mesh, degree: usize) -> Result<Self> {
        if degree != 1 && degree != 2 {
            return Err(MsgfemError::UnsupportedDegree(degree));
        }
        let (lx, ly) = (degree * mesh.nx + 1, degree * mesh.ny + 1);
        let mut lattice_node = vec![usize::MAX; lx * ly];
        let mut node_lattice = Vec::with_capacity(lx * ly);
        for j in 0..=mesh.ny {
            for i in 0..=mesh.nx {
                lattice_node[degree * j * lx + degree * i] = node_lattice.len();
                node_lattice.push((degree * i, degree * j));
            }
        }
        for b in 0..ly {
            for a in 0..lx {
                if lattice_node[b * lx + a] == usize::MAX {
                    lattice_node[b * lx + a] = node_lattice.len();
                    node_lattice.push((a, b));
                }
            }
        }
        let nl = n_local(degree);
        let mut elements = Vec::with_capacity(nl * mesh.n_triangles());
        for t in 0..mesh.n_triangles() {
            let (i, j) = mesh.cell_of(t);
            let (a, b) = (degree * i, degree * j);
            let verts: [(usize, usize); 3] = if t % 2 == 0 {
                [(a, b), (a + degree, b), (a + degree, b + degree)]
            } else {
                [(a, b), (a + degree, b + degree), (a, b + degree)]
            };
            for v in verts {
                elements.push(lattice_node[v.1 * lx + v.0]);
            }
            if degree == 2 {
                for (p, q) in [(0, 1), (1, 2), (2, 0)] {
                    let m = ((verts[p].0 + verts[q].0) / 2, (verts[p].1 + verts[q].1) / 2);
                    elements.push(lattice_node[m.1 * lx + m.0]);
                }
            }
        }
        let mut boundary_nodes: [Vec<usize>; 4] = Default::default();
        for (slot, tag) in BoundaryTag::ALL.into_iter().enumerate() {
            let pts: Vec<(usize, usize)> = match tag {
                BoundaryTag::Left => (0..ly).map(|b| (0, b)).collect(),
                BoundaryTag::Right => (0..ly).map(|b| (lx - 1, b)).collect(),
                BoundaryTag::Bottom => (0..lx).map(|a| (a, 0)).collect(),
                BoundaryTag::Top => (0..lx).map(|a| (a, ly - 1)).collect(),
            };
            let mut nodes: Vec<usize> = pts.into_iter().map(|(a, b)| lattice_node[b * lx + a]).collect();
            nodes.sort_unstable();
            boundary_nodes[slot] = nodes;
        }
        Ok(Self { mesh, degree, node_lattice, lattice_node, elements, boundary_nodes })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.node_lattice.len()
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_triangles()
    }

    pub fn nodes_per_element(&self) -> usize {
        n_local(self.degree)
    }

    #[inline]
    pub fn element_nodes(&self, t: usize) -> &[usize] {
        let nl = n_local(self.degree);
        &self.elements[nl * t..nl * (t + 1)]
    }

    pub fn element_geometry(&self, t: usize) -> ElementGeometry {
        ElementGeometry::new(self.mesh.triangle_coords(t))
    }

    /// Lattice dimensions `(p nx + 1, p ny + 1)`.
    pub fn lattice_shape(&self) -> (usize, usize) {
        (self.degree * self.mesh.nx + 1, self.degree * self.mesh.ny + 1)
    }

    #[inline]
    pub fn node_lattice(&self, q: usize) -> (usize, usize) {
        self.node_lattice[q]
    }

    #[inline]
    pub fn lattice_node(&self, a: usize, b: usize) -> usize {
        self.lattice_node[b * self.lattice_shape().0 + a]
    }

    pub fn node_coords(&self, q: usize) -> [f64; 2] {
        let (a, b) = self.node_lattice[q];
        let r = &self.mesh.rect;
        let p = self.degree as f64;
        [r.x0 + a as f64 * self.mesh.hx() / p, r.y0 + b as f64 * self.mesh.hy() / p]
    }

    /// Sorted nodes on the given side of the domain, corners included.
    pub fn boundary_nodes(&self, tag: BoundaryTag) -> &[usize] {
        let slot = BoundaryTag::ALL.iter().position(|&t| t == tag).expect("known tag");
        &self.boundary_nodes[slot]
    }

    /// Local element indices of the nodes on a triangle edge given by its local
    /// vertex pair: the endpoints and, for degree 2, the midpoint last.
    pub fn edge_local_nodes(&self, local: [usize; 2]) -> Vec<usize> {
        let mut out = vec![local[0], local[1]];
        if self.degree == 2 {
            let mid = match (local[0].min(local[1]), local[0].max(local[1])) {
                (0, 1) => 3,
                (1, 2) => 4,
                (0, 2) => 5,
                _ => unreachable!("invalid edge"),
            };
            out.push(mid);
        }
        out
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> c64) -> Vec<c64> {
        (0..self.dim())
            .map(|q| {
                let [x, y] = self.node_coords(q);
                f(x, y)
            })
            .collect()
    }

    pub fn evaluate(&self, coeffs: &[c64], x: f64, y: f64) -> Result<c64> {
        let (t, l) = self.mesh.locate(x, y)?;
        let phi = shape_values(self.degree, l);
        Ok(self.element_nodes(t).iter().zip(phi).map(|(&q, p)| coeffs[q] * p).sum())
    }

    pub fn evaluate_gradient(&self, coeffs: &[c64], x: f64, y: f64) -> Result<[c64; 2]> {
        let (t, l) = self.mesh.locate(x, y)?;
        let geo = self.element_geometry(t);
        let grads = shape_gradients(self.degree, l, &geo.grad_bary);
        let mut out = [c64::new(0.0, 0.0); 2];
        for (&q, g) in self.element_nodes(t).iter().zip(grads) {
            out[0] += coeffs[q] * g[0];
            out[1] += coeffs[q] * g[1];
        }
        Ok(out)
    }
}
