//! Overlapping decompositions of a structured mesh into rectangular
//! subdomains, with oversampling domains and a partition of unity.
//!
//! Every subdomain `i` is described by nested cell rectangles: the
//! non-overlapping core, the overlapping subdomain `omega_i` (core grown by
//! `overlap_layers` cells) and the oversampling domain `omega_i*` (grown by a
//! further `oversampling_layers` cells), all clamped to the mesh. The enlarged
//! domain is `omega_i*` plus every triangle sharing a vertex with it.

use serde::{Deserialize, Serialize};

use crate::c64;
use crate::fespace::FeSpace;
use crate::{MsgfemError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionParams {
    /// Subdomains along x.
    pub mx: usize,
    /// Subdomains along y.
    pub my: usize,
    pub overlap_layers: usize,
    pub oversampling_layers: usize,
}

impl PartitionParams {
    pub fn square(m: usize, overlap_layers: usize, oversampling_layers: usize) -> Self {
        Self { mx: m, my: m, overlap_layers, oversampling_layers }
    }
}

/// Half-open rectangle of cells `[i0, i1) x [j0, j1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRect {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl CellRect {
    pub fn grow(&self, layers: usize, nx: usize, ny: usize) -> Self {
        Self {
            i0: self.i0.saturating_sub(layers),
            i1: (self.i1 + layers).min(nx),
            j0: self.j0.saturating_sub(layers),
            j1: (self.j1 + layers).min(ny),
        }
    }

    pub fn contains_cell(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i < self.i1 && j >= self.j0 && j < self.j1
    }

    pub fn contains(&self, other: &CellRect) -> bool {
        other.i0 >= self.i0 && other.i1 <= self.i1 && other.j0 >= self.j0 && other.j1 <= self.j1
    }

    pub fn n_cells(&self) -> usize {
        (self.i1 - self.i0) * (self.j1 - self.j0)
    }

    /// Sorted indices of the triangles in the rectangle.
    pub fn triangles(&self, nx: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.n_cells());
        for j in self.j0..self.j1 {
            for i in self.i0..self.i1 {
                let c = j * nx + i;
                out.push(2 * c);
                out.push(2 * c + 1);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Subdomain {
    pub index: usize,
    /// Position `(sx, sy)` in the subdomain grid.
    pub grid_pos: (usize, usize),
    pub core: CellRect,
    pub overlap: CellRect,
    pub oversampled: CellRect,
    /// Sorted global nodes of the local space on the oversampling domain.
    pub nodes: Vec<usize>,
    /// Global nodes where the partition-of-unity weight is positive.
    pub pu_support: Vec<usize>,
    /// Local positions (within `nodes`) of `pu_support`.
    pub pu_local: Vec<usize>,
    /// Partition-of-unity weights on `pu_support`.
    pub pu_weights: Vec<f64>,
}

impl Subdomain {
    pub fn n_local(&self) -> usize {
        self.nodes.len()
    }

    /// Weights over all local nodes, zero off the support.
    pub fn chi_local(&self) -> Vec<f64> {
        let mut chi = vec![0.0; self.nodes.len()];
        for (&l, &w) in self.pu_local.iter().zip(&self.pu_weights) {
            chi[l] = w;
        }
        chi
    }
}

/// The full overlapping decomposition.
#[derive(Debug, Clone)]
pub struct DecompositionPlan {
    pub params: PartitionParams,
    pub nx: usize,
    pub ny: usize,
    pub degree: usize,
    pub n_global: usize,
    pub subdomains: Vec<Subdomain>,
}

/// Splits `n` cells into `m` strips of `n / m` cells, the remainder going to
/// the last strip.
pub fn strips(n: usize, m: usize) -> Vec<(usize, usize)> {
    let w = n / m;
    (0..m).map(|s| (s * w, if s + 1 == m { n } else { (s + 1) * w })).collect()
}

/// One-dimensional trapezoid weight of strip `[a, b)` at position `x` (in cell
/// units): 1 away from interior strip boundaries, linear over a band of
/// half-width `delta` around each of them.
fn ramp_weight(x: f64, a: usize, b: usize, n: usize, delta: usize) -> f64 {
    let d = delta as f64;
    let mut w: f64 = 1.0;
    if a > 0 {
        w = w.min(((x - (a as f64 - d)) / (2.0 * d)).clamp(0.0, 1.0));
    }
    if b < n {
        w = w.min((((b as f64 + d) - x) / (2.0 * d)).clamp(0.0, 1.0));
    }
    w
}

pub fn build_plan(space: &FeSpace, params: PartitionParams) -> Result<DecompositionPlan> {
    DecompositionPlan::new(space, params, None)
}

impl DecompositionPlan {
    /// Builds the decomposition; nodes flagged in `dirichlet` are left out of
    /// every local space and carry no partition-of-unity weight.
    pub fn new(space: &FeSpace, params: PartitionParams, dirichlet: Option<&[bool]>) -> Result<Self> {
        let (nx, ny) = (space.mesh().nx, space.mesh().ny);
        if params.mx == 0 || params.my == 0 || params.mx > nx || params.my > ny {
            return Err(MsgfemError::InvalidParameter(format!(
                "{}x{} subdomains do not fit a {nx}x{ny} mesh",
                params.mx, params.my
            )));
        }
        if params.overlap_layers == 0 && params.mx * params.my > 1 {
            return Err(MsgfemError::InvalidParameter("overlap must be at least one layer".into()));
        }
        let n_sub = params.mx * params.my;
        let sx = strips(nx, params.mx);
        let sy = strips(ny, params.my);
        let p = space.degree();
        let is_dirichlet = |q: usize| dirichlet.is_some_and(|d| d[q]);
        let mut subdomains = Vec::with_capacity(n_sub);
        for (ty, &(j0, j1)) in sy.iter().enumerate() {
            for (tx, &(i0, i1)) in sx.iter().enumerate() {
                let core = CellRect { i0, i1, j0, j1 };
                let overlap = core.grow(params.overlap_layers, nx, ny);
                let oversampled = overlap.grow(params.oversampling_layers, nx, ny);
                let mut nodes = Vec::with_capacity((p * (oversampled.i1 - oversampled.i0) + 1) * (p * (oversampled.j1 - oversampled.j0) + 1));
                for b in p * oversampled.j0..=p * oversampled.j1 {
                    for a in p * oversampled.i0..=p * oversampled.i1 {
                        let q = space.lattice_node(a, b);
                        if !is_dirichlet(q) {
                            nodes.push(q);
                        }
                    }
                }
                nodes.sort_unstable();
                let mut support = Vec::new();
                let mut weights = Vec::new();
                for b in p * overlap.j0..=p * overlap.j1 {
                    for a in p * overlap.i0..=p * overlap.i1 {
                        let q = space.lattice_node(a, b);
                        if is_dirichlet(q) {
                            continue;
                        }
                        let wx = ramp_weight(a as f64 / p as f64, i0, i1, nx, params.overlap_layers);
                        let wy = ramp_weight(b as f64 / p as f64, j0, j1, ny, params.overlap_layers);
                        let w = wx * wy;
                        if w > 0.0 {
                            support.push(q);
                            weights.push(w);
                        }
                    }
                }
                let mut order: Vec<usize> = (0..support.len()).collect();
                order.sort_unstable_by_key(|&k| support[k]);
                let pu_support: Vec<usize> = order.iter().map(|&k| support[k]).collect();
                let pu_weights: Vec<f64> = order.iter().map(|&k| weights[k]).collect();
                let pu_local = pu_support
                    .iter()
                    .map(|q| nodes.binary_search(q).expect("support lies in the oversampling domain"))
                    .collect();
                subdomains.push(Subdomain {
                    index: subdomains.len(),
                    grid_pos: (tx, ty),
                    core,
                    overlap,
                    oversampled,
                    nodes,
                    pu_support,
                    pu_local,
                    pu_weights,
                });
            }
        }
        if n_sub > 1 && subdomains.iter().all(|s| s.overlap.n_cells() == nx * ny) {
            return Err(MsgfemError::OverlapExceedsDomain { layers: params.overlap_layers });
        }
        // renormalize so that the weights sum to one at every node
        let mut total = vec![0.0; space.dim()];
        for s in &subdomains {
            for (&q, &w) in s.pu_support.iter().zip(&s.pu_weights) {
                total[q] += w;
            }
        }
        for s in &mut subdomains {
            for (&q, w) in s.pu_support.iter().zip(s.pu_weights.iter_mut()) {
                *w /= total[q];
            }
        }
        Ok(Self { params, nx, ny, degree: p, n_global: space.dim(), subdomains })
    }

    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    /// Triangles of the oversampling domain `omega_i*`.
    pub fn oversampled_triangles(&self, i: usize) -> Vec<usize> {
        self.subdomains[i].oversampled.triangles(self.nx)
    }

    /// Triangles of `omega_i*` together with all triangles sharing a vertex with it.
    pub fn enlarged_triangles(&self, space: &FeSpace, i: usize) -> Vec<usize> {
        let r = self.subdomains[i].oversampled;
        let mesh = space.mesh();
        let grown = r.grow(1, self.nx, self.ny);
        let in_closure = |v: usize| {
            let vi = v % (self.nx + 1);
            let vj = v / (self.nx + 1);
            vi >= r.i0 && vi <= r.i1 && vj >= r.j0 && vj <= r.j1
        };
        grown
            .triangles(self.nx)
            .into_iter()
            .filter(|&t| {
                let (ci, cj) = mesh.cell_of(t);
                r.contains_cell(ci, cj) || mesh.triangle(t).iter().any(|&v| in_closure(v))
            })
            .collect()
    }

    /// `E_i^T w`: the entries of a global vector on the local nodes.
    pub fn restrict(&self, i: usize, global: &[c64]) -> Result<Vec<c64>> {
        if global.len() != self.n_global {
            return Err(MsgfemError::DimensionMismatch { expected: self.n_global, found: global.len() });
        }
        Ok(self.subdomains[i].nodes.iter().map(|&q| global[q]).collect())
    }

    /// `E_i v`: zero extension of a local vector.
    pub fn extend(&self, i: usize, local: &[c64]) -> Result<Vec<c64>> {
        let s = self.subdomain(i)?;
        if local.len() != s.nodes.len() {
            return Err(MsgfemError::DimensionMismatch { expected: s.nodes.len(), found: local.len() });
        }
        let mut out = vec![c64::new(0.0, 0.0); self.n_global];
        for (&q, &v) in s.nodes.iter().zip(local) {
            out[q] = v;
        }
        Ok(out)
    }

    /// Nodal interpolant of `chi_i v` as a global vector.
    pub fn pu_multiply(&self, i: usize, local: &[c64]) -> Result<Vec<c64>> {
        let mut out = vec![c64::new(0.0, 0.0); self.n_global];
        self.pu_multiply_add(i, local, &mut out)?;
        Ok(out)
    }

    /// Adds the nodal interpolant of `chi_i v` to `acc`.
    pub fn pu_multiply_add(&self, i: usize, local: &[c64], acc: &mut [c64]) -> Result<()> {
        let s = self.subdomain(i)?;
        if local.len() != s.nodes.len() {
            return Err(MsgfemError::DimensionMismatch { expected: s.nodes.len(), found: local.len() });
        }
        for ((&q, &l), &w) in s.pu_support.iter().zip(&s.pu_local).zip(&s.pu_weights) {
            acc[q] += local[l] * w;
        }
        Ok(())
    }

    pub fn subdomain(&self, i: usize) -> Result<&Subdomain> {
        self.subdomains.get(i).ok_or(MsgfemError::IndexOutOfRange { index: i, len: self.subdomains.len() })
    }

    /// Largest number of overlapping subdomains `omega_i` sharing a cell.
    pub fn coloring_constant(&self) -> usize {
        let mut count = vec![0usize; self.nx * self.ny];
        for s in &self.subdomains {
            let r = s.overlap;
            for j in r.j0..r.j1 {
                for i in r.i0..r.i1 {
                    count[j * self.nx + i] += 1;
                }
            }
        }
        count.into_iter().max().unwrap_or(0)
    }

    /// Largest number of enlarged oversampling domains sharing a triangle.
    pub fn enlarged_coloring_constant(&self, space: &FeSpace) -> usize {
        let mut count = vec![0usize; 2 * self.nx * self.ny];
        for i in 0..self.len() {
            for t in self.enlarged_triangles(space, i) {
                count[t] += 1;
            }
        }
        count.into_iter().max().unwrap_or(0)
    }

    pub fn summary(&self, space: &FeSpace) -> PlanSummary {
        let p = self.params;
        // an interior subdomain, or the first one when none is interior
        let probe = self
            .subdomains
            .iter()
            .find(|s| s.oversampled.i0 > 0 && s.oversampled.j0 > 0 && s.oversampled.i1 < self.nx && s.oversampled.j1 < self.ny)
            .unwrap_or(&self.subdomains[0]);
        let h_ratio = (probe.overlap.i1 - probe.overlap.i0) as f64 / (probe.oversampled.i1 - probe.oversampled.i0) as f64;
        PlanSummary {
            subdomains: self.len(),
            mx: p.mx,
            my: p.my,
            overlap_layers: p.overlap_layers,
            oversampling_layers: p.oversampling_layers,
            h_over_h_star: h_ratio,
            xi: self.coloring_constant(),
            xi_enlarged: self.enlarged_coloring_constant(space),
            per_subdomain: self
                .subdomains
                .iter()
                .map(|s| SubdomainSummary {
                    index: s.index,
                    core_cells: s.core.n_cells(),
                    overlap_cells: s.overlap.n_cells(),
                    oversampled_cells: s.oversampled.n_cells(),
                    local_nodes: s.nodes.len(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubdomainSummary {
    pub index: usize,
    pub core_cells: usize,
    pub overlap_cells: usize,
    pub oversampled_cells: usize,
    pub local_nodes: usize,
}

/// Structured description of a decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanSummary {
    pub subdomains: usize,
    pub mx: usize,
    pub my: usize,
    pub overlap_layers: usize,
    pub oversampling_layers: usize,
    /// Side ratio of an interior overlapping subdomain to its oversampling domain.
    pub h_over_h_star: f64,
    pub xi: usize,
    pub xi_enlarged: usize,
    pub per_subdomain: Vec<SubdomainSummary>,
}

impl PlanSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}
