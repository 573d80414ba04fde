//! Assembly of global and local Helmholtz matrices.
//!
//! Matrices follow the convention `M[j][l] = form(phi_l, phi_j)`, the row being
//! the test function. With real basis functions every form reduces to a real
//! symmetric matrix; the Helmholtz matrix is
//! `B = S - k^2 M_V - i k G_beta` with stiffness `S`, `V^2`-weighted mass `M_V`
//! and boundary mass `G_beta`.

use std::fmt;
use std::sync::Arc;

use crate::fespace::{shape_gradients, shape_values, FeSpace};
use crate::linalg::{ComplexSparseMatrix, CsrMatrix, RealSparseMatrix, SparsityPattern};
use crate::mesh::BoundaryTag;
use crate::problem::coefficient::CoefficientField;
use crate::quadrature::{edge_gauss3, triangle_degree4, triangle_rule};
use crate::{c64, MsgfemError, Result};

/// Shareable complex-valued function of a point.
#[derive(Clone)]
pub struct ScalarFn(pub Arc<dyn Fn(f64, f64) -> c64 + Send + Sync>);

impl ScalarFn {
    pub fn new(f: impl Fn(f64, f64) -> c64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn eval(&self, x: f64, y: f64) -> c64 {
        (self.0)(x, y)
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarFn(..)")
    }
}

/// Boundary data `g` as a function of the point and the side it lies on.
#[derive(Clone)]
pub struct BoundaryData(pub Arc<dyn Fn(f64, f64, BoundaryTag) -> c64 + Send + Sync>);

impl BoundaryData {
    pub fn new(f: impl Fn(f64, f64, BoundaryTag) -> c64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BoundaryData(..)")
    }
}

#[derive(Debug, Clone)]
pub enum Source {
    None,
    Function(ScalarFn),
    /// Nodal load placed at the node nearest to `(x, y)`.
    Point { x: f64, y: f64, amplitude: c64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Impedance,
    /// Homogeneous Dirichlet condition.
    Dirichlet,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub wavenumber: f64,
    /// Scalar diffusion coefficient.
    pub a: CoefficientField,
    /// Wave slowness `V`; the equation carries `k^2 V^2`.
    pub v: CoefficientField,
    /// Impedance coefficient on the domain boundary.
    pub beta: CoefficientField,
    pub source: Source,
    pub boundary_data: Option<BoundaryData>,
    /// Condition on the left, right, top and bottom sides.
    pub boundary: [BoundaryKind; 4],
}

impl ProblemSpec {
    /// Unit coefficients, impedance on all sides, no data.
    pub fn homogeneous(wavenumber: f64) -> Self {
        Self {
            wavenumber,
            a: CoefficientField::constant(1.0),
            v: CoefficientField::constant(1.0),
            beta: CoefficientField::constant(1.0),
            source: Source::None,
            boundary_data: None,
            boundary: [BoundaryKind::Impedance; 4],
        }
    }

    /// Homogeneous medium whose exact solution is the plane wave
    /// `exp(i k d . x)` for a unit direction `d`.
    pub fn plane_wave(wavenumber: f64, direction: [f64; 2]) -> Self {
        let k = wavenumber;
        let d = direction;
        let mut spec = Self::homogeneous(k);
        spec.boundary_data = Some(BoundaryData::new(move |x, y, tag| {
            let u = plane_wave_value(k, d, x, y);
            let n = tag.normal();
            let du_dn = c64::new(0.0, k * (d[0] * n[0] + d[1] * n[1])) * u;
            du_dn - c64::new(0.0, k) * u
        }));
        spec
    }

    pub fn boundary_kind(&self, tag: BoundaryTag) -> BoundaryKind {
        let slot = BoundaryTag::ALL.iter().position(|&t| t == tag).expect("known tag");
        self.boundary[slot]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavenumber > 0.0) || !self.wavenumber.is_finite() {
            return Err(MsgfemError::InvalidParameter(format!("wavenumber must be positive, got {}", self.wavenumber)));
        }
        self.a.check_positive("A")?;
        self.v.check_positive("V")?;
        if self.boundary.contains(&BoundaryKind::Impedance) {
            self.beta.check_positive("beta")?;
        }
        Ok(())
    }
}

pub fn plane_wave_value(k: f64, d: [f64; 2], x: f64, y: f64) -> c64 {
    c64::from_polar(1.0, k * (d[0] * x + d[1] * y))
}

pub fn plane_wave_gradient(k: f64, d: [f64; 2], x: f64, y: f64) -> [c64; 2] {
    let u = plane_wave_value(k, d, x, y);
    [c64::new(0.0, k * d[0]) * u, c64::new(0.0, k * d[1]) * u]
}

/// Element stiffness (`A`-weighted) and mass (`V^2`-weighted) matrices.
fn element_matrices(space: &FeSpace, t: usize, a: &CoefficientField, v: &CoefficientField) -> ([[f64; 6]; 6], [[f64; 6]; 6]) {
    let p = space.degree();
    let nl = space.nodes_per_element();
    let geo = space.element_geometry(t);
    let mut s = [[0.0; 6]; 6];
    let mut m = [[0.0; 6]; 6];
    for q in triangle_rule(p) {
        let [x, y] = geo.point(q.bary);
        let w = q.weight * geo.area;
        let aw = a.eval(x, y) * w;
        let vv = v.eval(x, y);
        let mw = vv * vv * w;
        let phi = shape_values(p, q.bary);
        let grad = shape_gradients(p, q.bary, &geo.grad_bary);
        for i in 0..nl {
            for j in 0..nl {
                s[i][j] += aw * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
                m[i][j] += mw * phi[i] * phi[j];
            }
        }
    }
    (s, m)
}

/// One-dimensional Lagrange basis on an edge: endpoints, then the midpoint.
fn edge_shape(degree: usize, t: f64) -> [f64; 3] {
    if degree == 1 {
        [1.0 - t, t, 0.0]
    } else {
        [(1.0 - t) * (1.0 - 2.0 * t), t * (2.0 * t - 1.0), 4.0 * t * (1.0 - t)]
    }
}

/// Edge matrix of `int weight * phi_a * phi_b ds` and, optionally, the load
/// `int g * phi_a ds`, for the edge from local vertex `e0` to `e1` of triangle `t`.
fn edge_terms(
    space: &FeSpace,
    t: usize,
    local: [usize; 2],
    weight: &CoefficientField,
    tag: Option<BoundaryTag>,
    g: Option<&BoundaryData>,
) -> (Vec<usize>, [[f64; 3]; 3], [c64; 3]) {
    let p = space.degree();
    let local_nodes = space.edge_local_nodes(local);
    let elem = space.element_nodes(t);
    let nodes: Vec<usize> = local_nodes.iter().map(|&l| elem[l]).collect();
    let c = space.mesh().triangle_coords(t);
    let (pa, pb) = (c[local[0]], c[local[1]]);
    let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
    let mut mat = [[0.0; 3]; 3];
    let mut load = [c64::new(0.0, 0.0); 3];
    let n = nodes.len();
    for (s, w) in edge_gauss3() {
        let x = pa[0] + s * (pb[0] - pa[0]);
        let y = pa[1] + s * (pb[1] - pa[1]);
        let phi = edge_shape(p, s);
        let ww = w * len;
        let beta = weight.eval(x, y);
        for i in 0..n {
            for j in 0..n {
                mat[i][j] += ww * beta * phi[i] * phi[j];
            }
        }
        if let (Some(g), Some(tag)) = (g, tag) {
            let gv = (g.0)(x, y, tag);
            for i in 0..n {
                load[i] += gv * (ww * phi[i]);
            }
        }
    }
    (nodes, mat, load)
}

/// The global discrete system and the pieces it is built from.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    /// Helmholtz matrix with Dirichlet rows and columns replaced by identity.
    pub b: ComplexSparseMatrix,
    pub f: Vec<c64>,
    /// `int A grad u . grad v`, before Dirichlet elimination.
    pub stiffness: RealSparseMatrix,
    /// `int V^2 u v`, before Dirichlet elimination.
    pub mass: RealSparseMatrix,
    /// `int_{impedance sides} beta u v`.
    pub boundary_mass: RealSparseMatrix,
    pub wavenumber: f64,
    /// Nodes carrying a homogeneous Dirichlet condition.
    pub dirichlet: Vec<bool>,
}

/// Which energy inner product to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// `int A grad u . grad v`
    A,
    /// `int A grad u . grad v + k^2 V^2 u v`
    Ak,
}

impl AssembledSystem {
    pub fn dim(&self) -> usize {
        self.f.len()
    }

    /// Matrix of the chosen energy inner product.
    pub fn energy_matrix(&self, kind: NormKind) -> RealSparseMatrix {
        match kind {
            NormKind::A => self.stiffness.clone(),
            NormKind::Ak => {
                let k2 = self.wavenumber * self.wavenumber;
                let mut m = self.stiffness.clone();
                for (a, b) in m.values_mut().iter_mut().zip(self.mass.values()) {
                    *a += k2 * b;
                }
                m
            }
        }
    }

    pub fn energy_norm(&self, v: &[c64], kind: NormKind) -> f64 {
        let mut q = self.stiffness.quadratic_form(v).re;
        if kind == NormKind::Ak {
            q += self.wavenumber * self.wavenumber * self.mass.quadratic_form(v).re;
        }
        q.max(0.0).sqrt()
    }

    /// Direct solve of `B u = F`.
    pub fn solve_direct(&self) -> Result<Vec<c64>> {
        let f = crate::linalg::factorize(&self.b)?;
        Ok(f.solve(&self.f))
    }
}

/// Nodes on the sides with a Dirichlet condition.
pub fn dirichlet_mask(space: &FeSpace, spec: &ProblemSpec) -> Vec<bool> {
    let mut mask = vec![false; space.dim()];
    for tag in BoundaryTag::ALL {
        if spec.boundary_kind(tag) == BoundaryKind::Dirichlet {
            for &q in space.boundary_nodes(tag) {
                mask[q] = true;
            }
        }
    }
    mask
}

/// Node nearest to a point.
pub fn nearest_node(space: &FeSpace, x: f64, y: f64) -> Result<usize> {
    let mesh = space.mesh();
    if !mesh.rect.contains(x, y) {
        return Err(MsgfemError::PointOutsideDomain(x, y));
    }
    let p = space.degree() as f64;
    let (lx, ly) = space.lattice_shape();
    let a = (((x - mesh.rect.x0) / mesh.hx() * p).round().max(0.0) as usize).min(lx - 1);
    let b = (((y - mesh.rect.y0) / mesh.hy() * p).round().max(0.0) as usize).min(ly - 1);
    Ok(space.lattice_node(a, b))
}

pub fn assemble_global(space: &FeSpace, spec: &ProblemSpec) -> Result<AssembledSystem> {
    spec.validate()?;
    let n = space.dim();
    let k = spec.wavenumber;
    let pattern = SparsityPattern::from_elements(n, (0..space.n_elements()).map(|t| space.element_nodes(t)));
    let mut stiffness: RealSparseMatrix = pattern.zeros();
    let mut mass: RealSparseMatrix = pattern.zeros();
    let mut f = vec![c64::new(0.0, 0.0); n];
    let p = space.degree();
    for t in 0..space.n_elements() {
        let nodes = space.element_nodes(t);
        let (s, m) = element_matrices(space, t, &spec.a, &spec.v);
        for (i, &gi) in nodes.iter().enumerate() {
            for (j, &gj) in nodes.iter().enumerate() {
                stiffness.add_to(gi, gj, s[i][j]);
                mass.add_to(gi, gj, m[i][j]);
            }
        }
        if let Source::Function(src) = &spec.source {
            let geo = space.element_geometry(t);
            for q in triangle_rule(p) {
                let [x, y] = geo.point(q.bary);
                let fv = src.eval(x, y) * (q.weight * geo.area);
                let phi = shape_values(p, q.bary);
                for (i, &gi) in nodes.iter().enumerate() {
                    f[gi] += fv * phi[i];
                }
            }
        }
    }
    if let Source::Point { x, y, amplitude } = spec.source {
        f[nearest_node(space, x, y)?] += amplitude;
    }
    let mut boundary_mass: RealSparseMatrix = pattern.zeros();
    for edge in space.mesh().boundary_edges() {
        if spec.boundary_kind(edge.tag) != BoundaryKind::Impedance {
            continue;
        }
        let (nodes, mat, load) =
            edge_terms(space, edge.triangle, edge.local, &spec.beta, Some(edge.tag), spec.boundary_data.as_ref());
        for (i, &gi) in nodes.iter().enumerate() {
            for (j, &gj) in nodes.iter().enumerate() {
                boundary_mass.add_to(gi, gj, mat[i][j]);
            }
            f[gi] += load[i];
        }
    }
    let mut b = CsrMatrix::linear_combination(&[
        (c64::new(1.0, 0.0), &stiffness),
        (c64::new(-k * k, 0.0), &mass),
        (c64::new(0.0, -k), &boundary_mass),
    ])?;
    let dirichlet = dirichlet_mask(space, spec);
    if dirichlet.iter().any(|&d| d) {
        b.eliminate_symmetric(&dirichlet, c64::new(1.0, 0.0));
        for (fi, &d) in f.iter_mut().zip(&dirichlet) {
            if d {
                *fi = c64::new(0.0, 0.0);
            }
        }
    }
    Ok(AssembledSystem { b, f, stiffness, mass, boundary_mass, wavenumber: k, dirichlet })
}

/// Discrete forms restricted to a union of elements.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    /// Sorted global indices of the local nodes (global Dirichlet nodes excluded).
    pub nodes: Vec<usize>,
    /// Local Helmholtz form; impedance terms only where the region touches the
    /// impedance part of the domain boundary.
    pub b: ComplexSparseMatrix,
    pub stiffness: RealSparseMatrix,
    pub mass: RealSparseMatrix,
    /// `int_{region boundary inside the domain} V u v`.
    pub artificial: RealSparseMatrix,
    /// Local indices of nodes on the artificial boundary.
    pub interface: Vec<usize>,
    /// Local indices of the remaining nodes.
    pub interior: Vec<usize>,
    pub wavenumber: f64,
}

impl LocalSystem {
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Local matrix with the impedance condition `-i k V` on the artificial boundary.
    pub fn b_impedance(&self) -> ComplexSparseMatrix {
        let k = self.wavenumber;
        let mut m = self.b.clone();
        for (a, g) in m.values_mut().iter_mut().zip(self.artificial.values()) {
            *a += c64::new(0.0, -k * g);
        }
        m
    }

    /// Local matrix with a homogeneous Dirichlet condition on the artificial
    /// boundary, acting on the interior nodes only.
    pub fn b_dirichlet(&self) -> ComplexSparseMatrix {
        self.b.submatrix(&self.interior, &self.interior)
    }

    pub fn energy_matrix(&self, kind: NormKind) -> RealSparseMatrix {
        match kind {
            NormKind::A => self.stiffness.clone(),
            NormKind::Ak => {
                let k2 = self.wavenumber * self.wavenumber;
                let mut m = self.stiffness.clone();
                for (a, b) in m.values_mut().iter_mut().zip(self.mass.values()) {
                    *a += k2 * b;
                }
                m
            }
        }
    }

    /// Local index of a global node, if present.
    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.nodes.binary_search(&global).ok()
    }
}

/// Assembles the local forms on the union of the triangles in `region`
/// (sorted, without duplicates).
pub fn assemble_local(space: &FeSpace, spec: &ProblemSpec, region: &[usize]) -> Result<LocalSystem> {
    if region.is_empty() {
        return Err(MsgfemError::EmptyRegion);
    }
    let dirichlet = dirichlet_mask(space, spec);
    assemble_local_with_mask(space, spec, region, &dirichlet)
}

pub(crate) fn assemble_local_with_mask(
    space: &FeSpace,
    spec: &ProblemSpec,
    region: &[usize],
    dirichlet: &[bool],
) -> Result<LocalSystem> {
    if region.is_empty() {
        return Err(MsgfemError::EmptyRegion);
    }
    debug_assert!(region.windows(2).all(|w| w[0] < w[1]));
    let k = spec.wavenumber;
    let mut nodes: Vec<usize> = region
        .iter()
        .flat_map(|&t| space.element_nodes(t).iter().copied())
        .filter(|&q| !dirichlet[q])
        .collect();
    nodes.sort_unstable();
    nodes.dedup();
    if nodes.is_empty() {
        return Err(MsgfemError::EmptyRegion);
    }
    let local = |q: usize| nodes.binary_search(&q).ok();
    let local_elements: Vec<Vec<usize>> =
        region.iter().map(|&t| space.element_nodes(t).iter().filter_map(|&q| local(q)).collect()).collect();
    let pattern = SparsityPattern::from_elements(nodes.len(), local_elements.iter().map(|v| v.as_slice()));
    let mut stiffness: RealSparseMatrix = pattern.zeros();
    let mut mass: RealSparseMatrix = pattern.zeros();
    let mut boundary_mass: RealSparseMatrix = pattern.zeros();
    let mut artificial: RealSparseMatrix = pattern.zeros();
    let mut on_interface = vec![false; nodes.len()];
    for &t in region {
        let elem = space.element_nodes(t);
        let (s, m) = element_matrices(space, t, &spec.a, &spec.v);
        for (i, &gi) in elem.iter().enumerate() {
            let Some(li) = local(gi) else { continue };
            for (j, &gj) in elem.iter().enumerate() {
                if let Some(lj) = local(gj) {
                    stiffness.add_to(li, lj, s[i][j]);
                    mass.add_to(li, lj, m[i][j]);
                }
            }
        }
        for e in 0..3 {
            let pair = [e, (e + 1) % 3];
            let (target, weight, tag) = match space.mesh().edge_neighbor(t, e) {
                Some(nb) if region.binary_search(&nb).is_ok() => continue,
                Some(_) => (&mut artificial, &spec.v, None),
                None => {
                    let tag = boundary_tag_of(space, t, pair);
                    if spec.boundary_kind(tag) != BoundaryKind::Impedance {
                        continue;
                    }
                    (&mut boundary_mass, &spec.beta, Some(tag))
                }
            };
            let (enodes, mat, _) = edge_terms(space, t, pair, weight, tag, None);
            for (i, &gi) in enodes.iter().enumerate() {
                let Some(li) = local(gi) else { continue };
                if tag.is_none() {
                    on_interface[li] = true;
                }
                for (j, &gj) in enodes.iter().enumerate() {
                    if let Some(lj) = local(gj) {
                        target.add_to(li, lj, mat[i][j]);
                    }
                }
            }
        }
    }
    let b = CsrMatrix::linear_combination(&[
        (c64::new(1.0, 0.0), &stiffness),
        (c64::new(-k * k, 0.0), &mass),
        (c64::new(0.0, -k), &boundary_mass),
    ])?;
    let interface: Vec<usize> = (0..nodes.len()).filter(|&i| on_interface[i]).collect();
    let interior: Vec<usize> = (0..nodes.len()).filter(|&i| !on_interface[i]).collect();
    Ok(LocalSystem { nodes, b, stiffness, mass, artificial, interface, interior, wavenumber: k })
}

/// Side of the domain on which a boundary edge of triangle `t` lies.
fn boundary_tag_of(space: &FeSpace, t: usize, pair: [usize; 2]) -> BoundaryTag {
    let c = space.mesh().triangle_coords(t);
    let (a, b) = (c[pair[0]], c[pair[1]]);
    let r = space.mesh().rect;
    let tol = 1e-9 * r.width().max(r.height());
    if (a[1] - r.y0).abs() < tol && (b[1] - r.y0).abs() < tol {
        BoundaryTag::Bottom
    } else if (a[1] - r.y1).abs() < tol && (b[1] - r.y1).abs() < tol {
        BoundaryTag::Top
    } else if (a[0] - r.x0).abs() < tol && (b[0] - r.x0).abs() < tol {
        BoundaryTag::Left
    } else {
        BoundaryTag::Right
    }
}

/// `|u - u_h|_{H^1}` against an exact gradient, integrated with a degree-4
/// rule on four congruent subtriangles of every element.
pub fn h1_seminorm_error(space: &FeSpace, coeffs: &[c64], exact_gradient: impl Fn(f64, f64) -> [c64; 2]) -> f64 {
    let p = space.degree();
    let nl = space.nodes_per_element();
    let rule = triangle_degree4();
    // subtriangles in barycentric coordinates of the parent
    let half = |a: [f64; 3], b: [f64; 3]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0];
    let (v0, v1, v2) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
    let (m01, m12, m20) = (half(v0, v1), half(v1, v2), half(v2, v0));
    let subs = [[v0, m01, m20], [m01, v1, m12], [m20, m12, v2], [m12, m20, m01]];
    let mut total = 0.0;
    for t in 0..space.n_elements() {
        let geo = space.element_geometry(t);
        let nodes = space.element_nodes(t);
        for sub in &subs {
            for q in &rule {
                let mut l = [0.0; 3];
                for (c, corner) in sub.iter().enumerate() {
                    for d in 0..3 {
                        l[d] += q.bary[c] * corner[d];
                    }
                }
                let grads = shape_gradients(p, l, &geo.grad_bary);
                let mut gh = [c64::new(0.0, 0.0); 2];
                for i in 0..nl {
                    gh[0] += coeffs[nodes[i]] * grads[i][0];
                    gh[1] += coeffs[nodes[i]] * grads[i][1];
                }
                let [x, y] = geo.point(l);
                let ge = exact_gradient(x, y);
                total += q.weight * geo.area / 4.0 * ((ge[0] - gh[0]).norm_sqr() + (ge[1] - gh[1]).norm_sqr());
            }
        }
    }
    total.sqrt()
}
