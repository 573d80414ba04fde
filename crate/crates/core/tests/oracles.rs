//! Library results checked against brute-force dense or pointwise oracles.

mod common;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use msgfem::c64;
use msgfem::coarse::{solve_local_eigenproblem, EigRoute, EigenRequest};
use msgfem::fespace::FeSpace;
use msgfem::linalg::{self, factorize, gmres, hermitian_generalized_eig, CsrMatrix, GmresConfig};
use msgfem::mesh::{Mesh, Rect};
use msgfem::partition::{DecompositionPlan, PartitionParams};
use msgfem::problem::{
    assemble_global, assemble_local, parse_raster_velocity, plane_wave_value, CoefficientField, NormKind, ProblemSpec,
};
use msgfem::quadrature::triangle_rule;
use msgfem::solver::{Preconditioner, SetupOptions};

use common::Dense;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vec(r: &mut ChaCha8Rng, n: usize) -> Vec<c64> {
    (0..n).map(|_| c64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect()
}

fn rel(a: &[c64], b: &[c64]) -> f64 {
    linalg::norm2(&linalg::sub(a, b)) / linalg::norm2(b).max(f64::MIN_POSITIVE)
}

fn square(n: usize, degree: usize) -> FeSpace {
    FeSpace::new(Mesh::new(Rect::unit_square(), n, n).unwrap(), degree).unwrap()
}

#[test]
fn sparse_lu_matches_dense_elimination() {
    let space = square(4, 1);
    let sys = assemble_global(&space, &ProblemSpec::homogeneous(1.0)).unwrap();
    let mut r = rng(1);
    let shifted = CsrMatrix::linear_combination(&[(c64::new(1.0, 0.0), &sys.stiffness), (c64::new(1.0, 0.0), &sys.mass)]).unwrap();
    for a in [sys.b.clone(), shifted] {
        let b = random_vec(&mut r, a.nrows());
        let x = factorize(&a).unwrap().solve(&b);
        let oracle = common::solve(&common::dense(&a), &b);
        assert!(rel(&x, &oracle) < 1e-10);
    }
}

#[test]
fn pencil_eigenvalues_match_inertia_bisection() {
    let mut r = rng(2);
    let n = 20;
    let random_hermitian = |r: &mut ChaCha8Rng, shift: f64| -> faer::Mat<c64> {
        let g = faer::Mat::<c64>::from_fn(n, n, |_, _| c64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
        let mut h = faer::Mat::<c64>::from_fn(n, n, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5);
        for i in 0..n {
            h[(i, i)] += c64::new(shift, 0.0);
        }
        h
    };
    let a = random_hermitian(&mut r, 0.0);
    let m = random_hermitian(&mut r, 12.0);
    let eig = hermitian_generalized_eig(&a, &m).unwrap();
    let to_dense = |x: &faer::Mat<c64>| -> Dense { (0..n).map(|i| (0..n).map(|j| x[(i, j)]).collect()).collect() };
    let mut oracle = common::pencil_eigenvalues(&to_dense(&a), &to_dense(&m), 1e-12);
    oracle.reverse();
    assert_eq!(eig.values.len(), n);
    for (x, y) in eig.values.iter().zip(&oracle) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn gmres_matches_dense_solve() {
    let mut r = rng(3);
    let n = 50;
    let mut trip = Vec::new();
    for i in 0..n {
        trip.push((i, i, c64::new(6.0, 1.0)));
        for _ in 0..4 {
            let j = r.gen_range(0..n);
            trip.push((i, j, c64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))));
        }
    }
    let a = CsrMatrix::from_triplets(n, n, trip).unwrap();
    let b = random_vec(&mut r, n);
    let cfg = GmresConfig { relative_tolerance: 1e-12, ..Default::default() };
    let (x, _) = gmres(|v: &[c64]| a.mul_vec(v), &b, &vec![c64::new(0.0, 0.0); n], &cfg).unwrap();
    assert!(rel(&x, &common::solve(&common::dense(&a), &b)) < 1e-8);
}

#[test]
fn interpolation_matches_pointwise_evaluation() {
    let k = 7.0;
    let d = [0.6, 0.8];
    for degree in [1, 2] {
        let space = square(5, degree);
        let v = space.interpolate(|x, y| plane_wave_value(k, d, x, y));
        for (q, value) in v.iter().enumerate() {
            let [x, y] = space.node_coords(q);
            assert!((value - plane_wave_value(k, d, x, y)).norm() < 1e-14);
        }
    }
}

#[test]
fn energy_norms_match_elementwise_quadrature() {
    let k = 3.0;
    let space = square(6, 2);
    let sys = assemble_global(&space, &ProblemSpec::homogeneous(k)).unwrap();
    let v = random_vec(&mut rng(4), space.dim());
    let (mut grad2, mut val2) = (0.0, 0.0);
    for t in 0..space.n_elements() {
        let geo = space.element_geometry(t);
        let area = space.mesh().signed_area(t).abs();
        for qp in triangle_rule(4) {
            // interior points, so the evaluation locates element t
            let [x, y] = geo.point(qp.bary);
            let g = space.evaluate_gradient(&v, x, y).unwrap();
            let u = space.evaluate(&v, x, y).unwrap();
            grad2 += qp.weight * area * (g[0].norm_sqr() + g[1].norm_sqr());
            val2 += qp.weight * area * u.norm_sqr();
        }
    }
    let a = sys.energy_norm(&v, NormKind::A);
    let ak = sys.energy_norm(&v, NormKind::Ak);
    assert!((a * a - grad2).abs() < 1e-10 * grad2);
    assert!((ak * ak - grad2 - k * k * val2).abs() < 1e-10 * (grad2 + k * k * val2));
}

fn cell_triangles(space: &FeSpace, i: usize, j: usize) -> Vec<usize> {
    let c = j * space.mesh().nx + i;
    vec![2 * c, 2 * c + 1]
}

#[test]
fn artificial_boundary_term_uses_the_slowness() {
    let space = square(3, 1);
    let mut spec = ProblemSpec::homogeneous(2.0);
    spec.v = CoefficientField::constant(2.0);
    spec.beta = CoefficientField::constant(5.0);
    let loc = assemble_local(&space, &spec, &cell_triangles(&space, 1, 1)).unwrap();
    let h = 1.0 / 3.0;
    let g = common::dense(&loc.artificial);
    assert_eq!(loc.dim(), 4);
    for a in 0..4 {
        for b in 0..4 {
            let [xa, ya] = space.node_coords(loc.nodes[a]);
            let [xb, yb] = space.node_coords(loc.nodes[b]);
            let gap = ((xa - xb).abs() / h).round() + ((ya - yb).abs() / h).round();
            // P1 edge mass h/6 [2 1; 1 2] on the two edges through each vertex, times V
            let expected = match gap as usize {
                0 => 2.0 * h / 3.0 * 2.0,
                1 => h / 6.0 * 2.0,
                _ => 0.0,
            };
            assert!((g[a][b].re - expected).abs() < 1e-13, "({a},{b}): {} vs {expected}", g[a][b].re);
        }
    }
}

#[test]
fn dirichlet_local_block_matches_global_interior_entries() {
    let k = 4.0;
    let space = square(3, 2);
    let spec = ProblemSpec::homogeneous(k);
    let sys = assemble_global(&space, &spec).unwrap();
    let loc = assemble_local(&space, &spec, &cell_triangles(&space, 1, 1)).unwrap();
    let bd = common::dense(&loc.b_dirichlet());
    assert_eq!(loc.interior.len(), 1);
    let q = loc.nodes[loc.interior[0]];
    let expected = sys.stiffness.get(q, q) - k * k * sys.mass.get(q, q);
    assert!((bd[0][0] - c64::new(expected, 0.0)).norm() < 1e-12);
    assert!((bd[0][0] - sys.b.get(q, q)).norm() < 1e-12);
}

#[test]
fn raster_ramp_matches_direct_lookup() {
    let (nx, ny) = (7, 4);
    let mut text = format!("{nx} {ny}\n");
    for row in 0..ny {
        let line: Vec<String> = (0..nx).map(|col| format!("{}", 1000 + 100 * col + 10 * row)).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    let rect = Rect::new(0.0, -2.0, 7.0, 0.0);
    let field = parse_raster_velocity(text.as_bytes(), rect).unwrap();
    for row in 0..ny {
        for col in 0..nx {
            let x = (col as f64 + 0.5) * rect.width() / nx as f64;
            let y = -(row as f64 + 0.5) * rect.height() / ny as f64;
            let velocity = (1000 + 100 * col + 10 * row) as f64;
            assert_eq!(field.eval(x, y), 1.0 / velocity);
        }
    }
}

#[test]
fn layer_growth_matches_flood_fill() {
    let space = square(24, 1);
    let plan = DecompositionPlan::new(&space, PartitionParams::square(3, 2, 2), None).unwrap();
    for s in &plan.subdomains {
        let core: BTreeSet<(usize, usize)> = (s.core.i0..s.core.i1).flat_map(|i| (s.core.j0..s.core.j1).map(move |j| (i, j))).collect();
        let overlap = common::flood_fill(&core, 2, 24, 24);
        let oversampled = common::flood_fill(&overlap, 2, 24, 24);
        assert_eq!(s.overlap.n_cells(), overlap.len());
        assert_eq!(s.oversampled.n_cells(), oversampled.len());
        assert!(oversampled.iter().all(|&(i, j)| s.oversampled.contains_cell(i, j)));
    }
}

#[test]
fn extension_sums_count_subdomain_membership() {
    let space = square(12, 2);
    let plan = DecompositionPlan::new(&space, PartitionParams::square(3, 1, 1), None).unwrap();
    let ones = vec![c64::new(1.0, 0.0); space.dim()];
    let mut sum = vec![c64::new(0.0, 0.0); space.dim()];
    for i in 0..plan.len() {
        let e = plan.extend(i, &plan.restrict(i, &ones).unwrap()).unwrap();
        sum = linalg::add(&sum, &e);
    }
    for (q, s) in sum.iter().enumerate() {
        let count = plan.subdomains.iter().filter(|d| d.nodes.binary_search(&q).is_ok()).count();
        assert_eq!(s.re, count as f64);
    }
}

struct Toy {
    space: FeSpace,
    spec: ProblemSpec,
}

fn toy() -> Toy {
    Toy { space: square(16, 1), spec: ProblemSpec::plane_wave(10.0, [0.6, 0.8]) }
}

/// Dense local impedance matrices and restriction patterns of every subdomain.
fn dense_locals(t: &Toy, plan: &DecompositionPlan) -> Vec<(Vec<usize>, Dense, Vec<f64>)> {
    plan.subdomains
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let loc = assemble_local(&t.space, &t.spec, &plan.oversampled_triangles(i)).unwrap();
            assert_eq!(loc.nodes, s.nodes);
            (s.nodes.clone(), common::dense(&loc.b_impedance()), s.chi_local())
        })
        .collect()
}

#[test]
fn local_projection_matches_dense_oracle() {
    let t = toy();
    let sys = assemble_global(&t.space, &t.spec).unwrap();
    let plan = DecompositionPlan::new(&t.space, PartitionParams::square(2, 2, 2), Some(&sys.dirichlet)).unwrap();
    let p = Preconditioner::setup(&t.space, &t.spec, &sys, &plan, &SetupOptions { eigen: EigenRequest::Count(3), ..Default::default() }).unwrap();
    let w = random_vec(&mut rng(5), sys.dim());
    let bw = common::matvec(&common::dense(&sys.b), &w);
    for (i, (nodes, bi, _)) in dense_locals(&t, &plan).iter().enumerate() {
        let rhs: Vec<c64> = nodes.iter().map(|&q| bw[q]).collect();
        let oracle = common::solve(bi, &rhs);
        assert!(rel(&p.local_projection(i, &w).unwrap(), &oracle) < 1e-10);
    }
}

#[test]
fn coarse_matrix_and_preconditioner_match_dense_oracles() {
    let t = toy();
    let sys = assemble_global(&t.space, &t.spec).unwrap();
    let n = sys.dim();
    let plan = DecompositionPlan::new(&t.space, PartitionParams::square(2, 2, 2), Some(&sys.dirichlet)).unwrap();
    let p = Preconditioner::setup(&t.space, &t.spec, &sys, &plan, &SetupOptions { eigen: EigenRequest::Count(3), ..Default::default() }).unwrap();
    let coarse = p.coarse().unwrap();
    let b = common::dense(&sys.b);
    let e0 = common::dense(&coarse.e0_matrix());
    let b0 = common::matmul(&common::transpose(&e0), &common::matmul(&b, &e0));
    let got = common::dense(&coarse.b0);
    for (x, y) in got.iter().flatten().zip(b0.iter().flatten()) {
        assert!((x - y).norm() < 1e-11 * (1.0 + y.norm()));
    }
    // column supports stay inside the subdomain nodes
    for (i, s) in plan.subdomains.iter().enumerate() {
        for col in coarse.offsets[i]..coarse.offsets[i + 1] {
            assert!((0..n).all(|q| e0[q][col].norm() == 0.0 || s.nodes.binary_search(&q).is_ok()));
        }
    }

    let r = random_vec(&mut rng(6), n);
    let mut z = vec![c64::new(0.0, 0.0); n];
    for (nodes, bi, chi) in dense_locals(&t, &plan) {
        let local: Vec<c64> = nodes.iter().map(|&q| r[q]).collect();
        let y = common::solve(&bi, &local);
        for (l, &q) in nodes.iter().enumerate() {
            z[q] += y[l] * chi[l];
        }
    }
    let res = linalg::sub(&r, &common::matvec(&b, &z));
    let y0 = common::solve(&b0, &common::matvec(&common::transpose(&e0), &res));
    let oracle = linalg::add(&z, &common::matvec(&e0, &y0));
    assert!(rel(&p.apply(&r).unwrap(), &oracle) < 1e-10);
}

#[test]
fn first_eigenvector_reproduces_its_rayleigh_quotient() {
    let t = toy();
    let sys = assemble_global(&t.space, &t.spec).unwrap();
    let plan = DecompositionPlan::new(&t.space, PartitionParams::square(2, 1, 2), Some(&sys.dirichlet)).unwrap();
    let loc = assemble_local(&t.space, &t.spec, &plan.oversampled_triangles(0)).unwrap();
    let chi = plan.subdomains[0].chi_local();
    let basis = solve_local_eigenproblem(&loc, &chi, EigenRequest::Count(4), NormKind::A, EigRoute::Harmonic, 0).unwrap();
    assert!(basis.values.iter().all(|&l| l >= 0.0));
    let phi: Vec<c64> = (0..loc.dim()).map(|i| basis.vectors[(i, 0)]).collect();
    let cut: Vec<c64> = phi.iter().zip(&chi).map(|(x, w)| x * w).collect();
    let top = loc.energy_matrix(NormKind::Ak).quadratic_form(&cut).re;
    let bottom = loc.energy_matrix(NormKind::A).quadratic_form(&phi).re;
    assert!((top / bottom - basis.values[0]).abs() < 1e-8 * basis.values[0]);
}

#[test]
fn one_shot_error_decreases_with_more_eigenvectors() {
    let space = square(24, 2);
    let spec = ProblemSpec::plane_wave(12.0, [std::f64::consts::FRAC_1_SQRT_2; 2]);
    let sys = assemble_global(&space, &spec).unwrap();
    let plan = DecompositionPlan::new(&space, PartitionParams::square(3, 2, 2), Some(&sys.dirichlet)).unwrap();
    let u = sys.solve_direct().unwrap();
    let mut p = Preconditioner::setup(&space, &spec, &sys, &plan, &SetupOptions { eigen: EigenRequest::Count(20), ..Default::default() }).unwrap();
    let mut last = f64::INFINITY;
    for n in [5, 10, 15, 20] {
        p.reselect(EigenRequest::Count(n)).unwrap();
        let e = p.lambda_one_shot(&u).unwrap();
        assert!(e < last, "n_loc {n}: {e} >= {last}");
        last = e;
    }
}
