//! Property tests over randomized meshes, decompositions and data.

use proptest::prelude::*;

use msgfem::c64;
use msgfem::experiments::PowerRule;
use msgfem::fespace::FeSpace;
use msgfem::linalg::{self, CsrMatrix};
use msgfem::mesh::{Mesh, Rect};
use msgfem::partition::{DecompositionPlan, PartitionParams};
use msgfem::problem::{assemble_global, NormKind, ProblemSpec};

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<c64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c64::new(a, b)), n)
}

/// Mesh cells per subdomain, subdomains per side, overlap, oversampling, degree.
fn layout() -> impl Strategy<Value = (usize, usize, usize, usize, usize)> {
    (3usize..7, 1usize..4, 1usize..3, 0usize..3, 1usize..3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partition_of_unity_sums_to_one((cells, m, overlap, over, degree) in layout()) {
        let n = cells * m;
        let space = FeSpace::new(Mesh::new(Rect::unit_square(), n, n).unwrap(), degree).unwrap();
        let plan = DecompositionPlan::new(&space, PartitionParams::square(m, overlap, over), None).unwrap();
        let mut total = vec![0.0; space.dim()];
        for s in &plan.subdomains {
            for (&q, &w) in s.pu_support.iter().zip(&s.pu_weights) {
                prop_assert!(w > 0.0 && w <= 1.0 + 1e-14);
                total[q] += w;
            }
            prop_assert!(s.overlap.contains(&s.core) && s.oversampled.contains(&s.overlap));
        }
        for t in total {
            prop_assert!((t - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn restriction_inverts_extension((cells, m, overlap, over, degree) in layout(), seed in 0u64..1000) {
        let n = cells * m;
        let space = FeSpace::new(Mesh::new(Rect::unit_square(), n, n).unwrap(), degree).unwrap();
        let plan = DecompositionPlan::new(&space, PartitionParams::square(m, overlap, over), None).unwrap();
        let i = (seed as usize) % plan.len();
        let local: Vec<c64> = (0..plan.subdomains[i].n_local()).map(|l| c64::new(l as f64 + seed as f64, -1.0)).collect();
        prop_assert_eq!(plan.restrict(i, &plan.extend(i, &local).unwrap()).unwrap(), local);
    }

    #[test]
    fn helmholtz_matrix_is_complex_symmetric_and_energy_is_consistent(
        n in 2usize..7,
        degree in 1usize..3,
        k in 0.5f64..15.0,
        x in complex_vec(400),
        y in complex_vec(400),
    ) {
        let space = FeSpace::new(Mesh::new(Rect::unit_square(), n, n).unwrap(), degree).unwrap();
        let sys = assemble_global(&space, &ProblemSpec::homogeneous(k)).unwrap();
        let d = sys.dim();
        let (x, y) = (&x[..d], &y[..d]);
        let bil = |a: &[c64], b: &[c64]| -> c64 { a.iter().zip(&sys.b.mul_vec(b)).map(|(p, q)| p * q).sum() };
        let (xy, yx) = (bil(x, y), bil(y, x));
        prop_assert!((xy - yx).norm() <= 1e-11 * (1.0 + xy.norm()));
        // Re B(v, conj v) = |v|_A^2 - k^2 |v|_M^2
        let xc: Vec<c64> = x.iter().map(|z| z.conj()).collect();
        let re = bil(&xc, x).re;
        let a2 = sys.energy_norm(x, NormKind::A).powi(2);
        let m2 = sys.mass.quadratic_form(x).re;
        prop_assert!((re - (a2 - k * k * m2)).abs() <= 1e-10 * (a2 + k * k * m2));
        prop_assert!(sys.energy_norm(x, NormKind::Ak) >= sys.energy_norm(x, NormKind::A));
    }

    #[test]
    fn triplet_assembly_sums_duplicates(entries in prop::collection::vec((0usize..6, 0usize..6, -5.0f64..5.0), 0..40), v in complex_vec(6)) {
        let a = CsrMatrix::from_triplets(6, 6, entries.iter().map(|&(i, j, x)| (i, j, c64::new(x, 0.0)))).unwrap();
        a.check_invariants().unwrap();
        let mut expected = vec![c64::new(0.0, 0.0); 6];
        for &(i, j, x) in &entries {
            expected[i] += v[j] * x;
        }
        prop_assert!(linalg::norm2(&linalg::sub(&a.mul_vec(&v), &expected)) <= 1e-12 * (1.0 + linalg::norm2(&expected)));
        let t = a.transpose();
        for &(i, j, _) in &entries {
            prop_assert_eq!(a.get(i, j), t.get(j, i));
        }
    }

    #[test]
    fn power_rules_evaluate_as_written(c in 0.1f64..50.0, q in -2.0f64..2.0, k in 1.0f64..500.0) {
        let rule: PowerRule = format!("{c}*k^{q}").parse().unwrap();
        prop_assert!((rule.eval(k) - c * k.powf(q)).abs() <= 1e-12 * c * k.powf(q));
    }
}
