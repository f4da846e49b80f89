//! Property tests for the structural invariants.

use bvtomo::fem::{assemble_weighted_stiffness, ElementField, NodalField, Weight};
use bvtomo::mesh::generate_disc_mesh;
use bvtomo::regularizer::{omega_of, phi_eps, psi_eps, PotentialSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // dual representation never undercuts the smoothed potential, and the
    // update attains it
    #[test]
    fn dual_pair_dominates_potential(
        s in 1e-4f64..1e4,
        w in 0.0f64..1.0,
    ) {
        let spec = PotentialSpec::default();
        let omega = spec.omega_min() + w * (spec.omega_max() - spec.omega_min());
        let lhs = omega * s * s + psi_eps(omega, &spec).unwrap();
        prop_assert!(lhs - phi_eps(s, &spec) >= -1e-10);
        let star = omega_of(s, &spec);
        let attained = star * s * s + psi_eps(star, &spec).unwrap();
        prop_assert!((attained - phi_eps(s, &spec)).abs() <= 1e-8);
    }

    // the indicator is a monotone contour detector with the documented range
    #[test]
    fn indicator_monotone_and_bounded(a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let spec = PotentialSpec::default();
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(omega_of(hi, &spec) <= omega_of(lo, &spec) + 1e-15);
        for s in [lo, hi] {
            let w = omega_of(s, &spec);
            prop_assert!(w > 0.0 && w <= 1.0);
            prop_assert!(w >= spec.omega_min() - 1e-15 && w <= spec.omega_max() + 1e-15);
        }
    }

    // stiffness assembly keeps symmetry and the constant kernel for any
    // admissible weight field
    #[test]
    fn stiffness_symmetric_with_constant_kernel(seed in 0u64..1000) {
        let mesh = generate_disc_mesh(2.0, 0.6).unwrap();
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            1.0 + (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let weight = ElementField {
            values: (0..mesh.num_triangles()).map(|_| next()).collect(),
        };
        let k = assemble_weighted_stiffness(&mesh, Weight::Element(&weight)).unwrap();
        prop_assert!(k.max_asymmetry() < 1e-12);
        let ones = NodalField::constant(mesh.num_nodes(), 1.0);
        let mut out = vec![0.0; mesh.num_nodes()];
        k.matvec(&ones.values, &mut out);
        for v in out {
            prop_assert!(v.abs() < 1e-12);
        }
    }

    // disc meshes keep positive areas and a closed boundary at any size
    #[test]
    fn disc_mesh_well_formed(h in 0.08f64..1.5) {
        let mesh = generate_disc_mesh(2.0, h).unwrap();
        for t in 0..mesh.num_triangles() {
            prop_assert!(mesh.area(t) > 0.0);
        }
        let cycle = mesh.boundary_nodes();
        prop_assert!(cycle.len() >= 3);
        // each boundary edge starts where the previous one ended
        let edges = mesh.boundary_edges();
        for k in 0..edges.len() {
            prop_assert_eq!(edges[k].1, edges[(k + 1) % edges.len()].0);
        }
    }
}
