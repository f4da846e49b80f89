//! Mesh-refinement study of the direct solver: solves the Dirichlet
//! problem for the concentric two-valued conductivity on a sequence of
//! meshes and prints the L2 error against the closed-form potential
//! together with the observed convergence order.
//!
//! Run with `cargo run --release --example forward_convergence`.

use bvtomo::cli::dirichlet_errors;
use bvtomo::fem::{solve_dirichlet, Weight};
use bvtomo::mesh::generate_disc_mesh;
use bvtomo::synthetic::Geometry;

fn main() -> bvtomo::Result<()> {
    let geometry = Geometry::Concentric;
    let inclusion = geometry.inclusion();
    let mut previous: Option<(f64, f64)> = None;

    println!("{:>8} {:>8} {:>9} {:>12} {:>7}", "target h", "nodes", "elements", "L2 error", "order");
    for target_h in [0.27, 0.15, 0.08] {
        let mesh = generate_disc_mesh(2.0, target_h)?;
        let (f, _) = geometry.boundary_pair(&mesh);
        let alpha = inclusion.exact_alpha_elements(&mesh);
        let u = solve_dirichlet(&mesh, Weight::Element(&alpha), &f)?;
        let (l2, _) = dirichlet_errors(&mesh, &geometry, &u)?;
        let order = previous
            .map(|(h_prev, e_prev)| (e_prev / l2).ln() / (h_prev / target_h).ln())
            .map(|o| format!("{o:.2}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:>8} {:>8} {:>9} {:>12.4e} {:>7}",
            target_h,
            mesh.num_nodes(),
            mesh.num_triangles(),
            l2,
            order
        );
        previous = Some((target_h, l2));
    }
    Ok(())
}
