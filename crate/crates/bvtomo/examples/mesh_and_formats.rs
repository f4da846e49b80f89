//! File-format tour: builds a disc mesh, dumps it as CSV, reads a tiny
//! Triangle `.node`/`.ele` pair, and writes a legacy-ASCII VTK snapshot of
//! a synthetic conductivity.
//!
//! Run with `cargo run --release --example mesh_and_formats`.

use std::path::Path;

use bvtomo::fem::{ElementField, NodalField};
use bvtomo::io;
use bvtomo::mesh::{generate_disc_mesh, load_triangle_format, tag_delta_zone};
use bvtomo::synthetic::Geometry;

const NODE_FIXTURE: &str = "\
4 2 0 0
1  0.0 0.0
2  1.0 0.0
3  1.0 1.0
4  0.0 1.0
";

const ELE_FIXTURE: &str = "\
2 3 0
1  1 2 3
2  1 3 4
";

fn main() -> bvtomo::Result<()> {
    let out = Path::new("runs/formats");

    let mesh = tag_delta_zone(&generate_disc_mesh(2.0, 0.27)?, 0.2)?;
    io::write_nodes_csv(&out.join("nodes.csv"), &mesh)?;
    io::write_elements_csv(&out.join("elements.csv"), &mesh)?;
    println!(
        "disc mesh: {} nodes / {} elements -> {}",
        mesh.num_nodes(),
        mesh.num_triangles(),
        out.display()
    );

    let square = load_triangle_format(NODE_FIXTURE, ELE_FIXTURE)?;
    println!(
        "triangle-format fixture: {} nodes, {} triangles, boundary cycle of {}",
        square.num_nodes(),
        square.num_triangles(),
        square.boundary_edges().len()
    );

    let inclusion = Geometry::Concentric.inclusion();
    let alpha = inclusion.exact_alpha_nodes(&mesh);
    let omega = ElementField::constant(mesh.num_triangles(), 1.0);
    let u = NodalField::zeros(mesh.num_nodes());
    io::write_vtk(&out.join("fields.vtk"), &mesh, &alpha, &u, &omega)?;
    println!("vtk snapshot -> {}", out.join("fields.vtk").display());
    Ok(())
}
