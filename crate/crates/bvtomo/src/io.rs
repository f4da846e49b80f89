//! File formats: CSV dumps of meshes, fields and histories, a legacy-ASCII
//! VTK writer for external viewers, and flat key=value run manifests.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! parses back to bit-identical values and identical runs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::{ElementField, NodalField};
use crate::mesh::TriMesh;
use crate::recon::IterationRecord;

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// `nodes.csv`: one row per node, `id,x,y,tag`.
pub fn write_nodes_csv(path: &Path, mesh: &TriMesh) -> Result<()> {
    let mut out = String::from("id,x,y,tag\n");
    for i in 0..mesh.num_nodes() {
        let [x, y] = mesh.node(i);
        let _ = writeln!(out, "{i},{x},{y},{}", mesh.tag(i).as_u8());
    }
    write_file(path, &out)
}

/// `elements.csv`: one row per triangle, `id,n0,n1,n2`.
pub fn write_elements_csv(path: &Path, mesh: &TriMesh) -> Result<()> {
    let mut out = String::from("id,n0,n1,n2\n");
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangle(t);
        let _ = writeln!(out, "{t},{a},{b},{c}");
    }
    write_file(path, &out)
}

/// Reads a `nodes.csv`/`elements.csv` pair back into a mesh.
pub fn read_mesh_csv(nodes_path: &Path, elements_path: &Path) -> Result<TriMesh> {
    let nodes_text = read_file(nodes_path)?;
    let mut nodes = Vec::new();
    for (ln, line) in nodes_text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let _id = parts.next();
        let x: f64 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::parse(ln + 1, "bad x coordinate"))?;
        let y: f64 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::parse(ln + 1, "bad y coordinate"))?;
        nodes.push([x, y]);
    }
    let el_text = read_file(elements_path)?;
    let mut triangles = Vec::new();
    for (ln, line) in el_text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let _id = parts.next();
        let mut tri = [0usize; 3];
        for v in tri.iter_mut() {
            *v = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(ln + 1, "bad node index"))?;
        }
        triangles.push(tri);
    }
    TriMesh::new(nodes, triangles)
}

/// `boundary_data.csv`: one row per boundary node with its angle and every
/// measurement pair: `angle,f_1,g_1,f_2,g_2,...`.
pub fn write_boundary_data_csv(
    path: &Path,
    mesh: &TriMesh,
    data: &crate::fem::BoundaryDataSet,
) -> Result<()> {
    let mut out = String::from("angle");
    for m in 1..=data.len() {
        let _ = write!(out, ",f_{m},g_{m}");
    }
    out.push('\n');
    for (k, &b) in mesh.boundary_nodes().iter().enumerate() {
        let _ = write!(out, "{}", mesh.boundary_angle(b));
        for (f, g) in &data.pairs {
            let _ = write!(out, ",{},{}", f[k], g[k]);
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// Reads `boundary_data.csv` back; angles are ignored (the mesh fixes the
/// sampling points).
pub fn read_boundary_data_csv(path: &Path) -> Result<crate::fem::BoundaryDataSet> {
    let text = read_file(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let cols = header.split(',').count();
    if cols < 3 || (cols - 1) % 2 != 0 {
        return Err(Error::parse(1, "expected angle,f_1,g_1,... columns"));
    }
    let n_pairs = (cols - 1) / 2;
    let mut pairs = vec![(Vec::new(), Vec::new()); n_pairs];
    for (ln, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(ln + 1, "bad float"))?;
        if vals.len() != cols {
            return Err(Error::parse(ln + 1, "wrong column count"));
        }
        for (m, pair) in pairs.iter_mut().enumerate() {
            pair.0.push(vals[1 + 2 * m]);
            pair.1.push(vals[2 + 2 * m]);
        }
    }
    Ok(crate::fem::BoundaryDataSet { pairs })
}

/// Any nodal field as `id,value` rows (`alpha.csv`, `u.csv`).
pub fn write_nodal_csv(path: &Path, field: &NodalField) -> Result<()> {
    let mut out = String::from("id,value\n");
    for (i, v) in field.values.iter().enumerate() {
        let _ = writeln!(out, "{i},{v}");
    }
    write_file(path, &out)
}

/// Any element field as `id,value` rows (`omega.csv`).
pub fn write_element_csv(path: &Path, field: &ElementField) -> Result<()> {
    let mut out = String::from("id,value\n");
    for (t, v) in field.values.iter().enumerate() {
        let _ = writeln!(out, "{t},{v}");
    }
    write_file(path, &out)
}

/// `history.csv`: one row per outer iteration with the objective pieces,
/// the extracted levels, indicator statistics and the inner solve summary.
pub fn write_history_csv(path: &Path, history: &[IterationRecord]) -> Result<()> {
    let mut out = String::from(
        "n,j,data,anchor,penalty_grad,penalty_dual,alpha_in,alpha_out,omega_min,omega_below_half,inner_evals,inner_objective,inner_pg_norm,inner_reason\n",
    );
    for r in history {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.j,
            r.breakdown.data,
            r.breakdown.anchor,
            r.breakdown.penalty_grad,
            r.breakdown.penalty_dual,
            r.alpha_in,
            r.alpha_out,
            r.omega_min,
            r.omega_below_half,
            r.inner.n_evals,
            r.inner.objective,
            r.inner.projected_grad_norm,
            r.inner.reason.as_str(),
        );
    }
    write_file(path, &out)
}

/// Legacy VTK 3.0 ASCII unstructured grid with the potential and
/// conductivity as point data and the edge indicator as cell data.
pub fn write_vtk(
    path: &Path,
    mesh: &TriMesh,
    alpha: &NodalField,
    u: &NodalField,
    omega: &ElementField,
) -> Result<()> {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("bvtomo reconstruction\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET UNSTRUCTURED_GRID\n");
    let n = mesh.num_nodes();
    let _ = writeln!(out, "POINTS {n} double");
    for i in 0..n {
        let [x, y] = mesh.node(i);
        let _ = writeln!(out, "{x} {y} 0");
    }
    let m = mesh.num_triangles();
    let _ = writeln!(out, "CELLS {m} {}", 4 * m);
    for t in 0..m {
        let [a, b, c] = mesh.triangle(t);
        let _ = writeln!(out, "3 {a} {b} {c}");
    }
    let _ = writeln!(out, "CELL_TYPES {m}");
    for _ in 0..m {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "POINT_DATA {n}");
    for (name, field) in [("alpha", alpha), ("u", u)] {
        let _ = writeln!(out, "SCALARS {name} double 1");
        out.push_str("LOOKUP_TABLE default\n");
        for v in &field.values {
            let _ = writeln!(out, "{v}");
        }
    }
    let _ = writeln!(out, "CELL_DATA {m}");
    let _ = writeln!(out, "SCALARS omega double 1");
    out.push_str("LOOKUP_TABLE default\n");
    for v in &omega.values {
        let _ = writeln!(out, "{v}");
    }
    write_file(path, &out)
}

/// Flat key=value manifest, keys sorted, one per line.
pub fn write_manifest(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut sorted: Vec<_> = entries.to_vec();
    sorted.sort();
    let mut out = String::new();
    for (k, v) in sorted {
        let _ = writeln!(out, "{k}={v}");
    }
    write_file(path, &out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<(String, String)>> {
    let text = read_file(path)?;
    let mut entries = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(ln + 1, "expected key=value"))?;
        entries.push((k.to_string(), v.to_string()));
    }
    Ok(entries)
}
