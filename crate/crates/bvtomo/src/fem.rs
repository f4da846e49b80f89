//! P1 finite-element operators on [`TriMesh`]: element gradients, weighted
//! stiffness forms, boundary pairings, discrete trace extension, and the
//! direct Dirichlet/Neumann solves used for validation.

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::sparse::{cg_solve, CsrMatrix};

/// Relative tolerance of the inner linear solves.
pub const LINEAR_SOLVE_TOL: f64 = 1e-10;

/// One real value per mesh node (potentials, conductivities, extensions).
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn zeros(n: usize) -> NodalField {
        NodalField {
            values: vec![0.0; n],
        }
    }

    pub fn constant(n: usize, v: f64) -> NodalField {
        NodalField {
            values: vec![v; n],
        }
    }

    pub fn from_fn(mesh: &TriMesh, f: impl Fn(f64, f64) -> f64) -> NodalField {
        NodalField {
            values: mesh.nodes().iter().map(|&[x, y]| f(x, y)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self, mesh: &TriMesh) -> Result<()> {
        if self.values.len() != mesh.num_nodes() {
            return Err(Error::invalid(format!(
                "nodal field has {} values for a mesh with {} nodes",
                self.values.len(),
                mesh.num_nodes()
            )));
        }
        if !self.values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("nodal field".into()));
        }
        Ok(())
    }
}

/// One real value per triangle (edge indicators, gradient magnitudes).
#[derive(Debug, Clone, PartialEq)]
pub struct ElementField {
    pub values: Vec<f64>,
}

impl ElementField {
    pub fn constant(n: usize, v: f64) -> ElementField {
        ElementField {
            values: vec![v; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self, mesh: &TriMesh) -> Result<()> {
        if self.values.len() != mesh.num_triangles() {
            return Err(Error::invalid(format!(
                "element field has {} values for a mesh with {} triangles",
                self.values.len(),
                mesh.num_triangles()
            )));
        }
        if !self.values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("element field".into()));
        }
        Ok(())
    }
}

/// Quadrature weight for the stiffness form: either nodal (averaged to the
/// element as the mean of the three corner values) or already per element.
#[derive(Debug, Clone, Copy)]
pub enum Weight<'a> {
    Nodal(&'a NodalField),
    Element(&'a ElementField),
}

impl<'a> Weight<'a> {
    /// Per-element weight values.
    pub fn element_values(&self, mesh: &TriMesh) -> Vec<f64> {
        match self {
            Weight::Nodal(f) => mesh
                .triangles()
                .iter()
                .map(|&[a, b, c]| (f.values[a] + f.values[b] + f.values[c]) / 3.0)
                .collect(),
            Weight::Element(f) => f.values.clone(),
        }
    }
}

/// An ordered list of boundary measurement pairs; each entry holds the
/// voltage trace `f` and the current density `g` sampled at the boundary
/// nodes in cycle order.
#[derive(Debug, Clone)]
pub struct BoundaryDataSet {
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
}

impl BoundaryDataSet {
    pub fn single(f: Vec<f64>, g: Vec<f64>) -> BoundaryDataSet {
        BoundaryDataSet { pairs: vec![(f, g)] }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks lengths and the compatibility condition on every current
    /// density: the boundary integral of `g` must vanish within
    /// `1e-8 * ||g||` measured in the same quadrature.
    pub fn validate(&self, mesh: &TriMesh) -> Result<()> {
        let nb = mesh.boundary_nodes().len();
        for (m, (f, g)) in self.pairs.iter().enumerate() {
            if f.len() != nb || g.len() != nb {
                return Err(Error::invalid(format!(
                    "measurement {m}: expected {nb} boundary values, got f: {}, g: {}",
                    f.len(),
                    g.len()
                )));
            }
            let total = boundary_integral(mesh, g);
            let scale = boundary_integral(mesh, &g.iter().map(|v| v.abs()).collect::<Vec<_>>());
            if total.abs() > 1e-8 * scale.max(1e-300) {
                return Err(Error::invalid(format!(
                    "measurement {m}: incompatible current density, loop integral {total:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// Gradients of the three nodal basis functions on one triangle, plus area.
pub(crate) fn basis_gradients(mesh: &TriMesh, t: usize) -> ([[f64; 2]; 3], f64) {
    let [a, b, c] = mesh.triangle(t);
    let (pa, pb, pc) = (mesh.node(a), mesh.node(b), mesh.node(c));
    let area = mesh.area(t);
    let inv = 1.0 / (2.0 * area);
    (
        [
            [(pb[1] - pc[1]) * inv, (pc[0] - pb[0]) * inv],
            [(pc[1] - pa[1]) * inv, (pa[0] - pc[0]) * inv],
            [(pa[1] - pb[1]) * inv, (pb[0] - pa[0]) * inv],
        ],
        area,
    )
}

/// Piecewise-constant gradient of a P1 field, one 2-vector per triangle.
pub fn element_gradient(mesh: &TriMesh, v: &NodalField) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let (grads, _) = basis_gradients(mesh, t);
        let tri = mesh.triangle(t);
        let mut g = [0.0, 0.0];
        for k in 0..3 {
            g[0] += v.values[tri[k]] * grads[k][0];
            g[1] += v.values[tri[k]] * grads[k][1];
        }
        out.push(g);
    }
    out
}

/// Assembles the weighted stiffness matrix `K_ij = sum_T w_T area_T
/// grad(phi_i) . grad(phi_j)`. Negative weights are rejected.
pub fn assemble_weighted_stiffness(mesh: &TriMesh, weight: Weight<'_>) -> Result<CsrMatrix> {
    let w = weight.element_values(mesh);
    if let Some(t) = w.iter().position(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::invalid(format!(
            "stiffness weight must be nonnegative and finite; element {t} has {}",
            w[t]
        )));
    }
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let (grads, area) = basis_gradients(mesh, t);
        let tri = mesh.triangle(t);
        let scale = w[t] * area;
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((
                    tri[i],
                    tri[j],
                    scale * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]),
                ));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(mesh.num_nodes(), &triplets))
}

/// Trapezoidal boundary quadrature of a function given at boundary nodes.
pub fn boundary_integral(mesh: &TriMesh, g: &[f64]) -> f64 {
    let cycle = mesh.boundary_nodes();
    let nb = cycle.len();
    let mut total = 0.0;
    for k in 0..nb {
        let a = mesh.node(cycle[k]);
        let b = mesh.node(cycle[(k + 1) % nb]);
        let len = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        total += 0.5 * len * (g[k] + g[(k + 1) % nb]);
    }
    total
}

/// Boundary inner product of two functions sampled at boundary nodes.
pub fn boundary_pairing(mesh: &TriMesh, g: &[f64], f: &[f64]) -> f64 {
    let prod: Vec<f64> = g.iter().zip(f).map(|(a, b)| a * b).collect();
    boundary_integral(mesh, &prod)
}

/// Nodal load vector of the boundary pairing: `L . v` approximates the
/// boundary integral of `g v` for any P1 field `v`. Zero at interior nodes.
pub fn assemble_boundary_pairing(mesh: &TriMesh, g: &[f64]) -> Vec<f64> {
    let cycle = mesh.boundary_nodes();
    let nb = cycle.len();
    let mut load = vec![0.0; mesh.num_nodes()];
    for k in 0..nb {
        let na = cycle[k];
        let nb_ = cycle[(k + 1) % nb];
        let a = mesh.node(na);
        let b = mesh.node(nb_);
        let len = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        load[na] += 0.5 * len * g[k];
        load[nb_] += 0.5 * len * g[(k + 1) % nb];
    }
    load
}

fn interior_nodes(mesh: &TriMesh) -> Vec<usize> {
    (0..mesh.num_nodes())
        .filter(|&i| mesh.tag(i) != crate::mesh::NodeTag::Boundary)
        .collect()
}

/// Scatters boundary values (in cycle order) into a full nodal field.
pub fn scatter_boundary(mesh: &TriMesh, f: &[f64]) -> NodalField {
    let mut field = NodalField::zeros(mesh.num_nodes());
    for (k, &node) in mesh.boundary_nodes().iter().enumerate() {
        field.values[node] = f[k];
    }
    field
}

/// Discrete-harmonic extension of boundary values: solves the unit-weight
/// Laplace problem with Dirichlet data `f`, returning a field that equals
/// `f` at boundary nodes exactly.
pub fn extend_trace(mesh: &TriMesh, f: &[f64]) -> Result<NodalField> {
    let ones = ElementField::constant(mesh.num_triangles(), 1.0);
    dirichlet_lift(mesh, Weight::Element(&ones), f)
}

/// Solves `-div(alpha grad u) = 0` with Dirichlet trace `f`; the returned
/// field matches `f` at boundary nodes exactly.
pub fn solve_dirichlet(mesh: &TriMesh, alpha: Weight<'_>, f: &[f64]) -> Result<NodalField> {
    dirichlet_lift(mesh, alpha, f)
}

fn dirichlet_lift(mesh: &TriMesh, alpha: Weight<'_>, f: &[f64]) -> Result<NodalField> {
    let nb = mesh.boundary_nodes().len();
    if f.len() != nb {
        return Err(Error::invalid(format!(
            "expected {nb} boundary values, got {}",
            f.len()
        )));
    }
    let k = assemble_weighted_stiffness(mesh, alpha)?;
    let lift = scatter_boundary(mesh, f);
    let mut k_lift = vec![0.0; mesh.num_nodes()];
    k.matvec(&lift.values, &mut k_lift);

    let interior = interior_nodes(mesh);
    let k_ii = k.submatrix(&interior);
    let rhs: Vec<f64> = interior.iter().map(|&i| -k_lift[i]).collect();
    let (sol, _) = cg_solve(&k_ii, &rhs, None, LINEAR_SOLVE_TOL, 40 * interior.len() + 200)?;

    let mut out = lift;
    for (p, &i) in interior.iter().enumerate() {
        out.values[i] += sol[p];
    }
    Ok(out)
}

/// Solves the pure Neumann problem `-div(alpha grad w) = 0`,
/// `alpha dw/dn = g`, returning the representative with zero lumped-mass
/// mean. The current density must be compatible.
pub fn solve_neumann(mesh: &TriMesh, alpha: Weight<'_>, g: &[f64]) -> Result<NodalField> {
    let nb = mesh.boundary_nodes().len();
    if g.len() != nb {
        return Err(Error::invalid(format!(
            "expected {nb} boundary values, got {}",
            g.len()
        )));
    }
    let total = boundary_integral(mesh, g);
    let scale = boundary_integral(mesh, &g.iter().map(|v| v.abs()).collect::<Vec<_>>());
    if total.abs() > 1e-8 * scale.max(1e-300) {
        return Err(Error::invalid(format!(
            "incompatible current density: loop integral {total:.3e}"
        )));
    }
    let k = assemble_weighted_stiffness(mesh, alpha)?;
    let load = assemble_boundary_pairing(mesh, g);
    // The load is orthogonal to constants, so CG iterates stay in the range
    // of K and the singular system is consistent.
    let (mut w, _) = cg_solve(&k, &load, None, LINEAR_SOLVE_TOL, 40 * mesh.num_nodes() + 200)?;
    let mass = mesh.lumped_mass();
    let mean: f64 =
        w.iter().zip(mass).map(|(wi, mi)| wi * mi).sum::<f64>() / mass.iter().sum::<f64>();
    for wi in &mut w {
        *wi -= mean;
    }
    Ok(NodalField { values: w })
}

/// Weighted Dirichlet energy `v^T K_alpha v`.
pub fn energy(mesh: &TriMesh, alpha: Weight<'_>, v: &NodalField) -> f64 {
    let w = alpha.element_values(mesh);
    let grads = element_gradient(mesh, v);
    let mut acc = 0.0;
    for t in 0..mesh.num_triangles() {
        acc += w[t] * mesh.area(t) * (grads[t][0] * grads[t][0] + grads[t][1] * grads[t][1]);
    }
    acc
}
