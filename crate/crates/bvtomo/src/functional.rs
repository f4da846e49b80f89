//! The coupled objective of the inversion and its analytic gradient.
//!
//! For one measurement pair `(f, g)` the core quantity is
//!
//! ```text
//! Etilde(u, w, alpha) = (kappa+1)/2 int alpha |grad(u + eta_f)|^2
//!                     + (1-kappa) [ 1/2 int alpha |grad w|^2 - <g, w> ]
//!                     - kappa <g, f>
//! ```
//!
//! with `eta_f` the harmonic extension of the voltage trace. At the triple
//! solving both direct problems with the true conductivity and exact data
//! the three groups cancel and `Etilde` vanishes, so `|Etilde|` acts as a
//! residual. The full objective sums `|Etilde_m|` over the measurement
//! pairs and adds the edge-preserving penalty
//! `mu int (omega |grad alpha|^2 + psi_eps(omega))` plus an optional
//! quadratic anchor on the protective band.

use crate::error::{Error, Result};
use crate::fem::{
    assemble_boundary_pairing, boundary_pairing, element_gradient, extend_trace, BoundaryDataSet,
    ElementField, NodalField,
};
use crate::mesh::TriMesh;
use crate::regularizer::{psi_eps, PotentialSpec};
use crate::synthetic::InclusionSpec;

/// All scalar knobs of a reconstruction run.
#[derive(Debug, Clone)]
pub struct ReconConfig {
    /// Coupling weight between the Dirichlet and Neumann terms.
    pub kappa: f64,
    /// Weight of the edge-preserving penalty.
    pub mu: f64,
    /// Weight of the quadratic anchor `lambda/2 ||alpha - alpha_ref||^2`
    /// on the protective band; the reference experiments run with zero.
    pub lambda: f64,
    /// Smoothing width of the edge-preserving potential.
    pub epsilon: f64,
    /// Conductivity box `[b, c]`.
    pub bounds: (f64, f64),
    /// Background value the protective band is pinned to.
    pub zone_alpha: f64,
    /// Anchor profile for the lambda term; background level when absent.
    pub alpha_ref: Option<NodalField>,
    /// Width of the protective band.
    pub delta: f64,
    /// Outer alternating iterations.
    pub max_iters: usize,
    /// Projected-gradient tolerance of the inner minimization.
    pub inner_tol: f64,
    /// Evaluation budget of the first inner minimization.
    pub inner_max_evals: usize,
    /// Evaluation budget of the warm-started inner minimizations (outer
    /// iterations past the first). With a single measurement the data term
    /// fixes one scalar combination of the conductivity only, so once the
    /// residual is at its floor further inner progress trades inclusion
    /// contrast against the smoothed-out penalty; a short refinement budget
    /// keeps those iterations in the wobble regime the reference solver's
    /// dual-infeasibility stop produces. Runs with frozen indicator ignore
    /// this and use the full budget (their collapse is the point of the
    /// control case).
    pub warm_inner_max_evals: usize,
    /// Keep the edge indicator frozen at its initial profile.
    pub freeze_omega: bool,
    /// Irreducible data-term level; the inner solve stops once the data
    /// term falls to this floor. Zero for exact data. For noisy voltages
    /// the floor is the coupling-weighted extension energy of the noise
    /// (see `synthetic::estimate_noise_floor`); descending past it only
    /// fits the noise.
    pub data_floor: f64,
    /// After the quasi-Newton pass, slide along the zero set of the data
    /// residuals to finish minimizing the penalty (tangential steps with
    /// curvature preconditioning). Used by the known-interface single
    /// iteration mode, where the slide provably heads for the anchored
    /// background; off by default in the blind loop, where the same slide
    /// washes out contrast that the rank-deficient data term cannot pin.
    pub manifold_polish: bool,
    /// Safety margin around the interface when extracting the two
    /// reconstructed levels.
    pub extract_band: f64,
    /// Seed for noise generation recorded in manifests.
    pub rng_seed: u64,
    /// Inclusion geometry used for reporting the two levels.
    pub inclusion: InclusionSpec,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            kappa: 10.0,
            mu: 1.0,
            lambda: 0.0,
            epsilon: 0.1,
            bounds: (1.0, 2.5),
            zone_alpha: 1.0,
            alpha_ref: None,
            delta: 0.2,
            max_iters: 10,
            inner_tol: 1e-6,
            inner_max_evals: 500,
            warm_inner_max_evals: 0,
            freeze_omega: false,
            data_floor: 0.0,
            manifold_polish: false,
            extract_band: 0.3,
            rng_seed: 0,
            inclusion: crate::synthetic::Geometry::Concentric.inclusion(),
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        let (b, c) = self.bounds;
        if !(b > 0.0 && b <= c) {
            return Err(Error::invalid(format!("bounds must satisfy 0 < b <= c, got ({b}, {c})")));
        }
        if self.mu < 0.0 || self.lambda < 0.0 {
            return Err(Error::invalid("mu and lambda must be nonnegative"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::invalid("inner_tol must be positive"));
        }
        Ok(())
    }

    pub fn potential(&self) -> PotentialSpec {
        PotentialSpec {
            epsilon: self.epsilon,
        }
    }
}

/// The three groups of one measurement's energy, reported separately.
#[derive(Debug, Clone, Copy)]
pub struct EtildeParts {
    /// `(kappa+1)/2 int alpha |grad(u + eta_f)|^2`
    pub dirichlet: f64,
    /// `(1-kappa) [ 1/2 int alpha |grad w|^2 - <g, w> ]`
    pub neumann: f64,
    /// `-kappa <g, f>`
    pub pairing: f64,
}

impl EtildeParts {
    pub fn total(&self) -> f64 {
        self.dirichlet + self.neumann + self.pairing
    }
}

/// Additive pieces of the full objective; they sum to the value.
#[derive(Debug, Clone, Copy, Default)]
pub struct Breakdown {
    /// `sum_m |Etilde_m|`
    pub data: f64,
    /// `lambda/2 sum_{band} m_i (alpha_i - ref_i)^2`
    pub anchor: f64,
    /// `mu int omega |grad alpha|^2`
    pub penalty_grad: f64,
    /// `mu int psi_eps(omega)`
    pub penalty_dual: f64,
}

impl Breakdown {
    pub fn total(&self) -> f64 {
        self.data + self.anchor + self.penalty_grad + self.penalty_dual
    }
}

/// Per-mesh precomputation for one measurement set: trace extensions and
/// their element gradients, boundary load vectors, and `<g, f>` pairings.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub eta: Vec<NodalField>,
    pub eta_grad: Vec<Vec<[f64; 2]>>,
    pub load: Vec<Vec<f64>>,
    pub gf: Vec<f64>,
}

impl MeasurementSet {
    pub fn prepare(mesh: &TriMesh, data: &BoundaryDataSet) -> Result<MeasurementSet> {
        data.validate(mesh)?;
        let mut eta = Vec::new();
        let mut eta_grad = Vec::new();
        let mut load = Vec::new();
        let mut gf = Vec::new();
        for (f, g) in &data.pairs {
            let ext = extend_trace(mesh, f)?;
            eta_grad.push(element_gradient(mesh, &ext));
            eta.push(ext);
            load.push(assemble_boundary_pairing(mesh, g));
            gf.push(boundary_pairing(mesh, g, f));
        }
        Ok(MeasurementSet {
            eta,
            eta_grad,
            load,
            gf,
        })
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }
}

/// Evaluation context: everything frozen during one inner minimization.
pub struct JContext<'a> {
    pub mesh: &'a TriMesh,
    pub meas: &'a MeasurementSet,
    pub cfg: &'a ReconConfig,
    omega: Vec<f64>,
    /// `mu int psi_eps(omega)`, cached: it does not depend on the fields.
    psi_total: f64,
}

impl<'a> JContext<'a> {
    pub fn new(
        mesh: &'a TriMesh,
        meas: &'a MeasurementSet,
        cfg: &'a ReconConfig,
        omega: &ElementField,
    ) -> Result<JContext<'a>> {
        cfg.validate()?;
        omega.validate(mesh)?;
        let spec = cfg.potential();
        let mut psi_total = 0.0;
        for t in 0..mesh.num_triangles() {
            // indicators below the dual floor occur only in hand-built
            // initial profiles; lift them to the floor for reporting
            let w = omega.values[t].max(spec.omega_min());
            psi_total += cfg.mu * mesh.area(t) * psi_eps(w, &spec)?;
        }
        Ok(JContext {
            mesh,
            meas,
            cfg,
            omega: omega.values.clone(),
            psi_total,
        })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    fn alpha_element(&self, alpha: &NodalField, t: usize) -> f64 {
        let [a, b, c] = self.mesh.triangle(t);
        (alpha.values[a] + alpha.values[b] + alpha.values[c]) / 3.0
    }

    /// Signed energies of all measurements at `(u, w, alpha)`.
    pub fn etilde_all(&self, u: &NodalField, w: &NodalField, alpha: &NodalField) -> Vec<f64> {
        let gu = element_gradient(self.mesh, u);
        let gw = element_gradient(self.mesh, w);
        let n_meas = self.meas.len();
        let mut dirichlet = vec![0.0; n_meas];
        let mut neumann_quad = 0.0;
        for t in 0..self.mesh.num_triangles() {
            let a_t = self.alpha_element(alpha, t);
            let scale = a_t * self.mesh.area(t);
            for m in 0..n_meas {
                let gx = gu[t][0] + self.meas.eta_grad[m][t][0];
                let gy = gu[t][1] + self.meas.eta_grad[m][t][1];
                dirichlet[m] += scale * (gx * gx + gy * gy);
            }
            neumann_quad += scale * (gw[t][0] * gw[t][0] + gw[t][1] * gw[t][1]);
        }
        let kappa = self.cfg.kappa;
        (0..n_meas)
            .map(|m| {
                let lw: f64 = self.meas.load[m]
                    .iter()
                    .zip(&w.values)
                    .map(|(l, wv)| l * wv)
                    .sum();
                (kappa + 1.0) / 2.0 * dirichlet[m]
                    + (1.0 - kappa) * (0.5 * neumann_quad - lw)
                    - kappa * self.meas.gf[m]
            })
            .collect()
    }

    /// One measurement's signed energy at possibly measurement-specific
    /// fields.
    pub fn etilde_one(&self, m: usize, u: &NodalField, w: &NodalField, alpha: &NodalField) -> f64 {
        let gu = element_gradient(self.mesh, u);
        let gw = element_gradient(self.mesh, w);
        let kappa = self.cfg.kappa;
        let mut dirichlet = 0.0;
        let mut neumann_quad = 0.0;
        for t in 0..self.mesh.num_triangles() {
            let a_t = self.alpha_element(alpha, t);
            let scale = a_t * self.mesh.area(t);
            let gx = gu[t][0] + self.meas.eta_grad[m][t][0];
            let gy = gu[t][1] + self.meas.eta_grad[m][t][1];
            dirichlet += scale * (gx * gx + gy * gy);
            neumann_quad += scale * (gw[t][0] * gw[t][0] + gw[t][1] * gw[t][1]);
        }
        let lw: f64 = self.meas.load[m]
            .iter()
            .zip(&w.values)
            .map(|(l, wv)| l * wv)
            .sum();
        (kappa + 1.0) / 2.0 * dirichlet + (1.0 - kappa) * (0.5 * neumann_quad - lw)
            - kappa * self.meas.gf[m]
    }

    /// Penalty pieces alone (edge penalty, dual constant, anchor); the data
    /// entry is zero.
    pub fn penalty_parts(&self, alpha: &NodalField) -> Breakdown {
        let ga = element_gradient(self.mesh, alpha);
        let mut penalty_grad = 0.0;
        for t in 0..self.mesh.num_triangles() {
            penalty_grad += self.cfg.mu
                * self.mesh.area(t)
                * self.omega[t]
                * (ga[t][0] * ga[t][0] + ga[t][1] * ga[t][1]);
        }

        let mut anchor = 0.0;
        if self.cfg.lambda > 0.0 {
            let mass = self.mesh.lumped_mass();
            for i in 0..self.mesh.num_nodes() {
                if self.mesh.in_delta_zone(i) {
                    let r = self
                        .cfg
                        .alpha_ref
                        .as_ref()
                        .map(|f| f.values[i])
                        .unwrap_or(self.cfg.zone_alpha);
                    anchor += 0.5
                        * self.cfg.lambda
                        * mass[i]
                        * (alpha.values[i] - r)
                        * (alpha.values[i] - r);
                }
            }
        }

        Breakdown {
            data: 0.0,
            anchor,
            penalty_grad,
            penalty_dual: self.psi_total,
        }
    }

    /// Objective value with its additive pieces.
    pub fn eval(&self, u: &NodalField, w: &NodalField, alpha: &NodalField) -> Breakdown {
        let etildes = self.etilde_all(u, w, alpha);
        let data: f64 = etildes.iter().map(|e| e.abs()).sum();
        let mut parts = self.penalty_parts(alpha);
        parts.data = data;
        parts
    }

    /// Analytic gradient with respect to every node of `(u, w, alpha)`.
    ///
    /// `grad_u` is nonzero only away from the boundary (the `u` variable
    /// lives in the zero-trace space); `grad_w` is returned after removing
    /// its mean component, which is zero analytically and only carries
    /// rounding noise.
    pub fn grad(
        &self,
        u: &NodalField,
        w: &NodalField,
        alpha: &NodalField,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.mesh.num_nodes();
        let etildes = self.etilde_all(u, w, alpha);
        let signs: Vec<f64> = etildes.iter().map(|e| e.signum()).collect();
        let sign_sum: f64 = signs.iter().sum();
        let kappa = self.cfg.kappa;

        let gu_el = element_gradient(self.mesh, u);
        let gw_el = element_gradient(self.mesh, w);
        let ga_el = element_gradient(self.mesh, alpha);

        let mut grad_u = vec![0.0; n];
        let mut grad_w = vec![0.0; n];
        let mut grad_a = vec![0.0; n];

        for t in 0..self.mesh.num_triangles() {
            let (basis, area) = crate::fem::basis_gradients(self.mesh, t);
            let tri = self.mesh.triangle(t);
            let a_t = self.alpha_element(alpha, t);

            let wq = gw_el[t][0] * gw_el[t][0] + gw_el[t][1] * gw_el[t][1];
            let mut alpha_coeff = sign_sum * (1.0 - kappa) / 2.0 * wq;
            let mut u_dir = [0.0f64, 0.0f64];
            for m in 0..self.meas.len() {
                let gx = gu_el[t][0] + self.meas.eta_grad[m][t][0];
                let gy = gu_el[t][1] + self.meas.eta_grad[m][t][1];
                alpha_coeff += signs[m] * (kappa + 1.0) / 2.0 * (gx * gx + gy * gy);
                u_dir[0] += signs[m] * gx;
                u_dir[1] += signs[m] * gy;
            }
            let w_coeff = sign_sum * (1.0 - kappa) * a_t * area;
            let u_coeff = (kappa + 1.0) * a_t * area;
            for k in 0..3 {
                let i = tri[k];
                grad_u[i] += u_coeff * (basis[k][0] * u_dir[0] + basis[k][1] * u_dir[1]);
                grad_w[i] += w_coeff * (basis[k][0] * gw_el[t][0] + basis[k][1] * gw_el[t][1]);
                // energy is linear in the element conductivity, which is the
                // mean of the three corner values
                grad_a[i] += area / 3.0 * alpha_coeff;
                // edge penalty: 2 mu (K_omega alpha)_i
                grad_a[i] += 2.0
                    * self.cfg.mu
                    * self.omega[t]
                    * area
                    * (basis[k][0] * ga_el[t][0] + basis[k][1] * ga_el[t][1]);
            }
        }

        // boundary load part of the w gradient
        for m in 0..self.meas.len() {
            let c = -signs[m] * (1.0 - kappa);
            for i in 0..n {
                grad_w[i] += c * self.meas.load[m][i];
            }
        }

        // anchor term
        if self.cfg.lambda > 0.0 {
            let mass = self.mesh.lumped_mass();
            for i in 0..n {
                if self.mesh.in_delta_zone(i) {
                    let r = self
                        .cfg
                        .alpha_ref
                        .as_ref()
                        .map(|f| f.values[i])
                        .unwrap_or(self.cfg.zone_alpha);
                    grad_a[i] += self.cfg.lambda * mass[i] * (alpha.values[i] - r);
                }
            }
        }

        // u is a zero-trace variable
        for &b in self.mesh.boundary_nodes() {
            grad_u[b] = 0.0;
        }
        // remove the (analytically zero) mean component of the w gradient
        let mean: f64 = grad_w.iter().sum::<f64>() / n as f64;
        for v in &mut grad_w {
            *v -= mean;
        }

        (grad_u, grad_w, grad_a)
    }

    /// Gradient of one signed measurement energy `Etilde_m`, without the
    /// residual sign factor. Same layout conventions as [`JContext::grad`].
    pub fn grad_etilde_one(
        &self,
        m: usize,
        u: &NodalField,
        w: &NodalField,
        alpha: &NodalField,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.mesh.num_nodes();
        let kappa = self.cfg.kappa;
        let gu_el = element_gradient(self.mesh, u);
        let gw_el = element_gradient(self.mesh, w);
        let mut grad_u = vec![0.0; n];
        let mut grad_w = vec![0.0; n];
        let mut grad_a = vec![0.0; n];
        for t in 0..self.mesh.num_triangles() {
            let (basis, area) = crate::fem::basis_gradients(self.mesh, t);
            let tri = self.mesh.triangle(t);
            let a_t = self.alpha_element(alpha, t);
            let gx = gu_el[t][0] + self.meas.eta_grad[m][t][0];
            let gy = gu_el[t][1] + self.meas.eta_grad[m][t][1];
            let wq = gw_el[t][0] * gw_el[t][0] + gw_el[t][1] * gw_el[t][1];
            let alpha_coeff =
                (kappa + 1.0) / 2.0 * (gx * gx + gy * gy) + (1.0 - kappa) / 2.0 * wq;
            let u_coeff = (kappa + 1.0) * a_t * area;
            let w_coeff = (1.0 - kappa) * a_t * area;
            for k in 0..3 {
                let i = tri[k];
                grad_u[i] += u_coeff * (basis[k][0] * gx + basis[k][1] * gy);
                grad_w[i] += w_coeff * (basis[k][0] * gw_el[t][0] + basis[k][1] * gw_el[t][1]);
                grad_a[i] += area / 3.0 * alpha_coeff;
            }
        }
        for i in 0..n {
            grad_w[i] -= (1.0 - kappa) * self.meas.load[m][i];
        }
        for &b in self.mesh.boundary_nodes() {
            grad_u[b] = 0.0;
        }
        (grad_u, grad_w, grad_a)
    }

    /// Gradient of the penalty terms alone (edge penalty plus anchor);
    /// only the conductivity block is nonzero.
    pub fn grad_penalty(&self, alpha: &NodalField) -> Vec<f64> {
        let n = self.mesh.num_nodes();
        let ga_el = element_gradient(self.mesh, alpha);
        let mut grad_a = vec![0.0; n];
        for t in 0..self.mesh.num_triangles() {
            let (basis, area) = crate::fem::basis_gradients(self.mesh, t);
            let tri = self.mesh.triangle(t);
            for k in 0..3 {
                grad_a[tri[k]] += 2.0
                    * self.cfg.mu
                    * self.omega[t]
                    * area
                    * (basis[k][0] * ga_el[t][0] + basis[k][1] * ga_el[t][1]);
            }
        }
        if self.cfg.lambda > 0.0 {
            let mass = self.mesh.lumped_mass();
            for i in 0..n {
                if self.mesh.in_delta_zone(i) {
                    let r = self
                        .cfg
                        .alpha_ref
                        .as_ref()
                        .map(|f| f.values[i])
                        .unwrap_or(self.cfg.zone_alpha);
                    grad_a[i] += self.cfg.lambda * mass[i] * (alpha.values[i] - r);
                }
            }
        }
        grad_a
    }
}

/// The signed energy of a single measurement pair, with its three groups.
pub fn eval_etilde(
    mesh: &TriMesh,
    u: &NodalField,
    w: &NodalField,
    alpha: &NodalField,
    pair: &(Vec<f64>, Vec<f64>),
    kappa: f64,
) -> Result<EtildeParts> {
    u.validate(mesh)?;
    w.validate(mesh)?;
    alpha.validate(mesh)?;
    for &b in mesh.boundary_nodes() {
        if u.values[b] != 0.0 {
            return Err(Error::invalid(
                "u must vanish at boundary nodes; fold the trace into the extension",
            ));
        }
    }
    let (f, g) = pair;
    let eta = extend_trace(mesh, f)?;
    let eta_grad = element_gradient(mesh, &eta);
    let gu = element_gradient(mesh, u);
    let gw = element_gradient(mesh, w);
    let mut dirichlet = 0.0;
    let mut neumann_quad = 0.0;
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangle(t);
        let a_t = (alpha.values[a] + alpha.values[b] + alpha.values[c]) / 3.0;
        let scale = a_t * mesh.area(t);
        let gx = gu[t][0] + eta_grad[t][0];
        let gy = gu[t][1] + eta_grad[t][1];
        dirichlet += scale * (gx * gx + gy * gy);
        neumann_quad += scale * (gw[t][0] * gw[t][0] + gw[t][1] * gw[t][1]);
    }
    let load = assemble_boundary_pairing(mesh, g);
    let lw: f64 = load.iter().zip(&w.values).map(|(l, wv)| l * wv).sum();
    let gf = boundary_pairing(mesh, g, f);
    Ok(EtildeParts {
        dirichlet: (kappa + 1.0) / 2.0 * dirichlet,
        neumann: (1.0 - kappa) * (0.5 * neumann_quad - lw),
        pairing: -kappa * gf,
    })
}

/// Objective value at `(u, w, alpha, omega)` for a measurement set.
pub fn eval_j(
    mesh: &TriMesh,
    u: &NodalField,
    w: &NodalField,
    alpha: &NodalField,
    omega: &ElementField,
    data: &BoundaryDataSet,
    cfg: &ReconConfig,
) -> Result<Breakdown> {
    let meas = MeasurementSet::prepare(mesh, data)?;
    let ctx = JContext::new(mesh, &meas, cfg, omega)?;
    u.validate(mesh)?;
    w.validate(mesh)?;
    alpha.validate(mesh)?;
    Ok(ctx.eval(u, w, alpha))
}

/// Analytic gradient at `(u, w, alpha, omega)`; see [`JContext::grad`].
pub fn grad_j(
    mesh: &TriMesh,
    u: &NodalField,
    w: &NodalField,
    alpha: &NodalField,
    omega: &ElementField,
    data: &BoundaryDataSet,
    cfg: &ReconConfig,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let meas = MeasurementSet::prepare(mesh, data)?;
    let ctx = JContext::new(mesh, &meas, cfg, omega)?;
    Ok(ctx.grad(u, w, alpha))
}
