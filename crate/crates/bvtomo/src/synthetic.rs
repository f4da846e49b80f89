//! Closed-form benchmark problems on the disc of radius 2: a circular
//! inclusion of conductivity 2 in a unit background, in concentric and two
//! eccentric placements, with exact potentials, matched boundary data,
//! multi-measurement families, noise injection and initial-guess builders.
//!
//! The eccentric potentials come from a two-media image construction in
//! bipolar coordinates. Writing `z = x + i y`, the level sets of
//! `tau(z) = ln(|z + k| / |z + k'|)` are circles; the constants are chosen
//! so that `tau = tau1` is the outer boundary and `tau = tau2` the
//! inclusion interface. The potential is `c(tau) * 2a * y / (|z + k| |z + k'|)`
//! with `c` switching between an `exp(-tau)` dipole inside the inclusion
//! and a reflected combination outside; both pieces are harmonic and the
//! flux is continuous across the interface.

use crate::error::{Error, Result};
use crate::fem::{BoundaryDataSet, ElementField, NodalField};
use crate::mesh::TriMesh;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Radius of the measurement boundary in every benchmark.
pub const DOMAIN_RADIUS: f64 = 2.0;

/// A circular inclusion of radius 1 with conductivity 2 in a background of 1.
#[derive(Debug, Clone, Copy)]
pub struct InclusionSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub alpha_in: f64,
    pub alpha_out: f64,
}

impl InclusionSpec {
    pub fn new(center: [f64; 2]) -> InclusionSpec {
        InclusionSpec {
            center,
            radius: 1.0,
            alpha_in: 2.0,
            alpha_out: 1.0,
        }
    }

    /// Distance from a point to the inclusion center.
    pub fn dist(&self, p: [f64; 2]) -> f64 {
        ((p[0] - self.center[0]).powi(2) + (p[1] - self.center[1]).powi(2)).sqrt()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.dist(p) < self.radius
    }

    /// Exact two-valued conductivity, resolved per element by the centroid.
    pub fn exact_alpha_elements(&self, mesh: &TriMesh) -> ElementField {
        ElementField {
            values: (0..mesh.num_triangles())
                .map(|t| {
                    if self.contains(mesh.centroid(t)) {
                        self.alpha_in
                    } else {
                        self.alpha_out
                    }
                })
                .collect(),
        }
    }

    /// Nodal sampling of the two-valued conductivity (interface nodes take
    /// the inclusion value).
    pub fn exact_alpha_nodes(&self, mesh: &TriMesh) -> NodalField {
        NodalField {
            values: mesh
                .nodes()
                .iter()
                .map(|&p| {
                    if self.dist(p) <= self.radius {
                        self.alpha_in
                    } else {
                        self.alpha_out
                    }
                })
                .collect(),
        }
    }
}

/// The three benchmark placements of the inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Concentric,
    StrongEccentric,
    MildEccentric,
}

impl Geometry {
    pub const ALL: [Geometry; 3] = [
        Geometry::Concentric,
        Geometry::StrongEccentric,
        Geometry::MildEccentric,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Geometry::Concentric => "concentric",
            Geometry::StrongEccentric => "strong_eccentric",
            Geometry::MildEccentric => "mild_eccentric",
        }
    }

    pub fn parse(s: &str) -> Result<Geometry> {
        match s {
            "concentric" => Ok(Geometry::Concentric),
            "strong_eccentric" => Ok(Geometry::StrongEccentric),
            "mild_eccentric" => Ok(Geometry::MildEccentric),
            other => Err(Error::invalid(format!(
                "unknown geometry {other:?}; expected concentric, strong_eccentric or mild_eccentric"
            ))),
        }
    }

    pub fn inclusion(&self) -> InclusionSpec {
        match self {
            Geometry::Concentric => InclusionSpec::new([0.0, 0.0]),
            Geometry::StrongEccentric => {
                InclusionSpec::new([(5f64.sqrt() - 17f64.sqrt()) / 2.0, 0.0])
            }
            Geometry::MildEccentric => InclusionSpec::new([-1.0 / 3.0, 0.0]),
        }
    }

    /// Boundary pair `(f, g)` sampled at the mesh boundary nodes.
    pub fn boundary_pair(&self, mesh: &TriMesh) -> (Vec<f64>, Vec<f64>) {
        match self {
            Geometry::Concentric => concentric_data(mesh),
            Geometry::StrongEccentric => strong_eccentric_data(mesh),
            Geometry::MildEccentric => mild_eccentric_data(mesh),
        }
    }

    /// Exact potential in polar coordinates about the origin.
    pub fn exact_potential(&self, rho: f64, phi: f64) -> Result<f64> {
        match self {
            Geometry::Concentric => concentric_exact(rho, phi),
            Geometry::StrongEccentric => strong_eccentric_exact(rho, phi),
            Geometry::MildEccentric => mild_eccentric_exact(rho, phi),
        }
    }
}

fn check_inside(rho: f64) -> Result<()> {
    if !(0.0..=DOMAIN_RADIUS + 1e-9).contains(&rho) {
        return Err(Error::invalid(format!(
            "point at rho = {rho} lies outside the disc of radius {DOMAIN_RADIUS}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// concentric benchmark
// ---------------------------------------------------------------------------

/// Voltage/current pair driving the concentric benchmark:
/// `f = 1 + 11/4 cos(phi)`, `g = 13/8 cos(phi)` at the boundary node angles.
pub fn concentric_data(mesh: &TriMesh) -> (Vec<f64>, Vec<f64>) {
    let mut f = Vec::new();
    let mut g = Vec::new();
    for &b in mesh.boundary_nodes() {
        let phi = mesh.boundary_angle(b);
        f.push(1.0 + 2.75 * phi.cos());
        g.push(13.0 / 8.0 * phi.cos());
    }
    (f, g)
}

/// Exact potential of the concentric problem: `1 + rho cos(phi)` inside the
/// unit circle, `1 + (3/2 rho - 1/(2 rho)) cos(phi)` outside. Continuous at
/// the interface with continuous flux `2 cos(phi)` from both sides.
pub fn concentric_exact(rho: f64, phi: f64) -> Result<f64> {
    check_inside(rho)?;
    Ok(if rho <= 1.0 {
        1.0 + rho * phi.cos()
    } else {
        1.0 + (1.5 * rho - 0.5 / rho) * phi.cos()
    })
}

/// Exact weighted Dirichlet energy of the concentric solution,
/// `int alpha |grad u|^2 = 143 pi / 16`, from the radial closed form.
pub fn concentric_exact_energy() -> f64 {
    143.0 * std::f64::consts::PI / 16.0
}

// ---------------------------------------------------------------------------
// eccentric benchmarks
// ---------------------------------------------------------------------------

/// Constants of one bipolar two-media construction.
#[derive(Debug, Clone, Copy)]
struct BipolarCase {
    /// Pole offsets on the negative x-axis: tau = ln(|z+k| / |z+kp|).
    k: f64,
    kp: f64,
    /// Focal half-parameter entering the data normalization.
    a: f64,
    /// tau level of the outer boundary.
    tau1: f64,
    /// tau level of the inclusion interface.
    tau2: f64,
    /// Inclusion conductivity.
    alpha2: f64,
}

impl BipolarCase {
    fn new(a: f64, tau1: f64, tau2: f64) -> BipolarCase {
        let e2t1 = (-2.0 * tau1).exp();
        let k = 2.0 * a / (1.0 - e2t1);
        BipolarCase {
            k,
            kp: k * e2t1,
            a,
            tau1,
            tau2,
            alpha2: 2.0,
        }
    }

    fn strong() -> BipolarCase {
        BipolarCase::new(
            0.5,
            ((17f64.sqrt() + 1.0) / 4.0).ln(),
            ((5f64.sqrt() + 1.0) / 2.0).ln(),
        )
    }

    fn mild() -> BipolarCase {
        BipolarCase::new(
            4.0 / 3.0 * 10f64.sqrt(),
            ((2.0 * 10f64.sqrt() + 7.0) / 3.0).ln(),
            ((4.0 * 10f64.sqrt() + 13.0) / 3.0).ln(),
        )
    }

    fn tau(&self, x: f64, y: f64) -> f64 {
        let d1 = ((x + self.k).powi(2) + y * y).sqrt();
        let d2 = ((x + self.kp).powi(2) + y * y).sqrt();
        (d1 / d2).ln()
    }

    /// Reflected dipole amplitude in the matrix region.
    fn outer_amplitude(&self, tau: f64) -> f64 {
        0.5 * (1.0 + self.alpha2) * (-tau).exp()
            + 0.5 * (1.0 - self.alpha2) * (-2.0 * self.tau2).exp() * tau.exp()
    }

    /// Trace and flux scale factors on the outer boundary.
    fn s_f(&self) -> f64 {
        self.outer_amplitude(self.tau1)
    }

    fn s_g(&self) -> f64 {
        0.5 * (1.0 + self.alpha2) * (-self.tau1).exp()
            - 0.5 * (1.0 - self.alpha2) * (-2.0 * self.tau2).exp() * self.tau1.exp()
    }

    fn potential(&self, x: f64, y: f64) -> f64 {
        let tau = self.tau(x, y);
        let d1 = ((x + self.k).powi(2) + y * y).sqrt();
        let d2 = ((x + self.kp).powi(2) + y * y).sqrt();
        let base = 2.0 * self.a * y / (d1 * d2);
        if tau > self.tau2 {
            (-tau).exp() * base
        } else {
            self.outer_amplitude(tau) * base
        }
    }
}

/// Boundary pair of the strongly eccentric benchmark (inclusion centred at
/// `((sqrt 5 - sqrt 17)/2, 0)`).
pub fn strong_eccentric_data(mesh: &TriMesh) -> (Vec<f64>, Vec<f64>) {
    let case = BipolarCase::strong();
    let (sf, sg) = (case.s_f(), case.s_g());
    let mut f = Vec::new();
    let mut g = Vec::new();
    for &b in mesh.boundary_nodes() {
        let phi = mesh.boundary_angle(b);
        let den = 17f64.sqrt() + 4.0 * phi.cos();
        f.push(sf * phi.sin() / den);
        g.push(sg * 0.5 * phi.sin() / (den * den));
    }
    (f, g)
}

/// Exact potential of the strongly eccentric problem.
pub fn strong_eccentric_exact(rho: f64, phi: f64) -> Result<f64> {
    check_inside(rho)?;
    Ok(BipolarCase::strong().potential(rho * phi.cos(), rho * phi.sin()))
}

/// Boundary pair of the mildly eccentric benchmark (inclusion centred at
/// `(-1/3, 0)`).
pub fn mild_eccentric_data(mesh: &TriMesh) -> (Vec<f64>, Vec<f64>) {
    let case = BipolarCase::mild();
    let (mf, mg) = (case.s_f(), case.s_g());
    let mut f = Vec::new();
    let mut g = Vec::new();
    for &b in mesh.boundary_nodes() {
        let phi = mesh.boundary_angle(b);
        let den = 28.0 / 3.0 + 4.0 * phi.cos();
        f.push(mf * (8.0 / 3.0) * 10f64.sqrt() * phi.sin() / den);
        g.push(mg * (320.0 / 9.0) * phi.sin() / (den * den));
    }
    (f, g)
}

/// Exact potential of the mildly eccentric problem.
pub fn mild_eccentric_exact(rho: f64, phi: f64) -> Result<f64> {
    check_inside(rho)?;
    Ok(BipolarCase::mild().potential(rho * phi.cos(), rho * phi.sin()))
}

// ---------------------------------------------------------------------------
// multi-measurement family (concentric)
// ---------------------------------------------------------------------------

/// Amplitude of the voltage trace of the `m`-th harmonic pair.
fn multiharmonic_f_amplitude(m: u32) -> f64 {
    let p = 2f64.powi(m as i32);
    13.0 / 8.0 * (3.0 * 2.0 * p * p - 2.0) / (m as f64 * (3.0 * p * p + 1.0))
}

/// The `m`-th boundary pair of the concentric multi-measurement family:
/// `g_m = 13/8 cos(m phi)` with the matching trace; `m = 1` reproduces the
/// single-measurement pair. `m = 0` violates compatibility and is rejected.
pub fn multiharmonic_data(mesh: &TriMesh, m: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(Error::invalid(
            "harmonic index 0 has nonzero mean current and is not admissible",
        ));
    }
    let amp = multiharmonic_f_amplitude(m);
    let mut f = Vec::new();
    let mut g = Vec::new();
    for &b in mesh.boundary_nodes() {
        let phi = mesh.boundary_angle(b);
        f.push(1.0 + amp * (m as f64 * phi).cos());
        g.push(13.0 / 8.0 * (m as f64 * phi).cos());
    }
    Ok((f, g))
}

/// Exact potential matched to the `m`-th harmonic pair.
pub fn multiharmonic_exact(m: u32, rho: f64, phi: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("harmonic index must be positive"));
    }
    check_inside(rho)?;
    let p = 2f64.powi(m as i32);
    let denom = m as f64 * (3.0 * p * p + 1.0);
    let c = (m as f64 * phi).cos();
    Ok(if rho <= 1.0 {
        1.0 + 13.0 / 8.0 * 4.0 * p / denom * rho.powi(m as i32) * c
    } else {
        1.0 + 13.0 / 8.0 * 2.0 * p / denom
            * (3.0 * rho.powi(m as i32) - rho.powi(-(m as i32)))
            * c
    })
}

/// The first `n` harmonic pairs bundled as a measurement set.
pub fn multiharmonic_set(mesh: &TriMesh, n: u32) -> Result<BoundaryDataSet> {
    let mut pairs = Vec::new();
    for m in 1..=n {
        pairs.push(multiharmonic_data(mesh, m)?);
    }
    Ok(BoundaryDataSet { pairs })
}

// ---------------------------------------------------------------------------
// noise
// ---------------------------------------------------------------------------

/// Multiplicative voltage perturbation: relative level and generator seed.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub theta: f64,
    pub rng_seed: u64,
}

/// Perturbs every voltage sample by `|f| * U * theta` with `U` uniform on
/// `(-1, 1)`; current densities are left untouched. The generator is
/// ChaCha8 seeded from `rng_seed`, drawing one variate per boundary node
/// per pair in order, so a fixed seed reproduces the same perturbation.
pub fn add_noise(data: &BoundaryDataSet, spec: &NoiseSpec) -> BoundaryDataSet {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let pairs = data
        .pairs
        .iter()
        .map(|(f, g)| {
            let noisy = f
                .iter()
                .map(|&v| v + v.abs() * rng.random_range(-1.0..1.0) * spec.theta)
                .collect();
            (noisy, g.clone())
        })
        .collect();
    BoundaryDataSet { pairs }
}

/// Estimated irreducible data-term level under multiplicative voltage
/// noise: the coupling-weighted harmonic-extension energy of the
/// perturbation, averaged over a few generator draws and summed over the
/// measurement pairs.
///
/// The noisy trace enters the data term through its extension, so the
/// residual of measurement `m` carries a positive offset near
/// `(kappa+1)/2 * int |grad eta(delta_m)|^2` that no conductivity can
/// remove; iterating the misfit below this level only fits the noise.
pub fn estimate_noise_floor(
    mesh: &TriMesh,
    data: &BoundaryDataSet,
    spec: &NoiseSpec,
    kappa: f64,
) -> Result<f64> {
    if spec.theta == 0.0 {
        return Ok(0.0);
    }
    let draws = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed ^ 0x6e6f697365);
    let mut floor = 0.0;
    for (f, _) in &data.pairs {
        let mut acc = 0.0;
        for _ in 0..draws {
            let delta: Vec<f64> = f
                .iter()
                .map(|&v| v.abs() * rng.random_range(-1.0..1.0) * spec.theta)
                .collect();
            let ext = crate::fem::extend_trace(mesh, &delta)?;
            let ones = ElementField::constant(mesh.num_triangles(), 1.0);
            acc += crate::fem::energy(mesh, crate::fem::Weight::Element(&ones), &ext);
        }
        floor += (kappa + 1.0) / 2.0 * acc / draws as f64;
    }
    Ok(floor)
}

// ---------------------------------------------------------------------------
// initial guesses
// ---------------------------------------------------------------------------

/// Initial edge-indicator profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaInit {
    /// Zero in a ring of width `ell` around the inclusion interface, one
    /// elsewhere.
    Ring { ell: f64 },
    /// Constant one everywhere: the quadratic-smoothing control case.
    Tikhonov,
}

/// Builds the initial indicator. In ring mode an element is marked zero
/// when its centroid lies within `ell/2` of the interface circle, or when
/// the circle passes through the element (so a band thinner than the local
/// element size still marks the interface layer).
pub fn build_omega0(mesh: &TriMesh, inclusion: &InclusionSpec, init: OmegaInit) -> ElementField {
    match init {
        OmegaInit::Tikhonov => ElementField::constant(mesh.num_triangles(), 1.0),
        OmegaInit::Ring { ell } => {
            let half = ell / 2.0;
            let values = (0..mesh.num_triangles())
                .map(|t| {
                    let centroid_hit = (inclusion.dist(mesh.centroid(t)) - inclusion.radius).abs()
                        <= half;
                    let cut = if ell > 0.0 {
                        let tri = mesh.triangle(t);
                        let mut lo = f64::INFINITY;
                        let mut hi = f64::NEG_INFINITY;
                        for &v in tri.iter() {
                            let d = inclusion.dist(mesh.node(v));
                            lo = lo.min(d);
                            hi = hi.max(d);
                        }
                        lo - half <= inclusion.radius && inclusion.radius <= hi + half
                    } else {
                        false
                    };
                    if centroid_hit || cut {
                        0.0
                    } else {
                        1.0
                    }
                })
                .collect();
            ElementField { values }
        }
    }
}

/// Initial conductivity profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaInit {
    /// Background outside `radius + ell/2` of the inclusion center, 2.5 inside.
    Banded { ell: f64 },
    /// 2.5 everywhere away from the protective band.
    Constant,
    /// 5 inside the inclusion, 0.5 in the remaining interior.
    ThreeValued,
}

/// Builds the initial conductivity. Nodes in the protective band always
/// take `zone_value`, the background level the band is pinned to.
pub fn build_alpha0(
    mesh: &TriMesh,
    inclusion: &InclusionSpec,
    init: AlphaInit,
    zone_value: f64,
) -> NodalField {
    let values = (0..mesh.num_nodes())
        .map(|i| {
            if mesh.in_delta_zone(i) {
                return zone_value;
            }
            let p = mesh.node(i);
            match init {
                AlphaInit::Banded { ell } => {
                    if inclusion.dist(p) > inclusion.radius + ell / 2.0 {
                        1.0
                    } else {
                        2.5
                    }
                }
                AlphaInit::Constant => 2.5,
                AlphaInit::ThreeValued => {
                    if inclusion.contains(p) {
                        5.0
                    } else {
                        0.5
                    }
                }
            }
        })
        .collect();
    NodalField { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{boundary_integral, boundary_pairing, energy, Weight};
    use crate::mesh::{generate_disc_mesh, tag_delta_zone};

    #[test]
    fn concentric_data_reference_points() {
        assert!((1.0 + 2.75 - 3.75f64).abs() < 1e-15);
        let mesh = generate_disc_mesh(2.0, 0.27).unwrap();
        let (f, g) = concentric_data(&mesh);
        // node 0 of the boundary cycle sits at angle 0 by construction
        let k0 = mesh
            .boundary_nodes()
            .iter()
            .position(|&b| mesh.boundary_angle(b).abs() < 1e-12)
            .unwrap();
        assert!((f[k0] - 3.75).abs() < 1e-12);
        assert!((g[k0] - 1.625).abs() < 1e-12);
        // compatibility
        assert!(boundary_integral(&mesh, &g).abs() < 1e-10);
    }

    #[test]
    fn concentric_exact_interface_and_trace() {
        // both branches agree at the interface
        let inner = concentric_exact(1.0, 0.0).unwrap();
        assert!((inner - 2.0).abs() < 1e-15);
        for i in 0..32 {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / 32.0;
            let below = concentric_exact(1.0 - 1e-12, phi).unwrap();
            let above = concentric_exact(1.0 + 1e-12, phi).unwrap();
            assert!((below - above).abs() < 1e-10);
            // trace equals the synthetic voltage
            let trace = concentric_exact(2.0, phi).unwrap();
            assert!((trace - (1.0 + 2.75 * phi.cos())).abs() < 1e-12);
            // flux continuity: 2 * d/drho (rho cos) = (3/2 + 1/2) cos
            let inner_flux = 2.0 * phi.cos();
            let outer_flux = (1.5 + 0.5) * phi.cos();
            assert!((inner_flux - outer_flux).abs() < 1e-15);
        }
        assert!(concentric_exact(2.5, 0.0).is_err());
    }

    #[test]
    fn eccentric_trace_consistency() {
        type Exact = fn(f64, f64) -> Result<f64>;
        let cases: [(Geometry, Exact); 2] = [
            (Geometry::StrongEccentric, strong_eccentric_exact),
            (Geometry::MildEccentric, mild_eccentric_exact),
        ];
        for (geom, exact) in cases {
            let mesh = generate_disc_mesh(2.0, 0.5).unwrap();
            let (f, _) = geom.boundary_pair(&mesh);
            for i in 0..64 {
                let phi = 2.0 * std::f64::consts::PI * (i as f64 + 0.31) / 64.0;
                let u = exact(2.0, phi).unwrap();
                // evaluate the closed-form data at the same angle
                let expect = match geom {
                    Geometry::StrongEccentric => {
                        let c = BipolarCase::strong();
                        c.s_f() * phi.sin() / (17f64.sqrt() + 4.0 * phi.cos())
                    }
                    _ => {
                        let c = BipolarCase::mild();
                        c.s_f() * (8.0 / 3.0) * 10f64.sqrt() * phi.sin()
                            / (28.0 / 3.0 + 4.0 * phi.cos())
                    }
                };
                assert!((u - expect).abs() < 1e-10, "{geom:?} at phi = {phi}");
            }
            // odd symmetry: vanishes on the x-axis
            assert!(exact(1.7, 0.0).unwrap().abs() < 1e-14);
            assert!(exact(1.7, std::f64::consts::PI).unwrap().abs() < 1e-12);
            let _ = f;
        }
    }

    #[test]
    fn eccentric_interface_branch_agreement() {
        for case in [BipolarCase::strong(), BipolarCase::mild()] {
            let center_x = if case.a == 0.5 {
                (5f64.sqrt() - 17f64.sqrt()) / 2.0
            } else {
                -1.0 / 3.0
            };
            for i in 0..64 {
                let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.17) / 64.0;
                let (x, y) = (center_x + th.cos(), th.sin());
                // the interface circle is a tau level set
                assert!((case.tau(x, y) - case.tau2).abs() < 1e-10);
                // amplitude factors agree at the seam
                let inner = (-case.tau2).exp();
                let outer = case.outer_amplitude(case.tau2);
                assert!((inner - outer).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn eccentric_data_compatibility() {
        let mesh = generate_disc_mesh(2.0, 0.27).unwrap();
        for geom in [Geometry::StrongEccentric, Geometry::MildEccentric] {
            let (_, g) = geom.boundary_pair(&mesh);
            let scale = boundary_integral(&mesh, &g.iter().map(|v| v.abs()).collect::<Vec<_>>());
            assert!(boundary_integral(&mesh, &g).abs() < 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn multiharmonic_reduces_to_single_pair() {
        // m = 1 amplitude is (13/8)(22/13) = 11/4
        assert!((multiharmonic_f_amplitude(1) - 2.75).abs() < 1e-15);
        // m = 2 amplitude from the formula: (13/8)(94 / 98)
        assert!((multiharmonic_f_amplitude(2) - 13.0 / 8.0 * 94.0 / 98.0).abs() < 1e-15);
        let mesh = generate_disc_mesh(2.0, 0.4).unwrap();
        let (f1, g1) = multiharmonic_data(&mesh, 1).unwrap();
        let (f, g) = concentric_data(&mesh);
        for k in 0..f.len() {
            assert!((f1[k] - f[k]).abs() < 1e-12 && (g1[k] - g[k]).abs() < 1e-12);
        }
        assert!(multiharmonic_data(&mesh, 0).is_err());
        // every harmonic integrates to zero
        for m in 1..=5 {
            let (_, gm) = multiharmonic_data(&mesh, m).unwrap();
            assert!(boundary_integral(&mesh, &gm).abs() < 1e-10);
        }
    }

    #[test]
    fn multiharmonic_exact_matches_data() {
        for m in 1..=5u32 {
            for i in 0..16 {
                let phi = 2.0 * std::f64::consts::PI * (i as f64 + 0.4) / 16.0;
                // trace consistency
                let u = multiharmonic_exact(m, 2.0, phi).unwrap();
                let amp = multiharmonic_f_amplitude(m);
                assert!((u - (1.0 + amp * (m as f64 * phi).cos())).abs() < 1e-12);
                // interface continuity
                let below = multiharmonic_exact(m, 1.0 - 1e-12, phi).unwrap();
                let above = multiharmonic_exact(m, 1.0 + 1e-12, phi).unwrap();
                assert!((below - above).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn noise_is_bounded_deterministic_and_leaves_current() {
        let mesh = generate_disc_mesh(2.0, 0.27).unwrap();
        let data = multiharmonic_set(&mesh, 2).unwrap();
        let clean = add_noise(
            &data,
            &NoiseSpec {
                theta: 0.0,
                rng_seed: 7,
            },
        );
        assert_eq!(clean.pairs, data.pairs);

        let spec = NoiseSpec {
            theta: 0.05,
            rng_seed: 7,
        };
        let a = add_noise(&data, &spec);
        let b = add_noise(&data, &spec);
        assert_eq!(a.pairs, b.pairs, "same seed must reproduce bit-identically");
        for ((f, g), (nf, ng)) in data.pairs.iter().zip(&a.pairs) {
            assert_eq!(g, ng);
            for (v, nv) in f.iter().zip(nf) {
                assert!((v - nv).abs() <= 0.05 * v.abs() + 1e-15);
            }
        }
        let c = add_noise(
            &data,
            &NoiseSpec {
                theta: 0.05,
                rng_seed: 8,
            },
        );
        assert_ne!(a.pairs, c.pairs);
    }

    #[test]
    fn omega0_profiles() {
        let mesh = generate_disc_mesh(2.0, 0.27).unwrap();
        let inc = Geometry::Concentric.inclusion();
        // Tikhonov flag: all ones
        let tik = build_omega0(&mesh, &inc, OmegaInit::Tikhonov);
        assert!(tik.values.iter().all(|&v| v == 1.0));
        // ell = 0: no centroid sits exactly on the circle
        let zero = build_omega0(&mesh, &inc, OmegaInit::Ring { ell: 0.0 });
        assert!(zero.values.iter().all(|&v| v == 1.0));
        // ell = 0.4: zeros fill the annulus 0.8 <= r <= 1.2 and stay near it
        let ring = build_omega0(&mesh, &inc, OmegaInit::Ring { ell: 0.4 });
        for t in 0..mesh.num_triangles() {
            let d = inc.dist(mesh.centroid(t));
            if (d - 1.0).abs() <= 0.2 {
                assert_eq!(ring.values[t], 0.0, "centroid at {d} should be marked");
            }
            if ring.values[t] == 0.0 {
                assert!((d - 1.0).abs() <= 0.2 + mesh.h(), "zero at distance {d}");
            }
        }
        // a band much thinner than the mesh still marks the cut layer
        let thin = build_omega0(&mesh, &inc, OmegaInit::Ring { ell: 0.02 });
        let zeros = thin.values.iter().filter(|&&v| v == 0.0).count();
        assert!(zeros > 0, "interface layer must be marked even for ell << h");
        for t in 0..mesh.num_triangles() {
            if thin.values[t] == 0.0 {
                assert!((inc.dist(mesh.centroid(t)) - 1.0).abs() <= mesh.h());
            }
        }
    }

    #[test]
    fn alpha0_profiles() {
        let mesh = tag_delta_zone(&generate_disc_mesh(2.0, 0.27).unwrap(), 0.2).unwrap();
        let inc = Geometry::Concentric.inclusion();
        let banded = build_alpha0(&mesh, &inc, AlphaInit::Banded { ell: 0.2 }, 1.0);
        for i in 0..mesh.num_nodes() {
            let r = inc.dist(mesh.node(i));
            if mesh.in_delta_zone(i) {
                assert_eq!(banded.values[i], 1.0);
            } else if r > 1.1 {
                assert_eq!(banded.values[i], 1.0, "node at r = {r}");
            } else {
                assert_eq!(banded.values[i], 2.5, "node at r = {r}");
            }
        }
        let three = build_alpha0(&mesh, &inc, AlphaInit::ThreeValued, 1.0);
        // origin is inside the inclusion
        let origin = (0..mesh.num_nodes())
            .find(|&i| mesh.node(i)[0].abs() < 1e-12 && mesh.node(i)[1].abs() < 1e-12)
            .unwrap();
        assert_eq!(three.values[origin], 5.0);
        for i in 0..mesh.num_nodes() {
            if mesh.in_delta_zone(i) {
                assert_eq!(three.values[i], 1.0);
            }
        }
        let constant = build_alpha0(&mesh, &inc, AlphaInit::Constant, 1.0);
        for i in 0..mesh.num_nodes() {
            let expect = if mesh.in_delta_zone(i) { 1.0 } else { 2.5 };
            assert_eq!(constant.values[i], expect);
        }
    }

    #[test]
    fn exact_solutions_satisfy_discrete_weak_form() {
        // interpolate the exact potential; the weighted energy must approach
        // the closed-form value under refinement
        let exact = concentric_exact_energy();
        let mut last_err = f64::INFINITY;
        for h in [0.5, 0.25, 0.125] {
            let mesh = generate_disc_mesh(2.0, h).unwrap();
            let inc = Geometry::Concentric.inclusion();
            let alpha = inc.exact_alpha_elements(&mesh);
            let u = NodalField::from_fn(&mesh, |x, y| {
                concentric_exact((x * x + y * y).sqrt().min(2.0), y.atan2(x)).unwrap()
            });
            let e = energy(&mesh, Weight::Element(&alpha), &u);
            let err = (e - exact).abs() / exact;
            assert!(err < last_err, "energy error must shrink: {err} vs {last_err}");
            last_err = err;
        }
        assert!(last_err < 0.02, "final relative energy error {last_err}");
    }

    #[test]
    fn greens_identity_on_exact_data() {
        // int alpha |grad u|^2 equals the boundary pairing <g, f>
        let pairing_exact = concentric_exact_energy();
        let mesh = generate_disc_mesh(2.0, 0.15).unwrap();
        let (f, g) = concentric_data(&mesh);
        let p = boundary_pairing(&mesh, &g, &f);
        assert!((p - pairing_exact).abs() < 0.01 * pairing_exact);
    }
}
