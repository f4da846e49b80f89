//! Acceptance suite: one test per shipped guarantee, each printing a
//! summary line (visible with `--nocapture`) and asserting its band and
//! runtime budget. Run with
//! `cargo test -p bvtomo --test acceptance -- --test-threads 1 --nocapture`.

use std::time::{Duration, Instant};

use bvtomo::cli::{dirichlet_errors, run_experiment, ExperimentSpec, MeshSource};
use bvtomo::fem::{solve_dirichlet, BoundaryDataSet, ElementField, NodalField, Weight};
use bvtomo::functional::{JContext, MeasurementSet, ReconConfig};
use bvtomo::mesh::{generate_disc_mesh, generate_fitted_disc_mesh, tag_delta_zone, NodeTag, TriMesh};
use bvtomo::recon::physical_reconstruct;
use bvtomo::regularizer::{omega_of, phi_eps, psi_eps, PotentialSpec};
use bvtomo::synthetic::Geometry;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn report(name: &str, elapsed: Duration, detail: &str) {
    println!("{name}: PASS in {elapsed:.2?} ({detail})");
}

fn delta_for(geom: Geometry) -> f64 {
    let inc = geom.inclusion();
    let clearance = 2.0 - ((inc.center[0].powi(2) + inc.center[1].powi(2)).sqrt() + inc.radius);
    (0.2f64).min(0.7 * clearance)
}

fn spec(
    geometry: Geometry,
    target_h: f64,
    ell: Option<f64>,
    mu: f64,
    n_pairs: u32,
    theta: f64,
    seed: u64,
    out: &str,
) -> ExperimentSpec {
    ExperimentSpec {
        geometry,
        ell,
        mu,
        n_pairs,
        theta,
        seed,
        physical: false,
        mesh: MeshSource::Generated { target_h },
        out_dir: std::env::temp_dir().join("bvtomo_acceptance").join(out),
        overrides: ReconConfig::default(),
    }
}

#[test]
fn criterion_01_forward_convergence() {
    let start = Instant::now();
    let geometry = Geometry::Concentric;
    let inclusion = geometry.inclusion();
    let mut errors = Vec::new();
    for target_h in [0.27, 0.15, 0.08] {
        let mesh = generate_disc_mesh(2.0, target_h).unwrap();
        let (f, _) = geometry.boundary_pair(&mesh);
        let alpha = inclusion.exact_alpha_elements(&mesh);
        let u = solve_dirichlet(&mesh, Weight::Element(&alpha), &f).unwrap();
        let (l2, _) = dirichlet_errors(&mesh, &geometry, &u).unwrap();
        errors.push((target_h, l2));
    }
    let mut orders = Vec::new();
    for pair in errors.windows(2) {
        let (h0, e0) = pair[0];
        let (h1, e1) = pair[1];
        assert!(e1 < e0, "error must decrease: {e0} -> {e1}");
        orders.push((e0 / e1).ln() / (h0 / h1).ln());
    }
    for &order in &orders {
        assert!(order >= 1.6, "observed order {order} below 1.6 ({orders:?})");
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    report(
        "criterion 01 forward convergence",
        elapsed,
        &format!("orders {orders:.2?}, errors {errors:.3?}"),
    );
}

#[test]
fn criterion_02_gradient_matches_finite_differences() {
    let start = Instant::now();
    let mut worst_overall = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for geometry in Geometry::ALL {
        let mesh = tag_delta_zone(
            &generate_disc_mesh(2.0, 0.6).unwrap(),
            delta_for(geometry),
        )
        .unwrap();
        let data = match geometry {
            Geometry::Concentric => bvtomo::synthetic::multiharmonic_set(&mesh, 2).unwrap(),
            _ => {
                let (f, g) = geometry.boundary_pair(&mesh);
                BoundaryDataSet::single(f, g)
            }
        };
        let mut cfg = ReconConfig::default();
        cfg.inclusion = geometry.inclusion();
        cfg.mu = 0.7;
        cfg.lambda = 0.3;
        let meas = MeasurementSet::prepare(&mesh, &data).unwrap();
        let n = mesh.num_nodes();

        for _ in 0..5 {
            let mut u = NodalField::zeros(n);
            let mut w = NodalField::zeros(n);
            let mut alpha = NodalField::zeros(n);
            for i in 0..n {
                u.values[i] = rng.random_range(-0.5..0.5);
                w.values[i] = rng.random_range(-0.5..0.5);
                alpha.values[i] = rng.random_range(1.0..2.5);
            }
            for &b in mesh.boundary_nodes() {
                u.values[b] = 0.0;
            }
            let grads = bvtomo::fem::element_gradient(&mesh, &alpha);
            let norms = ElementField {
                values: grads
                    .iter()
                    .map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt())
                    .collect(),
            };
            let omega = bvtomo::regularizer::omega_update(&norms, &cfg.potential());
            let ctx = JContext::new(&mesh, &meas, &cfg, &omega).unwrap();
            let (gu, gw, ga) = ctx.grad(&u, &w, &alpha);
            let gmax = gu
                .iter()
                .chain(&gw)
                .chain(&ga)
                .fold(0.0f64, |m, &v| m.max(v.abs()));
            let eval_at = |u: &NodalField, w: &NodalField, a: &NodalField| -> f64 {
                ctx.eval(u, w, a).total()
            };
            // central differences of a functional of size J carry an
            // irreducible cancellation error ~ eps * J / step; the relative
            // tolerance applies on top of that absolute floor
            let j0 = eval_at(&u, &w, &alpha).abs();
            let atol = 500.0 * f64::EPSILON * j0.max(1.0) / 1e-6;
            let mut worst = 0.0f64;
            for i in 0..n {
                if mesh.tag(i) != NodeTag::Boundary {
                    let step = 1e-6 * u.values[i].abs().max(1.0);
                    let x0 = u.values[i];
                    u.values[i] = x0 + step;
                    let fp = eval_at(&u, &w, &alpha);
                    u.values[i] = x0 - step;
                    let fm = eval_at(&u, &w, &alpha);
                    u.values[i] = x0;
                    let fd = (fp - fm) / (2.0 * step);
                    let denom = fd.abs().max(gu[i].abs()).max(1e-7 * gmax.max(1.0));
                    let excess = ((fd - gu[i]).abs() - atol).max(0.0);
                    worst = worst.max(excess / denom);
                }
                {
                    let step = 1e-6 * w.values[i].abs().max(1.0);
                    let x0 = w.values[i];
                    w.values[i] = x0 + step;
                    let fp = eval_at(&u, &w, &alpha);
                    w.values[i] = x0 - step;
                    let fm = eval_at(&u, &w, &alpha);
                    w.values[i] = x0;
                    let fd = (fp - fm) / (2.0 * step);
                    let denom = fd.abs().max(gw[i].abs()).max(1e-7 * gmax.max(1.0));
                    let excess = ((fd - gw[i]).abs() - atol).max(0.0);
                    worst = worst.max(excess / denom);
                }
                {
                    let step = 1e-6 * alpha.values[i].abs().max(1.0);
                    let x0 = alpha.values[i];
                    alpha.values[i] = x0 + step;
                    let fp = eval_at(&u, &w, &alpha);
                    alpha.values[i] = x0 - step;
                    let fm = eval_at(&u, &w, &alpha);
                    alpha.values[i] = x0;
                    let fd = (fp - fm) / (2.0 * step);
                    let denom = fd.abs().max(ga[i].abs()).max(1e-7 * gmax.max(1.0));
                    let excess = ((fd - ga[i]).abs() - atol).max(0.0);
                    worst = worst.max(excess / denom);
                }
            }
            assert!(
                worst <= 1e-5,
                "{geometry:?}: finite-difference mismatch {worst:.3e}"
            );
            worst_overall = worst_overall.max(worst);
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    report(
        "criterion 02 gradient vs finite differences",
        elapsed,
        &format!("max relative error {worst_overall:.2e}"),
    );
}

#[test]
fn criterion_03_half_quadratic_duality() {
    let start = Instant::now();
    let spec = PotentialSpec::default();
    let mut worst_gap = 0.0f64;
    for i in 0..=200 {
        let s = 10f64.powf(-4.0 + 8.0 * i as f64 / 200.0);
        let omega = omega_of(s, &spec);
        let envelope = omega * s * s + psi_eps(omega, &spec).unwrap();
        let gap = (envelope - phi_eps(s, &spec)).abs();
        worst_gap = worst_gap.max(gap);
        assert!(gap <= 1e-8, "envelope gap {gap:.2e} at s = {s}");
        // the update is the exact minimizer under small perturbations
        let best = envelope;
        for d in [-1e-3, 1e-3] {
            let w = (omega + d).clamp(spec.omega_min(), spec.omega_max());
            let v = w * s * s + psi_eps(w, &spec).unwrap();
            assert!(v + 1e-12 >= best, "perturbed dual value {v} beats {best} at s = {s}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    report(
        "criterion 03 half-quadratic duality",
        elapsed,
        &format!("max envelope gap {worst_gap:.2e}"),
    );
}

#[test]
fn criterion_04_concentric_single_pair_bands() {
    let start = Instant::now();
    let s = spec(Geometry::Concentric, 0.27, Some(0.2), 1.0, 1, 0.0, 0, "c04");
    let (_, result) = s.run().unwrap();
    let last = result.history.last().unwrap();
    assert_eq!(result.history.len(), 10);
    assert!(
        (1.85..=2.00).contains(&last.alpha_in),
        "alpha_in {} outside [1.85, 2.00]",
        last.alpha_in
    );
    assert!(
        (0.98..=1.02).contains(&last.alpha_out),
        "alpha_out {} outside [0.98, 1.02]",
        last.alpha_out
    );
    // the final indicator concentrates its low values around the interface
    let (mesh, _) = s.build_mesh().map(|m| (m, ())).unwrap();
    for (t, &w) in result.omega.values.iter().enumerate() {
        if w < 0.5 {
            let c = mesh.centroid(t);
            let d = ((c[0] * c[0] + c[1] * c[1]).sqrt() - 1.0).abs();
            assert!(
                d <= 0.1 + 2.0 * mesh.h(),
                "low indicator at distance {d} from the interface"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    report(
        "criterion 04 concentric single-pair",
        elapsed,
        &format!("alpha_in {} alpha_out {}", last.alpha_in, last.alpha_out),
    );
}

#[test]
fn criterion_05_strong_eccentric_bands() {
    let start = Instant::now();
    let mut s = spec(
        Geometry::StrongEccentric,
        0.055,
        Some(0.2),
        0.1,
        1,
        0.0,
        0,
        "c05",
    );
    s.overrides.inner_max_evals = 1200;
    s.overrides.manifold_polish = true;
    let (_, result) = s.run().unwrap();
    let last = result.history.last().unwrap();
    assert!(
        (1.90..=2.00).contains(&last.alpha_in),
        "alpha_in {} outside [1.90, 2.00]",
        last.alpha_in
    );
    assert!(
        (0.98..=1.02).contains(&last.alpha_out),
        "alpha_out {} outside [0.98, 1.02]",
        last.alpha_out
    );
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    report(
        "criterion 05 strong eccentric",
        elapsed,
        &format!("alpha_in {} alpha_out {}", last.alpha_in, last.alpha_out),
    );
}

#[test]
fn criterion_06_frozen_indicator_control() {
    let start = Instant::now();
    let s = spec(Geometry::Concentric, 0.27, None, 1.0, 1, 0.0, 0, "c06a");
    let (_, result) = s.run().unwrap();
    let conc = result.history.last().unwrap().alpha_in;
    assert!(conc <= 1.4, "frozen-indicator concentric alpha_in {conc} above 1.4");

    let s = spec(
        Geometry::StrongEccentric,
        0.24,
        None,
        0.1,
        1,
        0.0,
        0,
        "c06b",
    );
    let (_, result) = s.run().unwrap();
    let strong = result.history.last().unwrap().alpha_in;
    assert!(strong <= 1.5, "frozen-indicator strong alpha_in {strong} above 1.5");
    let elapsed = start.elapsed();
    report(
        "criterion 06 frozen-indicator control",
        elapsed,
        &format!("concentric {conc} strong {strong}"),
    );
}

#[test]
fn criterion_07_physical_reconstruction() {
    let start = Instant::now();
    let geometry = Geometry::Concentric;
    let inclusion = geometry.inclusion();
    let mesh = tag_delta_zone(
        &generate_disc_mesh(2.0, 0.1).unwrap(),
        delta_for(geometry),
    )
    .unwrap();
    let (f, g) = geometry.boundary_pair(&mesh);
    let data = BoundaryDataSet::single(f, g);
    let mut cfg = ReconConfig::default();
    cfg.extract_band = 0.01 + mesh.h();
    let result = physical_reconstruct(&mesh, &data, &cfg, &inclusion).unwrap();
    assert_eq!(result.history.len(), 1, "one outer iteration");
    let r = result.history.last().unwrap();
    assert!(
        (1.90..=2.02).contains(&r.alpha_in),
        "alpha_in {} outside [1.90, 2.02]",
        r.alpha_in
    );
    assert!(
        (0.98..=1.02).contains(&r.alpha_out),
        "alpha_out {} outside [0.98, 1.02]",
        r.alpha_out
    );
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    report(
        "criterion 07 physical reconstruction",
        elapsed,
        &format!("alpha_in {} alpha_out {}", r.alpha_in, r.alpha_out),
    );
}

#[test]
fn criterion_08_multi_pair_bands() {
    let start = Instant::now();
    for n_pairs in [2u32, 5] {
        let mut s = spec(
            Geometry::Concentric,
            0.12,
            Some(0.2),
            1.0,
            n_pairs,
            0.0,
            0,
            &format!("c08_n{n_pairs}"),
        );
        s.overrides.inner_max_evals = 1800;
        let (_, result) = s.run().unwrap();
        let by3 = &result.history[2];
        assert!(
            (1.95..=2.02).contains(&by3.alpha_in),
            "N = {n_pairs}: alpha_in {} outside [1.95, 2.02] by iteration 3",
            by3.alpha_in
        );
        assert!(
            (0.98..=1.02).contains(&by3.alpha_out),
            "N = {n_pairs}: alpha_out {} off band",
            by3.alpha_out
        );
    }
    let elapsed = start.elapsed();
    report("criterion 08 multi-pair", elapsed, "N = 2 and N = 5 in band");
}

#[test]
fn criterion_09_noise_robustness() {
    let start = Instant::now();
    let mut ins = Vec::new();
    let mut outs = Vec::new();
    for seed in [11u64, 12, 13] {
        let s = spec(
            Geometry::Concentric,
            0.27,
            Some(0.2),
            1.0,
            5,
            0.05,
            seed,
            &format!("c09_s{seed}"),
        );
        let (_, result) = s.run().unwrap();
        let last = result.history.last().unwrap();
        ins.push(last.alpha_in);
        outs.push(last.alpha_out);
    }
    let mean_in = ins.iter().sum::<f64>() / ins.len() as f64;
    let mean_out = outs.iter().sum::<f64>() / outs.len() as f64;
    assert!(
        (1.90..=2.05).contains(&mean_in),
        "seed-averaged alpha_in {mean_in} outside [1.90, 2.05] ({ins:?})"
    );
    assert!(
        (0.97..=1.03).contains(&mean_out),
        "seed-averaged alpha_out {mean_out} outside [0.97, 1.03] ({outs:?})"
    );
    let elapsed = start.elapsed();
    report(
        "criterion 09 noise robustness",
        elapsed,
        &format!("alpha_in {ins:?} -> mean {mean_in:.3}"),
    );
}

#[test]
fn criterion_10_determinism() {
    let start = Instant::now();
    let mut first = spec(Geometry::Concentric, 0.4, Some(0.2), 1.0, 2, 0.01, 9, "c10_a");
    first.overrides.inner_max_evals = 120;
    let mut second = first.clone();
    second.out_dir = std::env::temp_dir().join("bvtomo_acceptance").join("c10_b");
    run_experiment(&first).unwrap();
    run_experiment(&second).unwrap();
    let a = std::fs::read(first.out_dir.join("history.csv")).unwrap();
    let b = std::fs::read(second.out_dir.join("history.csv")).unwrap();
    assert_eq!(a, b, "history.csv must be byte-identical across reruns");
    let ma = std::fs::read_to_string(first.out_dir.join("manifest.txt")).unwrap();
    let mb = std::fs::read_to_string(second.out_dir.join("manifest.txt")).unwrap();
    assert_eq!(ma, mb);
    let elapsed = start.elapsed();
    report("criterion 10 determinism", elapsed, "byte-identical history.csv");
}

// supporting check: the fitted mesher still produces valid meshes around
// both eccentric interfaces at the acceptance resolutions
#[test]
fn fitted_meshes_remain_valid() {
    for (geom, h) in [
        (Geometry::StrongEccentric, 0.055),
        (Geometry::StrongEccentric, 0.24),
        (Geometry::MildEccentric, 0.11),
    ] {
        let inc = geom.inclusion();
        let mesh: TriMesh = generate_fitted_disc_mesh(2.0, h, inc.center, inc.radius).unwrap();
        for t in 0..mesh.num_triangles() {
            assert!(mesh.area(t) > 0.0);
        }
        // interface resolved: plenty of nodes on the circle
        let on_circle = (0..mesh.num_nodes())
            .filter(|&i| (inc.dist(mesh.node(i)) - inc.radius).abs() < 1e-9)
            .count();
        assert!(on_circle > 20, "{geom:?} h={h}: only {on_circle} interface nodes");
    }
}
