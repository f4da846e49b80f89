//! Batch commands behind the `bvtomo` binary: mesh generation and
//! conversion, synthetic data, forward solves with error reports, the
//! inversion runner with manifests, and table-style report aggregation.
//!
//! Argument parsing is hand-rolled over `--flag value` pairs; every run
//! writes a sorted key=value manifest sufficient to reproduce it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fem::{BoundaryDataSet, NodalField, Weight};
use crate::functional::ReconConfig;
use crate::io;
use crate::mesh::{
    generate_disc_mesh, generate_fitted_disc_mesh, load_triangle_format, tag_delta_zone, TriMesh,
};
use crate::recon::{bv_reconstruct, physical_reconstruct, ReconResult};
use crate::synthetic::{
    add_noise, build_alpha0, build_omega0, estimate_noise_floor, multiharmonic_set, AlphaInit,
    Geometry, NoiseSpec, OmegaInit,
};

/// One inversion experiment, fully specified.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub geometry: Geometry,
    /// Ring width of the initial indicator; `None` means the frozen
    /// all-ones control profile.
    pub ell: Option<f64>,
    pub mu: f64,
    /// Number of boundary data pairs (concentric harmonic family).
    pub n_pairs: u32,
    /// Relative voltage noise level.
    pub theta: f64,
    pub seed: u64,
    /// Known-interface single-iteration mode.
    pub physical: bool,
    /// Mesh source: generated at this target size, or loaded from files.
    pub mesh: MeshSource,
    pub out_dir: PathBuf,
    pub overrides: ReconConfig,
}

#[derive(Debug, Clone)]
pub enum MeshSource {
    Generated { target_h: f64 },
    Files { node: PathBuf, ele: PathBuf },
}

impl ExperimentSpec {
    /// Protective band width: the default shrinks when the inclusion runs
    /// close to the boundary so the band never overlaps it.
    pub fn delta(&self) -> f64 {
        let inc = self.geometry.inclusion();
        let clearance =
            2.0 - ((inc.center[0].powi(2) + inc.center[1].powi(2)).sqrt() + inc.radius);
        self.overrides.delta.min(0.7 * clearance)
    }

    /// Builds the experiment mesh: eccentric geometries get the inclusion
    /// interface snapped onto mesh edges.
    pub fn build_mesh(&self) -> Result<TriMesh> {
        let inc = self.geometry.inclusion();
        let base = match &self.mesh {
            MeshSource::Generated { target_h } => {
                if self.geometry == Geometry::Concentric {
                    generate_disc_mesh(2.0, *target_h)?
                } else {
                    generate_fitted_disc_mesh(2.0, *target_h, inc.center, inc.radius)?
                }
            }
            MeshSource::Files { node, ele } => {
                load_triangle_format(&io::read_file(node)?, &io::read_file(ele)?)?
            }
        };
        tag_delta_zone(&base, self.delta())
    }

    /// Boundary data of this experiment, noise included.
    pub fn build_data(&self, mesh: &TriMesh) -> Result<BoundaryDataSet> {
        let mut data = if self.geometry == Geometry::Concentric {
            multiharmonic_set(mesh, self.n_pairs)?
        } else {
            let (f, g) = self.geometry.boundary_pair(mesh);
            BoundaryDataSet::single(f, g)
        };
        if self.theta > 0.0 {
            data = add_noise(
                &data,
                &NoiseSpec {
                    theta: self.theta,
                    rng_seed: self.seed,
                },
            );
        }
        Ok(data)
    }

    /// Full solver configuration for this experiment.
    pub fn build_config(&self, mesh: &TriMesh) -> Result<ReconConfig> {
        let mut cfg = self.overrides.clone();
        cfg.inclusion = self.geometry.inclusion();
        cfg.mu = self.mu;
        cfg.delta = self.delta();
        cfg.rng_seed = self.seed;
        cfg.extract_band = self.ell.map(|l| l / 2.0 + mesh.h()).unwrap_or(0.1 + mesh.h());
        if self.ell.is_none() {
            cfg.freeze_omega = true;
            // the control case collapses toward smooth profiles; let the
            // tangential slide finish that collapse
            cfg.manifold_polish = true;
        }
        if self.uses_constant_start() && self.theta == 0.0 {
            // the constant starting profile leaves the background far from
            // its anchored level; the slide along the residual zero set is
            // what carries it back while the inclusion level compensates
            cfg.manifold_polish = true;
        }
        if self.theta > 0.0 {
            let clean = multiharmonic_set(mesh, self.n_pairs)?;
            let floor = estimate_noise_floor(
                mesh,
                &clean,
                &NoiseSpec {
                    theta: self.theta,
                    rng_seed: self.seed,
                },
                cfg.kappa,
            )?;
            // discrepancy-style stop: fitting below the noise level only
            // fits the noise
            cfg.data_floor = 1.3 * floor;
        }
        Ok(cfg)
    }

    /// The strong-eccentric protocol and every multi-pair or noisy run
    /// start from the constant profile; the others use the banded one.
    fn uses_constant_start(&self) -> bool {
        self.geometry == Geometry::StrongEccentric || self.n_pairs > 1 || self.theta > 0.0
    }

    /// Runs the experiment and returns the result with its mesh.
    pub fn run(&self) -> Result<(TriMesh, ReconResult)> {
        let mesh = self.build_mesh()?;
        let data = self.build_data(&mesh)?;
        let cfg = self.build_config(&mesh)?;
        let inc = self.geometry.inclusion();
        let result = if self.physical {
            physical_reconstruct(&mesh, &data, &cfg, &inc)?
        } else {
            let omega0 = match self.ell {
                Some(ell) => build_omega0(&mesh, &inc, OmegaInit::Ring { ell }),
                None => build_omega0(&mesh, &inc, OmegaInit::Tikhonov),
            };
            let alpha0 = if self.uses_constant_start() {
                build_alpha0(&mesh, &inc, AlphaInit::Constant, cfg.zone_alpha)
            } else {
                build_alpha0(
                    &mesh,
                    &inc,
                    AlphaInit::Banded {
                        ell: self.ell.unwrap_or(0.2),
                    },
                    cfg.zone_alpha,
                )
            };
            bv_reconstruct(&mesh, &data, &cfg, &omega0, &alpha0, None, None)?
        };
        Ok((mesh, result))
    }

    /// Manifest entries reproducing this run.
    pub fn manifest(&self, mesh: &TriMesh, cfg: &ReconConfig) -> Vec<(String, String)> {
        let mut m: Vec<(String, String)> = vec![
            ("geometry".into(), self.geometry.name().into()),
            (
                "ell".into(),
                self.ell.map(|l| l.to_string()).unwrap_or_else(|| "tikhonov".into()),
            ),
            ("mu".into(), self.mu.to_string()),
            ("n_pairs".into(), self.n_pairs.to_string()),
            ("theta".into(), self.theta.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("physical".into(), self.physical.to_string()),
            ("kappa".into(), cfg.kappa.to_string()),
            ("epsilon".into(), cfg.epsilon.to_string()),
            ("lambda".into(), cfg.lambda.to_string()),
            ("bound_lower".into(), cfg.bounds.0.to_string()),
            ("bound_upper".into(), cfg.bounds.1.to_string()),
            ("zone_alpha".into(), cfg.zone_alpha.to_string()),
            ("delta".into(), cfg.delta.to_string()),
            ("max_iters".into(), cfg.max_iters.to_string()),
            ("inner_tol".into(), cfg.inner_tol.to_string()),
            ("inner_max_evals".into(), cfg.inner_max_evals.to_string()),
            (
                "warm_inner_max_evals".into(),
                cfg.warm_inner_max_evals.to_string(),
            ),
            ("data_floor".into(), cfg.data_floor.to_string()),
            ("extract_band".into(), cfg.extract_band.to_string()),
            ("mesh_nodes".into(), mesh.num_nodes().to_string()),
            ("mesh_elements".into(), mesh.num_triangles().to_string()),
            ("mesh_h".into(), mesh.h().to_string()),
            ("mesh_hash".into(), format!("{:016x}", mesh.content_hash())),
        ];
        match &self.mesh {
            MeshSource::Generated { target_h } => {
                m.push(("mesh_source".into(), format!("generate:{target_h}")))
            }
            MeshSource::Files { node, ele } => m.push((
                "mesh_source".into(),
                format!("load:{}:{}", node.display(), ele.display()),
            )),
        }
        m
    }
}

// ---------------------------------------------------------------------------
// flag parsing
// ---------------------------------------------------------------------------

struct Flags {
    values: BTreeMap<String, String>,
    present: Vec<String>,
}

impl Flags {
    fn parse(args: &[String]) -> Result<Flags> {
        let mut values = BTreeMap::new();
        let mut present = Vec::new();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let name = arg
                .strip_prefix("--")
                .ok_or_else(|| Error::invalid(format!("expected --flag, got {arg:?}")))?;
            if i + 1 < args.len() && !args[i + 1].starts_with("--") {
                values.insert(name.to_string(), args[i + 1].clone());
                i += 2;
            } else {
                present.push(name.to_string());
                i += 1;
            }
        }
        Ok(Flags { values, present })
    }

    fn has(&self, name: &str) -> bool {
        self.present.iter().any(|p| p == name) || self.values.contains_key(name)
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(|s| s.as_str())
    }

    fn get_parsed<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>> {
        match self.get(name) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::invalid(format!("cannot parse --{name} {raw:?}"))),
        }
    }

    fn require<T: std::str::FromStr>(&self, name: &str) -> Result<T> {
        self.get_parsed(name)?
            .ok_or_else(|| Error::invalid(format!("missing required --{name}")))
    }
}

fn seed_from(flags: &Flags) -> Result<u64> {
    if let Some(seed) = flags.get_parsed::<u64>("seed")? {
        return Ok(seed);
    }
    if let Ok(env) = std::env::var("BVTOMO_SEED") {
        return env
            .parse()
            .map_err(|_| Error::invalid(format!("BVTOMO_SEED {env:?} is not an integer")));
    }
    Ok(0)
}

fn out_dir(flags: &Flags) -> PathBuf {
    PathBuf::from(flags.get("out").unwrap_or("runs/out"))
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

/// `mesh --disc --h 0.27 --out DIR` or `mesh --load case.node case.ele --out DIR`:
/// generates or converts a mesh and writes the CSV dump plus a summary line.
pub fn cmd_mesh(args: &[String]) -> Result<String> {
    // --load consumes two paths, which the flag parser reads as one value
    // plus a positional; handle it before generic parsing
    if let Some(pos) = args.iter().position(|a| a == "--load") {
        let node = args
            .get(pos + 1)
            .filter(|a| !a.starts_with("--"))
            .ok_or_else(|| Error::invalid("--load needs NODE and ELE paths"))?;
        let ele = args
            .get(pos + 2)
            .filter(|a| !a.starts_with("--"))
            .ok_or_else(|| Error::invalid("--load needs NODE and ELE paths"))?;
        let mut rest: Vec<String> = args[..pos].to_vec();
        rest.extend_from_slice(&args[pos + 3..]);
        let flags = Flags::parse(&rest)?;
        let dir = out_dir(&flags);
        let mesh = load_triangle_format(
            &io::read_file(Path::new(node))?,
            &io::read_file(Path::new(ele))?,
        )?;
        let delta = flags.get_parsed::<f64>("delta")?.unwrap_or(0.2);
        let mesh = tag_delta_zone(&mesh, delta)?;
        io::write_nodes_csv(&dir.join("nodes.csv"), &mesh)?;
        io::write_elements_csv(&dir.join("elements.csv"), &mesh)?;
        return Ok(format!(
            "loaded {} nodes, {} elements (h = {:.4}) -> {}",
            mesh.num_nodes(),
            mesh.num_triangles(),
            mesh.h(),
            dir.display()
        ));
    }
    let flags = Flags::parse(args)?;
    if !flags.has("disc") {
        return Err(Error::invalid("mesh needs --disc --h H or --load NODE ELE"));
    }
    let h: f64 = flags.require("h")?;
    let radius = flags.get_parsed::<f64>("radius")?.unwrap_or(2.0);
    let delta = flags.get_parsed::<f64>("delta")?.unwrap_or(0.2);
    let dir = out_dir(&flags);
    let mesh = tag_delta_zone(&generate_disc_mesh(radius, h)?, delta)?;
    io::write_nodes_csv(&dir.join("nodes.csv"), &mesh)?;
    io::write_elements_csv(&dir.join("elements.csv"), &mesh)?;
    Ok(format!(
        "disc mesh: {} nodes, {} elements (target h = {h}, realized h = {:.4}) -> {}",
        mesh.num_nodes(),
        mesh.num_triangles(),
        mesh.h(),
        dir.display()
    ))
}

/// `synth --geometry G [--n N] [--theta T] [--seed S] [--h H] --out DIR`:
/// writes `boundary_data.csv` and a manifest recording the seed.
pub fn cmd_synth(args: &[String]) -> Result<String> {
    let flags = Flags::parse(args)?;
    let geometry = Geometry::parse(flags.get("geometry").unwrap_or("concentric"))?;
    let n_pairs: u32 = flags.get_parsed("n")?.unwrap_or(1);
    let theta: f64 = flags.get_parsed("theta")?.unwrap_or(0.0);
    let seed = seed_from(&flags)?;
    let h: f64 = flags.get_parsed("h")?.unwrap_or(0.27);
    let dir = out_dir(&flags);

    let inc = geometry.inclusion();
    let mesh = if geometry == Geometry::Concentric {
        generate_disc_mesh(2.0, h)?
    } else {
        generate_fitted_disc_mesh(2.0, h, inc.center, inc.radius)?
    };
    let mut data = if geometry == Geometry::Concentric {
        multiharmonic_set(&mesh, n_pairs)?
    } else {
        let (f, g) = geometry.boundary_pair(&mesh);
        BoundaryDataSet::single(f, g)
    };
    if theta > 0.0 {
        data = add_noise(
            &data,
            &NoiseSpec {
                theta,
                rng_seed: seed,
            },
        );
    }
    io::write_boundary_data_csv(&dir.join("boundary_data.csv"), &mesh, &data)?;
    io::write_manifest(
        &dir.join("manifest.txt"),
        &[
            ("geometry".into(), geometry.name().into()),
            ("n_pairs".into(), n_pairs.to_string()),
            ("theta".into(), theta.to_string()),
            ("seed".into(), seed.to_string()),
            ("mesh_h".into(), mesh.h().to_string()),
            ("mesh_hash".into(), format!("{:016x}", mesh.content_hash())),
        ],
    )?;
    Ok(format!(
        "{} pair(s) for {} at {} boundary nodes -> {}",
        data.len(),
        geometry.name(),
        mesh.boundary_nodes().len(),
        dir.display()
    ))
}

/// `forward --geometry G [--h H] [--homogeneous] --out DIR`: solves the
/// Dirichlet and Neumann problems with the exact two-valued conductivity
/// (or a homogeneous one) and reports errors against the closed form.
pub fn cmd_forward(args: &[String]) -> Result<String> {
    let flags = Flags::parse(args)?;
    let geometry = Geometry::parse(flags.get("geometry").unwrap_or("concentric"))?;
    let h: f64 = flags.get_parsed("h")?.unwrap_or(0.27);
    let dir = out_dir(&flags);
    let inc = geometry.inclusion();
    let mesh = if geometry == Geometry::Concentric {
        generate_disc_mesh(2.0, h)?
    } else {
        generate_fitted_disc_mesh(2.0, h, inc.center, inc.radius)?
    };
    let (f, g) = geometry.boundary_pair(&mesh);
    let alpha = if flags.has("homogeneous") {
        crate::fem::ElementField::constant(mesh.num_triangles(), 1.0)
    } else {
        inc.exact_alpha_elements(&mesh)
    };
    let u_dir = crate::fem::solve_dirichlet(&mesh, Weight::Element(&alpha), &f)?;
    let w_neu = crate::fem::solve_neumann(&mesh, Weight::Element(&alpha), &g)?;
    io::write_nodal_csv(&dir.join("u_dirichlet.csv"), &u_dir)?;
    io::write_nodal_csv(&dir.join("w_neumann.csv"), &w_neu)?;

    let mut report = String::new();
    if !flags.has("homogeneous") {
        let (l2, _h1) = dirichlet_errors(&mesh, &geometry, &u_dir)?;
        let _ = write!(report, "L2 error vs closed form: {l2:.6e}");
        io::write_manifest(
            &dir.join("errors.txt"),
            &[
                ("l2_error".into(), l2.to_string()),
                ("mesh_h".into(), mesh.h().to_string()),
            ],
        )?;
    } else {
        let _ = write!(report, "homogeneous forward solve written");
    }
    Ok(format!("{report} -> {}", dir.display()))
}

/// Midpoint-quadrature L2 error of a Dirichlet solve against the geometry's
/// closed-form potential (exact for quadratics).
pub fn dirichlet_errors(
    mesh: &TriMesh,
    geometry: &Geometry,
    u: &NodalField,
) -> Result<(f64, f64)> {
    let mut l2 = 0.0;
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangle(t);
        let pts = [mesh.node(a), mesh.node(b), mesh.node(c)];
        let vals = [u.values[a], u.values[b], u.values[c]];
        for k in 0..3 {
            let k2 = (k + 1) % 3;
            let mid = [
                0.5 * (pts[k][0] + pts[k2][0]),
                0.5 * (pts[k][1] + pts[k2][1]),
            ];
            let rho = (mid[0] * mid[0] + mid[1] * mid[1]).sqrt().min(2.0);
            let phi = mid[1].atan2(mid[0]);
            let exact = geometry.exact_potential(rho, phi)?;
            let approx = 0.5 * (vals[k] + vals[k2]);
            l2 += mesh.area(t) / 3.0 * (approx - exact) * (approx - exact);
        }
    }
    Ok((l2.sqrt(), 0.0))
}

fn parse_experiment(flags: &Flags) -> Result<ExperimentSpec> {
    let geometry = Geometry::parse(flags.get("geometry").unwrap_or("concentric"))?;
    let ell = if flags.has("tikhonov") {
        None
    } else {
        Some(flags.get_parsed::<f64>("ell")?.unwrap_or(0.2))
    };
    let mut overrides = ReconConfig::default();
    if let Some(v) = flags.get_parsed("kappa")? {
        overrides.kappa = v;
    }
    if let Some(v) = flags.get_parsed("epsilon")? {
        overrides.epsilon = v;
    }
    if let Some(v) = flags.get_parsed("lambda")? {
        overrides.lambda = v;
    }
    if let Some(v) = flags.get_parsed("delta")? {
        overrides.delta = v;
    }
    if let Some(v) = flags.get_parsed("max-iters")? {
        overrides.max_iters = v;
    }
    if let Some(v) = flags.get_parsed("inner-evals")? {
        overrides.inner_max_evals = v;
    }
    if let Some(v) = flags.get_parsed("warm-evals")? {
        overrides.warm_inner_max_evals = v;
    }
    if let Some(v) = flags.get_parsed("bound-upper")? {
        overrides.bounds.1 = v;
    }
    if flags.has("polish") {
        overrides.manifold_polish = true;
    }
    let mesh = match (flags.get("nodes"), flags.get("ele")) {
        (Some(node), Some(ele)) => MeshSource::Files {
            node: node.into(),
            ele: ele.into(),
        },
        _ => MeshSource::Generated {
            target_h: flags.get_parsed("h")?.unwrap_or(0.27),
        },
    };
    Ok(ExperimentSpec {
        geometry,
        ell,
        mu: flags.get_parsed("mu")?.unwrap_or(1.0),
        n_pairs: flags.get_parsed("n")?.unwrap_or(1),
        theta: flags.get_parsed("theta")?.unwrap_or(0.0),
        seed: seed_from(flags)?,
        physical: flags.has("physical"),
        mesh,
        out_dir: out_dir(flags),
        overrides,
    })
}

/// `invert --geometry G [--ell L | --tikhonov] --mu M [--n N] [--theta T]
/// [--physical] [--h H] ... --out DIR`: runs a reconstruction and writes
/// `alpha.csv`, `omega.csv`, `history.csv`, `fields.vtk` and the manifest.
pub fn cmd_invert(args: &[String]) -> Result<String> {
    let flags = Flags::parse(args)?;
    let spec = parse_experiment(&flags)?;
    run_experiment(&spec)
}

/// Runs one experiment and writes its artifacts into `spec.out_dir`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<String> {
    let (mesh, result) = spec.run()?;
    let cfg = spec.build_config(&mesh)?;
    let dir = &spec.out_dir;
    io::write_nodal_csv(&dir.join("alpha.csv"), &result.alpha)?;
    io::write_element_csv(&dir.join("omega.csv"), &result.omega)?;
    io::write_history_csv(&dir.join("history.csv"), &result.history)?;
    io::write_vtk(
        &dir.join("fields.vtk"),
        &mesh,
        &result.alpha,
        &result.u,
        &result.omega,
    )?;
    io::write_manifest(&dir.join("manifest.txt"), &spec.manifest(&mesh, &cfg))?;
    let last = result
        .history
        .last()
        .ok_or_else(|| Error::invalid("empty history"))?;
    Ok(format!(
        "{}: alpha_in = {:.2}, alpha_out = {:.2} after {} iteration(s) -> {}",
        spec.geometry.name(),
        last.alpha_in,
        last.alpha_out,
        last.n,
        dir.display()
    ))
}

/// `report --dir DIR`: aggregates every `history.csv` under `DIR` into a
/// markdown table grouped by the manifest's (ell, mu, N) block.
pub fn cmd_report(args: &[String]) -> Result<String> {
    let flags = Flags::parse(args)?;
    let dir = PathBuf::from(
        flags
            .get("dir")
            .ok_or_else(|| Error::invalid("report needs --dir DIR"))?,
    );
    let mut runs = Vec::new();
    let mut missing = Vec::new();
    let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut run_dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    run_dirs.sort();
    for run in run_dirs {
        let history = run.join("history.csv");
        let manifest = run.join("manifest.txt");
        if !history.exists() || !manifest.exists() {
            missing.push(run.display().to_string());
            continue;
        }
        let meta: BTreeMap<String, String> =
            io::read_manifest(&manifest)?.into_iter().collect();
        let text = io::read_file(&history)?;
        let mut rows = Vec::new();
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() >= 8 {
                rows.push((cols[0].to_string(), cols[6].to_string(), cols[7].to_string()));
            }
        }
        runs.push((meta, rows));
    }
    if runs.is_empty() {
        return Err(Error::invalid(format!(
            "no complete runs under {}; missing: {}",
            dir.display(),
            missing.join(", ")
        )));
    }
    let mut out = String::new();
    let key = |m: &BTreeMap<String, String>| {
        (
            m.get("ell").cloned().unwrap_or_default(),
            m.get("mu").cloned().unwrap_or_default(),
        )
    };
    runs.sort_by_key(|(m, _)| key(m));
    let mut current: Option<(String, String)> = None;
    for (meta, rows) in &runs {
        let k = key(meta);
        if current.as_ref() != Some(&k) {
            let _ = writeln!(out, "\n## ell = {}, mu = {}\n", k.0, k.1);
            let header: Vec<String> = rows.iter().map(|(n, _, _)| format!("n={n}")).collect();
            let _ = writeln!(out, "| N | {} |", header.join(" | "));
            let _ = writeln!(out, "|---|{}|", vec!["---"; rows.len()].join("|"));
            current = Some(k);
        }
        let n_pairs = meta.get("n_pairs").cloned().unwrap_or_else(|| "1".into());
        let ains: Vec<String> = rows.iter().map(|(_, a, _)| a.clone()).collect();
        let aouts: Vec<String> = rows.iter().map(|(_, _, b)| b.clone()).collect();
        let _ = writeln!(out, "| N={n_pairs} alpha_in | {} |", ains.join(" | "));
        let _ = writeln!(out, "| N={n_pairs} alpha_out | {} |", aouts.join(" | "));
    }
    if !missing.is_empty() {
        let _ = writeln!(out, "\nincomplete runs skipped: {}", missing.join(", "));
    }
    Ok(out)
}

/// Entry point for the binary: dispatches `mesh|synth|forward|invert|report`.
pub fn run_cli(args: &[String]) -> Result<String> {
    let (cmd, rest) = args
        .split_first()
        .ok_or_else(|| Error::invalid(USAGE.trim()))?;
    match cmd.as_str() {
        "mesh" => cmd_mesh(rest),
        "synth" => cmd_synth(rest),
        "forward" => cmd_forward(rest),
        "invert" => cmd_invert(rest),
        "report" => cmd_report(rest),
        other => Err(Error::invalid(format!(
            "unknown command {other:?}\n{}",
            USAGE.trim()
        ))),
    }
}

pub const USAGE: &str = "
usage: bvtomo <command> [flags]

commands:
  mesh     --disc --h H [--radius R] [--delta D] --out DIR
           --load NODE ELE [--delta D] --out DIR
  synth    --geometry G [--n N] [--theta T] [--seed S] [--h H] --out DIR
  forward  --geometry G [--h H] [--homogeneous] --out DIR
  invert   --geometry G [--ell L | --tikhonov] [--mu M] [--n N] [--theta T]
           [--seed S] [--physical] [--h H | --nodes F --ele F] [--max-iters K]
           [--inner-evals E] [--warm-evals E] [--polish] [--kappa K]
           [--epsilon E] [--lambda L] [--delta D] [--bound-upper C] --out DIR
  report   --dir DIR

geometries: concentric, strong_eccentric, mild_eccentric
seeds fall back to the BVTOMO_SEED environment variable, then 0.
";
