//! Subcommand execution and artifact writing.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use instantform::collective::{
    center_triple, moller_tube_sample, poincare_generators, random_frames, Particle, ParticleSystem,
};
use instantform::foliation::{
    check_admissibility, identity_embedding, make_rotating_embedding, Embedding, GridSpec, LapseRamp, RotationKind,
    TiltedHyperplanes,
};
use instantform::minkowski::{FourVector, LorentzTransform, Signature, Vec3};
use instantform::radar::{einstein_sync_batch, InertialObserver, RindlerObserver, SyncOptions, Worldline};
use instantform::relquant::{build_hamiltonian, spectrum, RelGrid, RelParams};
use instantform::restframe::{evolve_with, reconstruct_worldlines, EvolveOptions, Interaction, RelativeState, Trajectory};
use instantform::Error as CoreError;

use crate::config::*;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Domain(msg) => RunError::Validation(msg),
            CoreError::SingularPotential { .. } => RunError::Validation(e.to_string()),
            other => RunError::Numerical(other),
        }
    }
}

/// Round-trippable fixed-width float format (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// In-memory artifact set, written atomically once the run completes.
#[derive(Default)]
struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), RunError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let io = |e: csv::Error| RunError::Io(std::io::Error::other(e));
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(&r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| RunError::Io(std::io::Error::other(e.to_string())))?;
        self.files.insert(name.to_string(), bytes);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable artifact");
        bytes.push(b'\n');
        self.files.insert(name.to_string(), bytes);
    }
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Directory `<out>/<command>-<hash>` keyed by the resolved config.
pub fn run_dir(cfg: &RunConfig, out: &Path) -> PathBuf {
    let canonical = serde_json::to_vec(cfg).expect("serializable config");
    out.join(format!("{}-{}", cfg.command.name(), &sha256_hex(&canonical)[..16]))
}

pub struct RunSummary {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

/// Executes `cfg`, writing artifacts plus `manifest.json`. On numerical
/// failure a `diagnostics.json` is written before the error is returned.
pub fn execute(cfg: &RunConfig, out: &Path) -> Result<RunSummary, RunError> {
    let dir = run_dir(cfg, out);
    fs::create_dir_all(&dir)?;
    let start = Instant::now();
    let mut art = Artifacts::default();
    let outcome = dispatch(cfg, &mut art);
    let wall = start.elapsed().as_secs_f64();

    if let Err(e) = &outcome {
        let diag = json!({
            "command": cfg.command.name(),
            "exit_code": e.exit_code(),
            "error": e.to_string(),
            "detail": match e {
                RunError::Numerical(inner) => format!("{inner:?}"),
                other => other.to_string(),
            },
        });
        art.json("diagnostics.json", &diag);
    }

    let mut listing = BTreeMap::new();
    for (name, bytes) in &art.files {
        write_atomic(&dir, name, bytes)?;
        listing.insert(name.clone(), sha256_hex(bytes));
    }
    let manifest = json!({
        "tool": "instantform",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
        "config_hash": sha256_hex(&serde_json::to_vec(cfg).expect("serializable config")),
        "config": cfg,
        "seed": cfg.seed,
        "status": if outcome.is_ok() { "ok" } else { "failed" },
        "files": listing,
        "wall_time_s": wall,
    });
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("serializable manifest");
    bytes.push(b'\n');
    write_atomic(&dir, "manifest.json", &bytes)?;

    outcome?;
    let mut files: Vec<String> = art.files.keys().cloned().collect();
    files.push("manifest.json".into());
    Ok(RunSummary { dir, files })
}

fn dispatch(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), RunError> {
    let s = cfg.signature.signature();
    match &cfg.params {
        Params::Foliation(p) => validate_foliation(p, cfg.c, s, art),
        Params::Radar(p) => radar(p, cfg.c, cfg.seed, art),
        Params::Centers(p) => centers(p, cfg.c, cfg.seed, s, art),
        Params::Tube(p) => tube(p, cfg.c, cfg.seed, s, art),
        Params::Evolve(p) => evolve(p, cfg.c, art).map(|_| ()),
        Params::Reconstruct(p) => reconstruct(p, cfg.c, s, art),
        Params::Spectrum(p) => quantum_spectrum(p, cfg.c, art),
    }
}

fn v3(a: &[f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn push3(row: &mut Vec<String>, v: &Vec3) {
    row.extend(v.iter().map(|x| num(*x)));
}

// ---------------------------------------------------------------------------

fn validate_foliation(p: &FoliationParams, c: f64, s: Signature, art: &mut Artifacts) -> Result<(), RunError> {
    let e: Embedding = match p.embedding {
        EmbeddingSpec::Identity => identity_embedding(c),
        EmbeddingSpec::Tilted { beta } => Embedding::new(TiltedHyperplanes { beta, c }),
        EmbeddingSpec::LapseRamp { a } => Embedding::new(LapseRamp { a, c }),
        EmbeddingSpec::Rigid { omega } => make_rotating_embedding(RotationKind::Rigid, omega, 1.0, c)?,
        EmbeddingSpec::Differential { omega, r0 } => make_rotating_embedding(RotationKind::Differential, omega, r0, c)?,
    };
    let g = &p.grid;
    let mut grid = if g.planar {
        GridSpec::plane(g.half_width, g.n, g.tau_max, g.n_tau)
    } else {
        GridSpec::cube(g.half_width, g.n, g.tau_max, g.n_tau)
    };
    grid.shell_radius = g.shell_radius;
    let report = check_admissibility(&e, &grid, s)?;
    let rows = report
        .violations
        .iter()
        .map(|v| {
            let mut row = vec![v.condition.to_string(), num(v.tau)];
            row.extend(v.sigma.iter().map(|x| num(*x)));
            row.push(v.quantity.clone());
            row.push(num(v.witness));
            row
        })
        .collect();
    art.csv("violations.csv", &["condition", "tau", "sigma1", "sigma2", "sigma3", "quantity", "witness"], rows)?;
    art.json("report.json", &report);
    Ok(())
}

fn radar(p: &RadarParams, c: f64, seed: u64, art: &mut Artifacts) -> Result<(), RunError> {
    let w: Box<dyn Worldline> = match p.observer {
        ObserverSpec::Inertial { beta, domain } => Box::new(InertialObserver {
            origin: FourVector::zero(),
            beta: v3(&beta),
            c,
            domain: (domain[0], domain[1]),
        }),
        ObserverSpec::Rindler { acceleration, domain } => {
            Box::new(RindlerObserver { acceleration, c, domain: (domain[0], domain[1]) })
        }
    };
    let mut events: Vec<FourVector> = p.events.iter().map(|e| FourVector::new(e[0], e[1], e[2], e[3])).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..p.random_events {
        let b = p.event_box;
        events.push(FourVector::new(
            rng.gen_range(-b..b),
            rng.gen_range(-b..b),
            rng.gen_range(-b..b),
            rng.gen_range(-b..b),
        ));
    }
    let results = einstein_sync_batch(w.as_ref(), &events, &SyncOptions { scan_points: p.scan_points });
    let mut solved = 0;
    let mut rows = Vec::new();
    for (i, (x, r)) in events.iter().zip(&results).enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(x.0.iter().map(|v| num(*v)));
        match r {
            Ok(res) => {
                solved += 1;
                let (re, ra) = res.null_residuals(x);
                row.push("ok".into());
                row.extend([res.tau_p, res.s_emit, res.s_absorb, re, ra].iter().map(|v| num(*v)));
            }
            Err(CoreError::NoSolution { .. }) => {
                row.push("no_solution".into());
                row.extend(std::iter::repeat(String::new()).take(5));
            }
            Err(other) => return Err(other.clone().into()),
        }
        rows.push(row);
    }
    art.csv(
        "events.csv",
        &["event", "x0", "x1", "x2", "x3", "status", "tau_p", "s_emit", "s_absorb", "emit_residual", "absorb_residual"],
        rows,
    )?;
    art.json("summary.json", &json!({ "events": events.len(), "solved": solved, "no_solution": events.len() - solved }));
    Ok(())
}

fn system(potential: instantform::collective::PairPotential, particles: &[ParticleSpec], c: f64) -> Result<ParticleSystem, RunError> {
    let sys = ParticleSystem {
        particles: particles
            .iter()
            .map(|q| Particle { mass: q.mass, position: v3(&q.position), momentum: v3(&q.momentum), charge: q.charge })
            .collect(),
        time: 0.0,
        potential,
        c,
    };
    sys.validate()?;
    Ok(sys)
}

fn centers(p: &CentersParams, c: f64, seed: u64, s: Signature, art: &mut Artifacts) -> Result<(), RunError> {
    let sys = system(p.potential, &p.particles, c)?;
    let g = poincare_generators(&sys, s)?;
    let mut rows = Vec::new();
    for (id, (rapidity, dir)) in random_frames(p.frames.max(1), p.rapidity_max, seed).into_iter().enumerate() {
        let lambda = LorentzTransform::boost_rapidity(&dir, rapidity);
        let gp = g.transformed(&lambda, &FourVector::zero());
        let t = center_triple(&gp, s)?;
        let mut row = vec![id.to_string(), num(rapidity)];
        push3(&mut row, &dir);
        row.push(num(t.mc));
        row.push(num(t.s_bar.norm()));
        push3(&mut row, &t.x_e);
        push3(&mut row, &t.fokker_pryce.at_lab_time(gp.evaluation_time));
        push3(&mut row, &t.x_nw0);
        row.push(num(t.tube_radius));
        rows.push(row);
    }
    art.csv(
        "centers.csv",
        &[
            "frame", "rapidity", "n1", "n2", "n3", "mc", "spin", "xe1", "xe2", "xe3", "xfp1", "xfp2", "xfp3", "xnw1",
            "xnw2", "xnw3", "tube_radius",
        ],
        rows,
    )?;
    Ok(())
}

fn tube(p: &TubeParams, c: f64, seed: u64, s: Signature, art: &mut Artifacts) -> Result<(), RunError> {
    let sys = system(p.potential, &p.particles, c)?;
    let report = moller_tube_sample(&sys, p.frames, p.rapidity_max, seed, s)?;
    let rows = report
        .frames
        .iter()
        .map(|f| {
            let mut row = vec![f.id.to_string(), num(f.rapidity)];
            push3(&mut row, &f.direction);
            row.push(num(f.distance));
            row.push(num(if report.tube_radius > 0.0 { f.distance / report.tube_radius } else { 0.0 }));
            row
        })
        .collect();
    art.csv("tube.csv", &["frame", "rapidity", "n1", "n2", "n3", "distance", "distance_over_radius"], rows)?;
    art.json(
        "summary.json",
        &json!({
            "frames": report.frames.len(),
            "tube_radius": report.tube_radius,
            "max_distance": report.max_distance,
            "violations": report.violations,
        }),
    );
    Ok(())
}

fn relative_state(p: &EvolveParams, c: f64) -> RelativeState {
    RelativeState {
        rho: v3(&p.rho),
        pi: v3(&p.pi),
        m1: p.m1,
        m2: p.m2,
        q1q2: p.q1q2,
        c,
        interaction: Interaction { kind: p.potential, darwin_scale: p.darwin_scale },
    }
}

fn evolve(p: &EvolveParams, c: f64, art: &mut Artifacts) -> Result<Trajectory, RunError> {
    let rel = relative_state(p, c);
    let opts = EvolveOptions { record_every: p.record_every, ..EvolveOptions::default() };
    let traj = evolve_with(&rel, p.dt, p.steps, &opts)?;
    let h0 = rel.energy();
    let rows = traj
        .samples
        .iter()
        .map(|smp| {
            let mut row = vec![num(smp.tau)];
            push3(&mut row, &smp.rho);
            push3(&mut row, &smp.pi);
            row.extend([smp.energy, smp.binding_energy, smp.angular_momentum, (smp.energy - h0) / h0].iter().map(|v| num(*v)));
            row
        })
        .collect();
    art.csv(
        "trajectory.csv",
        &["tau", "rho1", "rho2", "rho3", "pi1", "pi2", "pi3", "H", "binding", "L", "H_residual"],
        rows,
    )?;
    art.json(
        "summary.json",
        &json!({
            "steps": p.steps,
            "samples": traj.samples.len(),
            "scheme": traj.scheme,
            "energy_drift": traj.energy_drift,
            "binding_drift": traj.binding_drift,
            "angular_momentum_drift": traj.angular_momentum_drift,
            "max_implicit_iterations": traj.max_implicit_iterations,
        }),
    );
    Ok(traj)
}

fn reconstruct(p: &ReconstructParams, c: f64, s: Signature, art: &mut Artifacts) -> Result<(), RunError> {
    let traj = evolve(&p.evolve, c, art)?;
    let mc = traj.initial.energy() / c;
    let lines = reconstruct_worldlines(&traj, &v3(&p.z), &v3(&p.h), mc, s)?;
    let mut superluminal = Vec::new();
    for line in &lines {
        let rows = line
            .samples
            .iter()
            .map(|(tau, x)| {
                let mut row = vec![num(*tau)];
                row.extend(x.0.iter().map(|v| num(*v)));
                row
            })
            .collect();
        art.csv(&format!("worldline_{}.csv", line.particle + 1), &["tau", "x0", "x1", "x2", "x3"], rows)?;
        superluminal.push(line.superluminal_segments.clone());
    }
    art.json(
        "worldlines.json",
        &json!({ "mc": mc, "h": p.h, "z": p.z, "superluminal_segments": superluminal }),
    );
    Ok(())
}

fn quantum_spectrum(p: &SpectrumParams, c: f64, art: &mut Artifacts) -> Result<(), RunError> {
    let params = RelParams { m1: p.m1, m2: p.m2, alpha: p.alpha, c };
    let grid_for = |n: usize| match p.grid {
        QuantumGridKind::Radial => RelGrid::radial(n, p.length, p.ell),
        QuantumGridKind::Cartesian => RelGrid::cartesian(n, p.length),
    };
    let grid = grid_for(p.n_points);
    let h = build_hamiltonian(&grid, &params)?;
    let levels = spectrum(&h, p.n_levels)?;
    let bohr = params.bohr_binding();
    let rows = levels
        .binding
        .iter()
        .enumerate()
        .map(|(n, b)| vec![(n + 1).to_string(), num(levels.rest_energy + b), num(*b), num(b / bohr)])
        .collect();
    art.csv("levels.csv", &["n", "E_n", "binding", "bohr_ratio"], rows)?;

    let mut report = json!({
        "grid": grid,
        "softening": h.softening,
        "rest_energy": levels.rest_energy,
        "bohr_binding": bohr,
        "ground_binding": levels.binding[0],
        "warnings": h.warnings,
    });
    if p.convergence && p.n_points / 2 >= 16 {
        let coarse_grid = grid_for(p.n_points / 2);
        let coarse_h = build_hamiltonian(&coarse_grid, &params)?;
        let coarse = spectrum(&coarse_h, 1)?;
        report["coarse"] = json!({
            "grid": coarse_grid,
            "softening": coarse_h.softening,
            "ground_binding": coarse.binding[0],
        });
        report["relative_change"] = json!(((levels.binding[0] - coarse.binding[0]) / levels.binding[0]).abs());
    }
    art.json("convergence.json", &report);
    Ok(())
}
