//! Rest-frame instant form: Wigner 3-space variables, relative two-body
//! dynamics with the invariant mass as Hamiltonian, and reconstruction of
//! particle world-lines from the relative trajectory and the external
//! Jacobi data.

use serde::{Deserialize, Serialize};

use crate::collective::{
    center_triple, coulomb_energy, generators_from_jacobi, fokker_pryce_worldline, poincare_generators, PairPotential,
    ParticleSystem,
};
use crate::error::{Error, Result};
use crate::foliation::{Embedding, RestFrameHyperplanes};
use crate::minkowski::{FourVector, LorentzTransform, Signature, Vec3};

/// `c √(m²c² + k²) − m c²`, without cancellation.
pub fn kinetic_excess(m: f64, k2: f64, c: f64) -> f64 {
    let mc = m * c;
    k2 * c / ((mc * mc + k2).sqrt() + mc)
}

/// Pair interaction used by the relative dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub kind: PairPotential,
    /// Multiplier on the Darwin term; 1 is the one-photon-exchange value.
    pub darwin_scale: f64,
}

impl Interaction {
    pub fn new(kind: PairPotential) -> Self {
        Interaction { kind, darwin_scale: 1.0 }
    }
}

// ---------------------------------------------------------------------------
// Rest-frame state

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestFrameState {
    pub mc: f64,
    pub h: Vec3,
    pub z: Vec3,
    pub tau: f64,
    pub eta: Vec<Vec3>,
    pub kappa: Vec<Vec3>,
    pub masses: Vec<f64>,
    pub charges: Vec<f64>,
    pub interaction: Interaction,
    pub c: f64,
    /// Size of the momentum correction applied to enforce `Σ κ = 0`.
    pub projection_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InternalGenerators {
    /// Internal energy divided by `c`; equals `Mc`.
    pub energy: f64,
    pub momentum: Vec3,
    pub spin: Vec3,
    pub boost: Vec3,
}

impl RestFrameState {
    fn pair_energies(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        if self.interaction.kind == PairPotential::None {
            return out;
        }
        for i in 0..self.eta.len() {
            for j in i + 1..self.eta.len() {
                let d = self.eta[i] - self.eta[j];
                let r = d.norm();
                let qq = self.charges[i] * self.charges[j];
                let mut v = coulomb_energy(self.charges[i], self.charges[j], r);
                if self.interaction.kind == PairPotential::CoulombDarwin {
                    let n = d / r;
                    let (a, b) = (self.kappa[i], self.kappa[j]);
                    let pref = self.interaction.darwin_scale * qq
                        / (8.0 * std::f64::consts::PI * self.masses[i] * self.masses[j] * self.c * self.c * r);
                    v -= pref * (a.dot(&b) + a.dot(&n) * b.dot(&n));
                }
                out.push((i, j, v));
            }
        }
        out
    }

    /// Per-particle energies dressed with half of each pair energy.
    pub fn dressed_energies(&self) -> Vec<f64> {
        let mut w: Vec<f64> = (0..self.eta.len())
            .map(|i| self.c * (self.masses[i].powi(2) * self.c * self.c + self.kappa[i].norm_squared()).sqrt())
            .collect();
        for (i, j, v) in self.pair_energies() {
            w[i] += 0.5 * v;
            w[j] += 0.5 * v;
        }
        w
    }

    pub fn relative(&self) -> Result<RelativeState> {
        if self.eta.len() != 2 {
            return Err(Error::Domain(format!("relative variables need 2 particles, got {}", self.eta.len())));
        }
        Ok(RelativeState {
            rho: self.eta[0] - self.eta[1],
            pi: self.kappa[0],
            m1: self.masses[0],
            m2: self.masses[1],
            q1q2: self.charges[0] * self.charges[1],
            c: self.c,
            interaction: self.interaction,
        })
    }
}

pub fn internal_generators(st: &RestFrameState) -> InternalGenerators {
    let w = st.dressed_energies();
    InternalGenerators {
        energy: w.iter().sum::<f64>() / st.c,
        momentum: st.kappa.iter().sum(),
        spin: st.eta.iter().zip(&st.kappa).map(|(e, k)| e.cross(k)).sum(),
        boost: st.eta.iter().zip(&w).map(|(e, wi)| e * (wi / st.c)).sum(),
    }
}

/// Boosts the snapshot to the rest frame, re-synchronizes it on the rest
/// slice through the Fokker-Pryce event at the snapshot time and moves the
/// origin to the dressed-energy center.
///
/// World-lines are propagated as straight lines between the lab and rest
/// slices, which is exact for free systems. For interacting systems the
/// total 3-momentum is then projected back to zero and `Mc` is taken from
/// the resulting internal energy.
pub fn to_rest_frame(sys: &ParticleSystem, s: Signature) -> Result<RestFrameState> {
    let g = poincare_generators(sys, s)?;
    let triple = center_triple(&g, s)?;
    let fp = fokker_pryce_worldline(&g, s)?;
    let c = sys.c;
    let lambda = LorentzTransform::boost_from_h(&(-triple.h));
    let tau = fp.tau_at_lab_time(sys.time);
    let t_rest = c * tau;

    let mut eta = Vec::with_capacity(sys.particles.len());
    let mut kappa = Vec::with_capacity(sys.particles.len());
    for p in &sys.particles {
        let x = lambda.apply(&FourVector::from_parts(sys.time, p.position));
        let k = lambda.apply(&FourVector::from_parts(p.energy(c) / c, p.momentum));
        eta.push(x.spatial() + k.spatial() * ((t_rest - x.t()) / k.t()));
        kappa.push(k.spatial());
    }
    let n = kappa.len() as f64;
    let total: Vec3 = kappa.iter().sum();
    for k in kappa.iter_mut() {
        *k -= total / n;
    }

    let mut st = RestFrameState {
        mc: 0.0,
        h: triple.h,
        z: triple.z,
        tau,
        eta,
        kappa,
        masses: sys.particles.iter().map(|p| p.mass).collect(),
        charges: sys.particles.iter().map(|p| p.charge).collect(),
        interaction: Interaction::new(sys.potential),
        c,
        projection_residual: total.norm(),
    };
    let w = st.dressed_energies();
    let origin: Vec3 = st.eta.iter().zip(&w).map(|(e, wi)| e * *wi).sum::<Vec3>() / w.iter().sum::<f64>();
    for e in st.eta.iter_mut() {
        *e -= origin;
    }
    st.mc = internal_generators(&st).energy;
    Ok(st)
}

// ---------------------------------------------------------------------------
// Relative two-body dynamics

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeState {
    /// `η₁ − η₂`.
    pub rho: Vec3,
    /// `κ₁ = −κ₂`.
    pub pi: Vec3,
    pub m1: f64,
    pub m2: f64,
    /// Product of the charges; the Coulomb energy is `q1q2 / (4π r)`.
    pub q1q2: f64,
    pub c: f64,
    pub interaction: Interaction,
}

impl RelativeState {
    fn coulomb_k(&self) -> f64 {
        match self.interaction.kind {
            PairPotential::None => 0.0,
            _ => self.q1q2 / (4.0 * std::f64::consts::PI),
        }
    }

    fn darwin_d(&self) -> f64 {
        match self.interaction.kind {
            PairPotential::CoulombDarwin => {
                self.interaction.darwin_scale * self.q1q2
                    / (8.0 * std::f64::consts::PI * self.m1 * self.m2 * self.c * self.c)
            }
            _ => 0.0,
        }
    }

    pub fn rest_energy(&self) -> f64 {
        (self.m1 + self.m2) * self.c * self.c
    }

    /// `H − (m₁ + m₂)c²` at `(rho, pi)`.
    pub fn binding_energy_at(&self, rho: &Vec3, pi: &Vec3) -> f64 {
        let p2 = pi.norm_squared();
        let mut e = kinetic_excess(self.m1, p2, self.c) + kinetic_excess(self.m2, p2, self.c);
        if self.interaction.kind != PairPotential::None {
            let r = rho.norm();
            e += self.coulomb_k() / r;
            let d = self.darwin_d();
            if d != 0.0 {
                let pr = pi.dot(rho) / r;
                e += d * (p2 + pr * pr) / r;
            }
        }
        e
    }

    /// Total energy `H = Mc c`.
    pub fn energy(&self) -> f64 {
        self.rest_energy() + self.binding_energy_at(&self.rho, &self.pi)
    }

    pub fn angular_momentum(&self) -> Vec3 {
        self.rho.cross(&self.pi)
    }

    /// `∂H/∂π`.
    fn velocity(&self, rho: &Vec3, pi: &Vec3) -> Vec3 {
        let p2 = pi.norm_squared();
        let c = self.c;
        let kin = |m: f64| c / (m * m * c * c + p2).sqrt();
        let mut v = pi * (kin(self.m1) + kin(self.m2));
        let d = self.darwin_d();
        if d != 0.0 {
            let r2 = rho.norm_squared();
            let r = r2.sqrt();
            v += (pi * 2.0 + rho * (2.0 * pi.dot(rho) / r2)) * (d / r);
        }
        v
    }

    /// `∂H/∂ρ`.
    fn force_gradient(&self, rho: &Vec3, pi: &Vec3) -> Vec3 {
        if self.interaction.kind == PairPotential::None {
            return Vec3::zeros();
        }
        let r2 = rho.norm_squared();
        let r = r2.sqrt();
        let r3 = r2 * r;
        let mut g = rho * (-self.coulomb_k() / r3);
        let d = self.darwin_d();
        if d != 0.0 {
            let pr = pi.dot(rho);
            let p2 = pi.norm_squared();
            g += (rho * (-p2 / r3) + pi * (2.0 * pr / r3) - rho * (3.0 * pr * pr / (r3 * r2))) * d;
        }
        g
    }

    /// Dressed energies `(w₁, w₂)` of the two particles.
    pub fn dressed_energies(&self) -> (f64, f64) {
        let p2 = self.pi.norm_squared();
        let c = self.c;
        let half = if self.interaction.kind == PairPotential::None {
            0.0
        } else {
            0.5 * (self.binding_energy_at(&self.rho, &self.pi)
                - kinetic_excess(self.m1, p2, c)
                - kinetic_excess(self.m2, p2, c))
        };
        (
            c * (self.m1 * self.m1 * c * c + p2).sqrt() + half,
            c * (self.m2 * self.m2 * c * c + p2).sqrt() + half,
        )
    }

    /// Positions `(η₁, η₂)` with the internal boost set to zero.
    pub fn split(&self) -> (Vec3, Vec3) {
        let (w1, w2) = self.dressed_energies();
        let total = w1 + w2;
        (self.rho * (w2 / total), -self.rho * (w1 / total))
    }

    pub fn to_state(&self, h: Vec3, z: Vec3, tau: f64) -> RestFrameState {
        let (e1, e2) = self.split();
        let mut st = RestFrameState {
            mc: 0.0,
            h,
            z,
            tau,
            eta: vec![e1, e2],
            kappa: vec![self.pi, -self.pi],
            masses: vec![self.m1, self.m2],
            // only the product of the charges is known
            charges: vec![1.0, self.q1q2],
            interaction: self.interaction,
            c: self.c,
            projection_residual: 0.0,
        };
        st.mc = internal_generators(&st).energy;
        st
    }

    /// The same state with every 3-vector rotated by `r`.
    pub fn rotated(&self, r: &crate::minkowski::Mat3) -> Self {
        RelativeState { rho: r * self.rho, pi: r * self.pi, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub tau: f64,
    pub rho: Vec3,
    pub pi: Vec3,
    pub energy: f64,
    pub binding_energy: f64,
    pub angular_momentum: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Leapfrog,
    GeneralizedLeapfrog,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: RelativeState,
    pub samples: Vec<TrajectorySample>,
    pub step: f64,
    pub scheme: Scheme,
    /// `max |H − H₀| / |H₀|`.
    pub energy_drift: f64,
    /// `max |H − H₀| / |H₀ − (m₁+m₂)c²|` (binding-relative).
    pub binding_drift: f64,
    /// `max ||L| − |L₀|| / |L₀|`.
    pub angular_momentum_drift: f64,
    pub max_implicit_iterations: usize,
}

impl Trajectory {
    pub fn state_at(&self, k: usize) -> RelativeState {
        RelativeState { rho: self.samples[k].rho, pi: self.samples[k].pi, ..self.initial }
    }

    pub fn last_state(&self) -> RelativeState {
        self.state_at(self.samples.len() - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Record every `record_every`-th step (the final step is always kept).
    pub record_every: usize,
    pub implicit_tol: f64,
    pub implicit_max_iter: usize,
    pub tau0: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { record_every: 1, implicit_tol: 1e-12, implicit_max_iter: 50, tau0: 0.0 }
    }
}

/// Distance of the segment `a → b` from the origin.
fn segment_distance(a: &Vec3, b: &Vec3) -> f64 {
    let d = b - a;
    let dd = d.norm_squared();
    if dd == 0.0 {
        return a.norm();
    }
    let t = (-a.dot(&d) / dd).clamp(0.0, 1.0);
    (a + d * t).norm()
}

pub fn evolve(rel: &RelativeState, dt: f64, n_steps: usize) -> Result<Trajectory> {
    evolve_with(rel, dt, n_steps, &EvolveOptions::default())
}

fn fixed_point<F: Fn(&Vec3) -> Vec3>(start: Vec3, f: F, opts: &EvolveOptions) -> Result<(Vec3, usize)> {
    let mut x = start;
    let mut last = f64::INFINITY;
    for it in 1..=opts.implicit_max_iter {
        let next = f(&x);
        last = (next - x).amax();
        x = next;
        if last <= opts.implicit_tol * x.amax().max(f64::MIN_POSITIVE) {
            return Ok((x, it));
        }
    }
    Err(Error::ImplicitStep { iterations: opts.implicit_max_iter, increment: last })
}

/// Fixed-step Störmer-Verlet integration of `H(ρ, π)`; the scheme is
/// explicit for separable `H` and implicit in two substeps otherwise.
pub fn evolve_with(rel: &RelativeState, dt: f64, n_steps: usize, opts: &EvolveOptions) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    if !(rel.c > 0.0 && rel.m1 > 0.0 && rel.m2 > 0.0) {
        return Err(Error::Domain("masses and c must be positive".into()));
    }
    let r0 = rel.rho.norm();
    if rel.interaction.kind != PairPotential::None && r0 == 0.0 {
        return Err(Error::SingularPotential { i: 0, j: 1 });
    }
    let separable = rel.interaction.kind != PairPotential::CoulombDarwin || rel.darwin_d() == 0.0;
    let scheme = if separable { Scheme::Leapfrog } else { Scheme::GeneralizedLeapfrog };

    let sample = |tau: f64, rho: Vec3, pi: Vec3| {
        let binding = rel.binding_energy_at(&rho, &pi);
        TrajectorySample {
            tau,
            rho,
            pi,
            energy: rel.rest_energy() + binding,
            binding_energy: binding,
            angular_momentum: rho.cross(&pi).norm(),
        }
    };
    let first = sample(opts.tau0, rel.rho, rel.pi);
    let (h0, b0, l0) = (first.energy, first.binding_energy, first.angular_momentum);
    let record_every = opts.record_every.max(1);
    let mut samples = Vec::with_capacity(n_steps / record_every + 2);
    samples.push(first);

    let (mut rho, mut pi) = (rel.rho, rel.pi);
    let (mut e_drift, mut b_drift, mut l_drift) = (0.0f64, 0.0f64, 0.0f64);
    let mut max_iter = 0usize;
    let half = 0.5 * dt;
    let collision = 1e-6 * r0;

    for step in 1..=n_steps {
        let (new_rho, new_pi) = if separable {
            let p_half = pi - rel.force_gradient(&rho, &pi) * half;
            let r_new = rho + rel.velocity(&rho, &p_half) * dt;
            (r_new, p_half - rel.force_gradient(&r_new, &p_half) * half)
        } else {
            let (p_half, it1) = fixed_point(pi, |p| pi - rel.force_gradient(&rho, p) * half, opts)?;
            let v0 = rel.velocity(&rho, &p_half);
            let (r_new, it2) =
                fixed_point(rho + v0 * dt, |r| rho + (v0 + rel.velocity(r, &p_half)) * half, opts)?;
            max_iter = max_iter.max(it1).max(it2);
            (r_new, p_half - rel.force_gradient(&r_new, &p_half) * half)
        };
        let tau = opts.tau0 + dt * step as f64;
        let bad = !new_rho.iter().chain(new_pi.iter()).all(|x| x.is_finite())
            || (rel.interaction.kind != PairPotential::None && segment_distance(&rho, &new_rho) <= collision);
        if bad {
            return Err(Error::Singularity {
                tau: tau - dt,
                rho_norm: rho.norm(),
                last_rho: [rho.x, rho.y, rho.z],
                last_pi: [pi.x, pi.y, pi.z],
            });
        }
        rho = new_rho;
        pi = new_pi;
        let smp = sample(tau, rho, pi);
        e_drift = e_drift.max((smp.binding_energy - b0).abs() / h0.abs());
        b_drift = b_drift.max((smp.binding_energy - b0).abs() / b0.abs().max(f64::MIN_POSITIVE));
        if l0 > 0.0 {
            l_drift = l_drift.max((smp.angular_momentum - l0).abs() / l0);
        }
        if step % record_every == 0 || step == n_steps {
            samples.push(smp);
        }
    }

    Ok(Trajectory {
        initial: *rel,
        samples,
        step: dt,
        scheme,
        energy_drift: e_drift,
        binding_drift: b_drift,
        angular_momentum_drift: l_drift,
        max_implicit_iterations: max_iter,
    })
}

// ---------------------------------------------------------------------------
// World-line reconstruction

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedWorldline {
    pub particle: usize,
    pub samples: Vec<(f64, FourVector)>,
    /// Indices `k` of segments `k → k+1` with space-like separation.
    pub superluminal_segments: Vec<usize>,
}

/// The Wigner hyperplane chart through the Fokker-Pryce line fixed by the
/// external data; `S̄` is taken from the relative motion.
pub fn rest_frame_chart(mc: f64, h: &Vec3, z: &Vec3, s_bar: &Vec3, c: f64) -> Result<Embedding> {
    let g = generators_from_jacobi(mc, h, z, s_bar, c)?;
    let fp = fokker_pryce_worldline(&g, Signature::Particle)?;
    Ok(Embedding::new(RestFrameHyperplanes::new(h, fp.rest_position, c)))
}

/// `x_i(τ) = X_FP(τ) + ε_r(h) η_i^r(τ)` for both particles.
pub fn reconstruct_worldlines(
    traj: &Trajectory,
    z: &Vec3,
    h: &Vec3,
    mc: f64,
    _s: Signature,
) -> Result<Vec<ReconstructedWorldline>> {
    if traj.samples.is_empty() {
        return Err(Error::Domain("trajectory is empty".into()));
    }
    let s_bar = traj.samples[0].rho.cross(&traj.samples[0].pi);
    let chart = rest_frame_chart(mc, h, z, &s_bar, traj.initial.c)?;
    let mut lines: Vec<ReconstructedWorldline> = (0..2)
        .map(|particle| ReconstructedWorldline { particle, samples: Vec::new(), superluminal_segments: Vec::new() })
        .collect();
    for k in 0..traj.samples.len() {
        let st = traj.state_at(k);
        let (e1, e2) = st.split();
        let tau = traj.samples[k].tau;
        lines[0].samples.push((tau, chart.position(tau, &e1)));
        lines[1].samples.push((tau, chart.position(tau, &e2)));
    }
    for line in lines.iter_mut() {
        for k in 0..line.samples.len().saturating_sub(1) {
            let d = line.samples[k + 1].1 - line.samples[k].1;
            if d.dot_plus(&d) < -1e-12 * d.0.norm_squared() {
                line.superluminal_segments.push(k);
            }
        }
    }
    Ok(lines)
}
