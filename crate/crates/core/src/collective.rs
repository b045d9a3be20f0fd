//! Poincaré generators of N-particle snapshots and the three relativistic
//! collective positions: Møller center of energy, Fokker-Pryce center of
//! inertia and Newton-Wigner center of mass.
//!
//! Conventions: `P^μ = (P⁰, P)` with `P⁰ = (total energy)/c`,
//! `J^{μν} = Σ (x^μ p^ν − x^ν p^μ)`, events as `(c t, x)`. Pair potentials
//! use rationalized Gaussian units, `V = q_i q_j / (4π r)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::{levi_civita3, FourVector, LorentzTransform, Mat4, Signature, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairPotential {
    #[default]
    None,
    Coulomb,
    CoulombDarwin,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub mass: f64,
    pub position: Vec3,
    pub momentum: Vec3,
    pub charge: f64,
}

impl Particle {
    pub fn free(mass: f64, position: Vec3, momentum: Vec3) -> Self {
        Particle { mass, position, momentum, charge: 0.0 }
    }

    /// Positive-branch kinetic energy `c √(m²c² + p²)`.
    pub fn energy(&self, c: f64) -> f64 {
        c * (self.mass * self.mass * c * c + self.momentum.norm_squared()).sqrt()
    }

    pub fn velocity(&self, c: f64) -> Vec3 {
        self.momentum * (c * c / self.energy(c))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleSystem {
    pub particles: Vec<Particle>,
    /// Common time coordinate `x⁰ = c t` of the snapshot.
    pub time: f64,
    pub potential: PairPotential,
    pub c: f64,
}

/// Coulomb energy of a pair.
pub fn coulomb_energy(q1: f64, q2: f64, r: f64) -> f64 {
    q1 * q2 / (4.0 * std::f64::consts::PI * r)
}

/// Momentum-dependent O(1/c²) pair correction,
/// `−q₁q₂ / (8π m₁ m₂ c² r) (p₁·p₂ + (p₁·r̂)(p₂·r̂))`.
pub fn darwin_energy(a: &Particle, b: &Particle, c: f64) -> f64 {
    let d = a.position - b.position;
    let r = d.norm();
    let n = d / r;
    let pref = a.charge * b.charge / (8.0 * std::f64::consts::PI * a.mass * b.mass * c * c * r);
    -pref * (a.momentum.dot(&b.momentum) + a.momentum.dot(&n) * b.momentum.dot(&n))
}

impl ParticleSystem {
    pub fn free(particles: Vec<Particle>, c: f64) -> Self {
        ParticleSystem { particles, time: 0.0, potential: PairPotential::None, c }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::Domain(format!("c must be positive, got {}", self.c)));
        }
        if self.particles.is_empty() {
            return Err(Error::Domain("particle system is empty".into()));
        }
        for (i, p) in self.particles.iter().enumerate() {
            if !(p.mass > 0.0) {
                return Err(Error::Domain(format!("particle {i} has non-positive mass {}", p.mass)));
            }
        }
        if self.potential != PairPotential::None {
            for i in 0..self.particles.len() {
                for j in i + 1..self.particles.len() {
                    if (self.particles[i].position - self.particles[j].position).norm() == 0.0 {
                        return Err(Error::SingularPotential { i, j });
                    }
                }
            }
        }
        Ok(())
    }

    /// Pair energies `V_ij` (i < j) for the active potential.
    pub fn pair_energies(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        if self.potential == PairPotential::None {
            return out;
        }
        for i in 0..self.particles.len() {
            for j in i + 1..self.particles.len() {
                let (a, b) = (&self.particles[i], &self.particles[j]);
                let r = (a.position - b.position).norm();
                let mut v = coulomb_energy(a.charge, b.charge, r);
                if self.potential == PairPotential::CoulombDarwin {
                    v += darwin_energy(a, b, self.c);
                }
                out.push((i, j, v));
            }
        }
        out
    }

    pub fn total_energy(&self) -> f64 {
        let kin: f64 = self.particles.iter().map(|p| p.energy(self.c)).sum();
        kin + self.pair_energies().iter().map(|t| t.2).sum::<f64>()
    }

    /// The snapshot seen from the frame `x' = Λ x + a`, re-synchronized at
    /// `x'⁰ = new_time` by free propagation. Exact for free systems only.
    pub fn transformed(&self, lambda: &LorentzTransform, a: &FourVector, new_time: f64) -> Result<Self> {
        if self.potential != PairPotential::None {
            return Err(Error::Domain(
                "snapshot transformation requires a free system (interacting world-lines are not straight)".into(),
            ));
        }
        let particles = self
            .particles
            .iter()
            .map(|p| {
                let x = lambda.apply(&FourVector::from_parts(self.time, p.position)) + *a;
                let k = lambda.apply(&FourVector::from_parts(p.energy(self.c) / self.c, p.momentum));
                let v_over_c = k.spatial() / k.t();
                let pos = x.spatial() + v_over_c * (new_time - x.t());
                Particle { position: pos, momentum: k.spatial(), ..*p }
            })
            .collect();
        Ok(ParticleSystem { particles, time: new_time, ..self.clone() })
    }

    /// Free evolution of every particle to time `x⁰`.
    pub fn propagated_free(&self, time: f64) -> Self {
        let particles = self
            .particles
            .iter()
            .map(|p| Particle { position: p.position + p.velocity(self.c) * ((time - self.time) / self.c), ..*p })
            .collect();
        ParticleSystem { particles, time, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareGenerators {
    pub p: FourVector,
    pub j: Mat4,
    pub evaluation_time: f64,
    pub c: f64,
}

pub fn poincare_generators(sys: &ParticleSystem, _s: Signature) -> Result<PoincareGenerators> {
    sys.validate()?;
    let c = sys.c;
    let x0 = sys.time;
    let mut p0 = 0.0;
    let mut p = Vec3::zeros();
    // weighted[k] = Σ x^k (energy)/c
    let mut weighted = Vec3::zeros();
    let mut l = Vec3::zeros();
    for part in &sys.particles {
        let e = part.energy(c) / c;
        p0 += e;
        p += part.momentum;
        weighted += part.position * e;
        l += part.position.cross(&part.momentum);
    }
    for (i, k, v) in sys.pair_energies() {
        p0 += v / c;
        weighted += (sys.particles[i].position + sys.particles[k].position) * (0.5 * v / c);
    }
    if !p0.is_finite() || !weighted.iter().all(|x| x.is_finite()) {
        return Err(Error::Domain("non-finite generators".into()));
    }
    let mut j = Mat4::zeros();
    for k in 0..3 {
        let k0 = weighted[k] - x0 * p[k];
        j[(k + 1, 0)] = k0;
        j[(0, k + 1)] = -k0;
    }
    // J^{ij} = ε_ijk L^k
    for a in 0..3 {
        for b in 0..3 {
            j[(a + 1, b + 1)] = (0..3).map(|k| levi_civita3(a, b, k) * l[k]).sum();
        }
    }
    Ok(PoincareGenerators { p: FourVector::from_parts(p0, p), j, evaluation_time: x0, c })
}

impl PoincareGenerators {
    /// Generators seen from `x' = Λ x + a`.
    pub fn transformed(&self, lambda: &LorentzTransform, a: &FourVector) -> Self {
        let p = lambda.apply(&self.p);
        let mut j = lambda.apply_tensor(&self.j);
        j += a.0 * p.0.transpose() - p.0 * a.0.transpose();
        PoincareGenerators { p, j, ..*self }
    }

    /// Largest `|J + Jᵀ|` entry.
    pub fn antisymmetry_defect(&self) -> f64 {
        (self.j + self.j.transpose()).amax()
    }
}

/// `(Mc, h, S̄)`: invariant mass times `c`, `h = P/Mc`, rest spin.
pub fn invariant_mass_spin(g: &PoincareGenerators, _s: Signature) -> Result<(f64, Vec3, Vec3)> {
    let m2 = g.p.dot_plus(&g.p);
    if !(m2 > 0.0) || !(g.p.t() > 0.0) {
        return Err(Error::Domain(format!("total momentum is not future time-like (P² = {m2:e})")));
    }
    let mc = m2.sqrt();
    let h = g.p.spatial() / mc;
    let rest = rest_generators(g, &h);
    Ok((mc, h, spin_of(&rest)))
}

fn rest_generators(g: &PoincareGenerators, h: &Vec3) -> Mat4 {
    LorentzTransform::boost_from_h(&(-h)).apply_tensor(&g.j)
}

fn spin_of(j: &Mat4) -> Vec3 {
    Vec3::new(j[(2, 3)], j[(3, 1)], j[(1, 2)])
}

/// `X_E(x⁰) = (J^{k0} + x⁰ P^k) / P⁰`.
pub fn center_of_energy(g: &PoincareGenerators, x0: f64) -> Result<Vec3> {
    if !(g.p.t() > 0.0) {
        return Err(Error::Domain(format!("P⁰ = {} is not positive", g.p.t())));
    }
    let k0 = Vec3::new(g.j[(1, 0)], g.j[(2, 0)], g.j[(3, 0)]);
    Ok((k0 + g.p.spatial() * x0) / g.p.t())
}

/// `τ ↦ B(h) (c τ, Y')` with `Y'` the rest-frame center of energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FokkerPryceLine {
    pub boost: LorentzTransform,
    pub h: Vec3,
    pub rest_position: Vec3,
    pub c: f64,
}

impl FokkerPryceLine {
    pub fn at(&self, tau: f64) -> FourVector {
        self.boost.apply(&FourVector::from_parts(self.c * tau, self.rest_position))
    }

    /// Rest time `τ` at which the line crosses the lab slice `x⁰`.
    pub fn tau_at_lab_time(&self, x0: f64) -> f64 {
        let h0 = (1.0 + self.h.norm_squared()).sqrt();
        (x0 - self.h.dot(&self.rest_position)) / (h0 * self.c)
    }

    pub fn at_lab_time(&self, x0: f64) -> Vec3 {
        self.at(self.tau_at_lab_time(x0)).spatial()
    }

    /// Minkowski distance between the line and the parallel line through `x`.
    pub fn transverse_distance(&self, x: &FourVector) -> f64 {
        let u = self.boost.apply(&FourVector::new(1.0, 0.0, 0.0, 0.0));
        let d = *x - self.at(0.0);
        let perp = d - u * d.dot_plus(&u);
        (-perp.dot_plus(&perp)).max(0.0).sqrt()
    }
}

pub fn fokker_pryce_worldline(g: &PoincareGenerators, s: Signature) -> Result<FokkerPryceLine> {
    let (mc, h, _) = invariant_mass_spin(g, s)?;
    let rest = rest_generators(g, &h);
    let y = Vec3::new(rest[(1, 0)], rest[(2, 0)], rest[(3, 0)]) / mc;
    Ok(FokkerPryceLine { boost: LorentzTransform::boost_from_h(&h), h, rest_position: y, c: g.c })
}

/// `(x_NW(0), z = Mc x_NW(0), h)`.
///
/// `x_NW = (P⁰ X_E + Mc X_FP) / (P⁰ + Mc)` on the slice `x⁰ = 0`.
pub fn newton_wigner_and_jacobi(g: &PoincareGenerators, s: Signature) -> Result<(Vec3, Vec3, Vec3)> {
    let (mc, h, _) = invariant_mass_spin(g, s)?;
    let fp = fokker_pryce_worldline(g, s)?;
    let xe = center_of_energy(g, 0.0)?;
    let h0 = g.p.t() / mc;
    let x_nw = (xe * h0 + fp.at_lab_time(0.0)) / (1.0 + h0);
    Ok((x_nw, x_nw * mc, h))
}

/// Generators of a system with invariant mass `mc`, `h = P/Mc`, Jacobi data
/// `z = Mc x_NW(0)` and rest spin `s_bar`.
pub fn generators_from_jacobi(mc: f64, h: &Vec3, z: &Vec3, s_bar: &Vec3, c: f64) -> Result<PoincareGenerators> {
    if !(mc > 0.0) {
        return Err(Error::Domain(format!("invariant mass must be positive, got {mc}")));
    }
    let h0 = (1.0 + h.norm_squared()).sqrt();
    let y_lab = z / mc + s_bar.cross(h) / (mc * (1.0 + h0));
    let y_rest = y_lab + h * (h.dot(&y_lab) / (1.0 + h0));
    let mut rest = Mat4::zeros();
    for k in 0..3 {
        rest[(k + 1, 0)] = mc * y_rest[k];
        rest[(0, k + 1)] = -mc * y_rest[k];
        for l in 0..3 {
            rest[(k + 1, l + 1)] = (0..3).map(|m| levi_civita3(k, l, m) * s_bar[m]).sum();
        }
    }
    Ok(PoincareGenerators {
        p: FourVector::from_parts(mc * h0, h * mc),
        j: LorentzTransform::boost_from_h(h).apply_tensor(&rest),
        evaluation_time: 0.0,
        c,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterTriple {
    pub mc: f64,
    pub h: Vec3,
    pub s_bar: Vec3,
    /// Center of energy at the evaluation time.
    pub x_e: Vec3,
    pub fokker_pryce: FokkerPryceLine,
    pub x_nw0: Vec3,
    pub z: Vec3,
    pub tube_radius: f64,
}

pub fn center_triple(g: &PoincareGenerators, s: Signature) -> Result<CenterTriple> {
    let (mc, h, s_bar) = invariant_mass_spin(g, s)?;
    let (x_nw0, z, _) = newton_wigner_and_jacobi(g, s)?;
    Ok(CenterTriple {
        mc,
        h,
        s_bar,
        x_e: center_of_energy(g, g.evaluation_time)?,
        fokker_pryce: fokker_pryce_worldline(g, s)?,
        x_nw0,
        z,
        tube_radius: s_bar.norm() / mc,
    })
}

// ---------------------------------------------------------------------------
// Møller world-tube

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeFrame {
    pub id: usize,
    pub rapidity: f64,
    pub direction: Vec3,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeReport {
    pub frames: Vec<TubeFrame>,
    pub max_distance: f64,
    pub tube_radius: f64,
    /// Frames whose distance exceeds `tube_radius · (1 + 1e-6)`.
    pub violations: usize,
}

/// Seeded random boosts; frame 0 is the identity.
pub fn random_frames(n: usize, rapidity_max: f64, seed: u64) -> Vec<(f64, Vec3)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            if i == 0 {
                return (0.0, Vec3::x());
            }
            let cos_t: f64 = rng.gen_range(-1.0..=1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let sin_t = (1.0 - cos_t * cos_t).sqrt();
            let dir = Vec3::new(sin_t * phi.cos(), sin_t * phi.sin(), cos_t);
            (rng.gen_range(0.0..=rapidity_max), dir)
        })
        .collect()
}

/// Center of energy of the frame `x' = Λ x`, as an event of the original frame.
pub fn mapped_back_center_of_energy(g: &PoincareGenerators, lambda: &LorentzTransform) -> Result<FourVector> {
    let gp = g.transformed(lambda, &FourVector::zero());
    let xe = center_of_energy(&gp, 0.0)?;
    Ok(lambda.inverse().apply(&FourVector::from_parts(0.0, xe)))
}

pub fn moller_tube_sample(
    sys: &ParticleSystem,
    n_frames: usize,
    rapidity_max: f64,
    seed: u64,
    s: Signature,
) -> Result<TubeReport> {
    if n_frames == 0 {
        return Err(Error::Domain("n_frames must be at least 1".into()));
    }
    if !(rapidity_max >= 0.0) {
        return Err(Error::Domain(format!("rapidity_max must be non-negative, got {rapidity_max}")));
    }
    let g = poincare_generators(sys, s)?;
    let triple = center_triple(&g, s)?;
    let fp = triple.fokker_pryce;
    let frames: Vec<TubeFrame> = random_frames(n_frames, rapidity_max, seed)
        .into_par_iter()
        .enumerate()
        .map(|(id, (rapidity, direction))| {
            let lambda = LorentzTransform::boost_rapidity(&direction, rapidity);
            let x = mapped_back_center_of_energy(&g, &lambda)?;
            Ok(TubeFrame { id, rapidity, direction, distance: fp.transverse_distance(&x) })
        })
        .collect::<Result<_>>()?;
    let max_distance = frames.iter().map(|f| f.distance).fold(0.0, f64::max);
    let limit = triple.tube_radius * (1.0 + 1e-6);
    let violations = frames.iter().filter(|f| f.distance > limit).count();
    Ok(TubeReport { frames, max_distance, tube_radius: triple.tube_radius, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const S: Signature = Signature::Particle;

    fn back_to_back(m: f64, a: f64, k: f64) -> ParticleSystem {
        ParticleSystem::free(
            vec![
                Particle::free(m, Vec3::new(0.0, a, 0.0), Vec3::new(k, 0.0, 0.0)),
                Particle::free(m, Vec3::new(0.0, -a, 0.0), Vec3::new(-k, 0.0, 0.0)),
            ],
            1.0,
        )
    }

    #[test]
    fn single_particle_at_rest() {
        let sys = ParticleSystem::free(vec![Particle::free(2.0, Vec3::zeros(), Vec3::zeros())], 3.0);
        let g = poincare_generators(&sys, S).unwrap();
        assert_eq!(g.p, FourVector::new(6.0, 0.0, 0.0, 0.0));
        assert_eq!(g.j, Mat4::zeros());
        let (mc, _, s_bar) = invariant_mass_spin(&g, S).unwrap();
        assert_eq!(mc, 6.0);
        assert_eq!(s_bar, Vec3::zeros());
    }

    #[test]
    fn back_to_back_pair() {
        let (m, a, k) = (1.0, 0.7, 0.4);
        let g = poincare_generators(&back_to_back(m, a, k), S).unwrap();
        let e = (m * m + k * k).sqrt();
        assert_relative_eq!(g.p.t(), 2.0 * e, epsilon = 1e-15);
        assert_eq!(g.p.spatial(), Vec3::zeros());
        assert_relative_eq!(g.j[(1, 2)].abs(), 2.0 * a * k, epsilon = 1e-15);
        let (mc, _, s_bar) = invariant_mass_spin(&g, S).unwrap();
        assert_relative_eq!(mc, 2.0 * e, epsilon = 1e-15);
        assert_relative_eq!(s_bar.norm(), 2.0 * a * k, epsilon = 1e-15);
        assert_eq!(g.antisymmetry_defect(), 0.0);
    }

    #[test]
    fn coulomb_energy_enters_p0() {
        let mut sys = back_to_back(1.0, 0.5, 0.3);
        sys.potential = PairPotential::Coulomb;
        sys.particles[0].charge = 2.0;
        sys.particles[1].charge = -1.0;
        let g = poincare_generators(&sys, S).unwrap();
        let kin = 2.0 * (1.0f64 + 0.09).sqrt();
        assert_relative_eq!(g.p.t(), kin + 2.0 * -1.0 / (4.0 * std::f64::consts::PI * 1.0), epsilon = 1e-15);
    }

    #[test]
    fn coincident_charges_are_singular() {
        let mut sys = back_to_back(1.0, 0.0, 0.3);
        sys.potential = PairPotential::Coulomb;
        assert_eq!(poincare_generators(&sys, S), Err(Error::SingularPotential { i: 0, j: 1 }));
    }

    #[test]
    fn energy_weighted_center() {
        // E₁ = 2 E₂ with m₁ = 2 m₂ at rest.
        let sys = ParticleSystem::free(
            vec![
                Particle::free(2.0, Vec3::new(1.0, 0.0, 0.0), Vec3::zeros()),
                Particle::free(1.0, Vec3::new(-1.0, 0.0, 0.0), Vec3::zeros()),
            ],
            1.0,
        );
        let g = poincare_generators(&sys, S).unwrap();
        let xe = center_of_energy(&g, 0.0).unwrap();
        assert_relative_eq!(xe.x, 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!((xe.y, xe.z), (0.0, 0.0));
    }

    #[test]
    fn non_timelike_momentum_is_rejected() {
        let g = PoincareGenerators { p: FourVector::new(1.0, 2.0, 0.0, 0.0), j: Mat4::zeros(), evaluation_time: 0.0, c: 1.0 };
        assert!(matches!(invariant_mass_spin(&g, S), Err(Error::Domain(_))));
        assert!(matches!(fokker_pryce_worldline(&g, S), Err(Error::Domain(_))));
    }

    #[test]
    fn single_particle_newton_wigner_is_back_propagated() {
        let (x0, t) = (Vec3::new(0.5, -1.0, 2.0), 1.7);
        let p = Particle::free(1.3, x0, Vec3::new(0.4, 0.2, -0.9));
        let sys = ParticleSystem { particles: vec![p], time: t, potential: PairPotential::None, c: 2.0 };
        let g = poincare_generators(&sys, S).unwrap();
        let (x_nw, z, _) = newton_wigner_and_jacobi(&g, S).unwrap();
        let expected = x0 - p.momentum / (p.energy(2.0) / 2.0) * t;
        assert!((x_nw - expected).amax() < 1e-13);
        assert_eq!(z, x_nw * invariant_mass_spin(&g, S).unwrap().0);
        let fp = fokker_pryce_worldline(&g, S).unwrap();
        assert!((fp.at_lab_time(t) - x0).amax() < 1e-13);
    }

    #[test]
    fn tube_identity_frame_distance() {
        let sys = back_to_back(1.0, 0.6, 0.5).transformed(
            &LorentzTransform::boost_rapidity(&Vec3::new(1.0, 0.0, 0.0), 0.8),
            &FourVector::zero(),
            0.0,
        );
        let sys = sys.unwrap();
        let rep = moller_tube_sample(&sys, 1, 0.0, 1, S).unwrap();
        let g = poincare_generators(&sys, S).unwrap();
        let expected =
            (center_of_energy(&g, 0.0).unwrap() - fokker_pryce_worldline(&g, S).unwrap().at_lab_time(0.0)).norm();
        assert_relative_eq!(rep.frames[0].distance, expected, epsilon = 1e-13);
        assert!(expected > 0.1 * rep.tube_radius);
    }

    #[test]
    fn spinless_tube_is_degenerate() {
        let sys = ParticleSystem::free(
            vec![
                Particle::free(1.0, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.5, 0.0, 0.0)),
                Particle::free(1.0, Vec3::new(-1.0, 0.0, 0.0), Vec3::new(0.5, 0.0, 0.0)),
            ],
            1.0,
        );
        let rep = moller_tube_sample(&sys, 20, 2.0, 3, S).unwrap();
        assert!(rep.max_distance < 1e-12);
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn jacobi_data_round_trip() {
        let sys = back_to_back(1.0, 0.4, 0.9)
            .transformed(&LorentzTransform::boost_rapidity(&Vec3::new(1.0, 2.0, -0.5), 1.2), &FourVector::new(0.0, 0.3, -0.7, 1.1), 0.0)
            .unwrap();
        let g = poincare_generators(&sys, S).unwrap();
        let t = center_triple(&g, S).unwrap();
        let rebuilt = generators_from_jacobi(t.mc, &t.h, &t.z, &t.s_bar, 1.0).unwrap();
        assert!((rebuilt.p - g.p).0.amax() < 1e-12);
        assert!((rebuilt.j - g.j).amax() < 1e-11);
    }

    #[test]
    fn tube_frames_are_reproducible() {
        let sys = back_to_back(1.0, 0.4, 0.9);
        let a = moller_tube_sample(&sys, 50, 3.0, 11, S).unwrap();
        let b = moller_tube_sample(&sys, 50, 3.0, 11, S).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.violations, 0);
    }
}
