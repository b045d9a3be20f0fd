use instantform::collective::*;
use instantform::minkowski::{FourVector, LorentzTransform, Signature, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const S: Signature = Signature::Particle;

fn random_system(rng: &mut ChaCha8Rng, n: usize, c: f64) -> ParticleSystem {
    let particles = (0..n)
        .map(|_| {
            Particle::free(
                rng.gen_range(0.5..2.0),
                Vec3::from_fn(|_, _| rng.gen_range(-2.0..2.0)),
                Vec3::from_fn(|_, _| rng.gen_range(-1.5..1.5)),
            )
        })
        .collect();
    ParticleSystem { particles, time: rng.gen_range(-1.0..1.0), potential: PairPotential::None, c }
}

fn random_boost(rng: &mut ChaCha8Rng, max_rapidity: f64) -> LorentzTransform {
    let dir = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    LorentzTransform::boost_rapidity(&dir, rng.gen_range(0.0..max_rapidity))
}

fn levi_civita4(idx: [usize; 4]) -> f64 {
    let mut sign = 1.0;
    let mut v = idx;
    for i in 0..4 {
        for j in i + 1..4 {
            if v[i] == v[j] {
                return 0.0;
            }
            if v[i] > v[j] {
                v.swap(i, j);
                sign = -sign;
            }
        }
    }
    sign
}

#[test]
fn pauli_lubanski_agrees_with_rest_spin() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let eta = Signature::Particle.metric();
    for _ in 0..50 {
        let g = poincare_generators(&random_system(&mut rng, 3, 1.0), S).unwrap();
        let (mc, _, s_bar) = invariant_mass_spin(&g, S).unwrap();
        let j_low = eta * g.j * eta;
        let p_low = eta * g.p.0;
        let mut w = [0.0; 4];
        for (mu, wm) in w.iter_mut().enumerate() {
            for nu in 0..4 {
                for rho in 0..4 {
                    for sig in 0..4 {
                        *wm += 0.5 * levi_civita4([mu, nu, rho, sig]) * j_low[(nu, rho)] * p_low[sig];
                    }
                }
            }
        }
        let w = FourVector::new(w[0], w[1], w[2], w[3]);
        let w2 = -w.dot_plus(&w);
        assert!((w2.sqrt() / mc - s_bar.norm()).abs() < 1e-10 * (1.0 + s_bar.norm()));
    }
}

#[test]
fn mass_and_spin_are_frame_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let sys = random_system(&mut rng, 2, 1.0);
        let (mc, _, s) = invariant_mass_spin(&poincare_generators(&sys, S).unwrap(), S).unwrap();
        for _ in 0..20 {
            let lambda = random_boost(&mut rng, 2.0);
            let a = FourVector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.3, -0.2);
            let moved = sys.transformed(&lambda, &a, rng.gen_range(-1.0..1.0)).unwrap();
            let (mc2, _, s2) = invariant_mass_spin(&poincare_generators(&moved, S).unwrap(), S).unwrap();
            assert!((mc2 - mc).abs() < 1e-9 * mc);
            assert!((s2.norm() - s.norm()).abs() < 1e-9 * (1.0 + s.norm()));
        }
    }
}

#[test]
fn generators_transform_as_tensors_under_snapshot_boosts() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sys = random_system(&mut rng, 3, 2.0);
    let g = poincare_generators(&sys, S).unwrap();
    let lambda = random_boost(&mut rng, 1.5);
    let a = FourVector::new(0.4, -0.1, 0.2, 0.9);
    let direct = poincare_generators(&sys.transformed(&lambda, &a, 0.7).unwrap(), S).unwrap();
    let tensor = g.transformed(&lambda, &a);
    assert!((direct.p - tensor.p).0.amax() < 1e-11);
    assert!((direct.j - tensor.j).amax() < 1e-10);
}

#[test]
fn free_generators_are_conserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let sys = random_system(&mut rng, 3, 1.5);
        let g0 = poincare_generators(&sys, S).unwrap();
        let g1 = poincare_generators(&sys.propagated_free(sys.time + 3.7), S).unwrap();
        assert!((g0.p - g1.p).0.amax() < 1e-10);
        assert!((g0.j - g1.j).amax() < 1e-10);
    }
}

#[test]
fn center_of_energy_moves_with_total_velocity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sys = random_system(&mut rng, 4, 1.0);
    let g = poincare_generators(&sys, S).unwrap();
    let h = 1e-3;
    let x_at = |t: f64| {
        let moved = sys.propagated_free(t);
        let num: Vec3 = moved.particles.iter().map(|p| p.position * p.energy(1.0)).sum();
        num / moved.total_energy()
    };
    let rate = (x_at(h) - x_at(-h)) / (2.0 * h);
    assert!((rate - g.p.spatial() / g.p.t()).amax() < 1e-9);
    for t in [-1.0, 0.0, 2.5] {
        assert!((center_of_energy(&g, t).unwrap() - x_at(t)).amax() < 1e-12);
    }
}

#[test]
fn centers_coincide_in_rest_frame() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let sys = random_system(&mut rng, 2, 1.0);
        let g = poincare_generators(&sys, S).unwrap();
        let (_, h, _) = invariant_mass_spin(&g, S).unwrap();
        let rest = sys.transformed(&LorentzTransform::boost_from_h(&(-h)), &FourVector::zero(), 0.0).unwrap();
        let gr = poincare_generators(&rest, S).unwrap();
        let t = center_triple(&gr, S).unwrap();
        let fp = t.fokker_pryce.at_lab_time(0.0);
        assert!(gr.p.spatial().amax() < 1e-12);
        assert!((t.x_e - fp).amax() < 1e-9);
        assert!((t.x_nw0 - fp).amax() < 1e-9);
    }
}

#[test]
fn spinless_centers_coincide_in_every_frame() {
    let sys = ParticleSystem::free(
        vec![
            Particle::free(1.0, Vec3::new(1.0, 2.0, 0.0), Vec3::new(0.5, 1.0, 0.0)),
            Particle::free(1.0, Vec3::new(-1.0, -2.0, 0.0), Vec3::new(0.5, 1.0, 0.0)),
        ],
        1.0,
    );
    let t = center_triple(&poincare_generators(&sys, S).unwrap(), S).unwrap();
    assert!(t.s_bar.norm() < 1e-14);
    assert!((t.x_e - t.fokker_pryce.at_lab_time(0.0)).amax() < 1e-13);
    assert!((t.x_e - t.x_nw0).amax() < 1e-13);
}

#[test]
fn fokker_pryce_line_is_frame_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sys = random_system(&mut rng, 2, 1.0);
    let fp = fokker_pryce_worldline(&poincare_generators(&sys, S).unwrap(), S).unwrap();
    for _ in 0..20 {
        let lambda = random_boost(&mut rng, 2.5);
        let moved = sys.transformed(&lambda, &FourVector::zero(), 0.0).unwrap();
        let fp2 = fokker_pryce_worldline(&poincare_generators(&moved, S).unwrap(), S).unwrap();
        let back = lambda.inverse();
        for tau in [-3.0, 0.0, 1.0, 4.0] {
            assert!(fp.transverse_distance(&back.apply(&fp2.at(tau))) < 1e-9);
        }
    }
}

#[test]
fn newton_wigner_between_energy_and_inertia_centers() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let sys = random_system(&mut rng, 2, 1.0);
        let g = poincare_generators(&sys, S).unwrap();
        let t = center_triple(&g, S).unwrap();
        let xe = center_of_energy(&g, 0.0).unwrap();
        let xfp = t.fokker_pryce.at_lab_time(0.0);
        let seg = xfp - xe;
        let rel = t.x_nw0 - xe;
        let frac = rel.dot(&seg) / seg.norm_squared();
        assert!((0.0..=1.0).contains(&frac));
        assert!((rel - seg * frac).norm() < 1e-12 * (1.0 + seg.norm()));
        assert!((t.x_nw0 - xfp).norm() <= t.tube_radius * (1.0 + 1e-12));
        assert_eq!(t.z, t.x_nw0 * t.mc);
    }
}

type Phase = Vec<(Vec3, Vec3)>;

fn nw_of(masses: &[f64], phase: &Phase, c: f64) -> (Vec3, Vec3) {
    let particles = masses.iter().zip(phase).map(|(&m, (x, p))| Particle::free(m, *x, *p)).collect();
    let g = poincare_generators(&ParticleSystem::free(particles, c), S).unwrap();
    (newton_wigner_and_jacobi(&g, S).unwrap().0, g.p.spatial())
}

/// Per particle: `(∂/∂x_i, ∂/∂p_i)`, each indexed `[f][q]` with `f = 0` for
/// `x_NW` and `f = 1` for `P`; fourth-order central differences.
type Grad = [[Vec3; 3]; 2];

fn gradients(masses: &[f64], phase: &Phase, c: f64, h: f64) -> Vec<(Grad, Grad)> {
    let mut out = Vec::new();
    for i in 0..phase.len() {
        let mut dx: Grad = [[Vec3::zeros(); 3]; 2];
        let mut dp: Grad = [[Vec3::zeros(); 3]; 2];
        for kind in 0..2 {
            for q in 0..3 {
                let eval = |d: f64| {
                    let mut ph = phase.clone();
                    if kind == 0 {
                        ph[i].0[q] += d;
                    } else {
                        ph[i].1[q] += d;
                    }
                    nw_of(masses, &ph, c)
                };
                let (a2, b2) = eval(2.0 * h);
                let (a1, b1) = eval(h);
                let (m1, n1) = eval(-h);
                let (m2, n2) = eval(-2.0 * h);
                let target = if kind == 0 { &mut dx } else { &mut dp };
                target[0][q] = (a1 * 8.0 - m1 * 8.0 - a2 + m2) / (12.0 * h);
                target[1][q] = (b1 * 8.0 - n1 * 8.0 - b2 + n2) / (12.0 * h);
            }
        }
        out.push((dx, dp));
    }
    out
}

#[test]
fn newton_wigner_brackets_are_canonical() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let sys = random_system(&mut rng, 2, 1.0);
        let masses: Vec<f64> = sys.particles.iter().map(|p| p.mass).collect();
        let phase: Phase = sys.particles.iter().map(|p| (p.position, p.momentum)).collect();
        let grads = gradients(&masses, &phase, 1.0, 1e-3);
        // {A^a, B^b} = Σ_i Σ_q ∂A^a/∂x_i^q ∂B^b/∂p_i^q − ∂A^a/∂p_i^q ∂B^b/∂x_i^q
        let bracket = |fa: usize, fb: usize, a: usize, b: usize| -> f64 {
            grads
                .iter()
                .map(|(dx, dp)| (0..3).map(|q| dx[fa][q][a] * dp[fb][q][b] - dp[fa][q][a] * dx[fb][q][b]).sum::<f64>())
                .sum()
        };
        for a in 0..3 {
            for b in 0..3 {
                worst = worst.max(bracket(0, 0, a, b).abs());
                let delta = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((bracket(0, 1, a, b) - delta).abs());
            }
        }
    }
    assert!(worst < 1e-8, "worst bracket defect {worst:e}");
}

#[test]
fn center_of_energy_is_not_covariant() {
    let sys = ParticleSystem::free(
        vec![
            Particle::free(1.0, Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0)),
            Particle::free(1.0, Vec3::new(0.0, -1.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)),
        ],
        1.0,
    );
    let g = poincare_generators(&sys, S).unwrap();
    let t = center_triple(&g, S).unwrap();
    let lambda = LorentzTransform::boost_rapidity(&Vec3::x(), 1.0);
    let x = mapped_back_center_of_energy(&g, &lambda).unwrap();
    let witness = t.fokker_pryce.transverse_distance(&x);
    assert!(witness > 1e-3 * t.tube_radius, "witness {witness}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tube_bound_holds(seed in any::<u64>(), rapidity in 0.0f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng, 2, 1.0);
        let rep = moller_tube_sample(&sys, 16, rapidity, seed, S).unwrap();
        prop_assert_eq!(rep.violations, 0);
        prop_assert!(rep.max_distance <= rep.tube_radius * (1.0 + 1e-6));
    }

    #[test]
    fn generators_are_antisymmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = poincare_generators(&random_system(&mut rng, 3, 1.0), S).unwrap();
        prop_assert_eq!(g.antisymmetry_defect(), 0.0);
        prop_assert!(g.p.t() > 0.0);
    }
}
