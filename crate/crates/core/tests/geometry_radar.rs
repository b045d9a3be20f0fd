use instantform::foliation::*;
use instantform::minkowski::{FourVector, LorentzTransform, Signature, Vec3};
use instantform::radar::*;
use proptest::prelude::*;

fn families() -> Vec<Embedding> {
    vec![
        identity_embedding(1.0),
        Embedding::new(TiltedHyperplanes { beta: 0.6, c: 1.0 }),
        make_rotating_embedding(RotationKind::Differential, 0.5, 1.0, 1.0).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lapse_shift_reproduce_the_induced_metric(
        tau in -3.0..3.0f64,
        x in -4.0..4.0f64, y in -4.0..4.0f64, z in -4.0..4.0f64,
        relativity in any::<bool>(),
    ) {
        let s = if relativity { Signature::Relativity } else { Signature::Particle };
        let sigma = Vec3::new(x, y, z);
        for e in families() {
            let g = induced_geometry(&e, tau, &sigma, s).unwrap();
            let rebuilt = g.reconstruct_metric(s).unwrap();
            prop_assert!((rebuilt - g.metric).amax() < 1e-8);
            prop_assert!((g.normal.dot_plus(&g.normal) - 1.0).abs() < 1e-8);
            prop_assert!(g.lapse > 0.0);
        }
    }

    #[test]
    fn chart_inversion_round_trips(
        tau in -2.0..2.0f64,
        x in -3.0..3.0f64, y in -3.0..3.0f64, z in -3.0..3.0f64,
        which in 0usize..3,
    ) {
        let e = &families()[which];
        let sigma = Vec3::new(x, y, z);
        let event = e.position(tau, &sigma);
        let guess = [tau + 0.3, x - 0.2, y + 0.1, z + 0.25];
        let q = radar_coordinates(e, &event, guess).unwrap();
        let want = [tau, x, y, z];
        for a in 0..4 {
            prop_assert!((q[a] - want[a]).abs() < 1e-8, "{q:?} vs {want:?}");
        }
    }

    #[test]
    fn inertial_radar_time_is_boosted_simultaneity(
        bx in -0.7..0.7f64, by in -0.5..0.5f64,
        t in -5.0..5.0f64, px in -5.0..5.0f64, py in -5.0..5.0f64, pz in -5.0..5.0f64,
    ) {
        let beta = Vec3::new(bx, by, 0.0);
        prop_assume!(beta.norm() < 0.85);
        let obs = InertialObserver { origin: FourVector::zero(), beta, c: 1.0, domain: (-80.0, 80.0) };
        let p = FourVector::new(t, px, py, pz);
        let r = einstein_sync(&obs, &p).unwrap();
        // time coordinate of p in the observer's rest frame
        let to_rest = LorentzTransform::boost_velocity(&beta).unwrap().inverse();
        let expected = to_rest.apply(&p).t();
        prop_assert!((r.tau_p - expected).abs() < 1e-10);
    }
}

#[test]
fn radar_time_survives_resampling_at_half_density() {
    let w = RindlerObserver { acceleration: 0.4, c: 1.0, domain: (-6.0, 6.0) };
    let dense = SampledWorldline::resample(&w, 4001).unwrap();
    let sparse = SampledWorldline::resample(&w, 2001).unwrap();
    for p in [FourVector::new(0.3, 3.0, 0.5, 0.0), FourVector::new(-1.0, 4.2, 0.0, 1.0), FourVector::new(1.5, 3.5, 0.0, 0.0)] {
        let a = einstein_sync(&dense, &p).unwrap().tau_p;
        let b = einstein_sync(&sparse, &p).unwrap().tau_p;
        let exact = einstein_sync(&w, &p).unwrap().tau_p;
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        assert!((a - exact).abs() < 1e-8);
    }
}

#[test]
fn inertial_simultaneity_surfaces_are_orthogonal_hyperplanes() {
    let beta = Vec3::new(0.3, -0.2, 0.4);
    let obs = InertialObserver { origin: FourVector::new(1.0, 0.5, 0.0, 0.0), beta, c: 1.0, domain: (-60.0, 60.0) };
    let u = obs.four_velocity();
    let anchor = obs.position(2.0);
    let spatial = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)];
    for (k, d) in spatial.iter().enumerate() {
        // a direction orthogonal to u: d − (u·d̂) u / u·u with d̂ = (0, d)
        let dh = FourVector::from_parts(0.0, *d);
        let ortho = dh - u * (u.dot_plus(&dh) / u.dot_plus(&u));
        for step in [1.5, -2.5] {
            let p = anchor + ortho * (step * (k + 1) as f64);
            let r = einstein_sync(&obs, &p).unwrap();
            assert!((r.tau_p - 2.0).abs() < 1e-10, "{}", r.tau_p);
        }
    }
}

#[test]
fn every_event_behind_the_rindler_horizon_has_no_solution() {
    use rand::{Rng, SeedableRng};
    let w = RindlerObserver { acceleration: 1.0, c: 1.0, domain: (-8.0, 8.0) };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let opts = SyncOptions { scan_points: 512 };
    for _ in 0..200 {
        let x1: f64 = rng.gen_range(-5.0..5.0);
        let t = x1.abs() + rng.gen_range(0.0..3.0);
        let t = if rng.gen_bool(0.5) { t } else { -t };
        let p = FourVector::new(t, x1, rng.gen_range(-1.0..1.0), 0.0);
        assert!(matches!(
            einstein_sync_with(&w, &p, &opts),
            Err(instantform::Error::NoSolution { .. })
        ));
    }
}

#[test]
fn identity_admissibility_is_grid_independent() {
    let e = identity_embedding(1.0);
    for n in [3, 5, 8] {
        let r = check_admissibility(&e, &GridSpec::cube(7.0, n, 2.0, 3), Signature::Particle).unwrap();
        assert!(r.passed);
    }
}

#[test]
fn extrinsic_curvature_of_warped_rotation_matches_projection_stencil() {
    let base = RotatingEmbedding { kind: RotationKind::Differential, omega: 0.4, r0: 1.0, c: 1.0 };
    let e = Embedding::new(WarpedRotating { base, amplitude: 0.3, width: 1.2 });
    let h = 1e-3;
    for (tau, sigma) in [(0.5, Vec3::new(0.3, -0.4, 0.2)), (1.2, Vec3::new(-0.7, 0.1, 0.5))] {
        let k = extrinsic_curvature(&e, tau, &sigma, Signature::Particle).unwrap();
        let l = induced_geometry(&e, tau, &sigma, Signature::Particle).unwrap().normal;
        for r in 0..3 {
            for s in 0..3 {
                let shift = |a: f64, b: f64| {
                    let mut q = sigma;
                    q[r] += a;
                    q[s] += b;
                    e.position(tau, &q)
                };
                let second = (shift(h, h) - shift(h, -h) - shift(-h, h) + shift(-h, -h)) * (1.0 / (4.0 * h * h));
                let oracle = -l.dot_plus(&second);
                assert!((k[(r, s)] - oracle).abs() < 1e-5, "K[{r}{s}] {} vs {oracle}", k[(r, s)]);
            }
        }
    }
}
