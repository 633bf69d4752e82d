use coherence_core::bloch::{
    entropy, entropy_rate, evolve, evolve_strided, from_density, purity, to_density, BlochState, DecoherenceRate,
    InternalField,
};
use coherence_core::gravity::{impact_rate, ImpactGeometry};
use coherence_core::smatrix::{decoherence_rate, random_state, random_unitary, CMatrix, ScatteringPair};
use coherence_core::zeno::{default_fit_start, fit_decay_rate, simulate_pz, zeno_prediction, DecayRun};
use nalgebra::Vector3;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit_ball() -> impl Strategy<Value = BlochState> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..1.0).prop_map(|(x, y, z, r)| {
        let v = Vector3::new(x, y, z);
        let v = if v.norm() < 1e-6 { Vector3::new(0.0, 0.0, 1.0) } else { v.normalize() };
        BlochState::from_vector(v * r).unwrap()
    })
}

fn field() -> impl Strategy<Value = Vector3<f64>> {
    (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0)
        .prop_filter("nonzero field", |(x, y, z)| (x * x + y * y + z * z).sqrt() > 0.1)
        .prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn purity_never_grows_under_damping(p0 in unit_ball(), v in field(), d in 0.01f64..3.0) {
        let dt = 0.05 / v.norm().max(d);
        let s = evolve(p0, &InternalField::Constant(v), DecoherenceRate::new(d).unwrap(), 10.0, dt).unwrap();
        let mut last = purity(&p0);
        for (_, p) in s.iter().skip(1) {
            let now = purity(p);
            prop_assert!(now <= last + 1e-12, "{now} > {last}");
            last = now;
        }
    }

    #[test]
    fn squared_norm_loss_matches_transverse_damping(p0 in unit_ball(), v in field(), d in 0.05f64..2.0) {
        let dt = 1e-3 / v.norm().max(d);
        let s = evolve(p0, &InternalField::Constant(v), DecoherenceRate::new(d).unwrap(), 200.0 * dt, dt).unwrap();
        let ps = s.samples();
        for k in [10usize, 100, 190] {
            let fd = (ps[k + 1].vector().norm_squared() - ps[k - 1].vector().norm_squared()) / (2.0 * dt);
            let exact = -2.0 * d * ps[k].transverse_norm_squared();
            if exact.abs() > 1e-6 {
                prop_assert!(((fd - exact) / exact).abs() < 1e-5, "{fd} vs {exact}");
            }
        }
    }

    #[test]
    fn entropy_rate_is_entropy_derivative(p0 in unit_ball(), v in field(), d in 0.05f64..2.0) {
        prop_assume!(p0.norm() > 0.05 && p0.norm() < 0.95);
        let dt = 1e-3 / v.norm().max(d);
        let dr = DecoherenceRate::new(d).unwrap();
        let s = evolve(p0, &InternalField::Constant(v), dr, 100.0 * dt, dt).unwrap();
        let ps = s.samples();
        for k in [5usize, 50, 95] {
            let fd = (entropy(&ps[k + 1]).unwrap() - entropy(&ps[k - 1]).unwrap()) / (2.0 * dt);
            let rate = entropy_rate(&ps[k], dr).unwrap();
            prop_assert!(rate >= 0.0);
            if rate > 1e-6 {
                prop_assert!(((fd - rate) / rate).abs() < 1e-4, "{fd} vs {rate}");
            }
        }
    }

    #[test]
    fn density_round_trip(p in unit_ball()) {
        let back = from_density(&to_density(&p)).unwrap();
        prop_assert!((back.vector() - p.vector()).norm() < 1e-12);
    }

    #[test]
    fn entropy_bounds_and_monotone(p in unit_ball(), shrink in 0.0f64..1.0) {
        let s = entropy(&p).unwrap();
        prop_assert!(s >= 0.0 && s <= std::f64::consts::LN_2 + 1e-15);
        let q = BlochState::from_vector(p.vector() * shrink).unwrap();
        prop_assert!(entropy(&q).unwrap() >= s - 1e-15);
    }

    #[test]
    fn scattering_deficit_properties(seed in any::<u64>(), n in 1usize..=8, phi in 0.1f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s1 = random_unitary(n, &mut rng);
        let s2 = random_unitary(n, &mut rng);
        let i = random_state(n, &mut rng);
        let d = decoherence_rate(&ScatteringPair::new(s1.clone(), s2.clone(), i.clone(), 1.0).unwrap());
        prop_assert!(d >= -1e-10);

        let u = random_unitary(n, &mut rng);
        let rot = |s: &CMatrix| &u * s * u.adjoint();
        let d_rot = decoherence_rate(&ScatteringPair::new(rot(&s1), rot(&s2), &u * &i, 1.0).unwrap());
        prop_assert!((d - d_rot).abs() < 1e-10);

        let e = Complex64::from_polar(1.0, phi);
        let d_common = decoherence_rate(&ScatteringPair::new(s1.clone() * e, s2.clone() * e, i.clone(), 1.0).unwrap());
        prop_assert!((d - d_common).abs() < 1e-10);
    }
}

#[test]
fn relative_phase_changes_deficit() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s1 = random_unitary(3, &mut rng);
    let i = random_state(3, &mut rng);
    let same = decoherence_rate(&ScatteringPair::new(s1.clone(), s1.clone(), i.clone(), 1.0).unwrap());
    let shifted = s1.clone() * Complex64::from_polar(1.0, 0.7);
    let d = decoherence_rate(&ScatteringPair::new(s1, shifted, i, 1.0).unwrap());
    assert!(same.abs() < 1e-12);
    assert!((d - (1.0 - 0.7f64.cos())).abs() < 1e-12, "{d}");
}

#[test]
fn norm_is_conserved_without_damping() {
    let p0 = BlochState::new(0.6, -0.3, 0.2).unwrap();
    let v = Vector3::new(0.3, 1.1, -0.4);
    let dt = 1e-3 / v.norm();
    let s = evolve_strided(p0, &InternalField::Constant(v), DecoherenceRate::ZERO, 1e6 * dt, dt, 10_000).unwrap();
    for (_, p) in s.iter() {
        assert!((p.norm() - p0.norm()).abs() <= 1e-9);
    }
}

#[test]
fn short_time_depletion_is_quadratic() {
    // p_z = cos(V t): 1 - p_z = (V t)^2 / 2 to leading order
    let v = 2.0;
    let dt = 1e-4;
    let p0 = BlochState::new(0.0, 0.0, 1.0).unwrap();
    let s = evolve(p0, &InternalField::constant(v, 0.0, 0.0), DecoherenceRate::ZERO, 0.025, dt).unwrap();
    for (t, p) in s.iter().skip(1) {
        let vt: f64 = v * t;
        let quad = vt * vt / 2.0;
        assert!(((1.0 - p.z()) - quad).abs() / quad < 0.01, "t = {t}");
    }
}

#[test]
fn zeno_agreement_band() {
    for ratio in [10.0, 30.0, 100.0, 300.0] {
        let d = DecoherenceRate::new(ratio).unwrap();
        let run = DecayRun::for_parameters(1.0, ratio);
        let series = simulate_pz(1.0, d, run).unwrap();
        let fit = fit_decay_rate(&series, default_fit_start(d)).unwrap();
        let pred = zeno_prediction(1.0, d).unwrap();
        let rel = (fit.rate - pred).abs() / pred;
        assert!(rel <= 2.0 / (ratio * ratio) + 0.005, "D = {ratio}: {rel}");
    }
}

#[test]
fn stronger_damping_relaxes_slower() {
    let mut last = f64::INFINITY;
    for ratio in [5.0, 10.0, 20.0, 50.0, 100.0] {
        let d = DecoherenceRate::new(ratio).unwrap();
        let series = simulate_pz(1.0, d, DecayRun::for_parameters(1.0, ratio)).unwrap();
        let rate = fit_decay_rate(&series, default_fit_start(d)).unwrap().rate;
        assert!(rate < last, "D = {ratio}");
        last = rate;
    }
}

#[test]
fn coupling_law_is_quadratic() {
    let geom = ImpactGeometry::with_cutoff(10.0).unwrap();
    let a = impact_rate(1.0, 0.0, 1e-4, &geom).unwrap() / 1e-8;
    let b = impact_rate(1.0, 0.0, 1e-3, &geom).unwrap() / 1e-6;
    assert!((a - b).abs() / a < 0.005, "{a} {b}");
    assert_eq!(impact_rate(1.0, 0.3, 0.3, &geom).unwrap(), 0.0);
}

#[test]
fn cutoff_slope() {
    let rate = |l: f64| impact_rate(1.0, 0.0, 1e-3, &ImpactGeometry::with_cutoff(l).unwrap()).unwrap();
    let slope = (rate(100.0) / rate(1.0)).ln() / 100f64.ln();
    assert!((1.9..=2.6).contains(&slope), "{slope}");
}
