use coherence_core::squid::{
    barrier_top, eigensystem, potential_derivative, stationary_points, Grid, NoiseModel, SquidParams, SquidSimulator,
    SweepProtocol,
};

#[test]
fn two_wells_one_barrier_at_degeneracy() {
    let p = SquidParams::reference();
    let sp = stationary_points(0.5, &p, 0.0, 1.0);
    assert_eq!((sp.minima.len(), sp.maxima.len()), (2, 1));
    // independent check: sign changes of u' on a plain scan
    let n = 100_000;
    let changes = (1..n)
        .filter(|&i| {
            let a = potential_derivative((i - 1) as f64 / n as f64 + 1e-9, 0.5, &p);
            let b = potential_derivative(i as f64 / n as f64 + 1e-9, 0.5, &p);
            a.signum() != b.signum()
        })
        .count();
    assert_eq!(changes, 3);
}

#[test]
fn doublets_are_split_far_less_than_wells_are_spaced() {
    let p = SquidParams::reference().with_levels(4);
    let s = eigensystem(0.5, &p, &Grid::default()).unwrap();
    let tunnel = s.energies[1] - s.energies[0];
    let spacing = s.energies[2] - s.energies[0];
    assert!(tunnel < 0.02 * spacing, "{tunnel} vs {spacing}");
}

#[test]
fn ground_state_localises_away_from_degeneracy() {
    let p = SquidParams::reference().with_levels(2);
    for x_e in [0.495, 0.505] {
        let s = eigensystem(x_e, &p, &Grid::default()).unwrap();
        let split = barrier_top(x_e, &p).unwrap();
        let right = s.weight_right_of(0, split);
        assert!(right.max(1.0 - right) >= 0.99, "x_e = {x_e}: {right}");
    }
}

#[test]
fn noisy_sweeps_conserve_norm_and_repeat_exactly() {
    let sim = SquidSimulator::reference(SquidParams::reference()).unwrap();
    let proto = SweepProtocol::with_default_range(800.0).unwrap();
    let noise = NoiseModel::new(3e-4, 99).unwrap();
    let a = sim.sweep(&proto, &noise, 8).unwrap();
    assert!(a.max_norm_drift < 1e-8);
    let b = sim.sweep(&proto, &noise, 8).unwrap();
    assert_eq!(a.inversion_probability.to_bits(), b.inversion_probability.to_bits());
    let c = sim.sweep(&proto, &NoiseModel { seed: 100, ..noise }, 8).unwrap();
    assert_ne!(a.per_trajectory, c.per_trajectory);
}
