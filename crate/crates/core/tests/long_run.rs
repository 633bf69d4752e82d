//! Full-scale inversion curve with 1/D = 39 000 time units. Slow; run with
//! `cargo test -p coherence-core --test long_run -- --ignored --nocapture`.

use coherence_core::squid::{CalibrationSettings, SquidParams, SquidSimulator, SweepProtocol};

#[test]
#[ignore]
fn inversion_degrades_beyond_decoherence_time() {
    let inverse_d = 39_000.0;
    let sim = SquidSimulator::reference(SquidParams::reference()).unwrap();
    let cal = sim.calibrate(inverse_d, 7, &CalibrationSettings::default()).unwrap();
    assert!(cal.relative_error() <= 0.05);
    let mut curve = Vec::new();
    for m in [0.1, 0.5, 1.0, 2.0, 5.0] {
        let out = sim
            .sweep(&SweepProtocol::with_default_range(m * inverse_d).unwrap(), &cal.noise, 200)
            .unwrap();
        println!("t_sweep = {m}/D: {:.3} +- {:.3}", out.inversion_probability, out.uncertainty);
        curve.push((out.inversion_probability, out.uncertainty));
    }
    assert!(curve[0].0 >= 0.9);
    for w in curve.windows(2) {
        assert!(w[1].0 <= w[0].0 + 2.0 * w[0].1.hypot(w[1].1));
    }
    assert!(curve[0].0 - curve[4].0 >= 0.2);
}
