use coherence_core::series::csv_row;
use coherence_core::squid::{
    CalibrationSettings, Grid, NoiseModel, SimulationSettings, SquidParams, SquidSimulator, SweepProtocol,
    DEFAULT_SWEEP_END, DEFAULT_SWEEP_START,
};
use serde::{Deserialize, Serialize};

use super::{csv_with_config, default_seed, json_with_config, num, report, Context};
use crate::error::CliError;

pub const HEADER: [&str; 5] = ["t_sweep", "inversion_probability", "uncertainty", "n_traj", "seed"];

/// Decoherence time of the full-scale run, in units of `sqrt(LC)`.
pub const LONG_RUN_INVERSE_D: f64 = 39_000.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SquidConfig {
    pub beta: f64,
    pub inductance: f64,
    pub capacitance: f64,
    pub n_levels: usize,
    pub x_start: f64,
    pub x_end: f64,
    /// Target decoherence time `1/D` in units of `sqrt(LC)`.
    pub inverse_d: f64,
    /// Sweep durations in units of `1/D`.
    pub sweep_times: Vec<f64>,
    pub n_trajectories: usize,
    pub dt: f64,
    pub grid_points: usize,
    /// Fixed noise amplitude; calibrated against `inverse_d` when absent.
    pub noise_amplitude: Option<f64>,
    pub calibration_trajectories: usize,
    /// Also write the reversed-flux probability of every trajectory.
    pub per_trajectory: bool,
    pub seed: u64,
}

impl Default for SquidConfig {
    fn default() -> Self {
        let p = SquidParams::reference();
        Self {
            beta: p.beta,
            inductance: p.inductance,
            capacitance: p.capacitance,
            n_levels: p.n_levels,
            x_start: DEFAULT_SWEEP_START,
            x_end: DEFAULT_SWEEP_END,
            inverse_d: 5_000.0,
            sweep_times: vec![0.1, 0.5, 1.0, 2.0, 5.0],
            n_trajectories: 200,
            dt: 1.0,
            grid_points: Grid::default().points,
            noise_amplitude: None,
            calibration_trajectories: CalibrationSettings::default().trajectories,
            per_trajectory: false,
            seed: default_seed(),
        }
    }
}

#[derive(Serialize)]
struct CalibrationRecord {
    noise_amplitude: f64,
    calibrated: bool,
    target_rate: f64,
    fitted_rate: Option<f64>,
    g: f64,
    time_unit_seconds: f64,
    tunnel_splitting: f64,
    truncation_warnings: Vec<f64>,
}

pub fn run(config: &SquidConfig, ctx: &Context) -> Result<(), CliError> {
    if config.sweep_times.is_empty() {
        return Err(CliError::Usage("sweep_times must not be empty".into()));
    }
    if config.n_trajectories == 0 {
        return Err(CliError::Usage("n_trajectories must be >= 1".into()));
    }
    let params = SquidParams::new(config.beta, config.inductance, config.capacitance, config.n_levels)?;
    let grid = Grid { points: config.grid_points, ..Grid::default() };
    let sim = SquidSimulator::new(params, SimulationSettings { grid, dt: config.dt, basis_size: None })?;

    let (noise, fitted) = match config.noise_amplitude {
        Some(a) => (NoiseModel::new(a, config.seed)?, None),
        None => {
            let settings = CalibrationSettings { trajectories: config.calibration_trajectories, ..Default::default() };
            let cal = sim.calibrate(config.inverse_d, config.seed, &settings)?;
            eprintln!(
                "calibrated amplitude {:.6e}: fitted 1/D = {:.1}",
                cal.noise.amplitude,
                1.0 / cal.fitted_rate
            );
            (cal.noise, Some(cal.fitted_rate))
        }
    };

    let mut out = csv_with_config(config, &HEADER);
    let mut debug = csv_with_config(config, &["t_sweep", "trajectory", "reversed_probability"]);
    let mut warnings = Vec::new();
    for &m in &config.sweep_times {
        let t_sweep = m * config.inverse_d;
        let protocol = SweepProtocol::new(config.x_start, config.x_end, t_sweep)?;
        let result = sim.sweep(&protocol, &noise, config.n_trajectories)?;
        if result.truncation_warning {
            eprintln!(
                "warning: top level reaches population {:.3} at t_sweep = {t_sweep}; consider more levels",
                result.max_top_level_population
            );
            warnings.push(t_sweep);
        }
        out.push_str(&csv_row([
            num(t_sweep),
            num(result.inversion_probability),
            num(result.uncertainty),
            result.n_trajectories.to_string(),
            result.seed.to_string(),
        ]));
        for (i, p) in result.per_trajectory.iter().enumerate() {
            debug.push_str(&csv_row([num(t_sweep), i.to_string(), num(*p)]));
        }
        println!(
            "t_sweep = {t_sweep}: inversion {:.4} +- {:.4}",
            result.inversion_probability, result.uncertainty
        );
    }
    report(&ctx.write("squid.csv", &out)?);
    if config.per_trajectory {
        report(&ctx.write("squid_trajectories.csv", &debug)?);
    }
    let record = CalibrationRecord {
        noise_amplitude: noise.amplitude,
        calibrated: fitted.is_some(),
        target_rate: 1.0 / config.inverse_d,
        fitted_rate: fitted,
        g: params.g(),
        time_unit_seconds: params.time_unit(),
        tunnel_splitting: sim.tunnel_splitting(),
        truncation_warnings: warnings,
    };
    report(&ctx.write("squid_calibration.json", &json_with_config(config, &record))?);
    Ok(())
}
