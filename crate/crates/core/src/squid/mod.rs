//! rf-SQUID double well and noisy adiabatic flux sweeps.
//!
//! The flux `x` through the ring (units of the flux quantum) obeys the
//! Schrödinger equation with
//!
//! ```text
//! h = -(g/2) d^2/dx^2 + u(x),
//! u(x) = (x - x_e)^2 / (2g) - beta / (4 pi^2 g) * cos(2 pi x),
//! ```
//!
//! energies in units of `hbar / sqrt(LC)` and times in units of `sqrt(LC)`.
//! `g = (hbar / Phi_0^2) sqrt(L / C)` measures how quantum the circuit is.
//! For `beta > 1` and external flux `x_e` near 1/2 the potential is a double
//! well whose two minima carry opposite circulating currents.
//!
//! Sweeping `x_e` through 1/2 slowly enough carries the ground state from
//! one well to the other (adiabatic inversion). Flux noise added to `x_e`
//! dephases the two wells and spoils the inversion for sweeps longer than
//! the decoherence time `1/D`.

mod calibrate;
mod potential;
mod spectrum;
mod sweep;

pub use calibrate::{calibrate_noise, CalibratedNoise, CalibrationSettings};
pub use potential::{barrier_top, potential, potential_derivative, stationary_points, StationaryPoints};
pub use spectrum::{eigensystem, lowest_states, Grid, SpectrumSnapshot, CONVERGENCE_TOLERANCE};
pub use sweep::{adiabatic_sweep, SimulationSettings, SquidSimulator, SweepOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planck constant (J s), exact in SI.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Elementary charge (C), exact in SI.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant (J/K), exact in SI.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
/// Superconducting flux quantum `h / 2e` (Wb).
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

/// Default sweep endpoints: `x_e` crosses the degeneracy point 1/2
/// symmetrically, spanning roughly twelve tunnel splittings of bias for the
/// reference circuit while staying well inside the bistable range.
pub const DEFAULT_SWEEP_START: f64 = 0.49986;
pub const DEFAULT_SWEEP_END: f64 = 0.50014;

/// Circuit parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquidParams {
    /// `2 pi L I_c / Phi_0`.
    pub beta: f64,
    /// Henries.
    pub inductance: f64,
    /// Farads.
    pub capacitance: f64,
    /// Instantaneous levels kept in the sweep dynamics.
    pub n_levels: usize,
}

impl SquidParams {
    pub fn new(beta: f64, inductance: f64, capacitance: f64, n_levels: usize) -> Result<Self> {
        let p = Self { beta, inductance, capacitance, n_levels };
        p.validate()?;
        Ok(p)
    }

    /// beta = 1.19, L = 400 pH, C = 0.1 pF, eight levels.
    pub fn reference() -> Self {
        Self { beta: 1.19, inductance: 400e-12, capacitance: 0.1e-12, n_levels: 8 }
    }

    pub fn with_levels(mut self, n_levels: usize) -> Self {
        self.n_levels = n_levels;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta = {} gives no double well (need beta > 1)",
                self.beta
            )));
        }
        if !(self.inductance > 0.0 && self.capacitance > 0.0) {
            return Err(Error::InvalidParameter("inductance and capacitance must be > 0".into()));
        }
        if self.n_levels < 2 {
            return Err(Error::InvalidParameter("need at least two levels".into()));
        }
        Ok(())
    }

    /// `(hbar / Phi_0^2) sqrt(L / C)`.
    pub fn g(&self) -> f64 {
        HBAR / (FLUX_QUANTUM * FLUX_QUANTUM) * (self.inductance / self.capacitance).sqrt()
    }

    /// `sqrt(LC)` in seconds.
    pub fn time_unit(&self) -> f64 {
        (self.inductance * self.capacitance).sqrt()
    }

    /// Potential parameters without the `beta > 1` requirement, for limits
    /// such as the harmonic oscillator.
    #[cfg(test)]
    pub(crate) fn unchecked(beta: f64, inductance: f64, capacitance: f64, n_levels: usize) -> Self {
        Self { beta, inductance, capacitance, n_levels }
    }
}

/// Linear ramp of the external flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepProtocol {
    pub x_start: f64,
    pub x_end: f64,
    /// Duration in units of `sqrt(LC)`.
    pub t_sweep: f64,
}

impl SweepProtocol {
    pub fn new(x_start: f64, x_end: f64, t_sweep: f64) -> Result<Self> {
        if !(t_sweep > 0.0 && t_sweep.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_sweep must be > 0, got {t_sweep}")));
        }
        if !(x_start.is_finite() && x_end.is_finite()) {
            return Err(Error::InvalidParameter("sweep endpoints must be finite".into()));
        }
        Ok(Self { x_start, x_end, t_sweep })
    }

    pub fn with_default_range(t_sweep: f64) -> Result<Self> {
        Self::new(DEFAULT_SWEEP_START, DEFAULT_SWEEP_END, t_sweep)
    }

    pub fn flux_at(&self, t: f64) -> f64 {
        self.x_start + (self.x_end - self.x_start) * (t / self.t_sweep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Gaussian white noise added to the external flux, sampled once per
    /// integrator step.
    WhiteFlux,
}

/// Flux noise with `<eta(t) eta(t')> = amplitude^2 delta(t - t')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Flux quanta per square root of a time unit.
    pub amplitude: f64,
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(amplitude: f64, seed: u64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise amplitude must be >= 0, got {amplitude}")));
        }
        Ok(Self { amplitude, kind: NoiseKind::WhiteFlux, seed })
    }

    pub fn silent() -> Self {
        Self { amplitude: 0.0, kind: NoiseKind::WhiteFlux, seed: 0 }
    }
}

/// `D = k_B T / (e^2 R)` in 1/s.
pub fn estimate_d_from_temperature(temperature: f64, resistance: f64) -> Result<f64> {
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidParameter(format!("temperature must be >= 0, got {temperature}")));
    }
    if !(resistance > 0.0) {
        return Err(Error::InvalidParameter(format!("resistance must be > 0, got {resistance}")));
    }
    Ok(BOLTZMANN * temperature / (ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * resistance))
}
