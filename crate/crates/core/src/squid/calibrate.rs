//! Matching the flux-noise amplitude to a target decoherence rate.
//!
//! At the degeneracy point the ground state is the even superposition of the
//! two localised flux states. White flux noise couples through the position
//! operator, which in the lowest doublet is diagonal in the flux basis, so it
//! leaves the populations of the two wells alone and damps their coherence
//! `rho_LR`. For a two-level reduction the damping is exponential with rate
//! `D = 2 x01^2 A^2 / g^2`, `x01 = <0|x|1>`. The measured rate of the full
//! truncated model is matched to the target by bisection in `A`, reusing the
//! same random numbers for every candidate so the response is a smooth
//! function of the amplitude.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::{chunk_ranges, trajectory_rngs, Ensemble, SquidSimulator};
use super::{NoiseModel, SquidParams};
use crate::error::{Error, Result};
use crate::series::TimeSeries;
use crate::zeno::fit_decay_rate;

/// Coherence values below this are too noisy to enter the fit.
const COHERENCE_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSettings {
    pub trajectories: usize,
    /// Observation window in units of the target `1/D`.
    pub window: f64,
    /// Samples of the coherence entering the fit.
    pub samples: usize,
    /// Relative rate mismatch at which the bisection stops.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self { trajectories: 512, window: 0.5, samples: 50, tolerance: 0.01, max_iterations: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedNoise {
    pub noise: NoiseModel,
    pub target_rate: f64,
    pub fitted_rate: f64,
    pub evaluations: usize,
}

impl CalibratedNoise {
    pub fn relative_error(&self) -> f64 {
        (self.fitted_rate - self.target_rate).abs() / self.target_rate
    }
}

impl SquidSimulator {
    /// Ensemble coherence `2 |rho_LR(t)|` of the lowest doublet at the
    /// degeneracy point, starting from the ground state.
    pub fn coherence_decay(
        &self,
        amplitude: f64,
        seed: u64,
        duration: f64,
        samples: usize,
        trajectories: usize,
    ) -> Result<TimeSeries<f64>> {
        if !(duration > 0.0) || samples < 2 || trajectories == 0 {
            return Err(Error::InvalidParameter("need duration > 0, >= 2 samples, >= 1 trajectory".into()));
        }
        let dt = self.settings().dt;
        let stride = ((duration / dt / samples as f64).ceil() as usize).max(1);
        let h = duration / (stride * samples) as f64;

        let frame = self.frame(0.5, None);
        let n = self.params().n_levels;
        let b = self.right_projector(0.5);
        let b01 = (b * frame.vectors.column(1)).dot(&frame.vectors.column(0));
        let s = if b01 >= 0.0 { 1.0 } else { -1.0 };
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let mut right = DVector::zeros(n);
        let mut left = DVector::zeros(n);
        right[0] = inv;
        right[1] = s * inv;
        left[0] = inv;
        left[1] = -s * inv;

        let x = self.frame_coupling(&frame);
        let kick = x.symmetric_eigen();
        let scale = amplitude * h.sqrt() / self.params().g();
        let g0 = DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });

        let chunks = chunk_ranges(trajectories, rayon::current_num_threads());
        let partial: Vec<Vec<(f64, f64)>> = chunks
            .par_iter()
            .map(|range| {
                let mut rngs = trajectory_rngs(seed, range.clone());
                let mut ens = Ensemble::from_state(&g0, range.len());
                let mut eta = vec![0.0; range.len()];
                let mut out = Vec::with_capacity(samples + 1);
                out.push(lr_sum(&ens, &left, &right));
                for _ in 0..samples {
                    for _ in 0..stride {
                        ens.phase(&frame.energies, -0.5 * h);
                        if amplitude > 0.0 {
                            for (e, rng) in eta.iter_mut().zip(rngs.iter_mut()) {
                                let xi: f64 = rng.sample(StandardNormal);
                                *e = scale * xi;
                            }
                            ens.kick(&kick.eigenvectors, &kick.eigenvalues, &eta);
                        }
                        ens.phase(&frame.energies, -0.5 * h);
                    }
                    out.push(lr_sum(&ens, &left, &right));
                }
                out
            })
            .collect();
        let total = trajectories as f64;
        let coherence: Vec<f64> = (0..=samples)
            .map(|k| {
                let (re, im) = partial.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p[k].0, acc.1 + p[k].1));
                2.0 * (re / total).hypot(im / total)
            })
            .collect();
        TimeSeries::new(0.0, stride as f64 * h, coherence, vec!["coherence".into()])
    }

    /// Fitted exponential decay rate of [`coherence_decay`].
    ///
    /// [`coherence_decay`]: SquidSimulator::coherence_decay
    pub fn dephasing_rate(&self, amplitude: f64, seed: u64, duration: f64, settings: &CalibrationSettings) -> Result<f64> {
        let series = self.coherence_decay(amplitude, seed, duration, settings.samples, settings.trajectories)?;
        let keep = series.samples().iter().take_while(|c| **c > COHERENCE_FLOOR).count();
        if keep < 3 {
            return Err(Error::Calibration(format!("coherence collapses within two samples at amplitude {amplitude}")));
        }
        let trimmed = TimeSeries::new(0.0, series.dt(), series.samples()[..keep].to_vec(), vec![])?;
        Ok(fit_decay_rate(&trimmed, 0.0)?.rate)
    }

    /// Two-level estimate of the amplitude giving rate `d`.
    pub fn two_level_amplitude(&self, d: f64) -> f64 {
        self.params().g() * (d / 2.0).sqrt() / self.doublet_dipole()
    }

    /// Bisects the noise amplitude until the measured dephasing rate matches
    /// `1 / target_inverse_d`.
    pub fn calibrate(&self, target_inverse_d: f64, seed: u64, settings: &CalibrationSettings) -> Result<CalibratedNoise> {
        if !(target_inverse_d > 0.0 && target_inverse_d.is_finite()) {
            return Err(Error::InvalidParameter(format!("target 1/D must be > 0, got {target_inverse_d}")));
        }
        if !(settings.tolerance > 0.0 && settings.tolerance <= 0.05) {
            return Err(Error::InvalidParameter("calibration tolerance must lie in (0, 0.05]".into()));
        }
        let target = 1.0 / target_inverse_d;
        let duration = settings.window * target_inverse_d;
        let mut evaluations = 0;
        let mut rate = |a: f64| {
            evaluations += 1;
            self.dephasing_rate(a, seed, duration, settings)
        };

        let guess = self.two_level_amplitude(target);
        let (mut lo, mut hi) = (0.5 * guess, 2.0 * guess);
        let (mut r_lo, mut r_hi) = (rate(lo)?, rate(hi)?);
        let mut expansions = 0;
        while r_lo > target || r_hi < target {
            expansions += 1;
            if expansions > 10 {
                return Err(Error::Calibration(format!("could not bracket the target rate {target:.3e}")));
            }
            if r_lo > target {
                hi = lo;
                r_hi = r_lo;
                lo *= 0.5;
                r_lo = rate(lo)?;
            } else {
                lo = hi;
                r_lo = r_hi;
                hi *= 2.0;
                r_hi = rate(hi)?;
            }
        }
        if r_lo > r_hi {
            return Err(Error::Calibration("dephasing rate decreases with noise amplitude".into()));
        }
        for _ in 0..settings.max_iterations {
            let mid = 0.5 * (lo + hi);
            let r = rate(mid)?;
            if r < r_lo || r > r_hi {
                return Err(Error::Calibration(format!(
                    "non-monotone response: rate {r:.4e} at amplitude {mid:.4e} outside [{r_lo:.4e}, {r_hi:.4e}]"
                )));
            }
            if (r - target).abs() <= settings.tolerance * target {
                let noise = NoiseModel::new(mid, seed)?;
                return Ok(CalibratedNoise { noise, target_rate: target, fitted_rate: r, evaluations });
            }
            if r < target {
                lo = mid;
                r_lo = r;
            } else {
                hi = mid;
                r_hi = r;
            }
        }
        Err(Error::Calibration(format!(
            "no amplitude within {} of the target after {} bisections",
            settings.tolerance, settings.max_iterations
        )))
    }
}

/// Calibrated white flux noise for `params` with default simulation and
/// calibration settings.
pub fn calibrate_noise(params: &SquidParams, target_inverse_d: f64, seed: u64) -> Result<NoiseModel> {
    let sim = SquidSimulator::reference(*params)?;
    Ok(sim.calibrate(target_inverse_d, seed, &CalibrationSettings::default())?.noise)
}

/// Sum over the ensemble of `<L|psi><psi|R>`.
fn lr_sum(ens: &Ensemble, left: &DVector<f64>, right: &DVector<f64>) -> (f64, f64) {
    let (mut re, mut im) = (0.0, 0.0);
    for j in 0..ens.re.ncols() {
        let (lr, li) = (left.dot(&ens.re.column(j)), left.dot(&ens.im.column(j)));
        let (rr, ri) = (right.dot(&ens.re.column(j)), right.dot(&ens.im.column(j)));
        re += lr * rr + li * ri;
        im += li * rr - lr * ri;
    }
    (re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim() -> SquidSimulator {
        SquidSimulator::reference(SquidParams::reference()).unwrap()
    }

    #[test]
    fn silent_noise_keeps_coherence() {
        let s = sim();
        let c = s.coherence_decay(0.0, 1, 500.0, 10, 4).unwrap();
        for v in c.samples() {
            assert!((v - 1.0).abs() < 1e-10, "{v}");
        }
        let r = s.dephasing_rate(0.0, 1, 500.0, &CalibrationSettings::default()).unwrap();
        assert!(r.abs() < 1e-10);
    }

    #[test]
    fn rate_is_quadratic_in_amplitude() {
        let s = sim();
        let settings = CalibrationSettings { trajectories: 256, ..Default::default() };
        let a = s.two_level_amplitude(1.0 / 20_000.0);
        let r1 = s.dephasing_rate(a, 5, 8000.0, &settings).unwrap();
        let r2 = s.dephasing_rate(2.0 * a, 5, 2000.0, &settings).unwrap();
        assert!((r2 / r1 - 4.0).abs() < 0.4, "{r1} {r2}");
        // two-level golden rule
        assert!((r1 * 20_000.0 - 1.0).abs() < 0.15, "{r1}");
    }

    #[test]
    fn calibration_hits_target() {
        let s = sim();
        let settings = CalibrationSettings { trajectories: 128, ..Default::default() };
        let c = s.calibrate(2000.0, 3, &settings).unwrap();
        assert!(c.relative_error() <= 0.05);
        assert!(s.calibrate(0.0, 3, &settings).is_err());
        assert!(s.calibrate(-1.0, 3, &settings).is_err());
    }
}
