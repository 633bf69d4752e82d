//! Strong-damping ("watched pot") regime of the damped precession.
//!
//! With a constant field `V` along `x` and the state starting along `z`, a
//! large decoherence rate `D` freezes `p_z`: it decays as `exp(-V^2 t / D)`,
//! so a larger `D` gives slower relaxation.

use nalgebra::Vector3;

use crate::bloch::{evolve_strided, BlochState, DecoherenceRate, InternalField};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Strong-damping decay rate `V^2 / D`.
pub fn zeno_prediction(v_mag: f64, d: DecoherenceRate) -> Result<f64> {
    if d.value() <= 0.0 {
        return Err(Error::InvalidParameter("zeno prediction needs D > 0".into()));
    }
    Ok(v_mag * v_mag / d.value())
}

/// Slowest decay rate of the linear system
/// `dPx = -D Px, dPy = V Pz - D Py, dPz = -V Py`, i.e.
/// `[D - sqrt(D^2 - 4V^2)] / 2`. Only defined on the overdamped branch
/// `D > 2|V|` (or `V = 0`).
pub fn exact_slow_rate(v_mag: f64, d: DecoherenceRate) -> Result<f64> {
    let d = d.value();
    let v = v_mag.abs();
    if v == 0.0 {
        return Ok(0.0);
    }
    if d <= 2.0 * v {
        return Err(Error::Branch(format!("D = {d} is not overdamped for |V| = {v} (need D > 2|V|)")));
    }
    // (D - sqrt(D^2 - 4V^2))/2 rewritten without cancellation
    Ok(2.0 * v * v / (d + (d * d - 4.0 * v * v).sqrt()))
}

/// Least-squares fit of `-ln y(t) = rate * t - intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    /// `ln y` extrapolated to `t = 0`.
    pub intercept: f64,
    /// RMS deviation of `ln y` from the fitted line.
    pub residual: f64,
    pub points: usize,
}

/// Fits an exponential decay to the samples with `t >= t_min`.
pub fn fit_decay_rate(series: &TimeSeries<f64>, t_min: f64) -> Result<DecayFit> {
    let window: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= t_min)
        .map(|(t, &y)| (t, y))
        .collect();
    if window.len() < 2 {
        return Err(Error::Domain(format!("fewer than two samples at t >= {t_min}")));
    }
    if let Some((t, y)) = window.iter().find(|(_, y)| !(*y > 0.0)) {
        return Err(Error::Domain(format!("non-positive sample {y} at t = {t}")));
    }
    let n = window.len() as f64;
    let mean_t = window.iter().map(|(t, _)| t).sum::<f64>() / n;
    let mean_l = window.iter().map(|(_, y)| y.ln()).sum::<f64>() / n;
    let (mut stt, mut stl) = (0.0, 0.0);
    for (t, y) in &window {
        let dt = t - mean_t;
        stt += dt * dt;
        stl += dt * (y.ln() - mean_l);
    }
    if stt == 0.0 {
        return Err(Error::Domain("fit window has zero time extent".into()));
    }
    let slope = stl / stt;
    let intercept = mean_l - slope * mean_t;
    let ss: f64 = window
        .iter()
        .map(|(t, y)| {
            let r = y.ln() - (intercept + slope * t);
            r * r
        })
        .sum();
    Ok(DecayFit {
        rate: -slope,
        intercept,
        residual: (ss / n).sqrt(),
        points: window.len(),
    })
}

/// Tunnelling probability factor `(omega_tunnel / E_split)^2`, capped at 1
/// once the levels are within a tunnelling energy of each other.
pub fn tunneling_suppression(omega_tunnel: f64, e_split: f64) -> f64 {
    if e_split.abs() <= omega_tunnel.abs() {
        return 1.0;
    }
    let r = omega_tunnel / e_split;
    r * r
}

/// Simulation settings for a single `p_z` decay run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRun {
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
}

impl DecayRun {
    /// Step at 5% of the stability limit; runs through the fast transient
    /// (`10/D`) plus three slow e-folds, keeping about 4000 samples.
    pub fn for_parameters(v_mag: f64, d: f64) -> Self {
        let rate = v_mag.abs().max(d);
        let dt = 0.05 / rate;
        let slow = if v_mag == 0.0 { 10.0 / d } else { 3.0 * d / (v_mag * v_mag) };
        let t_end = 10.0 / d + slow;
        let steps = (t_end / dt).round() as usize;
        let stride = (steps / 4000).max(1);
        Self { dt, t_end, stride }
    }
}

/// Starts at `p = (0, 0, 1)` with `V = (v_mag, 0, 0)` and returns `p_z(t)`.
pub fn simulate_pz(v_mag: f64, d: DecoherenceRate, run: DecayRun) -> Result<TimeSeries<f64>> {
    let p0 = BlochState::new(0.0, 0.0, 1.0)?;
    let field = InternalField::Constant(Vector3::new(v_mag, 0.0, 0.0));
    let series = evolve_strided(p0, &field, d, run.t_end, run.dt, run.stride)?;
    Ok(series.map(|p| p.z()))
}

/// Fit window start used when none is given: the fast mode has decayed by
/// `e^-10` after `10/D`.
pub fn default_fit_start(d: DecoherenceRate) -> f64 {
    10.0 / d.value()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanStatus {
    Ok,
    /// `0 < D <= 2|V|`: damped oscillation, no single decay rate.
    Underdamped,
    /// `D = 0`: undamped oscillation.
    Oscillatory,
}

impl ScanStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScanStatus::Ok => "ok",
            ScanStatus::Underdamped => "underdamped",
            ScanStatus::Oscillatory => "oscillatory",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub d: f64,
    pub v: f64,
    pub status: ScanStatus,
    pub fitted: Option<DecayFit>,
    pub predicted_rate: Option<f64>,
    pub exact_rate: Option<f64>,
}

impl ScanRow {
    /// `|fitted - predicted| / predicted`.
    pub fn relative_error(&self) -> Option<f64> {
        let fit = self.fitted?;
        let pred = self.predicted_rate?;
        Some((fit.rate - pred).abs() / pred)
    }
}

/// Fitted, strong-damping and exact slow rates for each `D`. Rows that are
/// not overdamped are flagged instead of failing the scan.
pub fn scan(v_mag: f64, d_values: &[f64]) -> Result<Vec<ScanRow>> {
    if d_values.is_empty() {
        return Err(Error::InvalidParameter("D list is empty".into()));
    }
    d_values
        .iter()
        .map(|&d_raw| {
            let d = DecoherenceRate::new(d_raw)?;
            let predicted_rate = zeno_prediction(v_mag, d).ok();
            if d_raw == 0.0 {
                return Ok(ScanRow {
                    d: d_raw,
                    v: v_mag,
                    status: ScanStatus::Oscillatory,
                    fitted: None,
                    predicted_rate,
                    exact_rate: None,
                });
            }
            let exact = match exact_slow_rate(v_mag, d) {
                Ok(r) => r,
                Err(Error::Branch(_)) => {
                    return Ok(ScanRow {
                        d: d_raw,
                        v: v_mag,
                        status: ScanStatus::Underdamped,
                        fitted: None,
                        predicted_rate,
                        exact_rate: None,
                    })
                }
                Err(e) => return Err(e),
            };
            let series = simulate_pz(v_mag, d, DecayRun::for_parameters(v_mag, d_raw))?;
            let fit = fit_decay_rate(&series, default_fit_start(d))?;
            Ok(ScanRow {
                d: d_raw,
                v: v_mag,
                status: ScanStatus::Ok,
                fitted: Some(fit),
                predicted_rate,
                exact_rate: Some(exact),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rate(d: f64) -> DecoherenceRate {
        DecoherenceRate::new(d).unwrap()
    }

    /// Slowest decay rate from the characteristic polynomial of the y-z
    /// block, `lambda^2 + D lambda + V^2 = 0`, solved by bisection.
    fn char_poly_oracle(v: f64, d: f64) -> f64 {
        let f = |l: f64| l * l + d * l + v * v;
        // root between -D/2 and 0
        let (mut lo, mut hi) = (-d / 2.0, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        -0.5 * (lo + hi)
    }

    #[test]
    fn prediction_examples() {
        assert_abs_diff_eq!(zeno_prediction(1.0, rate(100.0)).unwrap(), 0.01, epsilon = 1e-15);
        assert_eq!(zeno_prediction(0.0, rate(3.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(zeno_prediction(2.0, rate(50.0)).unwrap(), 0.08, epsilon = 1e-15);
        assert!(zeno_prediction(1.0, DecoherenceRate::ZERO).is_err());
    }

    #[test]
    fn exact_rate_examples() {
        let r = exact_slow_rate(1.0, rate(50.0)).unwrap();
        assert_abs_diff_eq!(r, char_poly_oracle(1.0, 50.0), epsilon = 1e-12);
        assert_abs_diff_eq!(r, 0.020008, epsilon = 1e-6);
        let r = exact_slow_rate(1.0, rate(1000.0)).unwrap();
        assert_abs_diff_eq!(r, char_poly_oracle(1.0, 1000.0), epsilon = 1e-14);
        assert_abs_diff_eq!(r, 0.001, epsilon = 5e-9);
        assert_eq!(exact_slow_rate(0.0, rate(5.0)).unwrap(), 0.0);
        assert!(matches!(exact_slow_rate(1.0, rate(1.5)), Err(Error::Branch(_))));
    }

    #[test]
    fn fit_recovers_exact_exponential() {
        let samples: Vec<f64> = (0..1000).map(|k| (-0.01 * k as f64 * 0.5).exp()).collect();
        let s = TimeSeries::new(0.0, 0.5, samples, vec![]).unwrap();
        let fit = fit_decay_rate(&s, 0.0).unwrap();
        assert_abs_diff_eq!(fit.rate, 0.01, epsilon = 1e-6);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_of_simulated_decay_matches_eigenvalue() {
        let d = rate(50.0);
        let series = simulate_pz(1.0, d, DecayRun::for_parameters(1.0, 50.0)).unwrap();
        let fit = fit_decay_rate(&series, default_fit_start(d)).unwrap();
        let exact = exact_slow_rate(1.0, d).unwrap();
        assert!((fit.rate - exact).abs() / exact < 0.005, "{} vs {}", fit.rate, exact);
    }

    #[test]
    fn undamped_oscillation_is_not_a_decay() {
        let run = DecayRun { dt: 1e-3, t_end: 1.4, stride: 10 };
        let series = simulate_pz(1.0, DecoherenceRate::ZERO, run).unwrap();
        let fit = fit_decay_rate(&series, 0.0).unwrap();
        assert!(fit.residual > 0.05, "residual {}", fit.residual);
        let long = DecayRun { dt: 1e-3, t_end: 5.0, stride: 10 };
        let series = simulate_pz(1.0, DecoherenceRate::ZERO, long).unwrap();
        assert!(matches!(fit_decay_rate(&series, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn suppression_examples() {
        assert_abs_diff_eq!(tunneling_suppression(1e-3, 1.0), 1e-6, epsilon = 1e-20);
        assert_eq!(tunneling_suppression(1.0, 1.0), 1.0);
        assert_eq!(tunneling_suppression(1e-3, 1e-3), 1.0);
        assert_eq!(tunneling_suppression(1e-3, 0.0), 1.0);
    }

    #[test]
    fn scan_flags_non_overdamped_rows() {
        let rows = scan(1.0, &[0.0, 1.0, 30.0]).unwrap();
        assert_eq!(rows[0].status, ScanStatus::Oscillatory);
        assert_eq!(rows[1].status, ScanStatus::Underdamped);
        assert_eq!(rows[2].status, ScanStatus::Ok);
        assert!(rows[2].relative_error().unwrap() < 0.02);
        assert!(scan(1.0, &[]).is_err());
    }
}
