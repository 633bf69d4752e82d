//! Gravitational decoherence of a two-mass clock.
//!
//! Each clock component scatters an environment particle like a Coulomb
//! centre whose "charge" is its mass. In the eikonal picture a particle at
//! impact parameter `b` picks up the phase
//!
//! ```text
//! delta(b) = 2 alpha * integral_0^l_max dl / sqrt(l^2 + b^2)
//!          = 2 alpha * asinh(l_max / b)
//! ```
//!
//! with `alpha = G E M / v`. The two components differ by `delta_alpha`, and
//! the decoherence rate integrates the per-`b` unitarity deficit
//! `1 - cos(2 (delta_2 - delta_1))` over the transverse plane.
//!
//! Natural units (`hbar = c = 1`); thermal estimates use Planck units.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Impact parameters below `l_max * LOWER_B_FRACTION` are dropped when
/// `b_min = 0`; the integrand there is `O(b^2 ln^2 b)`.
const LOWER_B_FRACTION: f64 = 1e-15;
/// Relative agreement required between successive quadrature refinements.
pub const QUADRATURE_TOLERANCE: f64 = 1e-7;
const MAX_REFINEMENTS: u32 = 22;
/// `delta_alpha` above which the lowest-order estimate is flagged.
pub const SMALL_COUPLING_LIMIT: f64 = 0.01;
/// Default `|2 delta_delta|` at which a single passage counts as decohering.
pub const DEFAULT_DECOHERENCE_THRESHOLD: f64 = 1.0;

/// Eikonal strength `alpha = G E M / v` (dimensionless).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravitationalCoupling {
    pub alpha: f64,
}

impl GravitationalCoupling {
    /// `G E M / v`.
    pub fn new(newton_g: f64, energy: f64, mass: f64, speed: f64) -> Result<Self> {
        let alpha = newton_g * energy * mass / speed;
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter("coupling is not finite".into()));
        }
        Ok(Self { alpha })
    }

    /// `delta_alpha = G (M1 - M2) E / v`.
    pub fn difference(newton_g: f64, delta_mass: f64, energy: f64, speed: f64) -> Result<f64> {
        Ok(Self::new(newton_g, energy, delta_mass, speed)?.alpha)
    }
}

/// Integration region in the transverse plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactGeometry {
    pub l_max: f64,
    pub b_min: f64,
    /// Panels in the first quadrature pass; refined by doubling.
    pub n_points: usize,
}

impl ImpactGeometry {
    pub fn new(l_max: f64, b_min: f64, n_points: usize) -> Result<Self> {
        if !(l_max > 0.0 && l_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("l_max must be > 0, got {l_max}")));
        }
        if !(b_min >= 0.0 && b_min < l_max) {
            return Err(Error::InvalidParameter(format!("need 0 <= b_min < l_max, got b_min = {b_min}")));
        }
        if n_points < 2 {
            return Err(Error::InvalidParameter("need at least 2 quadrature panels".into()));
        }
        Ok(Self { l_max, b_min, n_points })
    }

    pub fn with_cutoff(l_max: f64) -> Result<Self> {
        Self::new(l_max, 0.0, 256)
    }
}

/// `delta(b) = 2 alpha ln[(l_max + sqrt(l_max^2 + b^2)) / b]`.
pub fn eikonal_phase(b: f64, alpha: f64, l_max: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::Domain(format!("impact parameter must be > 0, got {b}")));
    }
    if !(l_max > 0.0) {
        return Err(Error::InvalidParameter(format!("l_max must be > 0, got {l_max}")));
    }
    Ok(2.0 * alpha * (l_max / b).asinh())
}

/// `1 - cos(2 x)` without cancellation for small `x`.
fn one_minus_cos_double(x: f64) -> f64 {
    let s = x.sin();
    2.0 * s * s
}

/// `D = flux * integral 2 pi b db (1 - cos 2(delta_2(b) - delta_1(b)))`
/// over `[b_min, l_max]`, by composite Simpson in `u = ln b`.
pub fn impact_rate(flux: f64, alpha1: f64, alpha2: f64, geom: &ImpactGeometry) -> Result<f64> {
    let delta_alpha = alpha2 - alpha1;
    if delta_alpha == 0.0 || flux == 0.0 {
        return Ok(0.0);
    }
    let l = geom.l_max;
    let b_lo = if geom.b_min > 0.0 { geom.b_min } else { l * LOWER_B_FRACTION };
    let (u0, u1) = (b_lo.ln(), l.ln());
    let integrand = |u: f64| {
        let b = u.exp();
        let dd = 2.0 * delta_alpha * (l / b).asinh();
        2.0 * PI * b * b * one_minus_cos_double(dd)
    };
    let mut panels = geom.n_points + geom.n_points % 2;
    let mut previous = simpson(&integrand, u0, u1, panels);
    for _ in 0..MAX_REFINEMENTS {
        panels *= 2;
        let current = simpson(&integrand, u0, u1, panels);
        if (current - previous).abs() <= QUADRATURE_TOLERANCE * current.abs() {
            return Ok(flux * current);
        }
        previous = current;
    }
    Err(Error::Resolution(format!(
        "impact-parameter quadrature did not converge after {panels} panels"
    )))
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// Lowest-order estimate `flux * l_max^2 * delta_alpha^2`. It drops the
/// O(1) and logarithmic factors; see [`calibration_constant`].
pub fn small_delta_estimate(flux: f64, delta_alpha: f64, l_max: f64) -> f64 {
    flux * l_max * l_max * delta_alpha * delta_alpha
}

/// Whether `delta_alpha` is small enough for [`small_delta_estimate`].
pub fn is_small_coupling(delta_alpha: f64) -> bool {
    delta_alpha.abs() <= SMALL_COUPLING_LIMIT
}

/// Ratio `impact_rate / small_delta_estimate` in the small-coupling limit
/// with `b_min = 0`. Scale invariance makes it independent of `l_max`.
pub fn calibration_constant() -> Result<f64> {
    let delta_alpha = 1e-6;
    let geom = ImpactGeometry::with_cutoff(1.0)?;
    Ok(impact_rate(1.0, 0.0, delta_alpha, &geom)? / small_delta_estimate(1.0, delta_alpha, 1.0))
}

/// Thermal estimate `T^3 delta_m^2` in Planck units.
pub fn thermal_rate(temperature: f64, delta_m: f64) -> Result<f64> {
    if !(temperature >= 0.0) {
        return Err(Error::InvalidParameter(format!("temperature must be >= 0, got {temperature}")));
    }
    Ok(temperature.powi(3) * delta_m * delta_m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalaxyVerdict {
    /// Phase difference `delta_2(b) - delta_1(b)` at the given `b`.
    pub delta_phase_shift: f64,
    /// Per-passage overlap loss `1 - cos(2 delta_delta)`.
    pub overlap_loss: f64,
    pub decohered: bool,
}

/// Decides whether one passage at impact parameter `b` decoheres the clock:
/// `|2 delta_delta| >= threshold`.
pub fn galaxy_decoherence(delta_alpha: f64, b: f64, l_max: f64, threshold: f64) -> Result<GalaxyVerdict> {
    let shift = eikonal_phase(b, delta_alpha, l_max)?;
    Ok(GalaxyVerdict {
        delta_phase_shift: shift,
        overlap_loss: one_minus_cos_double(shift),
        decohered: (2.0 * shift).abs() >= threshold,
    })
}
