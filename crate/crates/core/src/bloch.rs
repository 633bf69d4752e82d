//! Two-state density matrices in Bloch-vector form and their damped
//! precession.
//!
//! The equation of motion integrated here is
//!
//! ```text
//! dP/dt = P x V - D P_T
//! ```
//!
//! where `P` is the polarization vector, `V` the internal field (an angular
//! velocity: the undamped `P` precesses about `V` at rate `|V|`), `D` the
//! decoherence rate and `P_T = (P_x, P_y, 0)` the transverse part of `P`.
//!
//! Density matrices follow the convention `i d(rho)/dt = [rho, H]`, under
//! which a Hamiltonian `H = h . sigma` produces `dP/dt = P x (2h)`; use
//! [`InternalField::from_hamiltonian`] to obtain the field `V = 2h`.

use std::f64::consts::LN_2;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{csv_row, fmt_decimal, TimeSeries};

/// Slack allowed on `|p| <= 1` before a state is rejected as unphysical.
pub const NORM_SLACK: f64 = 1e-9;

/// Largest `dt * max(|V|, D)` accepted by [`evolve`].
pub const STABILITY_LIMIT: f64 = 0.1;

/// Below this `|p|` the entropy-rate factor `ln((1+P)/(1-P))/(2P)` is
/// replaced by its limit 1.
const SMALL_POLARIZATION: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn pauli() -> [Matrix2<Complex64>; 3] {
    [
        Matrix2::new(ZERO, ONE, ONE, ZERO),
        Matrix2::new(ZERO, -I, I, ZERO),
        Matrix2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

/// Polarization vector of a two-state density matrix.
///
/// `p_z` is the population imbalance between the basis states and
/// `(p_x, p_y)` their coherence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState(Vector3<f64>);

impl BlochState {
    /// Validates `|p| <= 1`. States within [`NORM_SLACK`] of the unit sphere
    /// are scaled back onto it.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_vector(Vector3::new(x, y, z))
    }

    pub fn from_vector(p: Vector3<f64>) -> Result<Self> {
        if !p.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter("Bloch vector must be finite".into()));
        }
        let norm = p.norm();
        if norm > 1.0 + NORM_SLACK {
            return Err(Error::UnphysicalState { norm });
        }
        if norm > 1.0 {
            return Ok(Self(p / norm));
        }
        Ok(Self(p))
    }

    /// No validation; used for integrator output, which stays inside the
    /// ball up to round-off.
    pub(crate) fn unchecked(p: Vector3<f64>) -> Self {
        Self(p)
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.0
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Squared length of the transverse (coherence) part.
    pub fn transverse_norm_squared(&self) -> f64 {
        self.0.x * self.0.x + self.0.y * self.0.y
    }
}

/// A 2x2 density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2(Matrix2<Complex64>);

impl DensityMatrix2 {
    /// Checks Hermiticity, unit trace and positivity to 1e-12.
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        const TOL: f64 = 1e-12;
        let herm_dev = (m[(1, 0)] - m[(0, 1)].conj()).norm()
            .max(m[(0, 0)].im.abs())
            .max(m[(1, 1)].im.abs());
        if herm_dev > TOL {
            return Err(Error::InvalidMatrix(format!("not Hermitian (deviation {herm_dev:e})")));
        }
        let trace = m[(0, 0)].re + m[(1, 1)].re;
        if (trace - 1.0).abs() > TOL {
            return Err(Error::InvalidMatrix(format!("trace is {trace}, expected 1")));
        }
        // eigenvalues of a unit-trace Hermitian 2x2: (1 +- |p|)/2
        let p = bloch_components(&m);
        if 0.5 * (1.0 - p.norm()) < -TOL {
            return Err(Error::InvalidMatrix(format!("negative eigenvalue (|p| = {})", p.norm())));
        }
        Ok(Self(m))
    }

    pub fn diagonal(r11: f64, r22: f64) -> Result<Self> {
        Self::new(Matrix2::new(
            Complex64::new(r11, 0.0),
            ZERO,
            ZERO,
            Complex64::new(r22, 0.0),
        ))
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    /// `Tr[rho O]`.
    pub fn expectation(&self, observable: &Matrix2<Complex64>) -> Complex64 {
        (self.0 * observable).trace()
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let p = bloch_components(&self.0).norm();
        [0.5 * (1.0 - p), 0.5 * (1.0 + p)]
    }
}

fn bloch_components(m: &Matrix2<Complex64>) -> Vector3<f64> {
    let [sx, sy, sz] = pauli();
    Vector3::new(
        (m * sx).trace().re,
        (m * sy).trace().re,
        (m * sz).trace().re,
    )
}

/// `rho = (I + p . sigma) / 2`.
pub fn to_density(p: &BlochState) -> DensityMatrix2 {
    let v = p.vector();
    let half = 0.5;
    DensityMatrix2(Matrix2::new(
        Complex64::new(half * (1.0 + v.z), 0.0),
        Complex64::new(half * v.x, -half * v.y),
        Complex64::new(half * v.x, half * v.y),
        Complex64::new(half * (1.0 - v.z), 0.0),
    ))
}

/// `p_i = Tr[rho sigma_i]`.
pub fn from_density(rho: &DensityMatrix2) -> Result<BlochState> {
    BlochState::from_vector(bloch_components(rho.matrix()))
}

type FieldFn = Arc<dyn Fn(f64) -> Vector3<f64> + Send + Sync>;

/// Pseudo-magnetic field `V` (angular-frequency units), constant or a
/// function of time.
#[derive(Clone)]
pub enum InternalField {
    Constant(Vector3<f64>),
    TimeDependent(FieldFn),
}

impl InternalField {
    pub fn constant(x: f64, y: f64, z: f64) -> Self {
        InternalField::Constant(Vector3::new(x, y, z))
    }

    pub fn time_dependent<F>(f: F) -> Self
    where
        F: Fn(f64) -> Vector3<f64> + Send + Sync + 'static,
    {
        InternalField::TimeDependent(Arc::new(f))
    }

    /// Field generated by the Hamiltonian `H = h . sigma`: `V = 2h`.
    pub fn from_hamiltonian(h: Vector3<f64>) -> Self {
        InternalField::Constant(2.0 * h)
    }

    pub fn at(&self, t: f64) -> Vector3<f64> {
        match self {
            InternalField::Constant(v) => *v,
            InternalField::TimeDependent(f) => f(t),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, InternalField::Constant(_))
    }
}

impl fmt::Debug for InternalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InternalField::Constant(v) => f.debug_tuple("Constant").field(&(v.x, v.y, v.z)).finish(),
            InternalField::TimeDependent(_) => f.write_str("TimeDependent(..)"),
        }
    }
}

/// Rate `D >= 0` at which transverse polarization is damped.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DecoherenceRate(f64);

impl DecoherenceRate {
    pub fn new(d: f64) -> Result<Self> {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::InvalidParameter(format!("decoherence rate must be >= 0, got {d}")));
        }
        Ok(Self(d))
    }

    pub const ZERO: DecoherenceRate = DecoherenceRate(0.0);

    pub fn value(&self) -> f64 {
        self.0
    }
}

fn derivative(p: &Vector3<f64>, v: &Vector3<f64>, d: f64) -> Vector3<f64> {
    let mut dp = p.cross(v);
    dp.x -= d * p.x;
    dp.y -= d * p.y;
    dp
}

/// One classical Runge-Kutta step of `dP/dt = P x V(t) - D P_T`.
pub fn rk4_step(p: &Vector3<f64>, field: &InternalField, d: f64, t: f64, dt: f64) -> Vector3<f64> {
    let (v0, vh, v1) = match field {
        InternalField::Constant(v) => (*v, *v, *v),
        InternalField::TimeDependent(f) => (f(t), f(t + 0.5 * dt), f(t + dt)),
    };
    let k1 = derivative(p, &v0, d);
    let k2 = derivative(&(p + 0.5 * dt * k1), &vh, d);
    let k3 = derivative(&(p + 0.5 * dt * k2), &vh, d);
    let k4 = derivative(&(p + dt * k3), &v1, d);
    p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

fn check_guard(field: &InternalField, d: f64, t: f64, dt: f64) -> Result<()> {
    let ratio = dt * field.at(t).norm().max(d);
    if !ratio.is_finite() {
        return Err(Error::InvalidParameter(format!("field is not finite at t = {t}")));
    }
    if ratio > STABILITY_LIMIT * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, ratio, limit: STABILITY_LIMIT });
    }
    Ok(())
}

/// Integrates the damped precession from `t = 0` to `t_end`, recording every
/// step.
pub fn evolve(
    p0: BlochState,
    field: &InternalField,
    d: DecoherenceRate,
    t_end: f64,
    dt: f64,
) -> Result<TimeSeries<BlochState>> {
    evolve_strided(p0, field, d, t_end, dt, 1)
}

/// Like [`evolve`] but keeps only every `stride`-th step. The number of
/// steps is `round(t_end / dt)` rounded up to a multiple of `stride`.
pub fn evolve_strided(
    p0: BlochState,
    field: &InternalField,
    d: DecoherenceRate,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<TimeSeries<BlochState>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be >= 0, got {t_end}")));
    }
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be >= 1".into()));
    }
    let d = d.value();
    let steps = (t_end / dt).round() as usize;
    let records = steps.div_ceil(stride);
    let mut samples = Vec::with_capacity(records + 1);
    let mut p = p0.vector();
    samples.push(p0);
    let constant = field.is_constant();
    if constant {
        check_guard(field, d, 0.0, dt)?;
    }
    let mut step = 0usize;
    for _ in 0..records {
        for _ in 0..stride {
            let t = step as f64 * dt;
            if !constant {
                check_guard(field, d, t, dt)?;
            }
            p = rk4_step(&p, field, d, t, dt);
            step += 1;
        }
        samples.push(BlochState::unchecked(p));
    }
    TimeSeries::new(
        0.0,
        dt * stride as f64,
        samples,
        vec!["px".into(), "py".into(), "pz".into()],
    )
}

/// `|p|`: 1 for a pure state, 0 for the maximally mixed state.
pub fn purity(p: &BlochState) -> f64 {
    p.norm()
}

fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Von Neumann entropy in nats:
/// `ln 2 - [(1+P) ln(1+P) + (1-P) ln(1-P)] / 2`.
pub fn entropy(p: &BlochState) -> Result<f64> {
    let norm = p.norm();
    if norm > 1.0 + NORM_SLACK {
        return Err(Error::UnphysicalState { norm });
    }
    let norm = norm.min(1.0);
    Ok(LN_2 - 0.5 * (xlnx(1.0 + norm) + xlnx(1.0 - norm)))
}

/// Entropy production `dS/dt = D |P_T|^2 ln((1+P)/(1-P)) / (2P)`; never
/// negative. Singular for pure states.
pub fn entropy_rate(p: &BlochState, d: DecoherenceRate) -> Result<f64> {
    let norm = p.norm();
    if norm >= 1.0 {
        return Err(Error::Singular(format!("entropy rate diverges at |p| = {norm}")));
    }
    let factor = if norm < SMALL_POLARIZATION {
        1.0
    } else {
        // atanh(P)/P == ln((1+P)/(1-P))/(2P)
        norm.atanh() / norm
    };
    Ok(d.value() * p.transverse_norm_squared() * factor)
}

/// Evolves `rho` under the fixed Hamiltonian `H = h . sigma` and returns the
/// largest change of `Tr[rho(t) O]` over `t_samples`.
///
/// A state that commutes with `H` gives a deviation at round-off level. For
/// a time-dependent `h` the Bloch vector is integrated with small RK4 steps.
pub fn stationarity_check(
    rho: &DensityMatrix2,
    h: &InternalField,
    observable: &Matrix2<Complex64>,
    t_samples: &[f64],
) -> Result<f64> {
    let p0 = from_density(rho)?.vector();
    let [sx, sy, sz] = pauli();
    // Tr[rho O] = (Tr O + p . o) / 2 with o_i = Tr[O sigma_i]
    let o = Vector3::new(
        (observable * sx).trace().re,
        (observable * sy).trace().re,
        (observable * sz).trace().re,
    );
    let expect = |p: &Vector3<f64>| 0.5 * (observable.trace().re + p.dot(&o));
    let reference = expect(&p0);

    let mut worst: f64 = 0.0;
    match h {
        InternalField::Constant(hv) => {
            let omega = 2.0 * hv;
            for &t in t_samples {
                let p = rotate(&p0, &omega, t);
                worst = worst.max((expect(&p) - reference).abs());
            }
        }
        InternalField::TimeDependent(f) => {
            let f = f.clone();
            let field = InternalField::time_dependent(move |t| 2.0 * f(t));
            let mut sorted: Vec<f64> = t_samples.to_vec();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let mut t = 0.0;
            let mut p = p0;
            for &target in &sorted {
                while t < target {
                    let rate = field.at(t).norm().max(1e-300);
                    let dt = (1e-3 / rate).min(target - t);
                    p = rk4_step(&p, &field, 0.0, t, dt);
                    t += dt;
                }
                worst = worst.max((expect(&p) - reference).abs());
            }
        }
    }
    Ok(worst)
}

/// Rotation of `p` solving `dp/dt = p x omega` for time `t` (Rodrigues).
fn rotate(p: &Vector3<f64>, omega: &Vector3<f64>, t: f64) -> Vector3<f64> {
    let w = omega.norm();
    if w == 0.0 {
        return *p;
    }
    let axis = omega / w;
    // p x omega = -omega x p: rotation by angle -w t about the axis
    let angle = -w * t;
    let (s, c) = angle.sin_cos();
    p * c + axis.cross(p) * s + axis * axis.dot(p) * (1.0 - c)
}

/// Renders a Bloch trajectory as CSV: `t,px,py,pz` plus `entropy,purity`
/// when `diagnostics` is set.
pub fn trajectory_csv(series: &TimeSeries<BlochState>, diagnostics: bool) -> Result<String> {
    let mut out = if diagnostics {
        String::from("t,px,py,pz,entropy,purity\n")
    } else {
        String::from("t,px,py,pz\n")
    };
    for (t, p) in series.iter() {
        let mut fields = vec![fmt_decimal(t), fmt_decimal(p.x()), fmt_decimal(p.y()), fmt_decimal(p.z())];
        if diagnostics {
            fields.push(fmt_decimal(entropy(p)?));
            fields.push(fmt_decimal(purity(p)));
        }
        out.push_str(&csv_row(fields));
    }
    Ok(out)
}
