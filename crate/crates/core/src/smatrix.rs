//! Decoherence rate from the "unitarity deficit" of two scattering matrices.
//!
//! When the two states of a subsystem scatter an incoming environment
//! particle `|i>` with different S-matrices `S1` and `S2`, every collision
//! reduces their overlap. The resulting rate is
//!
//! ```text
//! D = flux * Re <i|(1 - S1^dagger S2)|i>
//! ```
//!
//! (written in the literature as `Im i <...>`). `D` vanishes when
//! `S1 = S2` and equals half the total scattering rate on state 2 when state
//! 1 does not scatter (`S1 = 1`), an instance of the optical theorem.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Largest `|(S^dagger S - I)_jk|` accepted as unitary.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;
/// Allowed deviation of `<i|i>` from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// `max_jk |(S^dagger S - I)_jk|`.
pub fn unitarity_deviation(s: &CMatrix) -> f64 {
    let n = s.nrows();
    let prod = s.adjoint() * s - CMatrix::identity(n, n);
    prod.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_unitary(s: &CMatrix) -> Result<()> {
    if !s.is_square() {
        return Err(Error::InvalidParameter(format!("S-matrix is {}x{}, not square", s.nrows(), s.ncols())));
    }
    let deviation = unitarity_deviation(s);
    if !(deviation <= UNITARITY_TOLERANCE) {
        return Err(Error::NonUnitary { deviation });
    }
    Ok(())
}

fn check_incoming(incoming: &CVector, n: usize, flux: f64) -> Result<()> {
    if incoming.len() != n {
        return Err(Error::InvalidParameter(format!(
            "incoming state has {} components, S-matrices are {n}x{n}",
            incoming.len()
        )));
    }
    let norm = incoming.norm();
    if !((norm - 1.0).abs() <= NORMALIZATION_TOLERANCE) {
        return Err(Error::InvalidParameter(format!("incoming state has norm {norm}, expected 1")));
    }
    if !(flux >= 0.0 && flux.is_finite()) {
        return Err(Error::InvalidParameter(format!("flux must be >= 0, got {flux}")));
    }
    Ok(())
}

/// Two validated S-matrices seen by the two subsystem states, the incoming
/// environment state and the incoming flux (a rate normalization).
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringPair {
    s1: CMatrix,
    s2: CMatrix,
    incoming: CVector,
    flux: f64,
}

impl ScatteringPair {
    pub fn new(s1: CMatrix, s2: CMatrix, incoming: CVector, flux: f64) -> Result<Self> {
        check_unitary(&s1)?;
        check_unitary(&s2)?;
        if s1.shape() != s2.shape() {
            return Err(Error::InvalidParameter("S1 and S2 have different dimensions".into()));
        }
        check_incoming(&incoming, s1.nrows(), flux)?;
        Ok(Self { s1, s2, incoming, flux })
    }

    pub fn s1(&self) -> &CMatrix {
        &self.s1
    }

    pub fn s2(&self) -> &CMatrix {
        &self.s2
    }

    pub fn incoming(&self) -> &CVector {
        &self.incoming
    }

    pub fn flux(&self) -> f64 {
        self.flux
    }

    pub fn dim(&self) -> usize {
        self.s1.nrows()
    }

    /// `<i|(1 - S1^dagger S2)|i>`.
    pub fn deficit_amplitude(&self) -> Complex64 {
        let overlap = (self.s1.clone() * &self.incoming).dotc(&(&self.s2 * &self.incoming));
        Complex64::new(1.0, 0.0) - overlap
    }
}

/// Phase shifts of one partial wave (or impact parameter) for the two
/// subsystem states, `S_k = exp(2 i delta_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialWaveChannel {
    pub delta1: f64,
    pub delta2: f64,
    pub flux: f64,
}

impl PartialWaveChannel {
    pub fn new(delta1: f64, delta2: f64, flux: f64) -> Result<Self> {
        if !(delta1.is_finite() && delta2.is_finite()) {
            return Err(Error::InvalidParameter("phase shifts must be finite".into()));
        }
        Ok(Self { delta1, delta2, flux })
    }

    pub fn to_pair(&self) -> Result<ScatteringPair> {
        let s = |delta: f64| CMatrix::from_element(1, 1, Complex64::from_polar(1.0, 2.0 * delta));
        ScatteringPair::new(
            s(self.delta1),
            s(self.delta2),
            CVector::from_element(1, Complex64::new(1.0, 0.0)),
            self.flux,
        )
    }
}

/// `D = flux * Re <i|(1 - S1^dagger S2)|i>`; nonnegative for unitary input.
pub fn decoherence_rate(pair: &ScatteringPair) -> f64 {
    pair.flux * pair.deficit_amplitude().re
}

/// `flux * Im <i|(1 - S1^dagger S2)|i>`.
///
/// The sign convention is ours: a state-2 phase `exp(2i delta)` with
/// `S1 = 1` gives `-flux * sin(2 delta)`. Changing the overall sign of the
/// subsystem Hamiltonian flips it.
pub fn energy_shift(pair: &ScatteringPair) -> f64 {
    pair.flux * pair.deficit_amplitude().im
}

/// Total rate of transitions out of `|i>`: `flux * ||(1 - S)|i>||^2`.
pub fn scattering_rate(s: &CMatrix, incoming: &CVector, flux: f64) -> Result<f64> {
    check_unitary(s)?;
    check_incoming(incoming, s.nrows(), flux)?;
    let out = incoming - s * incoming;
    Ok(flux * out.norm_squared())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfRateCheck {
    /// `D` computed with `S1 = 1`.
    pub d: f64,
    /// Half the scattering rate on state 2.
    pub half_rate: f64,
    pub difference: f64,
}

/// Evaluates `D` for a non-scattering state 1 against half the scattering
/// rate of state 2. The two agree identically for unitary `S2`.
pub fn verify_half_rate_limit(s2: &CMatrix, incoming: &CVector, flux: f64) -> Result<HalfRateCheck> {
    let n = s2.nrows();
    let pair = ScatteringPair::new(CMatrix::identity(n, n), s2.clone(), incoming.clone(), flux)?;
    let d = decoherence_rate(&pair);
    let half_rate = 0.5 * scattering_rate(s2, incoming, flux)?;
    Ok(HalfRateCheck { d, half_rate, difference: (d - half_rate).abs() })
}

/// Haar-distributed random unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random unit vector, uniform on the complex sphere.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn scalar(z: Complex64) -> CMatrix {
        CMatrix::from_element(1, 1, z)
    }

    fn one() -> CVector {
        CVector::from_element(1, Complex64::new(1.0, 0.0))
    }

    fn phase(theta: f64) -> Complex64 {
        Complex64::from_polar(1.0, theta)
    }

    #[test]
    fn equal_matrices_do_not_decohere() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_unitary(5, &mut rng);
        let pair = ScatteringPair::new(s.clone(), s, random_state(5, &mut rng), 2.5).unwrap();
        assert_abs_diff_eq!(decoherence_rate(&pair), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn scalar_phase_examples() {
        // delta = pi/2: 1 - cos(pi) = 2
        let pair = ScatteringPair::new(scalar(phase(0.0)), scalar(phase(PI)), one(), 1.0).unwrap();
        assert_abs_diff_eq!(decoherence_rate(&pair), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(0.5 * (Complex64::new(1.0, 0.0) - phase(PI)).norm_sqr(), 2.0, epsilon = 1e-15);
        // S2 = i: 1 = |1 - i|^2 / 2
        let pair = ScatteringPair::new(scalar(phase(0.0)), scalar(phase(PI / 2.0)), one(), 1.0).unwrap();
        assert_abs_diff_eq!(decoherence_rate(&pair), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn energy_shift_examples() {
        let pair = ScatteringPair::new(scalar(phase(0.0)), scalar(phase(0.0)), one(), 1.0).unwrap();
        assert_eq!(energy_shift(&pair), 0.0);
        let delta = 1e-3;
        let pair = ScatteringPair::new(scalar(phase(0.0)), scalar(phase(2.0 * delta)), one(), 1.0).unwrap();
        assert_abs_diff_eq!(energy_shift(&pair), -(2.0 * delta).sin(), epsilon = 1e-16);
        assert_abs_diff_eq!(energy_shift(&pair), -2.0 * delta, epsilon = 2e-9);
        let common = scalar(phase(0.8));
        let pair = ScatteringPair::new(common.clone(), common, one(), 1.0).unwrap();
        assert_abs_diff_eq!(energy_shift(&pair), 0.0, epsilon = 1e-16);
    }

    #[test]
    fn scattering_rate_examples() {
        assert_eq!(scattering_rate(&CMatrix::identity(3, 3), &random_state(3, &mut ChaCha8Rng::seed_from_u64(1)), 1.0).unwrap(), 0.0);
        let delta = 0.37;
        let r = scattering_rate(&scalar(phase(2.0 * delta)), &one(), 3.0).unwrap();
        assert_abs_diff_eq!(r, 3.0 * 4.0 * delta.sin().powi(2), epsilon = 1e-14);
    }

    #[test]
    fn scattering_rate_is_a_sum_over_final_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_unitary(4, &mut rng);
        let i = random_state(4, &mut rng);
        // sum over a random orthonormal basis |f> = columns of U
        let u = random_unitary(4, &mut rng);
        let t = CMatrix::identity(4, 4) - &s;
        let mut total = 0.0;
        for f in 0..4 {
            let amp = u.column(f).dotc(&(&t * &i));
            total += amp.norm_sqr();
        }
        assert_abs_diff_eq!(scattering_rate(&s, &i, 1.0).unwrap(), total, epsilon = 1e-13);
    }

    #[test]
    fn half_rate_examples() {
        let check = verify_half_rate_limit(&CMatrix::identity(2, 2), &random_state(2, &mut ChaCha8Rng::seed_from_u64(3)), 1.0).unwrap();
        assert_eq!((check.d, check.half_rate, check.difference), (0.0, 0.0, 0.0));
        let check = verify_half_rate_limit(&scalar(phase(PI / 2.0)), &one(), 1.0).unwrap();
        assert_abs_diff_eq!(check.d, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(check.half_rate, 1.0, epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=8 {
            let s = random_unitary(n, &mut rng);
            let check = verify_half_rate_limit(&s, &random_state(n, &mut rng), 1.7).unwrap();
            assert!(check.difference <= 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        let bad = scalar(Complex64::new(1.1, 0.0));
        assert!(matches!(
            ScatteringPair::new(bad.clone(), scalar(phase(0.0)), one(), 1.0),
            Err(Error::NonUnitary { .. })
        ));
        assert!(matches!(scattering_rate(&bad, &one(), 1.0), Err(Error::NonUnitary { .. })));
        let unnormalized = CVector::from_element(1, Complex64::new(0.9, 0.0));
        assert!(ScatteringPair::new(scalar(phase(0.0)), scalar(phase(0.0)), unnormalized, 1.0).is_err());
        assert!(ScatteringPair::new(scalar(phase(0.0)), scalar(phase(0.0)), one(), -1.0).is_err());
        assert!(ScatteringPair::new(CMatrix::identity(2, 2), scalar(phase(0.0)), one(), 1.0).is_err());
    }

    #[test]
    fn random_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for n in 1..=8 {
            assert!(unitarity_deviation(&random_unitary(n, &mut rng)) < 1e-13);
        }
    }

    #[test]
    fn partial_wave_channel_matches_cosine_form() {
        let ch = PartialWaveChannel::new(0.2, 0.9, 2.0).unwrap();
        let d = decoherence_rate(&ch.to_pair().unwrap());
        assert_abs_diff_eq!(d, 2.0 * (1.0 - (2.0 * (0.9 - 0.2f64)).cos()), epsilon = 1e-14);
    }
}
