//! Numerical laboratory for two-state coherence loss.
//!
//! The crate is organised around the polarization ("Bloch") vector of a
//! two-state density matrix and the rate `D` at which its transverse part is
//! damped by an environment:
//!
//! * [`bloch`]: density-matrix/Bloch-vector types, the damped precession
//!   integrator, purity, entropy and entropy production.
//! * [`zeno`]: the overdamped limit, decay-rate extraction and the
//!   tunnelling-suppression factor.
//! * [`smatrix`]: decoherence rate from the unitarity deficit of two
//!   scattering matrices, with its no-decoherence and half-rate limits.
//! * [`gravity`]: eikonal phases and impact-parameter rates for a clock whose
//!   two components have different masses.
//! * [`squid`]: rf-SQUID double well, finite-difference spectrum, noisy
//!   adiabatic flux sweeps and noise calibration.
//! * [`series`]: uniformly sampled trajectories and CSV output.

pub mod bloch;
pub mod error;
pub mod gravity;
pub mod series;
pub mod smatrix;
pub mod squid;
pub mod zeno;

pub use error::{Error, Result};
