use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unphysical state: |p| = {norm} exceeds 1")]
    UnphysicalState { norm: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidMatrix(String),

    #[error("step size {dt} violates the stability guard (dt * rate = {ratio} > {limit})")]
    StepSize { dt: f64, ratio: f64, limit: f64 },

    #[error("singular input: {0}")]
    Singular(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("wrong branch: {0}")]
    Branch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NonUnitary { deviation: f64 },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("calibration failed: {0}")]
    Calibration(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than by a
    /// numerical procedure failing.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::UnphysicalState { .. }
                | Error::InvalidMatrix(_)
                | Error::InvalidParameter(_)
                | Error::Domain(_)
                | Error::NonUnitary { .. }
                | Error::Branch(_)
        )
    }
}
