use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state not normalized (norm^2 = {norm_sqr:.3e})")]
    NotNormalized { norm_sqr: f64 },

    #[error("operator is not unitary (max |U^dag U - 1| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    /// The inner pair of adiabatic states is degenerate here; use the one-sided
    /// limits (`degeneracy_states`) or the crossing-aware frame instead.
    #[error("adiabatic states 1,2 are degenerate at tau = {tau}; use degeneracy_states or crossing_frame")]
    Degenerate { tau: f64 },

    #[error("quantity undefined at tau = {tau}: {reason}")]
    Undefined { tau: f64, reason: String },

    #[error("outside the validity domain: {0}")]
    OutOfDomain(String),

    #[error("integration failed at tau = {tau}: step {step:.3e} below floor, achieved error ratio {achieved:.3e}")]
    IntegrationFailure { tau: f64, step: f64, achieved: f64 },

    #[error("quadrature did not converge: estimate {value}, error {error:.3e}")]
    QuadratureFailure { value: f64, error: f64 },
}
