//! Numerical laboratory for 2D compressible MHD without magnetic diffusion,
//! linearized around the equilibrium `(ρ, u, b) = (1, 0, e₁)`.
//!
//! * [`kernel`]: closed-form Fourier symbols and their pointwise envelopes.
//! * [`linear`]: the exact linear semigroup, matrix-exponential oracle and
//!   continuum quadrature for decay rates.
//! * [`grid`]: periodic Fourier grids, multipliers, projectors and norms.
//! * [`solver`]: ETDRK2 pseudo-spectral integrator for the full system.
//! * [`verify`]: scanners for the inequality-type claims.
//! * [`io`]: field files, configs, manifests.

pub mod grid;
pub mod io;
pub mod kernel;
pub mod linear;
pub mod solver;
pub mod stats;
pub mod verify;

pub use num_complex::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid dimension: {0}")]
    InvalidDimension(String),
    #[error("unknown estimate id {0} (expected 1..=8)")]
    UnknownEstimate(u8),
    #[error("non-finite multiplier value at mode ({0}, {1})")]
    NonFiniteMultiplier(usize, usize),
    #[error("homogeneous symbol of negative order meets a nonzero mean mode")]
    HomogeneousSingularity,
    #[error("non-finite matrix entry")]
    NonFiniteMatrix,
    #[error("quadrature did not converge: {0}")]
    QuadratureNonconvergence(String),
    #[error("density collapse: max|n| = {0}")]
    DensityCollapse(f64),
    #[error("step rejected at t = {t}: {field} norm grew from {from:e} to {to:e}")]
    StepRejected {
        t: f64,
        field: &'static str,
        from: f64,
        to: f64,
    },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    #[error("unknown claim `{0}`")]
    UnknownClaim(String),
    #[error("unknown quantity `{0}`")]
    UnknownQuantity(String),
    #[error("malformed field data: {0}")]
    MalformedField(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
