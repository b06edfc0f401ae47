use alloc::string::String;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not hermitian (defect {defect:.3e}, tolerance {tol:.3e})")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPositive { min_eig: f64 },
    #[error("matrix trace {trace:.12} is not 1 within {tol:.3e}")]
    NotUnitTrace { trace: f64, tol: f64 },
    #[error("eigenvalue {value} not found in the spectrum")]
    EigenvalueNotInSpectrum { value: f64 },
    #[error("no spectral rate available at Bohr frequency {omega}")]
    MissingRate { omega: f64 },
    #[error("stationary state is not thermal; operation requires a thermal model")]
    NonThermal,
    #[error("beta/(2*pi*tau) = {ratio} collides with a pole of the residue series")]
    PoleCollision { ratio: f64 },
    #[error("unsupported perturbative order {0}; only 0 and 1 are implemented")]
    UnsupportedOrder(u32),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("ODE step size underflow at t = {t}: {detail}")]
    StepUnderflow { t: f64, detail: String },
    #[error("eigensolver failed to converge after {sweeps} sweeps (off-norm {off:.3e})")]
    EigenFailure { sweeps: usize, off: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
