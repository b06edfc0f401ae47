//! Default numerical tolerances, collected in one place.
//!
//! Every threshold used by the library has a documented default here;
//! operations that take an explicit tolerance fall back to these when the
//! caller passes the corresponding config default.

/// Absolute hermiticity tolerance: max |A - A^dag| entry.
pub const HERMITICITY_ABS: f64 = 1e-10;

/// Absolute positivity tolerance: smallest admissible eigenvalue of a state.
pub const POSITIVITY_ABS: f64 = 1e-10;

/// Absolute tolerance on tr(rho) = 1.
pub const TRACE_ABS: f64 = 1e-10;

/// Eigenvalue merging tolerance, relative to the spectral radius.
/// Eigenvalues closer than this share one projector.
pub const EIG_MERGE_REL: f64 = 1e-9;

/// Bohr-frequency binning tolerance, relative to the spectral radius of the
/// system Hamiltonian.
pub const FREQ_BIN_REL: f64 = 1e-8;

/// Relative tolerance of the adaptive quadrature engine.
pub const QUAD_REL: f64 = 1e-9;

/// Half-line quadrature cutoff in units of the correlation time.
pub const QUAD_CUTOFF_TAU: f64 = 40.0;

/// Relative tolerance for the nested double integrals behind the
/// cross-intervention coefficients.
pub const CROSS_COEFF_REL: f64 = 1e-8;

/// Fixed RK4 step for propagator integration, in units of the correlation
/// time.
pub const ODE_DT_TAU: f64 = 1.0 / 50.0;

/// Intervention spacing below this many correlation times triggers a
/// validity warning on perturbative tables.
pub const MIN_SEPARATION_TAU: f64 = 5.0;

/// Lorentzian line broadening used when transforming pure-point (finite
/// bath) spectra, in inverse time units of the correlation time.
pub const LINE_BROADENING_TAU: f64 = 1e-4;
