use thiserror::Error;

/// Errors surfaced by the modelling, state-preparation and propagation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name}[{index}] must be a finite nonnegative rate, got {value}")]
    InvalidRate {
        name: &'static str,
        index: usize,
        value: f64,
    },
    #[error("bath-bath rate delta must be finite and positive, got {0}")]
    InvalidDelta(f64),
    #[error("omega must be symmetric: omega[{i}][{j}] = {a} but omega[{j}][{i}] = {b}")]
    AsymmetricOmega { i: usize, j: usize, a: f64, b: f64 },
    #[error("omega diagonal must be zero, got {value} at index {i}")]
    OmegaDiagonal { i: usize, value: f64 },
    #[error("need at least one system waveguide")]
    NoSystemModes,
    #[error("need at least one bath waveguide")]
    NoBathModes,
    #[error("{context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("mode index {index} out of range for {dim} modes")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("mode indices must be distinct, got {0} twice")]
    RepeatedIndex(usize),
    #[error("moment matrix is not Hermitian: max asymmetry {0:.3e}")]
    NotHermitian(f64),
    #[error("moment diagonal entry {index} must be real and nonnegative, got {re} + {im}i")]
    BadOccupation { index: usize, re: f64, im: f64 },
    #[error("moment matrix is not positive semidefinite: minimum eigenvalue {0:.3e}")]
    NotPositive(f64),
    #[error("collective contraction produced {value:.3e}, below the -{tol:.0e} floor")]
    NegativeContraction { value: f64, tol: f64 },
    #[error("collective coupling is zero; the requested state is undefined")]
    ZeroCollectiveCoupling,
    #[error("dark mode undefined: couplings g[{i}] and g[{j}] are both zero")]
    ZeroDarkPair { i: usize, j: usize },
    #[error("beam-splitter angle {0} outside [-pi, pi]")]
    AngleOutOfRange(f64),
    #[error("coupling model calibration is degenerate: {0}")]
    DegenerateCalibration(String),
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("geometry invalid: {0}")]
    InvalidGeometry(String),
    #[error("thermal occupation must be finite and nonnegative, got {0}")]
    InvalidThermalOccupation(f64),
    #[error("time must be finite and nonnegative, got {0}")]
    InvalidTime(f64),
    #[error("time grid must be nonempty, nonnegative and strictly increasing")]
    BadTimeGrid,
    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),
    #[error("bath size search did not converge by M = {0}")]
    BathNotConverged(usize),
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
