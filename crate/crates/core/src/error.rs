use thiserror::Error;

#[derive(Debug, Error)]
pub enum KError {
    #[error("unsupported transverse dimension: n = {0} (expected 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("resolution must be a power of two >= 8, got {0}")]
    BadResolution(usize),
    #[error("axis {axis} out of range for {dim} transverse axes")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("degree {degree} out of range for {dim} transverse axes")]
    DegreeOutOfRange { degree: usize, dim: usize },
    #[error("cutoff {cutoff} aliases on a grid with N = {n}")]
    Aliasing { cutoff: usize, n: usize },
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("density must be strictly positive (min {0:e})")]
    NonPositiveDensity(f64),
    #[error("structure invariant violated: {what} (residual {residual:e} at point {point})")]
    Invariant { what: &'static str, residual: f64, point: usize },
    #[error("metric not positive definite at point {point} (min eigenvalue {min_eig:e})")]
    NotPositive { point: usize, min_eig: f64 },
    #[error("tangency violated: {what} (residual {residual:e})")]
    Tangency { what: &'static str, residual: f64 },
    #[error("action formula inconsistency (tangency residual {0:e})")]
    ActionInconsistency(f64),
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("unresolved kernel: spectral gap {gap:e} is below 10x threshold {threshold:e}")]
    UnresolvedKernel { gap: f64, threshold: f64 },
    #[error("harmonic dimension counts disagree between resolutions: {0}")]
    ResolutionDisagreement(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("statement is 5-dimensional (requires n = 2, got n = {0})")]
    NotFiveDimensional(usize),
    #[error("Hamiltonian is outside span(G) (residual {0:e})")]
    OutsideTorus(f64),
    #[error("singular Gram matrix for torus algebra")]
    SingularGram,
    #[error("torus algebra invalid: {0}")]
    InvalidTorus(String),
    #[error("inadmissible potential: positivity fails at point {point} (margin {margin:e})")]
    Inadmissible { point: usize, margin: f64 },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("perturbation breaks positivity: min eigenvalue {min_eig:e} at point {point}")]
    PerturbationPositivity { point: usize, min_eig: f64 },
    #[error("line search failed: {0}")]
    LineSearch(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, KError>;
