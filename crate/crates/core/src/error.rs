use std::path::PathBuf;

/// Errors raised by the solvers, validators and file readers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("non-finite value at cell {0}")]
    NonFinite(usize),
    #[error("shape is empty")]
    EmptyShape,
    #[error("shape fills the whole grid, its complement is empty")]
    FullShape,
    #[error("no positive eta_0 satisfies the discrete gradient certificate (best {best})")]
    NoEta { best: f64 },
    #[error("band [{a}, {b}] is empty or reversed")]
    BadBand { a: f64, b: f64 },
    #[error("time step {dt} exceeds the CFL limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("negative velocity {value} at cell {cell}")]
    NegativeVelocity { cell: usize, value: f64 },
    #[error("domain too small: front may reach radius {needed}, grid only holds {available}")]
    DomainTooSmall { needed: f64, available: f64 },
    #[error("no gradient band: no positive eta satisfies the band inequality")]
    NoBand,
    #[error("delta {delta} must be below eta_0 / 2 = {half_eta0}")]
    BadDelta { delta: f64, half_eta0: f64 },
    #[error("(H3) violated: {0}")]
    H3Violation(String),
    #[error("convolution padding too small: {0}")]
    PaddingTooSmall(String),
    #[error("heat solver did not reach tolerance: residual {residual:e}")]
    SolverDivergence { residual: f64 },
    #[error("velocity {value} outside declared range [{lo}, {hi}]")]
    AlphaRangeViolation { value: f64, lo: f64, hi: f64 },
    #[error("scalar function violates its declared constants: {0}")]
    BadScalarFn(String),
    #[error("Picard iteration did not converge, residual history {history:?}")]
    NoConvergence { history: Vec<f64> },
    #[error("contraction diagnostics degenerate: delta_tau = 0")]
    DivisionDegenerate,
    #[error("level set {{u >= {level}}} is empty")]
    EmptyLevelSet { level: f64 },
    #[error("level set touches the grid boundary")]
    TouchesBoundary,
    #[error("invalid cone parameters rho = {rho}, theta = {theta}")]
    BadParams { rho: f64, theta: f64 },
    #[error("nonpositive input: {0}")]
    NonpositiveInput(&'static str),
    #[error("interior cone certificate missing or incomplete (coverage {coverage})")]
    CertificateMissing { coverage: f64 },
    #[error("band [{a}, {b}] is outside [-eta/2, eta/2] = [{lo}, {hi}]")]
    BandOutsideEta { a: f64, b: f64, lo: f64, hi: f64 },
    #[error("minimal time undefined: u decreased at cell {cell} by {drop:e}")]
    NotMonotone { cell: usize, drop: f64 },
    #[error("adjoint collapsed to |p| = {norm:e} at t = {t}")]
    StepFailure { t: f64, norm: f64 },
    #[error("phase indicator frames must have strictly increasing times")]
    UnorderedFrames,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("FPF1 format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
