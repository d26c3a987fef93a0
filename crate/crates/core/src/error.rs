use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("symmetry violation in `{matrix}` (residual {residual:.3e})")]
    SymmetryViolation { matrix: &'static str, residual: f64 },

    #[error("CCR matrix is numerically singular (condition number {condition:.3e})")]
    SingularTheta { condition: f64 },

    #[error("drift matrix is not Hurwitz (spectral abscissa {abscissa:.6e})")]
    NotHurwitz { abscissa: f64 },

    #[error("physically inconsistent system: {0}")]
    PhysicallyInconsistent(String),

    #[error("invalid trigonometric term: {0}")]
    InvalidTerm(String),

    #[error("atomic spectrum is not Hermitian-symmetric: {0}")]
    NonHermitianSpectrum(String),

    #[error("missing parameter: {0}")]
    MissingParameter(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mu1 must be positive, got {0}")]
    NonPositiveMu1(f64),

    #[error("LMI infeasible: gamma {gamma:.6e} is not below the decay margin {decay_margin:.6e}")]
    Infeasible { gamma: f64, decay_margin: f64 },

    #[error("solved weight matrix is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    IndefinitePi { min_eigenvalue: f64 },

    #[error("every grid point is infeasible (mu1, decay margin): {margins:?}")]
    AllInfeasible { margins: Vec<(f64, f64)> },

    #[error("empty mu1 grid")]
    EmptyGrid,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("CCR matrix is not the canonical block-diagonal symplectic form")]
    NonCanonicalTheta,

    #[error("field coupling is not supported by the Fock oracle: {0}")]
    UnsupportedFieldCoupling(String),

    #[error("invalid Fock space: {0}")]
    InvalidFockSpace(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("trace drift {error:.3e} at t = {time}")]
    TraceDrift { time: f64, error: f64 },

    #[error("population {population:.3e} leaked into the top Fock levels at t = {time}; raise the cutoff")]
    CutoffLeak { time: f64, population: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
