use thiserror::Error;

/// Every failure the library can report. Variants carry enough context to
/// print a useful message without a backtrace.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pole hit at z = {re} + {im}i")]
    PoleHit { re: f64, im: f64 },

    #[error("lattice point hit at z = {re} + {im}i")]
    LatticePointHit { re: f64, im: f64 },

    #[error("period violation: two paths disagree by {gap:.3e}")]
    PeriodViolation { gap: f64 },

    #[error("inconsistent multiplicity at end {puncture}: pole order gives {algebraic}, winding gives {winding}")]
    InconsistentMultiplicity {
        puncture: String,
        algebraic: i32,
        winding: i32,
    },

    #[error("quadrature did not converge: {what} (residual {residual:.3e}, value {value:.3e})")]
    NonConvergent {
        what: String,
        residual: f64,
        value: f64,
    },

    #[error("planar input: total curvature vanishes")]
    PlanarInput,

    #[error("mesh failure: {0}")]
    MeshFailure(String),

    #[error("singular pivot at column {column}")]
    SingularPivot { column: usize },

    #[error("exhaustion did not stabilize: counts {counts:?}")]
    NotStabilized { counts: Vec<usize> },

    #[error("eigensolver did not converge after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },

    #[error("inertia check failed: {found} eigenvalues below {shift:.6e}, expected {expected}")]
    InertiaMismatch { shift: f64, expected: usize, found: usize },

    #[error("degenerate basis: Gram matrix smallest eigenvalue {min_eig:.3e}")]
    DegenerateBasis { min_eig: f64 },

    #[error("not an eigenform: {0}")]
    NotEigenform(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub fn pole(z: num_complex::Complex64) -> Self {
        Error::PoleHit { re: z.re, im: z.im }
    }

    /// True for the failure classes that the command line maps to the
    /// "non-convergence" exit status.
    pub fn is_nonconvergence(&self) -> bool {
        matches!(
            self,
            Error::NonConvergent { .. }
                | Error::NotStabilized { .. }
                | Error::ConvergenceFailure { .. }
                | Error::InertiaMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
