use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("covariance matrix not positive definite at row {row}")]
    CovarianceNotPD { row: usize },
    #[error("matrix not symmetric (residual {residual:e})")]
    NonSymmetric { residual: f64 },
    #[error("Picard iteration did not contract (residual {residual:e} after {iterations} iterations)")]
    NoContraction { residual: f64, iterations: usize },
    #[error("quadrature under-resolved: subgrid doubling changed the result by {change:e}")]
    QuadratureUnderResolved { change: f64 },
    #[error("caustic: |det B| = {det:e} below threshold {threshold:e}")]
    Caustic { det: f64, threshold: f64 },
    #[error("matrix not in the Siegel space (min eigenvalue of Im part {min_eig:e})")]
    NotSiegel { min_eig: f64 },
    #[error("degenerate Hessian in the Gaussian integral (|det| = {det:e})")]
    DegenerateHessian { det: f64 },
    #[error("square-root branch lost: phase jump {jump:.3} rad between checkpoints")]
    BranchLost { jump: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("grid under-resolved: {0}")]
    UnderResolved(String),
    #[error("sequence not Cauchy: {0}")]
    NotCauchy(String),
    #[error("step rejected: mass drift {drift:e} at t = {t}")]
    StepRejected { drift: f64, t: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for the numerical failures the CLI maps to exit code 3.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoContraction { .. }
                | Error::QuadratureUnderResolved { .. }
                | Error::Caustic { .. }
                | Error::UnderResolved(_)
                | Error::DegenerateHessian { .. }
                | Error::BranchLost { .. }
                | Error::NotCauchy(_)
                | Error::StepRejected { .. }
                | Error::CovarianceNotPD { .. }
                | Error::NotSiegel { .. }
        )
    }
}
