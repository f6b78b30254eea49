use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A design matrix is rank deficient or too ill-conditioned to solve.
    #[error("singular design in {context}: condition number {condition:.3e}, offending columns {columns:?}")]
    SingularDesign {
        context: String,
        condition: f64,
        columns: Vec<usize>,
    },

    #[error("empty support: no observation satisfies |eta_hat| <= tau = {tau}")]
    EmptySupport { tau: f64 },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("lasso did not converge after {iterations} sweeps (kkt residual {kkt_residual:.3e})")]
    LassoNotConverged {
        coef: Vec<f64>,
        kkt_residual: f64,
        iterations: usize,
    },

    #[error("bootstrap failure: {failed} of {total} replicates failed")]
    BootstrapFailure { failed: usize, total: usize },

    #[error("monte carlo harness failure: {failed} of {total} replications failed")]
    Harness { failed: usize, total: usize },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column: {0}")]
    MissingColumn(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InsufficientData(_) => "insufficient_data",
            Error::SingularDesign { .. } => "singular_design",
            Error::EmptySupport { .. } => "empty_support",
            Error::DegenerateVariance(_) => "degenerate_variance",
            Error::LassoNotConverged { .. } => "lasso_not_converged",
            Error::BootstrapFailure { .. } => "bootstrap_failure",
            Error::Harness { .. } => "harness_failure",
            Error::Parse { .. } => "parse_error",
            Error::MissingColumn(_) => "missing_column",
            Error::Io(_) => "io_error",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
