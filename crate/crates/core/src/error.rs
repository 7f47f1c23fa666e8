use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("trivial space: X^{{q,p,alpha}} is {{0}} unless q <= alpha <= p (q={q}, p={p}, alpha={alpha})")]
    TrivialSpace { q: f64, p: f64, alpha: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound}")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("function evaluation failed: {0}")]
    Evaluation(String),

    #[error("divergent integral: graded partial sums {partial_sums:?} are not Cauchy")]
    Divergence { partial_sums: Vec<f64> },

    #[error("cdf inversion failed: {0}")]
    Inversion(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. } | Error::Evaluation(_) | Error::Divergence { .. } | Error::Inversion(_) | Error::Internal(_)
        )
    }
}
