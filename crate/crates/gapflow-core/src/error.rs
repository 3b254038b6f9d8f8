use thiserror::Error;

/// Errors produced by spectral-density construction, quadrature and the
/// asymptotic machinery.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation argument violates its documented domain.
    #[error("invalid parameter `{name}` = {value}: {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// A spectral-density definition is internally inconsistent (bad table,
    /// malformed edge profile, negative values, ...).
    #[error("spectral density definition: {0}")]
    SdDefinition(String),

    /// The reservoir does not satisfy the integrability requirement
    /// `int J(w)/w dw < inf` that the gapped-dephasing model assumes.
    #[error("spectral density fails the integrability requirement int J/w dw < inf: {0}")]
    NotIntegrable(String),

    /// An adaptive quadrature exhausted its subdivision budget. The best
    /// estimate and its error bound are carried so callers can decide whether
    /// the partial answer is still useful.
    #[error(
        "quadrature did not converge within {subdivisions} subdivisions: \
         best estimate {estimate:e}, error bound {error_bound:e}"
    )]
    QuadratureNonConvergence {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },

    /// A requested spectral moment diverges for this reservoir's
    /// high-frequency decay.
    #[error("moment `{moment}` diverges: high-frequency decay chi0 = {chi0} is too slow")]
    MomentDivergence { moment: &'static str, chi0: f64 },

    /// The asymptotic decision tree could not classify the edge profile,
    /// typically because the declared expansion is too short to locate the
    /// first non-degenerate term.
    #[error("asymptotic regime unresolved: {0}")]
    UnresolvedRegime(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
