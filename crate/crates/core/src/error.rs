use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gamma function pole at x = {0}")]
    Pole(f64),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("Mittag-Leffler evaluation did not converge for alpha={alpha}, beta={beta}, z={z}")]
    NonConvergence { alpha: f64, beta: f64, z: f64 },

    #[error("time {t} outside stored range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("state norm {norm:.3e} exceeded guard at t = {t}")]
    NumericalBlowup { t: f64, norm: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no certificate found (best lambda_max(Omega) = {best_lambda_max:.4e}){}", .obstruction.map(|a| format!("; A + cI has spectral abscissa {a:.4} >= 0, so the LMI is infeasible")).unwrap_or_default())]
    Infeasible {
        best_lambda_max: f64,
        /// Spectral abscissa of the shifted linearisation when it proves infeasibility.
        obstruction: Option<f64>,
    },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("ultimate bound denominator mu - 2(sigma_f + sigma_g) = {0} is not positive")]
    DegenerateDenominator(f64),

    #[error("Caputo derivative needs at least one previous sample")]
    InsufficientHistory,

    #[error("controller design condition violated: {0}")]
    ConditionViolated(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
