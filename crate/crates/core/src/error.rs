use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite integrand value at phi = {phi}")]
    NonFinite { phi: f64 },

    #[error("evaluator failed at radius r = {radius}: {reason}")]
    Evaluator { radius: f64, reason: String },

    #[error("family rejected: {0}")]
    FamilyRejected(String),

    #[error("singular matrix {which} at r = {radius}")]
    Singular { which: &'static str, radius: f64 },

    #[error("step size underflow at t = {t} (h = {h}, error ratio {err_ratio})")]
    StepUnderflow { t: f64, h: f64, err_ratio: f64 },

    #[error("ellipticity violated at grid node ({i}, {j}): discriminant {discriminant}")]
    Ellipticity { i: usize, j: usize, discriminant: f64 },

    #[error("linear solve did not converge; residual history {history:?}")]
    SolverDiverged { history: Vec<f64> },

    #[error("radius {radius} too close to mesh width {h} for interpolation")]
    RadiusTooSmall { radius: f64, h: f64 },

    #[error("configuration invalid: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("stage {stage} failed for family {family}: {source}")]
    Stage { stage: &'static str, family: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Configuration problems, possibly wrapped in a stage context.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
