use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent input document.
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// |β| fell below the degeneracy floor inside the trigonometric algebra.
    #[error("degenerate frequency |β| = {magnitude:e} (floor {floor:e})")]
    DegenerateFrequency { magnitude: f64, floor: f64 },

    /// The energy sits on an interval height, where the local basis changes type.
    #[error(
        "energy {energy} coincides with height {height} of interval {interval}; \
         shift all heights by a common constant to move off the degeneracy"
    )]
    DegenerateEnergy { interval: usize, energy: f64, height: f64 },

    /// Internal consistency check failed (e.g. non-real value from real data).
    #[error("internal consistency failure: {0}")]
    Consistency(String),

    /// Null space of the matching matrix is not one-dimensional.
    #[error("matching null space has dimension {dimension} at E = {energy}")]
    NullSpace { dimension: usize, energy: f64 },

    /// c(j) + d(j) = 0 blocks the c + d = 1 rescaling of corrections.
    #[error("normalization obstruction: c({domain}) + d({domain}) = {sum:e} vanishes")]
    NormalizationObstruction { domain: usize, sum: f64 },

    /// The linear system of a perturbation order is singular or nearly so.
    #[error("singular correction system at order {order} (condition estimate {condition:e})")]
    DegeneracyParadox { order: usize, condition: f64 },

    /// Power series did not converge within the allowed order.
    #[error("power series not converged at order {order} (residual estimate {residual:e})")]
    Truncation { order: usize, residual: f64 },

    /// Correction requested before its predecessors were computed.
    #[error("order {requested} requested but history only reaches order {available}")]
    Sequencing { requested: usize, available: usize },

    /// A search window contained no root.
    #[error("no eigenvalue found: {0}")]
    NoRoot(String),

    /// Error annotated with the pipeline stage that produced it.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Innermost error, with stage labels stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by the user's input rather than the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self.root(), Error::Schema { .. } | Error::Contract(_))
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), message: message.into() }
    }
}
