use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Variants are grouped so the command-line front end can map them onto
/// process exit codes (validation, resource, numeric).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("resource limit exceeded: {what} (requested {requested}, cap {cap})")]
    Resource {
        what: String,
        requested: usize,
        cap: usize,
    },

    #[error("Krylov propagation did not converge: residual {residual:.3e} above tolerance {tolerance:.3e}")]
    Convergence { residual: f64, tolerance: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("norm drift {drift:.3e} exceeds allowed {allowed:.3e}")]
    NormDrift { drift: f64, allowed: f64 },

    #[error("truncation weight {weight:.3e} in one step exceeds ceiling {ceiling:.3e}")]
    Accuracy { weight: f64, ceiling: f64 },

    #[error("equations of motion approach a singular point at tau = {tau:.6}")]
    Singularity { tau: f64 },

    #[error("transfer matrix has a degenerate leading eigenvalue ({0:.3e} gap)")]
    Degeneracy(f64),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("no configuration with {walls} domain walls exists for {n_atoms} atoms")]
    Structural { n_atoms: usize, walls: usize },

    #[error("target {target} outside achievable range [{low}, {high}]")]
    Range { target: f64, low: f64, high: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this error: 2 validation, 3 resource, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_)
            | Error::DegenerateGeometry(_)
            | Error::Shape(_)
            | Error::Empty(_)
            | Error::Structural { .. }
            | Error::Range { .. }
            | Error::Config(_)
            | Error::Json(_) => 2,
            Error::Resource { .. } | Error::Io(_) => 3,
            Error::Convergence { .. }
            | Error::Numeric(_)
            | Error::NormDrift { .. }
            | Error::Accuracy { .. }
            | Error::Singularity { .. }
            | Error::Degeneracy(_)
            | Error::Fit(_) => 4,
        }
    }
}
