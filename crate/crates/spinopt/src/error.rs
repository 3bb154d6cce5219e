//! Error types shared across the crate.

use thiserror::Error;

/// A captured solver state attached to certain errors so callers can
/// recover the best iterate found so far.
#[derive(Clone)]
pub struct StateCapsule(pub Vec<f64>);

impl std::fmt::Debug for StateCapsule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "StateCapsule(len={})", self.0.len())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad spin, odd grid size, |M| >= F, unknown keys, ...
    #[error("configuration error: {0}")]
    Config(String),

    /// Array shapes inconsistent with the grid or spin.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The quantity u'Γ²u − M² degenerated; the tangent projection is undefined.
    #[error("manifold degeneracy: {0}")]
    Degenerate(String),

    /// Argument lies outside the retraction's domain Ω.
    #[error("point outside retraction domain: {0}")]
    OutsideDomain(String),

    /// Closed-form retraction rejected the step; line searches should shrink it.
    #[error("step too large for closed-form retraction")]
    StepTooLarge,

    /// Scalar root solver failed to reach its tolerance.
    #[error("root solver did not converge: {0}")]
    RootSolve(String),

    /// NaN/Inf encountered or another numerical failure.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A curvilinear search could not find an acceptable step.
    #[error("line search stagnated (gradient norm {grad_norm:.3e})")]
    Stagnation { grad_norm: f64, best: StateCapsule },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
