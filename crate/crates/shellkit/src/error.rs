//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by the shell-model kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShellError {
    /// `axl` received a matrix whose symmetric part exceeds the skew tolerance.
    #[error("input is not skew-symmetric: symmetric part has norm {sym_norm:e}")]
    NonSkewInput { sym_norm: f64 },

    /// A square root was requested of a matrix that is not symmetric positive definite.
    #[error("matrix is not symmetric positive definite: smallest eigenvalue {min_eigenvalue:e}")]
    NotSpd { min_eigenvalue: f64 },

    /// A determinant fell below the degeneracy threshold.
    #[error("degenerate matrix: determinant {det:e}")]
    Degenerate { det: f64 },

    /// The tangent vectors of a parametrization are (nearly) parallel.
    #[error("degenerate parametrization at ({x1}, {x2}): |d1 x d2| = {area:e}")]
    DegenerateParametrization { x1: f64, x2: f64, area: f64 },

    /// A constrained or infinite-coupling energy was evaluated on an inadmissible state.
    #[error("infinite energy: {reason}")]
    InfiniteEnergy { reason: String },

    /// A form restricted to symmetric arguments received a non-symmetric one.
    #[error("input is not symmetric: skew part has norm {skew_norm:e}")]
    NonSymmetricInput { skew_norm: f64 },

    /// The transverse shear vector does not vanish.
    #[error("transverse shear does not vanish: |T| = {norm:e}")]
    ShearNotZero { norm: f64 },

    /// A thickness or variant condition required by the operation fails.
    #[error("not admissible: {reason}")]
    NotAdmissible { reason: String },

    /// The discrete objective evaluated to NaN or an infinity.
    #[error("objective is not finite")]
    NonFiniteObjective,

    /// The backtracking line search could not find an acceptable step.
    #[error("line search failed: {reason}")]
    LineSearchFailed { reason: String },

    /// A configuration field is missing or out of range.
    #[error("invalid configuration field `{field}`: {reason}")]
    ConfigInvalid { field: String, reason: String },
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, ShellError>;
