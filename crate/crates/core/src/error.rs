//! Crate-wide error type.

use alloc::string::String;

/// Everything that can go wrong across the simulator modules.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("pulse mode index {p} outside 0..={max}")]
    ModeOutOfRange { p: usize, max: usize },
    #[error("pulse coupling must be finite and non-negative, got {0}")]
    BadCoupling(f64),
    #[error("spontaneous-emission probability {0} outside [0, 1/2]")]
    EtaOutOfRange(f64),
    #[error("degenerate target: every squeezing fraction is zero")]
    DegenerateTarget,
    #[error("infeasible target: requested max coupling {requested}, achievable {achievable}")]
    InfeasibleTarget { requested: f64, achievable: f64 },
    #[error("tabulated target misses separation {missing} (grid must cover 1..={needed})")]
    TabulatedGridIncomplete { missing: usize, needed: usize },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("oracle dimension guard: n_s = {n_s} exceeds {max}")]
    DimensionGuard { n_s: usize, max: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("witness bins invalid: {0}")]
    BadBins(String),
    #[error("witness geometry does not fit the lattice: {0}")]
    GeometryOverflow(String),
    #[error("fit needs at least {needed} usable points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("no decay to fit: {0}")]
    NoDecay(String),
    #[error("zero variance: {0}")]
    ZeroVariance(String),
    #[error("numerical invariant violated: {0}")]
    InvariantViolation(String),
}
