//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building states, running heralded
/// circuits, or evaluating the closed-form benchmarks.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Tensor products and two-state measures require both operands to be
    /// pure or both mixed; convert explicitly with `to_density` first.
    #[error("state kinds do not match (pure vs mixed); convert with to_density first")]
    KindMismatch,

    #[error("mode index {mode} out of range for a {modes}-mode state")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("operation requires two distinct modes, got mode {0} twice")]
    EqualModes(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested herald outcome carries (numerically) no probability.
    #[error("herald outcome has probability {probability:.3e}, below the floor {floor:.3e}")]
    HeraldImpossible { probability: f64, floor: f64 },

    /// Accumulated truncation loss exceeded the acceptable limit; rerun with
    /// a larger per-mode cutoff.
    #[error("cutoff too small: estimated truncation loss {deficit:.3e} exceeds {limit:.3e}")]
    CutoffTooSmall { deficit: f64, limit: f64 },

    #[error("cannot normalize a state with zero norm")]
    ZeroState,

    #[error("partial trace requires a nonempty, strictly increasing list of kept modes")]
    BadKeepList,

    /// The stationarity condition for the ancilla gain degenerates at mu = 0
    /// (every gain is stationary); callers must handle this explicitly.
    #[error("stationarity condition degenerates at mu = 0")]
    DegenerateStationarity,

    #[error("bracket [{lo}, {hi}] shows no interior point below both endpoints")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("operation requires a two-mode state, got {0} modes")]
    NotTwoMode(usize),

    /// States combined in a binary operation must share per-mode cutoffs.
    #[error("cutoff mismatch between operands: {0:?} vs {1:?}")]
    CutoffMismatch(Vec<usize>, Vec<usize>),
}

pub type Result<T> = std::result::Result<T, Error>;
