//! Truncated Fock-space simulator and analytics for multicopy
//! continuous-variable entanglement distillation.
//!
//! The protocol under study interferes M copies of a photon-subtracted
//! two-mode squeezed vacuum on balanced beam-splitter arrays and heralds on
//! vacuum, driving the shared state toward a Gaussian two-mode squeezed
//! vacuum with enhanced squeezing. This crate provides:
//!
//! * [`fock`] — the numerical engine: pure states and density operators on a
//!   truncated multimode Fock lattice, with exact block-diagonal
//!   beam splitters, mode projections, and partial traces;
//! * [`state_prep`] — protocol parameters and input-state builders (two-mode
//!   squeezed vacuum, squeezed thermal states, lossy channels, the auxiliary
//!   state σ);
//! * [`schemes`] — the distillation circuits themselves (two-copy original
//!   and simplified schemes, generalized subtraction, M-copy interferometers,
//!   iterated gaussification);
//! * [`analytics`] — closed-form references for heralded states,
//!   probabilities, variances, and fidelities;
//! * [`measures`] — quadrature covariance, EPR variance, logarithmic
//!   negativity, entropy of entanglement, fidelity, and Gaussian fits;
//! * [`optimize`] — scalar optimization used for optimal-squeezing searches;
//! * [`scan`] — parameter grids evaluated in parallel (or sequentially via
//!   feature flag / runtime switch);
//! * [`figures`] — ready-made data sets for the headline plots;
//! * [`verify`] — the self-check registry wired into the CLI.

pub mod analytics;
pub mod error;
pub mod figures;
pub mod fock;
pub mod measures;
pub mod optimize;
mod parallel;
pub mod scan;
pub mod schemes;
pub mod state_prep;
pub mod verify;

pub use error::{Error, Result};
pub use fock::{C64, DensityOperator, FockState, HeraldedResult, State};
pub use state_prep::{ProtocolParams, ThermalDecomposition};

pub use parallel::{ExecMode, configure_threads};
