//! Simulation of the driving processes and of the jump-diffusion pair `(A, X)`.
//!
//! Every path lives on a [`TimeGrid`] that contains all jump times of the
//! compound-Poisson drivers, so left limits `X_{s-}` are available on-grid.

mod brownian;
mod bundle;
mod grid;
mod jumps;
mod sde;

pub use brownian::simulate_brownian;
pub use bundle::{Decomposition, JumpRecord, PathBundle, PathState};
pub use grid::{build_grid, TimeGrid};
pub use jumps::{simulate_compound_poisson, JumpEvent, JumpLaw, JumpTrain};
pub use sde::{simulate_jump_diffusion, FnOfState, JumpSource, SdeSpec};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("time horizon must be positive and finite, got {0}")]
    NonPositiveHorizon(f64),
    #[error("at least one step is required")]
    NoSteps,
    #[error("jump time {time} lies outside (0, {t_end}]")]
    JumpTimeOutOfRange { time: f64, t_end: f64 },
    #[error("jump intensity must be nonnegative and finite, got {0}")]
    NegativeRate(f64),
    #[error("invalid jump-size law: {0}")]
    InvalidJumpLaw(String),
    #[error("non-finite {quantity} at t = {time}")]
    NonFinite { quantity: &'static str, time: f64 },
    #[error("inconsistent path data: {0}")]
    Inconsistent(String),
}
