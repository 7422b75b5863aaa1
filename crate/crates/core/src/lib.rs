//! Safety performance function estimation for road segments.
//!
//! The crate covers the full workflow: crash-rate summaries, HSM base-SPF
//! calibration with crash modification factors, fixed-parameter Poisson and
//! NB2 regressions under three functional forms, random-parameter count
//! models fitted by maximum simulated likelihood over Halton draws, and
//! in-sample / out-of-sample evaluation.

pub mod calibration;
pub mod cli;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod likelihood;
pub mod mixed;
pub mod model;
pub mod optimize;

pub use error::{Result, SpfError};
