//! Spectral toolkit for the extended Harper's model.

pub mod arith;
pub mod error;
pub mod localization;
pub mod operator;
pub mod reducibility;
pub mod spectrum;

pub use arith::{BetaEstimate, ContinuedFraction};
pub use error::{EhmError, Result};
