//! Verification engine for weighted Einstein smooth metric measure spaces.
//!
//! The crate evaluates weighted curvature tensors on coordinate charts with a
//! finite-difference oracle, cross-checks them against closed forms for warped
//! products, and classifies the explicit model families.

pub mod catalog;
pub mod classify;
pub mod error;
pub mod tensor_core;
pub mod warped_closed;
pub mod weighted;

pub use error::{Result, SmmsError};
