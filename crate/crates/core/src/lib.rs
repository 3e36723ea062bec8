//! Hidden-dissent measurement for monetary-policy committees.
//!
//! A dual-branch self-attention classifier reads each member's
//! sentence-embedded transcript against the chair's transcript and scores the
//! probability of a NO vote. The remaining modules turn those scores into
//! meeting-level measures and study them with beta and fractional
//! regressions, random-intercept panels, double machine learning and
//! bootstrap event studies.

pub mod corpus;
pub mod covariates;
pub mod dissent;
pub mod econ;
pub mod error;
pub mod market;
pub mod nn;
pub mod pipeline;
pub mod seed;
pub mod synthetic;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
