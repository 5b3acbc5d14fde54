//! Maximizes approximate median significance (AMS) by alternating between
//! cost-sensitive binary classification and a closed-form update of the
//! class-cost parameter.
//!
//! The pieces:
//!
//! * [`significance`]: the AMS family, its conjugate form, and the dual update.
//! * [`data`]: weighted datasets, CSV I/O, stratified splits, synthetic data.
//! * [`learner`]: cost-weighted boosted trees and logistic regression.
//! * [`cascade`]: the alternating drivers, threshold scans and ensembling.
//! * [`verify`]: numerical oracles used by the `check` command.

pub mod cascade;
pub mod data;
mod error;
pub mod learner;
pub mod significance;
pub mod verify;

pub use error::{Error, Result};
