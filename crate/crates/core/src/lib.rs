//! Assigning ICF mobility codes to free-text activity reports.
//!
//! Two paradigms are provided: discriminative classification over report
//! features ([`classify`]) and definition-based candidate selection
//! ([`select`]), together with the data model ([`corpus`]), feature
//! construction ([`features`]) and the cross-validation and significance
//! machinery used to compare them ([`eval`]).

pub mod classify;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
mod nn;
pub mod select;
pub mod util;

pub use error::{Error, Result};
pub use nn::AdamConfig;
