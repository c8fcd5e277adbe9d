//! Expectation-based quantum relational Hoare logic.

pub mod error;
pub mod lang;
pub mod expectations;
pub mod proofs;
pub mod semantics;
pub mod linalg;

pub use error::{Error, Result};
