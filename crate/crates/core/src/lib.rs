//! Estimating the accuracy distribution of class-incremental learners over
//! all class orderings from a handful of well-chosen sequences.

pub mod bounds;
pub mod cli;
pub mod cluster;
pub mod enumerate;
pub mod error;
pub mod seqgen;
pub mod protocol;
pub mod simio;
pub mod stats;
pub mod surrogate;

pub use error::{Error, Result};
