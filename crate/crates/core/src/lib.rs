//! Learning term-weighting schemes for text classification with genetic
//! programming.
//!
//! The pipeline: load a labelled corpus ([`corpus`]), fit per-term
//! statistics on the training split ([`termstats`]), evolve expressions over
//! those statistics ([`gp`], [`expr`]) using cross-validated macro-F1 of a
//! linear classifier as fitness ([`classifier`]).

pub mod classifier;
pub mod corpus;
pub mod error;
pub mod expr;
pub mod gp;
pub mod model;
pub mod rng;
pub mod termstats;

pub use error::{Error, Result};
