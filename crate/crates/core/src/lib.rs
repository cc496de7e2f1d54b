//! Interpretable fuzzy neural networks built on a learnable uninorm-like
//! activation `S(x + y - α)`.
//!
//! Modules:
//! - [`ops`] scalar operators on `[0, 1]`
//! - [`network`] the layered logic network, forward and backward passes
//! - [`training`] minibatch training, evaluation and the dense baseline
//! - [`extract`] logic expressions read off trained networks
//! - [`data`] dataset loading, splitting and synthetic generators

pub mod data;
pub mod error;
pub mod extract;
pub mod network;
pub mod ops;
pub mod training;

pub use error::{Error, Result};
