//! Smoothed online k-server, k-taxi and chasing small sets.
//!
//! Requests drawn from σ-smooth distributions over a ball in a normed space
//! are projected onto an η-net, served there by a finite-metric online
//! algorithm, and the result is compared against exact offline optima.

pub mod combiner;
pub mod error;
pub mod harness;
pub mod metric;
pub mod net;
pub mod lowerbound;
pub mod offline;
pub mod online;
pub mod problems;
pub mod smoothing;

pub use error::{Error, Result};
