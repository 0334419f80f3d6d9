//! Monte Carlo laboratory for two-dimensional critical percolation.
//!
//! Shortest and lowest box crossings, arm events, shielded detours around
//! the lowest crossing, chemical distances, and the experiment and reporting
//! machinery that turns them into scaling estimates.

pub mod arms;
pub mod cli;
pub mod connectivity;
pub mod crossing;
pub mod detour;
pub mod distance;
pub mod error;
pub mod experiment;
mod flow;
pub mod lattice;
pub mod oracle;
pub mod report;
pub mod rng;
mod search;
pub mod stats;
pub mod validate;

pub use error::{Error, Result};
