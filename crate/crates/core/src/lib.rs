//! Multiphoton interference in linear-optical multiport devices.
//!
//! - [`matrix`]: transition matrices, ideal 2×2 and 4×4 splitters, gauge canonicalization.
//! - [`interference`]: permanents, two-photon coincidence probabilities and visibilities,
//!   exact n-photon output distributions.
//! - [`dipmodel`]: dip/peak traces versus delay, jitter and filter bandwidth, fitting.
//! - [`reconstruct`]: recovering a transition matrix from magnitudes and visibilities.
//! - [`io`]: JSON and CSV file formats.

pub mod dipmodel;
pub mod error;
pub mod interference;
pub mod io;
pub mod matrix;
pub mod reconstruct;

pub use error::{Error, Result};
pub use interference::{ModePair, PhotonConfiguration, Statistics, VisibilityMatrix};
pub use matrix::{GaugeClass, TransitionMatrix};
pub use reconstruct::{MagnitudeGrid, ReconstructionOptions, ReconstructionResult};
