//! Noise modelling for a microwave cavity coupled to a mechanical mode and
//! driven by several tones: two-tone sideband thermometry, back-action
//! evading (BAE) single-quadrature measurement, and the calibration steps
//! that turn measured spectra into occupancies.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod floquet;
pub mod model;
pub mod plot;
pub mod protocols;
pub mod spectra;
pub mod stochastic;

pub use error::{Error, Result};
pub use model::{HBAR, KB};
