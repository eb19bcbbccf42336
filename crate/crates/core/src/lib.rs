//! Two optically trapped nanoparticles coupled by a phase-modulated optical
//! binding force: stochastic time-domain simulation, rotating-wave analytics,
//! and the spectral analysis pipeline used to characterize the interaction.

pub mod binding;
pub mod correlations;
pub mod error;
pub mod langevin;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod rwa;
pub mod scenarios;
pub mod sigproc;

pub use error::{Error, Result};
