//! Satellite-to-ground free-space QKD link simulation.
//!
//! This crate models the full chain from orbit geometry to secret bits:
//!
//! * [`geometry`] - circular-orbit pass kinematics over a spherical Earth;
//! * [`channel`] - the multiplicative link-efficiency chain (diffraction,
//!   atmosphere, pointing, temporal filter, detector);
//! * [`radiometry`] - solar background and dark-count click probabilities;
//! * [`sources`] - photon-number statistics of ideal and realistic
//!   single-photon sources, weak coherent pulses and decoy mixtures;
//! * [`keyrate_asymptotic`] - gains, QBER and asymptotic secret fractions;
//! * [`keyrate_finite`] - Chernoff/decoy finite-block bounds and the
//!   secret-key-length formulas;
//! * [`optimizer`] - protocol-parameter and transmission-window search;
//! * [`mission`] - spectrum/altitude/offset sweeps and annual key volume;
//! * [`data_io`] - dataset loading, validation and scenario configuration.
//!
//! All models are deterministic; [`montecarlo`] holds the samplers used to
//! validate statistical bound coverage.

pub mod channel;
pub mod data_io;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod keyrate_asymptotic;
pub mod keyrate_finite;
pub mod mission;
pub mod montecarlo;
pub mod optimizer;
pub mod radiometry;
pub mod sources;

pub use error::{Error, Result};
