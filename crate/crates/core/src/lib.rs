//! Polarization-qubit memory in a Bose-Einstein condensate via EIT: Stokes
//! algebra, the Müller-matrix memory model, tomography, slow-light optics,
//! efficiency estimates and curve fitting.

pub mod config;
pub mod constants;
pub mod fitting;
pub mod efficiency;
pub mod eit_optics;
pub mod error;
pub mod figures;
pub mod memory_model;
pub mod numerics;
pub mod polarization;
pub mod tomography;

pub use error::{Error, Result};
