//! Simulation and reconstruction of video captured through a non-regular
//! sampling sensor.
//!
//! A low-resolution sensor whose pixels each expose one random quadrant
//! yields a high-resolution frame with 25% of its pixels known. This crate
//! fills the rest with frequency selective extrapolation, either per frame
//! or with extra samples projected in from motion-compensated neighbours.

pub mod config;
pub mod error;
pub mod eval;
pub mod frame;
pub mod fse;
pub mod mask;
pub mod motion;
pub mod multiframe;
pub mod pgm;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
pub use frame::Frame;
pub use fse::FseParams;
pub use mask::{SampledFrame, SamplingMask};
pub use motion::{MotionParams, MotionVectorField};
