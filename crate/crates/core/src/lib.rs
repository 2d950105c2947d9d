//! Analog and digital deep-learned CSI feedback for FDD massive MIMO-OFDM.
//!
//! The crate is organized bottom-up:
//!
//! * [`chanmodel`] generates paired downlink/uplink channels and converts
//!   between the angular-delay and frequency domains.
//! * [`linkphys`] holds the feedback link: subcarrier selection, power
//!   normalization, the SIMO channel, MRC, feedback capacity, the
//!   conjugate-beamforming downlink rate, and NMSE.
//! * [`nn`] is a small convolutional network toolkit with explicit backward passes.
//! * [`analog`] is the channel-in-the-loop analog feedback autoencoder.
//! * [`digital`] is the rate-distortion trained digital baseline.
//! * [`eval`] runs rate-versus-overhead sweeps and writes reports.

pub mod analog;
pub mod backbone;
pub mod chanmodel;
pub mod checkpoint;
pub mod config;
pub mod digital;
pub mod error;
pub mod eval;
pub mod linkphys;
pub mod nn;
pub mod rng;
pub mod selftest;
pub mod training;

pub use chanmodel::{CMatrix, ChannelSample, Dataset, GeometryConfig};
pub use error::{Error, Result};
pub use linkphys::{FeedbackFrame, ReconstructionResult, Scheme, SystemConfig};
