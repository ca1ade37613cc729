//! Analytic model, max-min throughput optimizer and Monte-Carlo verifier for
//! FDD multi-user MISO wireless-powered networks with limited CSI feedback.
//!
//! A multi-antenna hybrid access point beams energy to single-antenna devices
//! on a downlink band; the devices spend part of each frame feeding back a
//! quantized channel direction and the rest sending data on the uplink band.
//! The crate computes the resulting rates in closed form ([`rates`]), chooses
//! the bandwidth split, feedback time and energy weights that maximize the
//! worst device's rate ([`optimizer`]), and checks the closed forms against
//! simulated Rayleigh channels ([`montecarlo`]).
//!
//! `no_std` with `alloc`.

#![no_std]
// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod montecarlo;
pub mod optimizer;
pub mod rates;
pub mod specfun;
pub mod system;

pub use error::{Error, Result};
pub use optimizer::{maximize_min_rate, FairnessPartition, OptimizationResult, OptimizerOptions};
pub use rates::{forward_rates, DecisionVariables, RateReport};
pub use specfun::UnitInterval;
pub use system::{path_loss, FadingVector, SystemConfig};
