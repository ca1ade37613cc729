use alloc::vec::Vec;
use core::fmt;

use crate::system::ConfigViolation;

/// Errors produced by the analytic model, the optimizer and the simulator.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the domain of a special function.
    Domain { function: &'static str, value: f64 },
    /// The configuration broke one or more invariants.
    InvalidConfig(Vec<ConfigViolation>),
    /// Decision variables are not feasible for the configuration.
    InvalidVariables(&'static str),
    /// The closed-form feedback error left its small-perturbation regime:
    /// the denominator is non-positive or the result exceeds one.
    ApproximationBreakdown { device: usize, denominator: f64 },
    /// A mixing-matrix block is singular because some device feeds back
    /// too little (σ² ≥ (M−1)/M).
    SingularMixing { device: usize, sigma2: f64 },
    /// An iteration ran out of steps.
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last: f64,
        previous: f64,
    },
    /// The beamformer collapsed to the zero vector.
    DegenerateBeamformer,
}

impl Error {
    /// Re-labels a per-device error with the device index `k` (0-based).
    pub fn at_device(self, k: usize) -> Self {
        match self {
            Error::ApproximationBreakdown { denominator, .. } => Error::ApproximationBreakdown {
                device: k,
                denominator,
            },
            Error::SingularMixing { sigma2, .. } => Error::SingularMixing { device: k, sigma2 },
            other => other,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { function, value } => {
                write!(f, "{function}: argument {value} outside domain")
            }
            Error::InvalidConfig(violations) => {
                write!(f, "invalid configuration: ")?;
                for (i, v) in violations.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            Error::InvalidVariables(msg) => write!(f, "invalid decision variables: {msg}"),
            Error::ApproximationBreakdown {
                device,
                denominator,
            } => write!(
                f,
                "feedback-error closed form invalid for device {} (denominator {denominator:e})",
                device + 1
            ),
            Error::SingularMixing { device, sigma2 } => write!(
                f,
                "mixing matrix singular: device {} has feedback error {sigma2}",
                device + 1
            ),
            Error::NoConvergence {
                what,
                iterations,
                last,
                previous,
            } => write!(
                f,
                "{what} did not converge after {iterations} iterations (last {last:e}, previous {previous:e})"
            ),
            Error::DegenerateBeamformer => write!(f, "beamformer collapsed to zero"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
