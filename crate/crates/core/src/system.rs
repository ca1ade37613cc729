//! Physical configuration of the network and the large-scale fading model.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Static parameters of the hybrid access point (HAP) and its wireless devices (WDs).
///
/// Serialized field names follow the conventional symbols so configuration
/// files stay short: `M`, `K`, `B`, `T`, `s_max`, `P_b`, `sigma2_un`, `c0`,
/// `d0`, `delta`, `d`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct SystemConfig {
    /// Number of HAP antennas.
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    pub antennas: usize,
    /// Number of single-antenna devices.
    #[cfg_attr(feature = "serde", serde(rename = "K"))]
    pub devices: usize,
    /// Total bandwidth in Hz, split between downlink energy and uplink data.
    #[cfg_attr(feature = "serde", serde(rename = "B"))]
    pub bandwidth: f64,
    /// Frame length in seconds.
    #[cfg_attr(feature = "serde", serde(rename = "T"))]
    pub frame: f64,
    /// Maximum transmit power spectral density in W/Hz.
    #[cfg_attr(feature = "serde", serde(rename = "s_max"))]
    pub max_psd: f64,
    /// HAP power budget in W.
    #[cfg_attr(feature = "serde", serde(rename = "P_b"))]
    pub power_budget: f64,
    /// Uplink noise variance in W.
    #[cfg_attr(feature = "serde", serde(rename = "sigma2_un"))]
    pub noise: f64,
    /// Attenuation at the reference distance.
    #[cfg_attr(feature = "serde", serde(rename = "c0"))]
    pub ref_attenuation: f64,
    /// Reference distance in m.
    #[cfg_attr(feature = "serde", serde(rename = "d0"))]
    pub ref_distance: f64,
    /// Path-loss exponent.
    #[cfg_attr(feature = "serde", serde(rename = "delta"))]
    pub pathloss_exponent: f64,
    /// Device distances in m, nearest first.
    #[cfg_attr(feature = "serde", serde(rename = "d"))]
    pub distances: Vec<f64>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            antennas: 10,
            devices: 4,
            bandwidth: 1e5,
            frame: 1e-3,
            max_psd: 1e-4,
            power_budget: 10.0,
            noise: 1e-12,
            ref_attenuation: 1e-3,
            ref_distance: 1.0,
            pathloss_exponent: 3.0,
            distances: vec![4.0, 6.0, 8.0, 10.0],
        }
    }
}

/// A single broken configuration invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigViolation {
    TooFewAntennas { antennas: usize, devices: usize },
    NoDevices,
    DistanceCount { devices: usize, distances: usize },
    NonPositiveDistance { index: usize, value: f64 },
    UnsortedDistances { index: usize },
    PowerBudgetExceedsMask { budget: f64, mask: f64 },
    NonPositive { field: &'static str, value: f64 },
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooFewAntennas { antennas, devices } => {
                write!(f, "M > K violated (M = {antennas}, K = {devices})")
            }
            Self::NoDevices => write!(f, "K >= 1 violated"),
            Self::DistanceCount { devices, distances } => {
                write!(f, "distance count {distances} does not match K = {devices}")
            }
            Self::NonPositiveDistance { index, value } => {
                write!(f, "distance d[{index}] = {value} is not positive")
            }
            Self::UnsortedDistances { index } => {
                write!(f, "distances not sorted (d[{index}] < d[{}])", index - 1)
            }
            Self::PowerBudgetExceedsMask { budget, mask } => {
                write!(f, "P_b <= B*s_max violated ({budget} > {mask})")
            }
            Self::NonPositive { field, value } => write!(f, "{field} = {value} is not positive"),
        }
    }
}

impl SystemConfig {
    /// Checks every invariant and reports all violations at once.
    pub fn violations(&self) -> Vec<ConfigViolation> {
        let mut out = Vec::new();
        if self.devices == 0 {
            out.push(ConfigViolation::NoDevices);
        }
        if self.antennas <= self.devices {
            out.push(ConfigViolation::TooFewAntennas {
                antennas: self.antennas,
                devices: self.devices,
            });
        }
        if self.distances.len() != self.devices {
            out.push(ConfigViolation::DistanceCount {
                devices: self.devices,
                distances: self.distances.len(),
            });
        }
        for (index, &value) in self.distances.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                out.push(ConfigViolation::NonPositiveDistance { index, value });
            }
        }
        for index in 1..self.distances.len() {
            if self.distances[index] < self.distances[index - 1] {
                out.push(ConfigViolation::UnsortedDistances { index });
            }
        }
        for (field, value) in [
            ("B", self.bandwidth),
            ("T", self.frame),
            ("s_max", self.max_psd),
            ("P_b", self.power_budget),
            ("sigma2_un", self.noise),
            ("c0", self.ref_attenuation),
            ("d0", self.ref_distance),
            ("delta", self.pathloss_exponent),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                out.push(ConfigViolation::NonPositive { field, value });
            }
        }
        let mask = self.bandwidth * self.max_psd;
        if self.power_budget > mask * (1.0 + 1e-12) {
            out.push(ConfigViolation::PowerBudgetExceedsMask {
                budget: self.power_budget,
                mask,
            });
        }
        out
    }

    /// Returns the configuration unchanged iff it satisfies every invariant.
    pub fn validate(self) -> Result<Self> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidConfig(violations))
        }
    }

    /// Largest admissible downlink bandwidth ratio, `P_b / (B s_max)` capped at one.
    pub fn max_beta(&self) -> f64 {
        (self.power_budget / (self.bandwidth * self.max_psd)).min(1.0)
    }

    /// `B s_max (M-K) / σ²`, the SINR scale shared by every per-device term.
    pub(crate) fn sinr_scale(&self) -> f64 {
        self.bandwidth * self.max_psd * (self.antennas - self.devices) as f64 / self.noise
    }

    /// Copy with a different antenna count.
    pub fn with_antennas(&self, antennas: usize) -> Self {
        Self {
            antennas,
            ..self.clone()
        }
    }
}

/// Large-scale fading coefficients `b_k`, one per device.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingVector(Vec<f64>);

impl FadingVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `b_k^{-2}` for every device.
    pub fn inverse_squares(&self) -> Vec<f64> {
        self.0.iter().map(|b| 1.0 / (b * b)).collect()
    }
}

impl core::ops::Index<usize> for FadingVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Power-law attenuation `b_k = c0 (d_k / d0)^{-δ}`.
pub fn path_loss(config: &SystemConfig) -> FadingVector {
    FadingVector(
        config
            .distances
            .iter()
            .map(|&d| {
                config.ref_attenuation * libm::pow(d / config.ref_distance, -config.pathloss_exponent)
            })
            .collect(),
    )
}
