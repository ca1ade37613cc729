//! Large-array limits of the optimal variables.
//!
//! As `M → ∞` the feedback error vanishes, the mixing matrix becomes
//! dominated by its diagonal and every device ends up in the fair set.

use alloc::vec::Vec;
use core::f64::consts::{E, LN_2};

use crate::error::Result;
use crate::specfun::lambert_w0;
use crate::system::{path_loss, SystemConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticValues {
    /// `b^{-2}` normalized to the simplex.
    pub xi: Vec<f64>,
    /// `1 / W0(e γ̄_K)`.
    pub beta: f64,
    /// `ln 2 / W0(TB γ^max_K ln(γ^max_K) ln 2 / (M-1))`.
    pub alpha: f64,
    /// Perfect-CSI fairness radius `(M+K-1)^{-1/(2δ)} ‖d‖_{2δ}` in meters.
    pub full_csi_radius: f64,
    /// `full_csi_radius · M^{1/(2δ)}`, the constant of the `M^{-1/(2δ)}` law.
    pub radius_coefficient: f64,
    /// Per-unit-β SINR of the farthest device at `xi` with perfect CSI.
    pub gamma_bar: f64,
}

pub fn asymptotics(config: &SystemConfig) -> Result<AsymptoticValues> {
    let b = path_loss(config);
    let inv_sq = b.inverse_squares();
    let total: f64 = inv_sq.iter().sum();
    let xi: Vec<f64> = inv_sq.iter().map(|x| x / total).collect();

    let m = config.antennas as f64;
    let last = config.devices - 1;
    let gamma_bar = config.sinr_scale() * b[last] * b[last] * ((m - 1.0) * xi[last] + 1.0);
    let beta = 1.0 / lambert_w0(E * gamma_bar)?;

    let gamma_max = beta * gamma_bar;
    let arg = config.frame * config.bandwidth * gamma_max * libm::log(gamma_max) * LN_2 / (m - 1.0);
    let alpha = LN_2 / lambert_w0(arg)?;

    let two_delta = 2.0 * config.pathloss_exponent;
    let norm = libm::pow(
        config.distances.iter().map(|d| libm::pow(*d, two_delta)).sum::<f64>(),
        1.0 / two_delta,
    );
    let full_csi_radius = libm::pow(m + config.devices as f64 - 1.0, -1.0 / two_delta) * norm;
    let radius_coefficient = full_csi_radius * libm::pow(m, 1.0 / two_delta);

    Ok(AsymptoticValues {
        xi,
        beta,
        alpha,
        full_csi_radius,
        radius_coefficient,
        gamma_bar,
    })
}
