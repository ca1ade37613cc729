//! Closed-form forward model: harvested energy, SINR decomposition,
//! quantization error of the fed-back channel and the resulting per-device rates.
//!
//! All per-device SINRs share the scale `c = B β s_max (M-K) / σ²`:
//!
//! * `γ^max_k = c b_k² ((M-1) ξ_k + Σξ)` is the SINR under perfect CSI,
//! * `γ^maxloss_k = c M b_k² ξ_k` multiplies the feedback error,
//! * `γ_k = γ^max_k - γ^maxloss_k σ²_k`.
//!
//! The feedback error itself depends on the rate (through the number of
//! feedback bits), which makes the model implicit. [`feedback_error_closed_form`]
//! is the first-order explicit solution; [`implicit_rate_solve`] iterates the
//! exact fixed point and serves as its reference.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::specfun::UnitInterval;
use crate::system::{path_loss, SystemConfig};

/// The optimization triple: feedback time ratio, downlink bandwidth ratio
/// and energy allocation weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVariables {
    pub alpha: UnitInterval,
    pub beta: UnitInterval,
    pub xi: Vec<f64>,
}

const SIMPLEX_TOL: f64 = 1e-12;

impl DecisionVariables {
    pub fn new(alpha: f64, beta: f64, xi: Vec<f64>) -> Result<Self> {
        let alpha = UnitInterval::new(alpha).ok_or(Error::InvalidVariables("alpha outside [0, 1]"))?;
        let beta = UnitInterval::new(beta).ok_or(Error::InvalidVariables("beta outside [0, 1]"))?;
        Ok(Self { alpha, beta, xi })
    }

    /// Checks the simplex constraint on `ξ` and the power budget on `β`.
    pub fn check(&self, config: &SystemConfig) -> Result<()> {
        if self.xi.len() != config.devices {
            return Err(Error::InvalidVariables("xi length differs from K"));
        }
        if self.xi.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::InvalidVariables("xi has a negative entry"));
        }
        let sum: f64 = self.xi.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL * config.devices as f64 {
            return Err(Error::InvalidVariables("xi does not sum to one"));
        }
        if self.beta.get() > config.max_beta() * (1.0 + 1e-12) {
            return Err(Error::InvalidVariables("beta exceeds the power budget"));
        }
        Ok(())
    }
}

/// Per-device SINR under perfect CSI and the loss scale of imperfect CSI.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrBounds {
    pub gamma_max: Vec<f64>,
    pub gamma_maxloss: Vec<f64>,
}

/// [`SinrBounds`] completed with the effective SINR for a given feedback error.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrDecomposition {
    pub gamma_max: Vec<f64>,
    pub gamma_maxloss: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl SinrBounds {
    /// `γ = γ^max - γ^maxloss ⊙ σ²`.
    pub fn with_feedback_error(self, sigma2: &[UnitInterval]) -> SinrDecomposition {
        let gamma = self
            .gamma_max
            .iter()
            .zip(&self.gamma_maxloss)
            .zip(sigma2)
            .map(|((g, l), s)| (g - l * s.get()).max(0.0))
            .collect();
        SinrDecomposition {
            gamma_max: self.gamma_max,
            gamma_maxloss: self.gamma_maxloss,
            gamma,
        }
    }
}

/// Everything the analytic model knows about one operating point. Rates in bit/s.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub sigma2_uf: Vec<UnitInterval>,
    pub sinr: SinrDecomposition,
    pub r: Vec<f64>,
    pub r_w: Vec<f64>,
    pub r_f: Vec<f64>,
    pub n_bits: Vec<f64>,
}

impl RateReport {
    /// Smallest information rate over all devices.
    pub fn min_wit_rate(&self) -> f64 {
        self.r_w.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// The matrix mapping energy weights to expected harvested energy.
///
/// Diagonal `M (1 - σ²_k)`, every off-diagonal entry exactly one. Only the
/// diagonal is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    diagonal: Vec<f64>,
}

impl MixingMatrix {
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let k = self.dim();
        DMatrix::from_fn(k, k, |i, j| if i == j { self.diagonal[i] } else { 1.0 })
    }

    /// Dense principal submatrix on `rows`.
    pub fn submatrix(&self, rows: &[usize]) -> DMatrix<f64> {
        let k = rows.len();
        DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                self.diagonal[rows[i]]
            } else {
                1.0
            }
        })
    }

    /// Matrix-vector product in `O(K)`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let total: f64 = x.iter().sum();
        self.diagonal
            .iter()
            .zip(x)
            .map(|(d, xi)| (d - 1.0) * xi + total)
            .collect()
    }
}

pub fn mixing_matrix(sigma2_uf: &[UnitInterval], antennas: usize) -> MixingMatrix {
    let m = antennas as f64;
    MixingMatrix {
        diagonal: sigma2_uf.iter().map(|s| m * (1.0 - s.get())).collect(),
    }
}

/// Expected downlink energy per frame (J) and the uplink power it sustains (W).
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestedEnergy {
    pub energy: Vec<f64>,
    pub uplink_power: Vec<f64>,
}

/// `ε = T B β s_max b ⊙ (M ξ)` with `M` the mixing matrix, and `p_u = ε / T`.
pub fn harvested_energy(
    config: &SystemConfig,
    beta: UnitInterval,
    xi: &[f64],
    sigma2_uf: &[UnitInterval],
) -> HarvestedEnergy {
    let b = path_loss(config);
    let mixed = mixing_matrix(sigma2_uf, config.antennas).apply(xi);
    let scale = config.frame * config.bandwidth * beta.get() * config.max_psd;
    let energy: Vec<f64> = b.as_slice().iter().zip(&mixed).map(|(b, m)| scale * b * m).collect();
    let uplink_power = energy.iter().map(|e| e / config.frame).collect();
    HarvestedEnergy {
        energy,
        uplink_power,
    }
}

/// `γ^max` and `γ^maxloss` for every device at downlink ratio `beta`.
pub fn sinr_decomposition(config: &SystemConfig, beta: UnitInterval, xi: &[f64]) -> SinrBounds {
    let b = path_loss(config);
    let scale = config.sinr_scale() * beta.get();
    let m = config.antennas as f64;
    let total: f64 = xi.iter().sum();
    let (gamma_max, gamma_maxloss) = b
        .as_slice()
        .iter()
        .zip(xi)
        .map(|(b, x)| {
            let b2 = scale * b * b;
            (b2 * ((m - 1.0) * x + total), b2 * m * x)
        })
        .unzip();
    SinrBounds {
        gamma_max,
        gamma_maxloss,
    }
}

/// `αTB/(M-1)`: feedback bits per unit of `log2(1+γ)`, divided by `M-1`.
#[inline]
pub(crate) fn feedback_exponent(config: &SystemConfig, alpha: f64) -> f64 {
    alpha * config.frame * config.bandwidth / (config.antennas as f64 - 1.0)
}

/// Small parameter of the first-order solution,
/// `max(1, a) γ^maxloss (1+γ^max)^{-a-1}` with `a = αTB/(M-1)`.
///
/// The closed form is accurate while this is small compared to one.
pub fn linearization_residual(config: &SystemConfig, gamma_max: f64, gamma_maxloss: f64, alpha: f64) -> f64 {
    let a = feedback_exponent(config, alpha);
    a.max(1.0) * gamma_maxloss * libm::exp(-(a + 1.0) * libm::log1p(gamma_max))
}

/// First-order closed form of the feedback quantization error:
///
/// `σ² = (1+γ^max) / [(1+γ^max)^{1+a} - a γ^maxloss]`, `a = αTB/(M-1)`.
///
/// Fails with [`Error::ApproximationBreakdown`] when the denominator is not
/// positive or the result exceeds one. The device index in the error is 0;
/// [`forward_rates`] fills in the real one.
pub fn feedback_error_closed_form(
    config: &SystemConfig,
    gamma_max: f64,
    gamma_maxloss: f64,
    alpha: f64,
) -> Result<UnitInterval> {
    let a = feedback_exponent(config, alpha);
    // divide through by (1+γ^max) to keep the power finite
    let denominator = libm::exp(a * libm::log1p(gamma_max)) - a * gamma_maxloss / (1.0 + gamma_max);
    let sigma2 = 1.0 / denominator;
    if !(denominator > 0.0) || sigma2 > 1.0 + 1e-12 {
        return Err(Error::ApproximationBreakdown {
            device: 0,
            denominator,
        });
    }
    Ok(UnitInterval::clamped(sigma2))
}

/// Result of the exact fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitSolution {
    /// Total uplink rate `(1-β) B log2(x)` in bit/s.
    pub rate: f64,
    pub sigma2: UnitInterval,
    /// The fixed point `x = 1 + γ`.
    pub one_plus_sinr: f64,
    pub iterations: usize,
}

const IMPLICIT_MAX_ITER: usize = 10_000;

/// Solves `x = 1 + γ^max - γ^maxloss x^{-a}` by direct iteration from
/// `x = 1 + γ^max`; the feedback error is `x^{-a}`.
pub fn implicit_rate_solve(
    config: &SystemConfig,
    gamma_max: f64,
    gamma_maxloss: f64,
    alpha: f64,
    beta: f64,
) -> Result<ImplicitSolution> {
    let a = feedback_exponent(config, alpha);
    let mut x = 1.0 + gamma_max;
    let mut prev = x;
    for iterations in 1..=IMPLICIT_MAX_ITER {
        let next = 1.0 + gamma_max - gamma_maxloss * libm::pow(x, -a);
        prev = x;
        x = next;
        if (x - prev).abs() < 1e-10 * x {
            return Ok(ImplicitSolution {
                rate: (1.0 - beta) * config.bandwidth * libm::log2(x),
                sigma2: UnitInterval::clamped(libm::pow(x, -a)),
                one_plus_sinr: x,
                iterations,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "implicit rate fixed point",
        iterations: IMPLICIT_MAX_ITER,
        last: x,
        previous: prev,
    })
}

/// Full analytic report at `vars`.
pub fn forward_rates(config: &SystemConfig, vars: &DecisionVariables) -> Result<RateReport> {
    vars.check(config)?;
    let (alpha, beta) = (vars.alpha.get(), vars.beta.get());
    let bounds = sinr_decomposition(config, vars.beta, &vars.xi);
    let sigma2_uf = bounds
        .gamma_max
        .iter()
        .zip(&bounds.gamma_maxloss)
        .enumerate()
        .map(|(k, (&g, &l))| feedback_error_closed_form(config, g, l, alpha).map_err(|e| e.at_device(k)))
        .collect::<Result<Vec<_>>>()?;
    let sinr = bounds.with_feedback_error(&sigma2_uf);
    let r: Vec<f64> = sinr
        .gamma
        .iter()
        .map(|g| (1.0 - beta) * config.bandwidth * libm::log2(1.0 + g))
        .collect();
    let r_w = r.iter().map(|r| (1.0 - alpha) * r).collect();
    let r_f: Vec<f64> = r.iter().map(|r| alpha * r).collect();
    let n_bits = r_f.iter().map(|r| config.frame * r).collect();
    Ok(RateReport {
        sigma2_uf,
        sinr,
        r,
        r_w,
        r_f,
        n_bits,
    })
}
