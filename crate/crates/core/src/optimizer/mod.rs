//! Max-min throughput optimization.
//!
//! The worst device's information rate is maximized by alternating three
//! closed-form updates until the energy weights settle:
//!
//! 1. the downlink bandwidth ratio `β` from a Lambert-W stationarity condition,
//! 2. the feedback time ratio `α` from a scalar fixed point,
//! 3. the energy weights `ξ` by solving the mixing-matrix system on the fair set
//!    and dropping devices that would need negative weight.
//!
//! Devices dropped in step 3 sit inside the fairness radius: interference from
//! the beams aimed at farther devices already lifts them above the common rate.

pub mod asymptotics;
mod grid;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::E;

use nalgebra::{DMatrix, DVector};

pub use asymptotics::{asymptotics, AsymptoticValues};
pub use grid::{grid_oracle, grid_point, inner_xi, linspace, GridOptimum, GridPoint};

use crate::error::{Error, Result};
use crate::rates::{
    feedback_error_closed_form, forward_rates, mixing_matrix, sinr_decomposition, DecisionVariables,
    RateReport,
};
use crate::specfun::{lambert_w0, UnitInterval};
use crate::system::{path_loss, FadingVector, SystemConfig};

/// Energy weights with the fair/unfair split that produced them. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyAllocation {
    pub xi: Vec<f64>,
    pub fair_set: Vec<usize>,
    pub unfair_set: Vec<usize>,
    /// Number of solve-and-prune rounds.
    pub rounds: usize,
}

/// Fair/unfair devices, the radius separating them and the rate they share.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessPartition {
    pub fair_set: Vec<usize>,
    pub unfair_set: Vec<usize>,
    /// Meters.
    pub fairness_radius: f64,
    /// Information rate common to the fair set, bit/s.
    pub common_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub vars: DecisionVariables,
    pub partition: FairnessPartition,
    pub report: RateReport,
    pub iterations: usize,
    pub converged: bool,
    /// Worst-device information rate after each outer iteration, bit/s.
    pub min_rate_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub xi_tol: f64,
    pub alpha_tol: f64,
    pub max_outer: usize,
    pub max_alpha_iter: usize,
    /// Start from the large-array values instead of `α = 0`, `β = P_b/(B s_max)`.
    pub asymptotic_init: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            xi_tol: 1e-8,
            alpha_tol: 1e-9,
            max_outer: 500,
            max_alpha_iter: 200,
            asymptotic_init: false,
        }
    }
}

fn check_invertible(sigma2: &[UnitInterval], antennas: usize, members: &[usize]) -> Result<()> {
    let threshold = (antennas as f64 - 1.0) / antennas as f64;
    for &k in members {
        if sigma2[k].get() >= threshold {
            return Err(Error::SingularMixing {
                device: k,
                sigma2: sigma2[k].get(),
            });
        }
    }
    Ok(())
}

/// Optimal energy weights for fixed feedback errors.
///
/// Solves `M_FF ξ_F = b_F^{-2}` on the fair set `F`, moves every index with a
/// non-positive weight to the unfair set and repeats. The farthest device is
/// never removed, so at most `K - 1` prunes happen.
pub fn optimal_xi(b: &FadingVector, sigma2_uf: &[UnitInterval], antennas: usize) -> Result<EnergyAllocation> {
    let k = b.len();
    let mixing = mixing_matrix(sigma2_uf, antennas);
    let inv_sq = b.inverse_squares();
    let mut fair: Vec<usize> = (0..k).collect();
    let mut unfair = Vec::new();
    let mut rounds = 0;
    loop {
        rounds += 1;
        if fair.len() > 1 {
            check_invertible(sigma2_uf, antennas, &fair)?;
        }
        let rhs = DVector::from_iterator(fair.len(), fair.iter().map(|&i| inv_sq[i]));
        let solution = mixing
            .submatrix(&fair)
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularMixing {
                device: fair[0],
                sigma2: sigma2_uf[fair[0]].get(),
            })?;
        let (keep, drop): (Vec<_>, Vec<_>) = fair
            .iter()
            .zip(solution.iter())
            .partition(|(_, &x)| x > 0.0);
        if drop.is_empty() {
            let total: f64 = solution.iter().sum();
            let mut xi = vec![0.0; k];
            for (&i, &x) in fair.iter().zip(solution.iter()) {
                xi[i] = x / total;
            }
            unfair.sort_unstable();
            return Ok(EnergyAllocation {
                xi,
                fair_set: fair,
                unfair_set: unfair,
                rounds,
            });
        }
        if keep.is_empty() {
            // a positive definite system with positive right-hand side cannot
            // zero every weight; reaching here means the mixing matrix is indefinite
            return Err(Error::SingularMixing {
                device: fair[fair.len() - 1],
                sigma2: sigma2_uf[fair[fair.len() - 1]].get(),
            });
        }
        unfair.extend(drop.iter().map(|(&i, _)| i));
        fair = keep.iter().map(|(&i, _)| i).collect();
    }
}

/// `v_k = 1 / ((M-1) - M σ²_k)` on `members`.
fn radius_weights(sigma2_uf: &[UnitInterval], antennas: usize, members: &[usize]) -> Result<Vec<f64>> {
    let m = antennas as f64;
    members
        .iter()
        .map(|&k| {
            let denom = (m - 1.0) - m * sigma2_uf[k].get();
            if denom > 0.0 {
                Ok(1.0 / denom)
            } else {
                Err(Error::Domain {
                    function: "fairness_radius",
                    value: sigma2_uf[k].get(),
                })
            }
        })
        .collect()
}

/// Closed-form inverse of the mixing submatrix on `members`:
/// `diag(v) - v vᵀ / (1 + Σv)`.
pub fn sherman_morrison_inverse(
    sigma2_uf: &[UnitInterval],
    antennas: usize,
    members: &[usize],
) -> Result<DMatrix<f64>> {
    let v = radius_weights(sigma2_uf, antennas, members)?;
    let denom = 1.0 + v.iter().sum::<f64>();
    let n = v.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { v[i] } else { 0.0 };
        diag - v[i] * v[j] / denom
    }))
}

/// Distance below which a device gets no energy weight:
/// `(Σ v_k d_k^{2δ} / (1 + Σ v_k))^{1/(2δ)}` over `members`.
///
/// Evaluated on the final fair set this separates the two sets exactly.
pub fn fairness_radius(
    sigma2_uf: &[UnitInterval],
    distances: &[f64],
    pathloss_exponent: f64,
    antennas: usize,
    members: &[usize],
) -> Result<f64> {
    let v = radius_weights(sigma2_uf, antennas, members)?;
    let two_delta = 2.0 * pathloss_exponent;
    let weighted: f64 = members
        .iter()
        .zip(&v)
        .map(|(&k, v)| v * libm::pow(distances[k], two_delta))
        .sum();
    let denom = 1.0 + v.iter().sum::<f64>();
    Ok(libm::pow(weighted / denom, 1.0 / two_delta))
}

/// Bandwidth ratio maximizing `(1-β) log2(1 + β γ̄)`, capped by `max_beta`.
pub fn optimal_beta(gamma_bar: f64, max_beta: f64) -> UnitInterval {
    let unconstrained = if gamma_bar < 1e-8 {
        // the objective tends to β(1-β)γ̄/ln2, maximized at one half
        0.5
    } else {
        let w = lambert_w0(E * (gamma_bar + 1.0)).unwrap_or(f64::NAN);
        ((gamma_bar + 1.0) / w - 1.0) / gamma_bar
    };
    UnitInterval::clamped(unconstrained.min(max_beta))
}

/// Information rate of one device as a function of `α`, everything else fixed.
pub fn device_wit_rate(
    config: &SystemConfig,
    gamma_max: f64,
    gamma_maxloss: f64,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let sigma2 = feedback_error_closed_form(config, gamma_max, gamma_maxloss, alpha)?.get();
    let gamma = (gamma_max - gamma_maxloss * sigma2).max(0.0);
    Ok((1.0 - alpha) * (1.0 - beta) * config.bandwidth * libm::log2(1.0 + gamma))
}

const ALPHA_FALLBACK_STEP: f64 = 1e-4;
const ALPHA_FALLBACK_MAX: f64 = 0.5;

fn alpha_by_scan(config: &SystemConfig, gamma_max: f64, gamma_maxloss: f64, beta: f64) -> f64 {
    let steps = (ALPHA_FALLBACK_MAX / ALPHA_FALLBACK_STEP) as usize;
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..=steps {
        let alpha = i as f64 * ALPHA_FALLBACK_STEP;
        if let Ok(rate) = device_wit_rate(config, gamma_max, gamma_maxloss, alpha, beta) {
            if rate > best.1 {
                best = (alpha, rate);
            }
        }
    }
    best.0
}

/// Feedback time ratio maximizing the information rate of the device with
/// SINR terms `gamma_max`, `gamma_maxloss` (the farthest one in the optimizer).
///
/// The interior stationary point is the fixed point of
/// `α = log2(γ^maxloss (c+1)/(1+γ^max)) / (c log2(1+γ(α)))`,
/// `c = TB(1-β)/(M-1)`, iterated from zero. It is compared with `α = 0` and
/// the better one returned, ties going to zero. If the interior candidate
/// leaves the region where the closed-form error is valid, a `1e-4` scan of
/// `[0, 0.5]` replaces it.
pub fn optimal_alpha(
    config: &SystemConfig,
    gamma_max: f64,
    gamma_maxloss: f64,
    beta: f64,
    max_iter: usize,
    tol: f64,
) -> Result<UnitInterval> {
    let per_alpha = config.frame * config.bandwidth / (config.antennas as f64 - 1.0);
    let c = per_alpha * (1.0 - beta);
    let arg = gamma_maxloss * (c + 1.0) / (1.0 + gamma_max);
    if !(arg > 1.0) || c <= 0.0 {
        return Ok(UnitInterval::ZERO);
    }
    let numerator = libm::log2(arg) / c;
    let step = |alpha: f64| -> Option<f64> {
        let sigma2 = feedback_error_closed_form(config, gamma_max, gamma_maxloss, alpha).ok()?;
        let one_plus_sinr = 1.0 + gamma_max - gamma_maxloss * sigma2.get();
        let next = numerator / libm::log2(one_plus_sinr);
        (next.is_finite() && (0.0..1.0).contains(&next)).then_some(next)
    };

    let mut alpha = 0.0;
    let mut interior = None;
    let mut breakdown = false;
    for _ in 0..max_iter {
        match step(alpha) {
            Some(next) if (next - alpha).abs() < tol => {
                interior = Some(next);
                break;
            }
            Some(next) => alpha = next,
            None => {
                breakdown = true;
                break;
            }
        }
    }
    let interior = match interior {
        Some(a) if device_wit_rate(config, gamma_max, gamma_maxloss, a, beta).is_ok() => a,
        None if !breakdown => {
            return Err(Error::NoConvergence {
                what: "feedback time fixed point",
                iterations: max_iter,
                last: step(alpha).unwrap_or(f64::NAN),
                previous: alpha,
            })
        }
        _ => alpha_by_scan(config, gamma_max, gamma_maxloss, beta),
    };

    let at_zero = device_wit_rate(config, gamma_max, gamma_maxloss, 0.0, beta)?;
    let at_interior = device_wit_rate(config, gamma_max, gamma_maxloss, interior, beta)
        .unwrap_or(f64::NEG_INFINITY);
    Ok(if at_interior > at_zero {
        UnitInterval::clamped(interior)
    } else {
        UnitInterval::ZERO
    })
}

fn feedback_errors(config: &SystemConfig, alpha: f64, beta: UnitInterval, xi: &[f64]) -> Result<Vec<UnitInterval>> {
    let bounds = sinr_decomposition(config, beta, xi);
    bounds
        .gamma_max
        .iter()
        .zip(&bounds.gamma_maxloss)
        .enumerate()
        .map(|(k, (&g, &l))| feedback_error_closed_form(config, g, l, alpha).map_err(|e| e.at_device(k)))
        .collect()
}

fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Alternating optimization of `β`, `α` and `ξ` for the max-min information rate.
pub fn maximize_min_rate(config: &SystemConfig, options: &OptimizerOptions) -> Result<OptimizationResult> {
    let config = config.clone().validate()?;
    let b = path_loss(&config);
    let last = config.devices - 1;
    let max_beta = config.max_beta();

    let (mut alpha, mut beta, mut xi) = if options.asymptotic_init {
        let asym = asymptotics(&config)?;
        (asym.alpha.min(0.5), asym.beta.min(max_beta), asym.xi)
    } else {
        let inv_sq = b.inverse_squares();
        let total: f64 = inv_sq.iter().sum();
        (0.0, max_beta, inv_sq.iter().map(|x| x / total).collect::<Vec<_>>())
    };

    let mut trace = Vec::new();
    let mut best: Option<(f64, DecisionVariables)> = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_outer {
        iterations += 1;

        let sigma2 = feedback_errors(&config, alpha, UnitInterval::clamped(beta), &xi)?;
        let bounds = sinr_decomposition(&config, UnitInterval::clamped(beta), &xi);
        let total_sinr = (bounds.gamma_max[last] - bounds.gamma_maxloss[last] * sigma2[last].get()).max(0.0);
        let gamma_bar = if beta > 0.0 { total_sinr / beta } else { 0.0 };
        beta = optimal_beta(gamma_bar, max_beta).get();

        let bounds = sinr_decomposition(&config, UnitInterval::clamped(beta), &xi);
        let new_alpha = optimal_alpha(
            &config,
            bounds.gamma_max[last],
            bounds.gamma_maxloss[last],
            beta,
            options.max_alpha_iter,
            options.alpha_tol,
        )?
        .get();

        let sigma2 = feedback_errors(&config, new_alpha, UnitInterval::clamped(beta), &xi)?;
        let allocation = optimal_xi(&b, &sigma2, config.antennas)?;

        let xi_change = l2_distance(&allocation.xi, &xi);
        let alpha_change = (new_alpha - alpha).abs();
        alpha = new_alpha;
        xi = allocation.xi;

        let vars = DecisionVariables::new(alpha, beta, xi.clone())?;
        let min_rate = forward_rates(&config, &vars)?.min_wit_rate();
        trace.push(min_rate);
        if best.as_ref().is_none_or(|(r, _)| min_rate > *r) {
            best = Some((min_rate, vars));
        }

        if xi_change < options.xi_tol && alpha_change < options.alpha_tol {
            converged = true;
            break;
        }
    }

    let vars = if converged {
        DecisionVariables::new(alpha, beta, xi)?
    } else {
        best.map(|(_, v)| v)
            .ok_or(Error::InvalidVariables("no outer iteration ran"))?
    };
    let report = forward_rates(&config, &vars)?;
    let allocation = optimal_xi(&b, &report.sigma2_uf, config.antennas)?;
    let partition = partition_for(&config, &report, allocation.fair_set, allocation.unfair_set)?;

    Ok(OptimizationResult {
        vars,
        partition,
        report,
        iterations,
        converged,
        min_rate_trace: trace,
    })
}

fn partition_for(
    config: &SystemConfig,
    report: &RateReport,
    fair_set: Vec<usize>,
    unfair_set: Vec<usize>,
) -> Result<FairnessPartition> {
    let fairness_radius = fairness_radius(
        &report.sigma2_uf,
        &config.distances,
        config.pathloss_exponent,
        config.antennas,
        &fair_set,
    )?;
    let common_rate = report.r_w[*fair_set.last().unwrap_or(&(config.devices - 1))];
    Ok(FairnessPartition {
        fair_set,
        unfair_set,
        fairness_radius,
        common_rate,
    })
}
