//! Exhaustive `(α, β)` search, independent of the stationarity conditions.

use alloc::vec::Vec;

use super::{asymptotics, optimal_xi, EnergyAllocation};
use crate::error::Result;
use crate::rates::{feedback_error_closed_form, forward_rates, sinr_decomposition, DecisionVariables, RateReport};
use crate::specfun::UnitInterval;
use crate::system::{path_loss, SystemConfig};

const INNER_MAX_ITER: usize = 200;
const INNER_TOL: f64 = 1e-10;

/// Energy weights that are optimal for the feedback errors they themselves
/// induce at fixed `(α, β)`, found by alternating the closed-form error and
/// the weight solve from `start`.
pub fn inner_xi(config: &SystemConfig, alpha: f64, beta: f64, start: &[f64]) -> Result<EnergyAllocation> {
    let b = path_loss(config);
    let beta = UnitInterval::clamped(beta);
    let mut xi = start.to_vec();
    let mut allocation = None;
    for _ in 0..INNER_MAX_ITER {
        let bounds = sinr_decomposition(config, beta, &xi);
        let sigma2 = bounds
            .gamma_max
            .iter()
            .zip(&bounds.gamma_maxloss)
            .map(|(&g, &l)| feedback_error_closed_form(config, g, l, alpha))
            .collect::<Result<Vec<_>>>()?;
        let next = optimal_xi(&b, &sigma2, config.antennas)?;
        let change: f64 = next.xi.iter().zip(&xi).map(|(a, b)| (a - b) * (a - b)).sum();
        xi.clone_from(&next.xi);
        allocation = Some(next);
        if libm::sqrt(change) < INNER_TOL {
            break;
        }
    }
    Ok(allocation.expect("at least one inner iteration"))
}

/// One evaluated grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub alpha: f64,
    pub beta: f64,
    pub xi: Vec<f64>,
    /// `false` when the weights had to fall back to the large-array limit.
    pub xi_optimal: bool,
    /// `None` when the closed-form model is invalid at this cell.
    pub report: Option<RateReport>,
    /// Worst-device information rate in bit/s; `-∞` for invalid cells.
    pub min_rate: f64,
}

/// Evaluates the min-rate at `(α, β)` with `ξ` re-optimized for that cell.
pub fn grid_point(config: &SystemConfig, alpha: f64, beta: f64, fallback_xi: &[f64]) -> GridPoint {
    let (xi, xi_optimal) = match inner_xi(config, alpha, beta, fallback_xi) {
        Ok(a) => (a.xi, true),
        Err(_) => (fallback_xi.to_vec(), false),
    };
    let report = DecisionVariables::new(alpha, beta, xi.clone())
        .and_then(|v| forward_rates(config, &v))
        .ok();
    let min_rate = report.as_ref().map_or(f64::NEG_INFINITY, RateReport::min_wit_rate);
    GridPoint {
        alpha,
        beta,
        xi,
        xi_optimal,
        report,
        min_rate,
    }
}

/// Evenly spaced points on `[lo, hi]`, endpoints included; a single point sits at `lo`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub alpha: f64,
    pub beta: f64,
    pub xi: Vec<f64>,
    /// bit/s
    pub min_rate: f64,
}

/// Argmax of the worst-device rate over `α ∈ [0, 1]` × `β ∈ [0, P_b/(B s_max)]`.
/// Ties go to the smaller `α`, then the smaller `β`.
pub fn grid_oracle(config: &SystemConfig, n_alpha: usize, n_beta: usize) -> Result<GridOptimum> {
    let config = config.clone().validate()?;
    let fallback = asymptotics(&config)?.xi;
    let mut best: Option<GridPoint> = None;
    for &alpha in &linspace(0.0, 1.0, n_alpha) {
        for &beta in &linspace(0.0, config.max_beta(), n_beta) {
            let point = grid_point(&config, alpha, beta, &fallback);
            if best.as_ref().is_none_or(|b| point.min_rate > b.min_rate) {
                best = Some(point);
            }
        }
    }
    let best = best.ok_or(crate::Error::InvalidVariables("empty grid"))?;
    Ok(GridOptimum {
        alpha: best.alpha,
        beta: best.beta,
        xi: best.xi,
        min_rate: best.min_rate,
    })
}
