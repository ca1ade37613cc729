//! The batch experiments behind each subcommand. Each returns a [`Table`];
//! realizations, grid cells and antenna counts are evaluated in parallel and
//! collected in input order, so results do not depend on the thread count.

use rayon::prelude::*;
use wpcn_core::montecarlo::{simulate_realization, simulation_bits, summarize, ForwardExperiment};
use wpcn_core::optimizer::{asymptotics, grid_point, linspace, GridOptimum, GridPoint};
use wpcn_core::{forward_rates, maximize_min_rate, DecisionVariables, OptimizationResult, OptimizerOptions, SystemConfig};

use crate::config::Scenario;
use crate::error::{CliError, Result};
use crate::output::{Cell, Table};

const MBPS: f64 = 1e6;

/// Antenna counts swept when none are given: 8, 16, ..., 1024.
pub fn default_m_list() -> Vec<usize> {
    (3..=10).map(|p| 1usize << p).collect()
}

fn per_device(prefix: &str, suffix: &str, devices: usize) -> Vec<String> {
    (1..=devices).map(|k| format!("{prefix}_{k}{suffix}")).collect()
}

fn mbps(values: &[f64]) -> impl Iterator<Item = Cell> + '_ {
    values.iter().map(|v| Cell::Float(v / MBPS))
}

/// 1-based device list such as `3;4`.
fn device_set(indices: &[usize]) -> Cell {
    Cell::Text(indices.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(";"))
}

/// Monte-Carlo and closed-form rates at one operating point, realizations in parallel.
pub fn forward_experiment(config: &SystemConfig, vars: &DecisionVariables, trials: usize, seed: u64) -> Result<ForwardExperiment> {
    let analytic = forward_rates(config, vars)?;
    let n_bits = simulation_bits(&analytic);
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|i| simulate_realization(config, vars, &n_bits, seed, i))
        .collect::<wpcn_core::Result<Vec<_>>>()?;
    Ok(summarize(analytic, n_bits, outcomes)?)
}

pub fn forward(config: &SystemConfig, scenarios: &[Scenario], trials: usize, seed: u64) -> Result<Table> {
    if trials < 2 {
        return Err(CliError::Usage("forward needs --trials >= 2".into()));
    }
    let k = config.devices;
    let mut columns = vec!["scenario".to_owned(), "method".into(), "alpha".into(), "beta".into()];
    columns.extend(per_device("xi", "", k));
    columns.extend(per_device("r_w", "_mbps", k));
    columns.extend(per_device("std_err", "_mbps", k));
    columns.extend(["trials".into(), "discarded".into()]);
    let mut table = Table::new(columns);

    for (i, scenario) in scenarios.iter().enumerate() {
        let vars = scenario.vars(config, i + 1)?;
        let exp = forward_experiment(config, &vars, trials, seed)?;
        let lead = |method: &str| -> Vec<Cell> {
            let mut row = vec![Cell::from(i + 1), method.into(), scenario.alpha.into(), scenario.beta.into()];
            row.extend(scenario.xi.iter().map(|&x| Cell::Float(x)));
            row
        };
        let mut sim = lead("simulation");
        sim.extend(mbps(&exp.rates.mean));
        sim.extend(mbps(&exp.rates.std_err));
        sim.extend([Cell::from(trials), Cell::from(exp.discarded)]);
        table.push(sim);

        let mut analytic = lead("analytic");
        analytic.extend(mbps(&exp.analytic.r_w));
        analytic.extend((0..k).map(|_| Cell::Empty));
        analytic.extend([Cell::Empty, Cell::Empty]);
        table.push(analytic);
    }
    Ok(table)
}

/// Grid cells in row-major order (α outer, β inner), each with re-optimized weights.
pub fn grid_cells(config: &SystemConfig, n_alpha: usize, n_beta: usize) -> Result<Vec<GridPoint>> {
    let config = config.clone().validate()?;
    let fallback = asymptotics(&config)?.xi;
    let alphas = linspace(0.0, 1.0, n_alpha);
    let betas = linspace(0.0, config.max_beta(), n_beta);
    Ok((0..alphas.len() * betas.len())
        .into_par_iter()
        .map(|i| grid_point(&config, alphas[i / betas.len()], betas[i % betas.len()], &fallback))
        .collect())
}

/// First cell with the largest worst-device rate, matching the sequential tie-break.
pub fn best_cell(cells: &[GridPoint]) -> Option<&GridPoint> {
    cells.iter().fold(None, |best: Option<&GridPoint>, p| match best {
        Some(b) if p.min_rate <= b.min_rate => Some(b),
        _ => Some(p),
    })
}

pub fn parallel_grid_oracle(config: &SystemConfig, n_alpha: usize, n_beta: usize) -> Result<GridOptimum> {
    let cells = grid_cells(config, n_alpha, n_beta)?;
    let best = best_cell(&cells).ok_or_else(|| CliError::Usage("grid must have at least one cell".into()))?;
    Ok(GridOptimum {
        alpha: best.alpha,
        beta: best.beta,
        xi: best.xi.clone(),
        min_rate: best.min_rate,
    })
}

fn optimum_columns(devices: usize) -> Vec<String> {
    let mut columns = vec!["alpha".to_owned(), "beta".into()];
    columns.extend(per_device("xi", "", devices));
    columns.extend(["fair_set".into(), "unfair_set".into(), "fairness_radius_m".into(), "common_rate_mbps".into()]);
    columns.extend(per_device("r_w", "_mbps", devices));
    columns.extend(["min_rate_mbps".into(), "iterations".into(), "converged".into()]);
    columns
}

fn optimum_row(opt: &OptimizationResult) -> Vec<Cell> {
    let mut row = vec![Cell::Float(opt.vars.alpha.get()), Cell::Float(opt.vars.beta.get())];
    row.extend(opt.vars.xi.iter().map(|&x| Cell::Float(x)));
    row.extend([
        device_set(&opt.partition.fair_set),
        device_set(&opt.partition.unfair_set),
        opt.partition.fairness_radius.into(),
        (opt.partition.common_rate / MBPS).into(),
    ]);
    row.extend(mbps(&opt.report.r_w));
    row.extend([
        (opt.report.min_wit_rate() / MBPS).into(),
        opt.iterations.into(),
        opt.converged.into(),
    ]);
    row
}

/// `None` skips the grid search.
pub fn optimize(config: &SystemConfig, options: &OptimizerOptions, oracle_grid: Option<(usize, usize)>) -> Result<Table> {
    let opt = maximize_min_rate(config, options)?;
    let mut columns = optimum_columns(config.devices);
    let mut row = optimum_row(&opt);
    if let Some((na, nb)) = oracle_grid {
        let grid = parallel_grid_oracle(config, na, nb)?;
        columns.extend(["oracle_alpha".into(), "oracle_beta".into(), "oracle_min_rate_mbps".into()]);
        row.extend([grid.alpha.into(), grid.beta.into(), (grid.min_rate / MBPS).into()]);
    }
    let mut table = Table::new(columns);
    table.push(row);
    Ok(table)
}

/// Optimum per antenna count with the fairness gap and the scaled radius.
pub fn sweep_m(config: &SystemConfig, m_list: &[usize], options: &OptimizerOptions) -> Result<Table> {
    let results = m_list
        .par_iter()
        .map(|&m| maximize_min_rate(&config.with_antennas(m), options))
        .collect::<wpcn_core::Result<Vec<_>>>()?;
    let mut columns = vec!["antennas".to_owned()];
    columns.extend(optimum_columns(config.devices));
    columns.extend(["rate_gap_mbps".into(), "relative_gap".into(), "scaled_radius".into()]);
    let mut table = Table::new(columns);
    let inv = 1.0 / (2.0 * config.pathloss_exponent);
    for (&m, opt) in m_list.iter().zip(&results) {
        let mut row = vec![Cell::from(m)];
        row.extend(optimum_row(opt));
        let max = opt.report.r_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gap = max - opt.report.min_wit_rate();
        row.extend([
            (gap / MBPS).into(),
            (gap / opt.partition.common_rate).into(),
            (opt.partition.fairness_radius * (m as f64).powf(inv)).into(),
        ]);
        table.push(row);
    }
    Ok(table)
}

/// Long-format rate surface for the selected 1-based devices.
pub fn surface(config: &SystemConfig, n_alpha: usize, n_beta: usize, devices: &[usize]) -> Result<Table> {
    if let Some(&bad) = devices.iter().find(|&&k| k == 0 || k > config.devices) {
        return Err(CliError::Usage(format!("device {bad} outside 1..={}", config.devices)));
    }
    let cells = grid_cells(config, n_alpha, n_beta)?;
    let mut table = Table::new(["alpha", "beta", "wd", "r_w_mbps", "min_rate_mbps", "xi_optimal"]);
    for cell in &cells {
        for &k in devices {
            let rate = cell.report.as_ref().map(|r| r.r_w[k - 1] / MBPS);
            let min_rate = cell.report.as_ref().map(|_| cell.min_rate / MBPS);
            table.push(vec![
                cell.alpha.into(),
                cell.beta.into(),
                k.into(),
                rate.into(),
                min_rate.into(),
                cell.xi_optimal.into(),
            ]);
        }
    }
    Ok(table)
}

pub fn asymptotic_table(config: &SystemConfig, m_list: &[usize]) -> Result<Table> {
    let mut columns = vec!["antennas".to_owned(), "alpha".into(), "beta".into()];
    columns.extend(per_device("xi", "", config.devices));
    columns.extend([
        "gamma_bar".into(),
        "full_csi_radius_m".into(),
        "radius_coefficient_m".into(),
        "ln2_over_ln_m".into(),
        "inv_ln_gamma_bar".into(),
    ]);
    let mut table = Table::new(columns);
    for &m in m_list {
        let a = asymptotics(&config.with_antennas(m).validate()?)?;
        let mut row = vec![Cell::from(m), a.alpha.into(), a.beta.into()];
        row.extend(a.xi.iter().map(|&x| Cell::Float(x)));
        row.extend([
            a.gamma_bar.into(),
            a.full_csi_radius.into(),
            a.radius_coefficient.into(),
            (std::f64::consts::LN_2 / (m as f64).ln()).into(),
            (1.0 / a.gamma_bar.ln()).into(),
        ]);
        table.push(row);
    }
    Ok(table)
}

pub fn oracle(config: &SystemConfig, n_alpha: usize, n_beta: usize) -> Result<Table> {
    let best = parallel_grid_oracle(config, n_alpha, n_beta)?;
    let mut columns = vec!["alpha".to_owned(), "beta".into()];
    columns.extend(per_device("xi", "", config.devices));
    columns.extend(["min_rate_mbps".into(), "grid_alpha".into(), "grid_beta".into()]);
    let mut row = vec![best.alpha.into(), best.beta.into()];
    row.extend(best.xi.iter().map(|&x| Cell::Float(x)));
    row.extend([(best.min_rate / MBPS).into(), n_alpha.into(), n_beta.into()]);
    let mut table = Table::new(columns);
    table.push(row);
    Ok(table)
}
