//! Release criteria. Each test evaluates every check of one criterion, prints
//! one line per check and a final verdict line, then fails if any check did.
//!
//! Run with `cargo test -p wpcn --test acceptance -- --nocapture --test-threads 1`
//! to see the report.

use std::f64::consts::LN_2;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::Rng;
use wpcn::config::reference_scenarios;
use wpcn::experiments::{forward_experiment, parallel_grid_oracle};
use wpcn_core::montecarlo::{
    apply_rvq, complex_normal, draw_realization, harvested_energy as simulated_energy, pareto_check, realization_rng,
    sin2_angle, TrialStats,
};
use wpcn_core::optimizer::{
    asymptotics, device_wit_rate, fairness_radius, optimal_xi, sherman_morrison_inverse,
};
use wpcn_core::rates::{
    feedback_error_closed_form, harvested_energy, implicit_rate_solve, linearization_residual, mixing_matrix,
    sinr_decomposition,
};
use wpcn_core::specfun::{lambert_w0, ln_beta, ln_gamma, rvq_error_mean, rvq_error_sample};
use wpcn_core::{
    forward_rates, path_loss, maximize_min_rate, DecisionVariables, OptimizationResult, OptimizerOptions, SystemConfig,
    UnitInterval,
};

struct Criterion {
    id: u8,
    title: &'static str,
    budget: Duration,
    started: Instant,
    checks: Vec<(bool, String)>,
}

impl Criterion {
    fn start(id: u8, title: &'static str, budget_secs: u64) -> Self {
        Self {
            id,
            title,
            budget: Duration::from_secs(budget_secs),
            started: Instant::now(),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        self.checks.push((ok, detail.into()));
    }

    fn finish(mut self) {
        let elapsed = self.started.elapsed();
        self.check(
            elapsed <= self.budget,
            format!("runtime {:.2} s <= {} s", elapsed.as_secs_f64(), self.budget.as_secs()),
        );
        let failed = self.checks.iter().filter(|(ok, _)| !ok).count();
        for (ok, detail) in &self.checks {
            println!("    [{}] {detail}", if *ok { " ok " } else { "FAIL" });
        }
        let verdict = if failed == 0 { "PASS" } else { "FAIL" };
        println!(
            "criterion {} ({}): {verdict} ({}/{} checks)",
            self.id,
            self.title,
            self.checks.len() - failed,
            self.checks.len()
        );
        assert_eq!(failed, 0, "criterion {} failed {failed} check(s)", self.id);
    }
}

fn rel(got: f64, want: f64) -> f64 {
    (got / want - 1.0).abs()
}

const ANALYTIC_MBPS: [[f64; 4]; 5] = [
    [1.1826, 0.6000, 0.3914, 0.2400],
    [0.8992, 0.8808, 0.3914, 0.2400],
    [0.8992, 0.6000, 0.6644, 0.2400],
    [0.8992, 0.6000, 0.3914, 0.4932],
    [1.0437, 0.7414, 0.5240, 0.3528],
];

const SIMULATION_MBPS: [[f64; 4]; 5] = [
    [1.1740, 0.5309, 0.3669, 0.2036],
    [0.8501, 0.8757, 0.3257, 0.1905],
    [0.8342, 0.5297, 0.6586, 0.2001],
    [0.8308, 0.5308, 0.3395, 0.4577],
    [1.0369, 0.7207, 0.4922, 0.2698],
];

#[test]
fn criterion_1_reference_analytic_rates() {
    let mut c = Criterion::start(1, "reference analytic rates", 1);
    let config = SystemConfig::default();
    for (i, scenario) in reference_scenarios(4).iter().enumerate() {
        let vars = DecisionVariables::new(scenario.alpha, scenario.beta, scenario.xi.clone()).unwrap();
        let report = forward_rates(&config, &vars).unwrap();
        for (k, &want) in ANALYTIC_MBPS[i].iter().enumerate() {
            let got = report.r_w[k] / 1e6;
            c.check(
                rel(got, want) <= 0.01,
                format!("scenario {} device {}: {got:.4} vs {want:.4} Mbit/s (rel {:.2e} <= 1e-2)", i + 1, k + 1, rel(got, want)),
            );
        }
    }
    c.finish();
}

#[test]
fn criterion_2_reference_simulated_rates() {
    let mut c = Criterion::start(2, "reference simulated rates", 120);
    let config = SystemConfig::default();
    for (i, scenario) in reference_scenarios(4).iter().enumerate() {
        let vars = DecisionVariables::new(scenario.alpha, scenario.beta, scenario.xi.clone()).unwrap();
        let exp = forward_experiment(&config, &vars, 1000, 42).unwrap();
        for (k, &reference) in SIMULATION_MBPS[i].iter().enumerate() {
            let mean = exp.rates.mean[k] / 1e6;
            let se = exp.rates.std_err[k] / 1e6;
            let analytic = exp.analytic.r_w[k] / 1e6;
            let gap = (mean - reference).abs();
            c.check(
                gap <= 0.05 * reference || gap <= 3.0 * se,
                format!(
                    "scenario {} device {}: simulated {mean:.4} ± {se:.4} vs reference {reference:.4} (rel {:.3}; need <= 0.05 or <= 3 s.e.)",
                    i + 1,
                    k + 1,
                    gap / reference
                ),
            );
            c.check(
                mean <= analytic + 3.0 * se,
                format!("scenario {} device {}: simulated {mean:.4} <= analytic {analytic:.4} + 3 s.e.", i + 1, k + 1),
            );
        }
    }
    c.finish();
}

fn default_optimum() -> OptimizationResult {
    maximize_min_rate(&SystemConfig::default(), &OptimizerOptions::default()).unwrap()
}

#[test]
fn criterion_3_default_optimum() {
    let mut c = Criterion::start(3, "default optimum", 300);
    let opt = default_optimum();
    let alpha = opt.vars.alpha.get();
    let beta = opt.vars.beta.get();
    c.check((alpha - 0.0558).abs() <= 0.003, format!("alpha* {alpha:.5} within 0.003 of 0.0558"));
    c.check((beta - 0.1802).abs() <= 0.005, format!("beta* {beta:.5} within 0.005 of 0.1802"));
    c.check(
        opt.partition.unfair_set == [0, 1],
        format!("unfair set {:?} (0-based) is {{1, 2}} (1-based)", opt.partition.unfair_set),
    );
    let radius = opt.partition.fairness_radius;
    c.check((radius - 6.03).abs() <= 0.05, format!("fairness radius {radius:.3} m within 0.05 of 6.03 m"));

    let grid = parallel_grid_oracle(&SystemConfig::default(), 200, 200).unwrap();
    c.check((grid.alpha - 0.049).abs() <= 0.005, format!("grid alpha {:.4} within 0.005 of 0.049", grid.alpha));
    c.check((grid.beta - 0.187).abs() <= 0.005, format!("grid beta {:.4} within 0.005 of 0.187", grid.beta));
    let min_rate = opt.report.min_wit_rate();
    c.check(
        rel(min_rate, grid.min_rate) <= 0.005,
        format!(
            "optimum min rate {:.5} vs grid {:.5} Mbit/s (rel {:.2e} <= 5e-3)",
            min_rate / 1e6,
            grid.min_rate / 1e6,
            rel(min_rate, grid.min_rate)
        ),
    );
    c.finish();
}

#[test]
fn criterion_4_antenna_sweep_trend() {
    let mut c = Criterion::start(4, "antenna sweep trend", 300);
    let base = SystemConfig::default();
    let m_list: Vec<usize> = (3..=10).map(|p| 1 << p).collect();
    let runs: Vec<OptimizationResult> = m_list
        .iter()
        .map(|&m| maximize_min_rate(&base.with_antennas(m), &OptimizerOptions::default()).unwrap())
        .collect();
    let gaps: Vec<f64> = runs
        .iter()
        .map(|r| r.report.r_w.iter().copied().fold(f64::MIN, f64::max) - r.report.min_wit_rate())
        .collect();
    let radii: Vec<f64> = runs.iter().map(|r| r.partition.fairness_radius).collect();

    for (i, w) in gaps.windows(2).enumerate() {
        c.check(
            w[1] < w[0],
            format!("rate gap shrinks M={} -> {}: {:.4} -> {:.4} Mbit/s", m_list[i], m_list[i + 1], w[0] / 1e6, w[1] / 1e6),
        );
    }
    for ((&m, r), gap) in m_list.iter().zip(&runs).zip(&gaps) {
        if m >= 512 {
            let relative = gap / r.partition.common_rate;
            c.check(relative < 0.01, format!("M={m}: gap {relative:.4} of common rate < 0.01"));
        }
    }
    for (i, w) in radii.windows(2).enumerate() {
        c.check(
            w[1] < w[0],
            format!("radius decreases M={} -> {}: {:.3} -> {:.3} m", m_list[i], m_list[i + 1], w[0], w[1]),
        );
    }
    // top three octaves: 128..256, 256..512, 512..1024
    let exponent = 1.0 / (2.0 * base.pathloss_exponent);
    let scaled: Vec<f64> = m_list
        .iter()
        .zip(&radii)
        .filter(|(&m, _)| m >= 128)
        .map(|(&m, r)| r * (m as f64).powf(exponent))
        .collect();
    let lo = scaled.iter().copied().fold(f64::MAX, f64::min);
    let hi = scaled.iter().copied().fold(f64::MIN, f64::max);
    c.check(
        (hi - lo) / lo < 0.25,
        format!("radius x M^(1/(2 delta)) over M=128..1024 {scaled:.3?} varies {:.3} < 0.25", (hi - lo) / lo),
    );
    c.finish();
}

#[test]
fn criterion_5_large_array_envelopes() {
    let mut c = Criterion::start(5, "large-array envelopes", 300);
    let config = SystemConfig::default().with_antennas(2048);
    let opt = maximize_min_rate(&config, &OptimizerOptions::default()).unwrap();
    let asym = asymptotics(&config).unwrap();
    let l1: f64 = opt.vars.xi.iter().zip(&asym.xi).map(|(a, b)| (a - b).abs()).sum();
    c.check(l1 < 0.02, format!("|xi* - xi_asym|_1 = {l1:.4} < 0.02 (xi* {:.4?}, xi_asym {:.4?})", opt.vars.xi, asym.xi));

    let within = |ratio: f64| (1.0 / 1.5..=1.5).contains(&ratio);
    let alpha_env = LN_2 / (config.antennas as f64).ln();
    let alpha_ratio = opt.vars.alpha.get() / alpha_env;
    c.check(
        within(alpha_ratio),
        format!("alpha* {:.4} / (ln2 / ln M) {alpha_env:.4} = {alpha_ratio:.3} within factor 1.5", opt.vars.alpha.get()),
    );
    let beta_env = 1.0 / asym.gamma_bar.ln();
    let beta_ratio = opt.vars.beta.get() / beta_env;
    c.check(
        within(beta_ratio),
        format!("beta* {:.4} / (1 / ln gamma_bar) {beta_env:.4} = {beta_ratio:.3} within factor 1.5", opt.vars.beta.get()),
    );
    c.finish();
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn random_simplex<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| -rng.random_range(1e-12f64..1.0).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn random_distances<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut d: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..30.0)).collect();
    d.sort_by(f64::total_cmp);
    d
}

fn unit(x: f64) -> UnitInterval {
    UnitInterval::new(x).unwrap()
}

const POINTS: usize = 100;

#[test]
fn criterion_6_property_suites() {
    let mut c = Criterion::start(6, "property suites", 600);
    let mut rng = realization_rng(2024, 0);

    // special functions
    let mut worst_w = 0.0f64;
    for i in 0..=400 {
        let x = -(-1.0f64).exp() + 1e-6 + (1e12f64).powf(i as f64 / 400.0) - 1.0;
        let w = lambert_w0(x).unwrap();
        worst_w = worst_w.max(((w * w.exp() - x) / x.abs().max(1e-300)).abs());
    }
    c.check(worst_w <= 1e-10, format!("W0(x) e^W0(x) = x on [-1/e, 1e12], worst rel {worst_w:.1e}"));
    let mut factorial = 0.0f64;
    let mut worst_g = 0.0f64;
    for n in 1..=30u32 {
        factorial += (n as f64).ln();
        worst_g = worst_g.max((ln_gamma(n as f64 + 1.0) - factorial).abs() / factorial.max(1.0));
        let (a, b) = (n as f64 * 0.37, 2.5);
        worst_g = worst_g.max((ln_beta(a, b) - (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))).abs());
    }
    c.check(worst_g <= 1e-12, format!("ln Gamma(n+1) = ln n!, ln B via ln Gamma, worst {worst_g:.1e}"));
    let mut worst_q = 0.0f64;
    for &(n, m) in &[(1.0, 2usize), (3.0, 4), (6.5, 10), (12.0, 64)] {
        let codewords = 2f64.powf(n);
        for i in 1..100 {
            let u = i as f64 / 100.0;
            let z = rvq_error_sample(n, m, unit(u)).unwrap().get();
            let survival = (1.0 - z.powi(m as i32 - 1)).powf(codewords);
            worst_q = worst_q.max((1.0 - survival - u).abs());
        }
    }
    c.check(worst_q <= 1e-9, format!("RVQ sampler inverts its CDF, worst {worst_q:.1e}"));

    let (bits, antennas, trials) = (3u32, 4usize, 10_000);
    let explicit: Vec<f64> = (0..trials)
        .map(|_| {
            let g = DVector::from_fn(antennas, |_, _| complex_normal(&mut rng));
            let best = (0..1usize << bits)
                .map(|_| 1.0 - sin2_angle(&DVector::from_fn(antennas, |_, _| complex_normal(&mut rng)), &g))
                .fold(0.0, f64::max);
            1.0 - best
        })
        .collect();
    let sampled: Vec<f64> = (0..trials)
        .map(|_| {
            let g = DVector::from_fn(antennas, |_, _| complex_normal(&mut rng));
            apply_rvq(&g, bits as f64, &mut rng).unwrap().error
        })
        .collect();
    let d = ks_statistic(explicit, sampled);
    let critical = 1.358 * (2.0 / trials as f64).sqrt();
    c.check(d < critical, format!("RVQ sampler vs explicit 8-word codebook, KS {d:.4} < {critical:.4}"));

    // closed-form feedback error vs exact fixed point
    let mut worst = 0.0f64;
    let mut found = 0;
    let mut attempts = 0;
    while found < POINTS && attempts < 1_000_000 {
        attempts += 1;
        let antennas = rng.random_range(6..64);
        let config = SystemConfig::default().with_antennas(antennas);
        let alpha = rng.random_range(0.0..0.3);
        let beta = rng.random_range(0.01..1.0) * config.max_beta();
        let xi = random_simplex(&mut rng, 4);
        let k = rng.random_range(0..4);
        let s = sinr_decomposition(&config, unit(beta), &xi);
        let (g, l) = (s.gamma_max[k], s.gamma_maxloss[k]);
        if linearization_residual(&config, g, l, alpha) > 0.01 {
            continue;
        }
        let Ok(sigma2) = feedback_error_closed_form(&config, g, l, alpha) else {
            continue;
        };
        let closed = (1.0 - beta) * config.bandwidth * (1.0 + g - l * sigma2.get()).log2();
        let exact = implicit_rate_solve(&config, g, l, alpha, beta).unwrap().rate;
        worst = worst.max(rel(closed, exact));
        found += 1;
    }
    c.check(
        found == POINTS && worst <= 1e-3,
        format!("closed form vs fixed point on {found} valid points, worst rel {worst:.1e} <= 1e-3"),
    );

    // Sherman-Morrison inverse
    let mut worst = 0.0f64;
    for _ in 0..POINTS {
        let n = rng.random_range(1..8);
        let antennas = rng.random_range(10..64);
        let s: Vec<UnitInterval> = (0..n).map(|_| unit(rng.random_range(0.0..0.85))).collect();
        let members: Vec<usize> = (0..n).collect();
        let closed = sherman_morrison_inverse(&s, antennas, &members).unwrap();
        let direct = mixing_matrix(&s, antennas).to_dense().try_inverse().unwrap();
        worst = worst.max((closed - direct).amax());
    }
    c.check(worst <= 1e-10, format!("Sherman-Morrison vs direct inverse, worst {worst:.1e} <= 1e-10"));

    // fair-set SINR equality and radius separation
    let mut worst = 0.0f64;
    let mut separated = true;
    for _ in 0..POINTS {
        let k = rng.random_range(1..7);
        let antennas = rng.random_range(k + 6..48);
        let d = random_distances(&mut rng, k);
        let s: Vec<UnitInterval> = (0..k).map(|_| unit(rng.random_range(0.0..0.8))).collect();
        let config = SystemConfig {
            antennas,
            devices: k,
            distances: d.clone(),
            ..SystemConfig::default()
        };
        let b = path_loss(&config);
        let a = optimal_xi(&b, &s, antennas).unwrap();
        let mixed = mixing_matrix(&s, antennas).apply(&a.xi);
        let first = a.fair_set[0];
        let reference = b[first] * b[first] * mixed[first];
        for &i in &a.fair_set {
            worst = worst.max(rel(b[i] * b[i] * mixed[i], reference));
        }
        let r = fairness_radius(&s, &d, config.pathloss_exponent, antennas, &a.fair_set).unwrap();
        separated &= (0..k).all(|i| (d[i] - r).abs() <= 1e-9 || a.unfair_set.contains(&i) == (d[i] < r));
    }
    c.check(worst <= 1e-9, format!("fair-set SINR equality, worst rel {worst:.1e} <= 1e-9"));
    c.check(separated, "fairness radius separates fair and unfair devices");

    // concavity in the feedback ratio
    let mut worst = f64::NEG_INFINITY;
    let mut found = 0;
    while found < POINTS {
        let config = SystemConfig::default().with_antennas(rng.random_range(6..64));
        let beta = rng.random_range(0.05..0.6) * config.max_beta();
        let xi = random_simplex(&mut rng, 4);
        let s = sinr_decomposition(&config, unit(beta), &xi);
        let (g, l) = (s.gamma_max[3], s.gamma_maxloss[3]);
        if g < 4.0 {
            continue;
        }
        found += 1;
        let rates: Vec<f64> = (0..1000)
            .map_while(|i| device_wit_rate(&config, g, l, i as f64 * 1e-3, beta).ok())
            .collect();
        for w in rates.windows(3) {
            worst = worst.max((w[0] - 2.0 * w[1] + w[2]) / w[1].abs().max(1.0));
        }
    }
    c.check(worst <= 1e-9, format!("farthest-device rate concave in alpha when gamma_max >= 4, max second difference {worst:.1e}"));

    // simulated harvested energy vs mixing model
    let config = SystemConfig::default();
    let beta = 0.1;
    for (xi, bits) in [(vec![0.25; 4], 4.0), (vec![0.0, 0.0, 0.3, 0.7], 6.0), (vec![0.4, 0.3, 0.2, 0.1], 2.0)] {
        let samples: Vec<Vec<f64>> = (0..10_000u64)
            .map(|i| {
                let real = draw_realization(&config, &xi, &[bits; 4], 7, i).unwrap();
                simulated_energy(&config, &real.channels.g_d, &real.beamformer.raw, beta)
            })
            .collect();
        let stats = TrialStats::from_samples(samples.iter().map(Vec::as_slice)).unwrap();
        let sigma2 = vec![rvq_error_mean(bits, config.antennas).unwrap(); 4];
        let model = harvested_energy(&config, unit(beta), &xi, &sigma2);
        let z = (0..4)
            .map(|k| (stats.mean[k] - model.energy[k]).abs() / stats.std_err[k])
            .fold(0.0, f64::max);
        c.check(z < 3.0, format!("harvested energy xi={xi:?} bits={bits}: max |z| {z:.2} < 3"));
    }

    // feedback-direction beamformer against power leaked off the fed-back span
    for bits in [1.0, 2.0, 4.0] {
        let r = pareto_check(&config, beta, &[0.25; 4], &[bits; 4], 0.1, 2000, 42).unwrap();
        c.check(r.dominates == Some(true), format!("beamformer dominates a 10% leak at {bits} bit(s)"));
    }
    c.finish();
}
