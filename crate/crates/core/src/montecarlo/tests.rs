use super::*;
use crate::rates::harvested_energy as expected_energy;
use crate::specfun::rvq_error_mean;
use alloc::vec;

const SEED: u64 = 42;

fn unit_vector(k: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[i] = 1.0;
    v
}

#[test]
fn same_seed_same_channels() {
    let cfg = SystemConfig::default();
    let a = generate_channels(&cfg, &mut realization_rng(SEED, 3));
    let b = generate_channels(&cfg, &mut realization_rng(SEED, 3));
    assert_eq!(a, b);
    let c = generate_channels(&cfg, &mut realization_rng(SEED, 4));
    assert_ne!(a, c);
}

#[test]
fn fading_has_unit_variance_and_path_loss_scaling() {
    let cfg = SystemConfig::default();
    let b = path_loss(&cfg);
    let trials = 10_000;
    let mut entry = Vec::with_capacity(trials);
    let mut gains = Vec::with_capacity(trials);
    for i in 0..trials as u64 {
        let ch = generate_channels(&cfg, &mut realization_rng(SEED, i));
        entry.push([ch.h_u[(0, 0)].norm_sqr(), ch.h_d[(3, 2)].norm_sqr()]);
        gains.push(
            (0..cfg.devices)
                .map(|k| ch.g_u.column(k).norm_squared() / cfg.antennas as f64 / b[k])
                .collect::<Vec<_>>(),
        );
    }
    let e = TrialStats::from_samples(entry.iter().map(|x| x.as_slice())).unwrap();
    for (m, se) in e.mean.iter().zip(&e.std_err) {
        assert!((m - 1.0).abs() < 3.0 * se, "{m} ± {se}");
    }
    let g = TrialStats::from_samples(gains.iter().map(Vec::as_slice)).unwrap();
    for (m, se) in g.mean.iter().zip(&g.std_err) {
        assert!((m - 1.0).abs() < 3.0 * se, "{m} ± {se}");
    }
}

#[test]
fn zero_error_returns_true_direction() {
    let mut rng = realization_rng(SEED, 0);
    let g = DVector::from_fn(5, |_, _| complex_normal(&mut rng));
    let q = quantize_with_error(&g, UnitInterval::ZERO, &mut rng).unwrap();
    let g_hat = &g / C64::from(g.norm());
    assert!((q.direction - g_hat).norm() < 1e-14);
}

#[test]
fn injected_error_is_exact() {
    let cfg = SystemConfig::default();
    let vars = DecisionVariables::new(0.05, 0.1, vec![0.25; 4]).unwrap();
    for i in 0..200 {
        let o = simulate_realization(&cfg, &vars, &[1.0, 2.5, 4.0, 7.3], SEED, i).unwrap();
        for (a, b) in o.injected_error.iter().zip(&o.measured_error) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn quantized_directions_are_unit_norm() {
    let cfg = SystemConfig::default();
    let real = draw_realization(&cfg, &[0.25; 4], &[3.0; 4], SEED, 0).unwrap();
    for k in 0..4 {
        assert!((real.g_tilde_d.column(k).norm() - 1.0).abs() < 1e-12);
    }
    assert_eq!((real.seed, real.index), (SEED, 0));
}

#[test]
fn rvq_error_mean_over_draws() {
    let (n, m) = (3.0, 4usize);
    let mut rng = realization_rng(SEED, 0);
    let errors: Vec<[f64; 1]> = (0..100_000)
        .map(|_| {
            let g = DVector::from_fn(m, |_, _| complex_normal(&mut rng));
            [apply_rvq(&g, n, &mut rng).unwrap().error]
        })
        .collect();
    let s = TrialStats::from_samples(errors.iter().map(|x| x.as_slice())).unwrap();
    let exact = rvq_error_mean(n, m).unwrap().get();
    assert!((s.mean[0] - exact).abs() < 3.0 * s.std_err[0], "{} vs {exact}", s.mean[0]);
}

/// Error of nearest-codeword quantization against an explicit random codebook.
fn codebook_error<R: Rng>(m: usize, codewords: usize, rng: &mut R) -> f64 {
    let g = DVector::from_fn(m, |_, _| complex_normal(rng));
    let best = (0..codewords)
        .map(|_| {
            let c = DVector::from_fn(m, |_, _| complex_normal(rng));
            1.0 - sin2_angle(&c, &g)
        })
        .fold(0.0, f64::max);
    1.0 - best
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

#[test]
fn sampler_matches_explicit_codebook() {
    let (n, m, trials) = (3u32, 4usize, 10_000);
    let mut rng = realization_rng(SEED, 1);
    let explicit: Vec<f64> = (0..trials).map(|_| codebook_error(m, 1 << n, &mut rng)).collect();
    let sampled: Vec<f64> = (0..trials)
        .map(|_| {
            let g = DVector::from_fn(m, |_, _| complex_normal(&mut rng));
            apply_rvq(&g, n as f64, &mut rng).unwrap().error
        })
        .collect();
    let d = ks_statistic(explicit, sampled);
    let critical = 1.358 * libm::sqrt(2.0 / trials as f64);
    assert!(d < critical, "KS {d} >= {critical}");
}

#[test]
fn single_beam_is_maximum_ratio() {
    let cfg = SystemConfig::default();
    let real = draw_realization(&cfg, &unit_vector(4, 0), &[2.0; 4], SEED, 9).unwrap();
    let w = &real.beamformer.raw;
    assert!((w - real.g_tilde_d.column(0)).norm() < 1e-14);
}

#[test]
fn orthogonal_directions_give_unit_beamformer() {
    let mut g = DMatrix::<C64>::zeros(3, 2);
    g[(0, 0)] = C64::new(1.0, 0.0);
    g[(1, 1)] = C64::new(0.0, 1.0);
    let b = beamformer(&g, &[0.5, 0.5]).unwrap();
    assert!((b.norm - 1.0).abs() < 1e-15);
    assert!((b.direction().norm() - 1.0).abs() < 1e-15);
}

#[test]
fn zero_beamformer_is_an_error() {
    let g = DMatrix::<C64>::zeros(3, 2);
    assert!(matches!(beamformer(&g, &[0.5, 0.5]), Err(Error::DegenerateBeamformer)));
}

#[test]
fn single_device_zero_forcing_is_matched_filter() {
    let mut rng = realization_rng(SEED, 2);
    let g = DMatrix::from_fn(6, 1, |_, _| complex_normal(&mut rng));
    let sinr = zero_forcing_sinr(&g, &[2e-3], 1e-9).unwrap();
    let expected = 2e-3 * g.column(0).norm_squared() / 1e-9;
    assert!((sinr[0] / expected - 1.0).abs() < 1e-10);
}

#[test]
fn rank_deficient_uplink_is_discarded() {
    let mut rng = realization_rng(SEED, 2);
    let col = DVector::from_fn(6, |_, _| complex_normal(&mut rng));
    let g = DMatrix::from_columns(&[col.clone(), col]);
    assert!(zero_forcing_sinr(&g, &[1.0, 1.0], 1.0).is_none());
}

#[test]
fn harvested_energy_matches_mixing_model() {
    let cfg = SystemConfig::default();
    let beta = 0.1;
    let settings: [(Vec<f64>, f64); 5] = [
        (vec![0.25; 4], 4.0),
        (vec![0.7, 0.1, 0.1, 0.1], 2.0),
        (vec![0.0, 0.0, 0.3, 0.7], 6.0),
        (unit_vector(4, 0), 1.0),
        (vec![0.4, 0.3, 0.2, 0.1], 3.0),
    ];
    for (xi, n) in settings {
        let vars = DecisionVariables::new(0.05, beta, xi.clone()).unwrap();
        let outcomes: Vec<Vec<f64>> = (0..10_000)
            .map(|i| simulate_realization(&cfg, &vars, &[n; 4], SEED, i).unwrap().energy)
            .collect();
        let s = TrialStats::from_samples(outcomes.iter().map(Vec::as_slice)).unwrap();
        let sigma2 = vec![rvq_error_mean(n, cfg.antennas).unwrap(); 4];
        let expected = expected_energy(&cfg, UnitInterval::new(beta).unwrap(), &xi, &sigma2);
        for k in 0..4 {
            let gap = (s.mean[k] - expected.energy[k]).abs();
            assert!(gap < 3.0 * s.std_err[k], "xi={xi:?} n={n} k={k}: {} vs {}", s.mean[k], expected.energy[k]);
        }
    }
}

#[test]
fn two_trials_give_finite_error() {
    let cfg = SystemConfig::default();
    let vars = DecisionVariables::new(0.05, 0.1, vec![0.25; 4]).unwrap();
    let e = run_forward_experiment(&cfg, &vars, 2, SEED).unwrap();
    assert!(e.rates.std_err.iter().all(|s| s.is_finite()));
    assert_eq!(e.rates.trials, 2);
}

#[test]
fn zero_feedback_time_still_sends_one_bit() {
    let cfg = SystemConfig::default();
    let vars = DecisionVariables::new(0.0, 0.1, vec![0.25; 4]).unwrap();
    let e = run_forward_experiment(&cfg, &vars, 100, SEED).unwrap();
    assert_eq!(e.n_bits, vec![1.0; 4]);
    assert!(e.analytic.sigma2_uf.iter().all(|s| s.get() == 1.0));
    // one bit of feedback beats none, so the simulation harvests more than the analytic row assumes
    let no_feedback = expected_energy(&cfg, vars.beta, &vars.xi, &e.analytic.sigma2_uf);
    assert!(e.energy.mean[3] > no_feedback.energy[3]);
}

#[test]
fn forward_experiment_is_deterministic() {
    let cfg = SystemConfig::default();
    let vars = DecisionVariables::new(0.05, 0.1, vec![0.25; 4]).unwrap();
    let a = run_forward_experiment(&cfg, &vars, 100, SEED).unwrap();
    let b = run_forward_experiment(&cfg, &vars, 100, SEED).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.discarded, 0);
}

#[test]
fn stream_per_realization_is_prefix_stable() {
    let cfg = SystemConfig::default();
    let vars = DecisionVariables::new(0.05, 0.1, vec![0.25; 4]).unwrap();
    let n = simulation_bits(&forward_rates(&cfg, &vars).unwrap());
    let short: Vec<_> = (0..10).map(|i| simulate_realization(&cfg, &vars, &n, SEED, i).unwrap()).collect();
    let long: Vec<_> = (0..20).map(|i| simulate_realization(&cfg, &vars, &n, SEED, i).unwrap()).collect();
    assert_eq!(short[..], long[..10]);
}

#[test]
fn simulated_rates_track_analytic() {
    let cfg = SystemConfig::default();
    let vars = DecisionVariables::new(0.05, 0.1, vec![0.25; 4]).unwrap();
    let e = run_forward_experiment(&cfg, &vars, 1000, SEED).unwrap();
    for k in 0..4 {
        let analytic = e.analytic.r_w[k];
        assert!((e.rates.mean[k] / analytic - 1.0).abs() < 0.15, "k={k}: {} vs {analytic}", e.rates.mean[k]);
    }
}

#[test]
fn pareto_no_leak_is_identical() {
    let cfg = SystemConfig::default();
    let r = pareto_check(&cfg, 0.1, &[0.25; 4], &[4.0; 4], 0.0, 50, SEED).unwrap();
    assert_eq!(r.quantized, r.leaked);
}

#[test]
fn pareto_leak_loses_energy() {
    let cfg = SystemConfig::default();
    let r = pareto_check(&cfg, 0.1, &[0.25; 4], &[4.0; 4], 0.1, 2000, SEED).unwrap();
    assert_eq!(r.dominates, Some(true));
}

#[test]
fn pareto_below_one_bit_not_asserted() {
    let cfg = SystemConfig::default();
    let r = pareto_check(&cfg, 0.1, &[0.25; 4], &[0.5; 4], 0.1, 50, SEED).unwrap();
    assert_eq!(r.dominates, None);
}
