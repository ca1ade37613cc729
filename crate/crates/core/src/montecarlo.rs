//! Monte-Carlo verification on explicit Rayleigh channels.
//!
//! Each realization draws uplink and downlink fading, quantizes every
//! downlink direction with an exact random-vector-quantization error, forms
//! the energy beamformer, and measures the harvested energy and the
//! zero-forcing uplink rate. Realization `i` of a run with master seed `s`
//! always uses ChaCha8 stream `i` of seed `s`, so results do not depend on
//! how many trials are requested or how they are scheduled.

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rates::{forward_rates, DecisionVariables, RateReport};
use crate::specfun::{rvq_error_sample, UnitInterval};
use crate::system::{path_loss, SystemConfig};

pub type C64 = Complex<f64>;

/// Gram matrices with a larger condition number are treated as singular.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Random stream for realization `index` under `master_seed`.
pub fn realization_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Circularly-symmetric complex Gaussian sample with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

fn complex_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Small-scale fading `H` and its path-loss-scaled version `G = H diag(b^{1/2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channels {
    pub h_u: DMatrix<C64>,
    pub h_d: DMatrix<C64>,
    pub g_u: DMatrix<C64>,
    pub g_d: DMatrix<C64>,
}

pub fn generate_channels<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Channels {
    let (m, k) = (config.antennas, config.devices);
    let scale: Vec<f64> = path_loss(config).as_slice().iter().map(|b| libm::sqrt(*b)).collect();
    let h_u = complex_normal_matrix(m, k, rng);
    let h_d = complex_normal_matrix(m, k, rng);
    let scaled = |h: &DMatrix<C64>| DMatrix::from_fn(m, k, |i, j| h[(i, j)] * scale[j]);
    Channels {
        g_u: scaled(&h_u),
        g_d: scaled(&h_d),
        h_u,
        h_d,
    }
}

/// A fed-back unit direction together with the error it was built to have.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDirection {
    pub direction: DVector<C64>,
    /// `sin²∠(g̃, g)`.
    pub error: f64,
}

/// Squared sine of the angle between two complex vectors.
pub fn sin2_angle(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    let inner = a.dotc(b).norm_sqr();
    1.0 - inner / (a.norm_squared() * b.norm_squared())
}

/// `cosθ ĝ + sinθ û` with `sin²θ = error` and `û` uniform on the unit sphere
/// of the orthogonal complement of `g`.
pub fn quantize_with_error<R: Rng + ?Sized>(
    g: &DVector<C64>,
    error: UnitInterval,
    rng: &mut R,
) -> Result<QuantizedDirection> {
    let norm = g.norm();
    if !(norm > 0.0) {
        return Err(Error::DegenerateBeamformer);
    }
    let g_hat = g / C64::from(norm);
    let z = error.get();
    let perp = loop {
        let u = DVector::from_fn(g.len(), |_, _| complex_normal(rng));
        let projected = &u - &g_hat * g_hat.dotc(&u);
        let n = projected.norm();
        if n > 1e-8 {
            break projected / C64::from(n);
        }
    };
    let direction = g_hat * C64::from(libm::sqrt(1.0 - z)) + perp * C64::from(libm::sqrt(z));
    Ok(QuantizedDirection { direction, error: z })
}

/// Quantizes `g` with an error drawn from the exact RVQ law for `n_bits` bits.
pub fn apply_rvq<R: Rng + ?Sized>(g: &DVector<C64>, n_bits: f64, rng: &mut R) -> Result<QuantizedDirection> {
    let u = UnitInterval::clamped(rng.random::<f64>());
    let z = rvq_error_sample(n_bits, g.len(), u)?;
    quantize_with_error(g, z, rng)
}

/// Energy beamformer `w = G̃ ξ^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    /// Un-normalized combination; unit norm in expectation.
    pub raw: DVector<C64>,
    pub norm: f64,
}

impl Beamformer {
    /// `raw / ‖raw‖`.
    pub fn direction(&self) -> DVector<C64> {
        &self.raw / C64::from(self.norm)
    }
}

pub fn beamformer(g_tilde: &DMatrix<C64>, xi: &[f64]) -> Result<Beamformer> {
    let weights = DVector::from_iterator(xi.len(), xi.iter().map(|x| C64::from(libm::sqrt(x.max(0.0)))));
    let raw = g_tilde * weights;
    let norm = raw.norm();
    if !(norm > 0.0) {
        return Err(Error::DegenerateBeamformer);
    }
    Ok(Beamformer { raw, norm })
}

/// Per-device energy `T B β s_max |g_{d,k}ᴴ w|²` in J.
pub fn harvested_energy(config: &SystemConfig, g_d: &DMatrix<C64>, w: &DVector<C64>, beta: f64) -> Vec<f64> {
    let scale = config.frame * config.bandwidth * beta * config.max_psd;
    (0..config.devices)
        .map(|k| scale * g_d.column(k).dotc(w).norm_sqr())
        .collect()
}

/// Zero-forcing SINR of every device for uplink powers `p_u`, or `None`
/// when the uplink Gram matrix is numerically singular.
pub fn zero_forcing_sinr(g_u: &DMatrix<C64>, p_u: &[f64], noise: f64) -> Option<Vec<f64>> {
    let gram = g_u.adjoint() * g_u;
    let eig = gram.clone().symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if !(lo > 0.0) || hi / lo > MAX_GRAM_CONDITION {
        return None;
    }
    let receiver = g_u * gram.try_inverse()?;
    let k = p_u.len();
    Some(
        (0..k)
            .map(|j| {
                let a = receiver.column(j);
                let signal = p_u[j] * a.dotc(&g_u.column(j)).norm_sqr();
                let interference: f64 = (0..k)
                    .filter(|&i| i != j)
                    .map(|i| p_u[i] * a.dotc(&g_u.column(i)).norm_sqr())
                    .sum();
                signal / (interference + a.norm_squared() * noise)
            })
            .collect(),
    )
}

/// Everything measured on one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationOutcome {
    pub index: u64,
    pub energy: Vec<f64>,
    /// Information rate per device in bit/s; `None` if the realization was discarded.
    pub r_w: Option<Vec<f64>>,
    pub injected_error: Vec<f64>,
    /// `sin²∠(g̃, g)` measured after construction.
    pub measured_error: Vec<f64>,
}

/// Full channel draw with its quantized directions and beamformer.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub channels: Channels,
    pub g_tilde_d: DMatrix<C64>,
    pub injected_error: Vec<f64>,
    pub beamformer: Beamformer,
    pub seed: u64,
    pub index: u64,
}

pub fn draw_realization(
    config: &SystemConfig,
    xi: &[f64],
    n_bits: &[f64],
    seed: u64,
    index: u64,
) -> Result<ChannelRealization> {
    let mut rng = realization_rng(seed, index);
    let channels = generate_channels(config, &mut rng);
    let mut g_tilde_d = DMatrix::zeros(config.antennas, config.devices);
    let mut injected_error = Vec::with_capacity(config.devices);
    for (k, &bits) in n_bits.iter().enumerate().take(config.devices) {
        let g: DVector<C64> = channels.g_d.column(k).into_owned();
        let q = apply_rvq(&g, bits, &mut rng)?;
        g_tilde_d.set_column(k, &q.direction);
        injected_error.push(q.error);
    }
    let beamformer = beamformer(&g_tilde_d, xi)?;
    Ok(ChannelRealization {
        channels,
        g_tilde_d,
        injected_error,
        beamformer,
        seed,
        index,
    })
}

/// Draws realization `index` and measures energy and zero-forcing rates.
pub fn simulate_realization(
    config: &SystemConfig,
    vars: &DecisionVariables,
    n_bits: &[f64],
    seed: u64,
    index: u64,
) -> Result<RealizationOutcome> {
    let real = draw_realization(config, &vars.xi, n_bits, seed, index)?;
    let (alpha, beta) = (vars.alpha.get(), vars.beta.get());
    let energy = harvested_energy(config, &real.channels.g_d, &real.beamformer.raw, beta);
    let p_u: Vec<f64> = energy.iter().map(|e| e / config.frame).collect();
    let r_w = zero_forcing_sinr(&real.channels.g_u, &p_u, config.noise).map(|sinr| {
        sinr.iter()
            .map(|g| (1.0 - alpha) * (1.0 - beta) * config.bandwidth * libm::log2(1.0 + g))
            .collect()
    });
    let measured_error = (0..config.devices)
        .map(|k| {
            let g: DVector<C64> = real.channels.g_d.column(k).into_owned();
            let gt: DVector<C64> = real.g_tilde_d.column(k).into_owned();
            sin2_angle(&gt, &g)
        })
        .collect();
    Ok(RealizationOutcome {
        index,
        energy,
        r_w,
        injected_error: real.injected_error,
        measured_error,
    })
}

/// Componentwise sample mean and standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub trials: usize,
}

impl TrialStats {
    /// `None` for fewer than two samples.
    pub fn from_samples<'a, I>(samples: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
        I::IntoIter: Clone,
    {
        let iter = samples.into_iter();
        let trials = iter.clone().count();
        if trials < 2 {
            return None;
        }
        let dim = iter.clone().next()?.len();
        let mut mean = alloc::vec![0.0; dim];
        for s in iter.clone() {
            for (m, x) in mean.iter_mut().zip(s) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= trials as f64);
        let mut var = alloc::vec![0.0; dim];
        for s in iter {
            for ((v, x), m) in var.iter_mut().zip(s).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std_err = var
            .iter()
            .map(|v| libm::sqrt(v / (trials as f64 - 1.0) / trials as f64))
            .collect();
        Some(Self {
            mean,
            std_err,
            trials,
        })
    }
}

/// Simulated and analytic rates side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardExperiment {
    pub rates: TrialStats,
    pub energy: TrialStats,
    pub analytic: RateReport,
    /// Feedback bits used by the simulation, at least one per device.
    pub n_bits: Vec<f64>,
    pub discarded: usize,
}

/// Bits each device feeds back in simulation: the analytic count, floored at one.
pub fn simulation_bits(analytic: &RateReport) -> Vec<f64> {
    analytic.n_bits.iter().map(|n| n.max(1.0)).collect()
}

/// Aggregates outcomes in index order.
pub fn summarize(analytic: RateReport, n_bits: Vec<f64>, mut outcomes: Vec<RealizationOutcome>) -> Result<ForwardExperiment> {
    outcomes.sort_by_key(|o| o.index);
    let kept: Vec<&[f64]> = outcomes.iter().filter_map(|o| o.r_w.as_deref()).collect();
    let discarded = outcomes.len() - kept.len();
    let too_few = Error::InvalidVariables("fewer than two usable realizations");
    let rates = TrialStats::from_samples(kept.iter().copied()).ok_or(too_few.clone())?;
    let energy = TrialStats::from_samples(outcomes.iter().map(|o| o.energy.as_slice())).ok_or(too_few)?;
    Ok(ForwardExperiment {
        rates,
        energy,
        analytic,
        n_bits,
        discarded,
    })
}

/// Runs `trials` realizations sequentially.
pub fn run_forward_experiment(
    config: &SystemConfig,
    vars: &DecisionVariables,
    trials: usize,
    seed: u64,
) -> Result<ForwardExperiment> {
    let analytic = forward_rates(config, vars)?;
    let n_bits = simulation_bits(&analytic);
    let outcomes = (0..trials as u64)
        .map(|i| simulate_realization(config, vars, &n_bits, seed, i))
        .collect::<Result<Vec<_>>>()?;
    summarize(analytic, n_bits, outcomes)
}

/// Harvested energy of the quantized-direction beamformer against a variant
/// that moves a fraction of its power into the orthogonal complement of the
/// fed-back directions.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoReport {
    pub quantized: TrialStats,
    pub leaked: TrialStats,
    /// Paired per-device difference `ε_quantized - ε_leaked`.
    pub difference: TrialStats,
    /// `None` when some device has less than one feedback bit.
    pub dominates: Option<bool>,
}

pub fn pareto_check(
    config: &SystemConfig,
    beta: f64,
    xi: &[f64],
    n_bits: &[f64],
    leak: f64,
    trials: usize,
    seed: u64,
) -> Result<ParetoReport> {
    let leak = UnitInterval::new(leak).ok_or(Error::InvalidVariables("leak outside [0, 1]"))?;
    let kept_xi: Vec<f64> = xi.iter().map(|x| x * (1.0 - leak.get())).collect();
    let mut quantized = Vec::with_capacity(trials);
    let mut leaked = Vec::with_capacity(trials);
    let mut difference = Vec::with_capacity(trials);
    for index in 0..trials as u64 {
        let real = draw_realization(config, xi, n_bits, seed, index)?;
        let mut rng = realization_rng(seed ^ 0x9e37_79b9_7f4a_7c15, index);
        // unit vector orthogonal to every fed-back direction
        let q = real.g_tilde_d.clone().qr().q();
        let leak_dir = loop {
            let u = DVector::from_fn(config.antennas, |_, _| complex_normal(&mut rng));
            let projected = &u - &q * (q.adjoint() * &u);
            let n = projected.norm();
            if n > 1e-8 {
                break projected / C64::from(n);
            }
        };
        let base = beamformer(&real.g_tilde_d, &kept_xi).map(|b| b.raw).unwrap_or_else(|_| DVector::zeros(config.antennas));
        let w_leak = base + leak_dir * C64::from(libm::sqrt(leak.get()));
        let e_quantized = harvested_energy(config, &real.channels.g_d, &real.beamformer.raw, beta);
        let e_leak = harvested_energy(config, &real.channels.g_d, &w_leak, beta);
        difference.push(e_quantized.iter().zip(&e_leak).map(|(a, b)| a - b).collect::<Vec<_>>());
        quantized.push(e_quantized);
        leaked.push(e_leak);
    }
    let too_few = Error::InvalidVariables("pareto check needs at least two trials");
    let quantized = TrialStats::from_samples(quantized.iter().map(Vec::as_slice)).ok_or(too_few.clone())?;
    let leaked = TrialStats::from_samples(leaked.iter().map(Vec::as_slice)).ok_or(too_few.clone())?;
    let difference = TrialStats::from_samples(difference.iter().map(Vec::as_slice)).ok_or(too_few)?;
    let dominates = n_bits.iter().all(|&n| n >= 1.0).then(|| {
        difference
            .mean
            .iter()
            .zip(&difference.std_err)
            .all(|(m, se)| *m >= -3.0 * se)
    });
    Ok(ParetoReport {
        quantized,
        leaked,
        difference,
        dominates,
    })
}

#[cfg(test)]
mod tests;
