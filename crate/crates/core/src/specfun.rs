//! Special functions: principal-branch Lambert W, log-gamma helpers and the
//! exact random-vector-quantization (RVQ) error law.
//!
//! The RVQ error of a `2^n`-entry isotropic codebook in `C^M` is the minimum
//! of `2^n` independent `Beta(M-1, 1)` variates. Its mean has the closed form
//! `2^n B(2^n, M/(M-1))`; both the mean and the inverse CDF below accept a
//! real-valued bit count so that `n = T r_f` need not be an integer.

use core::f64::consts::{E, LN_2};

use crate::error::{Error, Result};

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "f64", into = "f64")
)]
pub struct UnitInterval(f64);

impl UnitInterval {
    pub const ZERO: Self = Self(0.0);
    pub const ONE: Self = Self(1.0);

    /// Returns `None` for values outside `[0, 1]` (including NaN).
    pub fn new(value: f64) -> Option<Self> {
        (0.0..=1.0).contains(&value).then_some(Self(value))
    }

    /// Saturates into `[0, 1]`; NaN maps to zero.
    pub fn clamped(value: f64) -> Self {
        if value.is_nan() {
            Self(0.0)
        } else {
            Self(value.clamp(0.0, 1.0))
        }
    }

    #[inline]
    pub const fn get(self) -> f64 {
        self.0
    }
}

impl From<UnitInterval> for f64 {
    fn from(u: UnitInterval) -> f64 {
        u.0
    }
}

impl TryFrom<f64> for UnitInterval {
    type Error = &'static str;
    fn try_from(value: f64) -> core::result::Result<Self, Self::Error> {
        Self::new(value).ok_or("value outside [0, 1]")
    }
}

const LAMBERT_TOL: f64 = 1e-14;
const LAMBERT_MAX_ITER: usize = 50;

/// Principal branch `W0(x)` of the Lambert W function, `W e^W = x`, `W ≥ -1`.
///
/// Halley iteration from a branch-point series seed near `-1/e`, Winitzki's
/// approximation in the middle range and the `ln x - ln ln x` asymptote for
/// large arguments.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if x.is_nan() || x < branch - 4.0 * f64::EPSILON {
        return Err(Error::Domain {
            function: "lambert_w0",
            value: x,
        });
    }
    if x <= branch {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = if x < -0.25 {
        let p = libm::sqrt(2.0 * (E * x + 1.0));
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        let l = libm::log1p(x);
        l * (1.0 - libm::log1p(l) / (2.0 + l))
    } else {
        let l1 = libm::log(x);
        let l2 = libm::log(l1);
        l1 - l2 + l2 / l1
    };

    for _ in 0..LAMBERT_MAX_ITER {
        let ew = libm::exp(w);
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if libm::fabs(step) <= LAMBERT_TOL * (1.0 + libm::fabs(w)) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

/// `ln Γ(x)` for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln B(a, b)` for moderate positive arguments.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

// Stirling correction terms of ln Γ(z) beyond (z - 1/2) ln z - z + ln(2π)/2,
// with `inv` = 1/z.
fn stirling_tail(inv: f64) -> f64 {
    let inv2 = inv * inv;
    inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// `ln Γ(2^n + q) - ln Γ(2^n)` without forming `2^n` when it would lose
/// precision or overflow.
fn ln_gamma_ratio_pow2(n: f64, q: f64) -> f64 {
    if n < 4.0 {
        let x = libm::exp2(n);
        return ln_gamma(x + q) - ln_gamma(x);
    }
    let inv_x = libm::exp2(-n);
    let t = q * inv_x;
    let l1p = libm::log1p(t);
    let l1p_over_t = if t < 1e-4 {
        1.0 - t / 2.0 + t * t / 3.0 - t * t * t / 4.0
    } else {
        l1p / t
    };
    // (x + q - 1/2) ln(1 + q/x) = q ln(1+t)/t + (q - 1/2) ln(1+t)
    let shifted = q * l1p_over_t + (q - 0.5) * l1p;
    q * n * LN_2 + shifted - q + stirling_tail(inv_x / (1.0 + t)) - stirling_tail(inv_x)
}

fn check_rvq_args(n_bits: f64, antennas: usize) -> Result<()> {
    if antennas < 2 {
        return Err(Error::Domain {
            function: "rvq: antennas",
            value: antennas as f64,
        });
    }
    if n_bits.is_nan() || n_bits < 0.0 {
        return Err(Error::Domain {
            function: "rvq: n_bits",
            value: n_bits,
        });
    }
    Ok(())
}

/// Mean RVQ error `E{sin²∠(g̃, g)} = 2^n B(2^n, M/(M-1))`, evaluated in log space.
pub fn rvq_error_mean(n_bits: f64, antennas: usize) -> Result<UnitInterval> {
    check_rvq_args(n_bits, antennas)?;
    if n_bits.is_infinite() {
        return Ok(UnitInterval::ZERO);
    }
    let q = antennas as f64 / (antennas as f64 - 1.0);
    let ln_mean = n_bits * LN_2 + ln_gamma(q) - ln_gamma_ratio_pow2(n_bits, q);
    Ok(UnitInterval::clamped(libm::exp(ln_mean)))
}

/// Inverse CDF of the RVQ error: `(1 - (1-u)^(1/N))^(1/(M-1))`, `N = 2^n`.
pub fn rvq_error_sample(n_bits: f64, antennas: usize, u: UnitInterval) -> Result<UnitInterval> {
    check_rvq_args(n_bits, antennas)?;
    let u = u.get();
    if u == 0.0 {
        return Ok(UnitInterval::ZERO);
    }
    let inv_n = libm::exp2(-n_bits);
    let inner = -libm::expm1(libm::log1p(-u) * inv_n);
    let z = libm::pow(inner, 1.0 / (antennas as f64 - 1.0));
    Ok(UnitInterval::clamped(z))
}
