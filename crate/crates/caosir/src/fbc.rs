//! Scalar finite-blocklength coding primitives.
//!
//! Everything here works in bits (base-2 logarithms) on linear receiver-side
//! SNR values. The normal approximation for the maximal coding rate over an
//! AWGN channel at blocklength `n` and error probability `eps` is
//!
//! ```text
//! R*(eps) = C(rho) - sqrt(V(rho)/n) * Qinv(eps) + log2(n)/(2n)
//! ```
//!
//! with `C` the channel capacity and `V` the channel dispersion. Capacity and
//! dispersion come in a real-channel and a complex-channel flavour selected by
//! [`DimMode`]; the complex values are exactly twice the real ones.

use std::f64::consts::{LOG2_E, SQRT_2};

use thiserror::Error;

/// Channel dimension the capacity/dispersion formulas are evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DimMode {
    /// Real AWGN channel: `C = (1/2) log2(1+rho)`.
    Real,
    /// Complex AWGN channel: `C = log2(1+rho)`.
    Complex,
}

/// Finite-blocklength operating point: blocklength, destination error budget
/// and channel dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbcParams {
    pub n: u64,
    pub eps_d: f64,
    pub mode: DimMode,
}

impl FbcParams {
    pub fn new(n: u64, eps_d: f64, mode: DimMode) -> Result<Self, FbcError> {
        if n < 2 {
            return Err(FbcError::BlocklengthTooSmall(n));
        }
        if !(eps_d > 0.0 && eps_d < 0.5) {
            return Err(FbcError::ErrorBudgetOutOfRange(eps_d));
        }
        Ok(Self { n, eps_d, mode })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FbcError {
    #[error("probability {0} is outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("blocklength {0} is below the minimum of 2")]
    BlocklengthTooSmall(u64),
    #[error("destination error budget {0} must lie in (0, 0.5)")]
    ErrorBudgetOutOfRange(f64),
}

/// Gaussian Q function, the upper tail of the standard normal distribution.
pub fn q_func(x: f64) -> f64 {
    debug_assert!(x.is_finite());
    0.5 * libm::erfc(x / SQRT_2)
}

/// Standard normal density. This is `-d/dx Q(x)`.
pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

// Coefficients of Acklam's rational approximation to the inverse normal CDF.
const INV_A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.38357751867269e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const INV_B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const INV_C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const INV_D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

fn norm_inv_cdf_approx(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((INV_C[0] * q + INV_C[1]) * q + INV_C[2]) * q + INV_C[3]) * q + INV_C[4]) * q
            + INV_C[5])
            / ((((INV_D[0] * q + INV_D[1]) * q + INV_D[2]) * q + INV_D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((INV_A[0] * r + INV_A[1]) * r + INV_A[2]) * r + INV_A[3]) * r + INV_A[4]) * r
            + INV_A[5])
            * q
            / (((((INV_B[0] * r + INV_B[1]) * r + INV_B[2]) * r + INV_B[3]) * r + INV_B[4]) * r
                + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((INV_C[0] * q + INV_C[1]) * q + INV_C[2]) * q + INV_C[3]) * q + INV_C[4]) * q
            + INV_C[5])
            / ((((INV_D[0] * q + INV_D[1]) * q + INV_D[2]) * q + INV_D[3]) * q + 1.0)
    }
}

/// Inverse of the Gaussian Q function.
///
/// A rational initial approximation is polished with Newton steps against
/// [`q_func`] until the composition is exact to better than 1e-10 relative.
pub fn q_inv(p: f64) -> Result<f64, FbcError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(FbcError::ProbabilityOutOfRange(p));
    }
    // Q(x) = Phi(-x), so Qinv(p) = -Phiinv(p).
    let mut x = -norm_inv_cdf_approx(p);
    for _ in 0..4 {
        let pdf = normal_pdf(x);
        if pdf == 0.0 {
            break;
        }
        let step = (q_func(x) - p) / pdf;
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// AWGN channel capacity in bits per symbol at linear receiver-side SNR `rho`.
///
/// Panics if `rho` is negative.
pub fn capacity(rho: f64, mode: DimMode) -> f64 {
    assert!(rho >= 0.0, "capacity: negative SNR {rho}");
    let nats = rho.ln_1p();
    match mode {
        DimMode::Real => 0.5 * nats * LOG2_E,
        DimMode::Complex => nats * LOG2_E,
    }
}

/// AWGN channel dispersion in squared bits per symbol.
///
/// Tends to `(log2 e)^2 / 2` (real) resp. `(log2 e)^2` (complex) as
/// `rho -> inf`. Panics if `rho` is negative.
pub fn dispersion(rho: f64, mode: DimMode) -> f64 {
    assert!(rho >= 0.0, "dispersion: negative SNR {rho}");
    let one_plus = 1.0 + rho;
    let base = rho * (2.0 + rho) / (one_plus * one_plus) * LOG2_E * LOG2_E;
    match mode {
        DimMode::Real => 0.5 * base,
        DimMode::Complex => base,
    }
}

/// Blocklength penalty term `log2(n) / (2n)` shared by rate and error.
pub fn log_penalty(n: u64) -> f64 {
    let nf = n as f64;
    nf.log2() / (2.0 * nf)
}

/// Normal-approximation achievable rate in bits per symbol.
///
/// May be negative at low SNR; callers clamp where a physical rate is needed.
pub fn fbc_rate(rho: f64, n: u64, eps: f64, mode: DimMode) -> Result<f64, FbcError> {
    if n < 2 {
        return Err(FbcError::BlocklengthTooSmall(n));
    }
    let qi = q_inv(eps)?;
    let c = capacity(rho, mode);
    let v = dispersion(rho, mode);
    Ok(c - (v / n as f64).sqrt() * qi + log_penalty(n))
}

/// Error probability implied by transmitting at `rate` over the channel,
/// obtained by inverting the normal approximation. Clamped to `[0, 1]`.
///
/// At `rho = 0` the dispersion vanishes; by convention the result is 1 when
/// the rate exceeds the blocklength penalty `log2(n)/(2n)` and 0 otherwise,
/// which keeps Monte Carlo draws with vanishing gains well defined.
pub fn fbc_error(rho: f64, n: u64, rate: f64, mode: DimMode) -> f64 {
    debug_assert!(n >= 2);
    let v = dispersion(rho, mode);
    if v == 0.0 {
        return if rate > log_penalty(n) { 1.0 } else { 0.0 };
    }
    let c = capacity(rho, mode);
    let arg = (n as f64 / v).sqrt() * (c - rate + log_penalty(n));
    q_func(arg).clamp(0.0, 1.0)
}
