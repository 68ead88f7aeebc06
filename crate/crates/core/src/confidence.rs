//! The confidence function of the discounted normal predictor.
//!
//! For an effective horizon `n` and a base `Z`, the unclipped confidence is
//!
//! ```text
//! g~(x) = sqrt(n/8) * Z * erf(x / sqrt(8n)) * exp(x^2 / (16n))
//! ```
//!
//! and the played confidence is `g~` projected onto `[0, 1]`. The threshold
//! `U(n)` is the point where `g~` reaches one; past it the predictor is fully
//! committed. Every function here is pure.

use std::f64::consts::E;

use crate::error::{invalid, Result};

/// Relative slack allowed on the `Z <= 1/e` and `n >= ...` preconditions so
/// that `1/e` computed two different ways is still accepted.
const PRECONDITION_RTOL: f64 = 1e-12;

/// Absolute x-tolerance of the threshold bisection.
const THRESHOLD_XTOL: f64 = 1e-12;

/// Error function `erf(x) = 2/sqrt(pi) * int_0^x exp(-s^2) ds`.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Configuration of one confidence function: horizon `n`, base `Z`, the
/// discount `rho = 1 - 1/n` and the threshold `U(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DnpParams {
    n: f64,
    zeta: f64,
    rho: f64,
    u: f64,
    log_inv_zeta: f64,
}

impl DnpParams {
    /// Validates `(n, Z)` and solves `g~(U) = 1` by bisection on
    /// `[0, sqrt(16 n ln(1/Z))]`.
    ///
    /// `n` is real-valued; the geometric level schedule produces
    /// non-integer horizons.
    pub fn new(n: f64, zeta: f64) -> Result<Self> {
        if !(zeta.is_finite() && zeta > 0.0) {
            return Err(invalid(format!("Z = {zeta} must satisfy 0 < Z")));
        }
        if zeta > (1.0 / E) * (1.0 + PRECONDITION_RTOL) {
            return Err(invalid(format!("Z = {zeta} violates Z <= 1/e")));
        }
        let log_inv_zeta = (1.0 / zeta).ln();
        if !n.is_finite() {
            return Err(invalid(format!("n = {n} must be finite")));
        }
        if n < 8.0 * E * (1.0 - PRECONDITION_RTOL) {
            return Err(invalid(format!("n = {n} violates n >= 8e ({})", 8.0 * E)));
        }
        let min_n = 16.0 * log_inv_zeta;
        if n < min_n * (1.0 - PRECONDITION_RTOL) {
            return Err(invalid(format!(
                "n = {n} violates n >= 16 ln(1/Z) ({min_n})"
            )));
        }

        let mut params = DnpParams {
            n,
            zeta,
            rho: 1.0 - 1.0 / n,
            u: 0.0,
            log_inv_zeta,
        };
        params.u = params.solve_threshold()?;
        Ok(params)
    }

    fn solve_threshold(&self) -> Result<f64> {
        let mut lo = 0.0_f64;
        let mut hi = self.threshold_upper_bound();
        if g_tilde(hi, self) < 1.0 {
            return Err(invalid(format!(
                "g~ does not reach 1 on [0, {hi}] for n = {}, Z = {}",
                self.n, self.zeta
            )));
        }
        for _ in 0..400 {
            if hi - lo <= THRESHOLD_XTOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g_tilde(mid, self) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Discount factor `1 - 1/n`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Threshold `U(n)`: the smallest deviation at which the confidence is 1.
    pub fn u(&self) -> f64 {
        self.u
    }

    /// `ln(1/Z)`
    pub fn log_inv_zeta(&self) -> f64 {
        self.log_inv_zeta
    }

    /// `sqrt(16 n ln(1/Z))`, the analytic ceiling on `U(n)`.
    pub fn threshold_upper_bound(&self) -> f64 {
        (16.0 * self.n * self.log_inv_zeta).sqrt()
    }

    /// Beyond this magnitude `g~` is not evaluated (the exponential would
    /// overflow for large `n`); it is far past `U(n)`.
    fn overflow_guard(&self) -> f64 {
        8.0 * (self.n * self.log_inv_zeta).sqrt()
    }
}

/// Unclipped confidence `g~(x)`. Odd in `x`, strictly increasing.
///
/// For `|x|` past the overflow guard the value at the guard is returned
/// (with the sign of `x`); it is at least 1 in magnitude and is clipped
/// downstream anyway.
pub fn g_tilde(x: f64, p: &DnpParams) -> f64 {
    let guard = p.overflow_guard();
    let x = if x.abs() > guard {
        guard.copysign(x)
    } else {
        x
    };
    let n = p.n;
    (n / 8.0).sqrt() * p.zeta * erf(x / (8.0 * n).sqrt()) * (x * x / (16.0 * n)).exp()
}

/// Played confidence `g(x) = clamp(g~(x), 0, 1)`.
///
/// Exactly 0 for `x <= 0` and exactly 1 for `x >= U(n)`.
pub fn confidence(x: f64, p: &DnpParams) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= p.u {
        1.0
    } else {
        g_tilde(x, p).clamp(0.0, 1.0)
    }
}
