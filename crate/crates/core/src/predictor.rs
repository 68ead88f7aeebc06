//! Discounted normal predictor as a bit-prediction state machine.
//!
//! The machine keeps a discounted deviation `x_t` and predicts `g(x_t)`.
//! In [`UpdateMode::Plain`] every bit is folded in; in
//! [`UpdateMode::Conservative`] a bit is ignored (the deviation only
//! shrinks) while the predictor is confident and right, which keeps
//! `x_t` inside `[-mu, U(n) + mu]`.

use crate::confidence::{confidence, DnpParams};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateMode {
    Plain,
    Conservative,
}

/// Which update rule fired on a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `x' = rho x + b`
    Standard,
    /// `x' = rho x`, the bit was ignored.
    Shrink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DnpState {
    params: DnpParams,
    x: f64,
    mode: UpdateMode,
    mu: f64,
}

impl DnpState {
    /// Fresh machine with `x = 0`. `mu` is the declared bound on `|b_t|`.
    pub fn new(params: DnpParams, mode: UpdateMode, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(invalid(format!("mu = {mu} violates 0 < mu <= 1")));
        }
        Ok(DnpState {
            params,
            x: 0.0,
            mode,
            mu,
        })
    }

    /// Conservative machine for bits pre-scaled by `1/max(sqrt(lambda), 1)`.
    pub fn scaled_for_lambda(params: DnpParams, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid(format!(
                "lambda = {lambda} must be finite and >= 0"
            )));
        }
        DnpState::new(params, UpdateMode::Conservative, 1.0 / lambda_scale(lambda))
    }

    pub fn params(&self) -> &DnpParams {
        &self.params
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn mode(&self) -> UpdateMode {
        self.mode
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn predict(&self) -> f64 {
        confidence(self.x, &self.params)
    }

    /// Branch the conservative rule takes for bit `b` at the current state.
    /// Interval membership is inclusive at both ends; a zero bit outside
    /// `[0, U]` shrinks.
    pub fn branch_for(&self, b: f64) -> Branch {
        match self.mode {
            UpdateMode::Plain => Branch::Standard,
            UpdateMode::Conservative => {
                let u = self.params.u();
                let x = self.x;
                if (0.0..=u).contains(&x) || (x < 0.0 && b > 0.0) || (x > u && b < 0.0) {
                    Branch::Standard
                } else {
                    Branch::Shrink
                }
            }
        }
    }

    pub fn update(&mut self, b: f64) -> Result<Branch> {
        if !(b.abs() <= self.mu) {
            return Err(Error::BitOutOfRange {
                bit: b,
                mu: self.mu,
            });
        }
        let branch = self.branch_for(b);
        let rho = self.params.rho();
        self.x = match branch {
            Branch::Standard => rho * self.x + b,
            Branch::Shrink => rho * self.x,
        };
        Ok(branch)
    }
}

/// `max(sqrt(lambda), 1)`
pub fn lambda_scale(lambda: f64) -> f64 {
    lambda.sqrt().max(1.0)
}

/// Lower bound on the interval reward
/// `sum_{t=r}^{s} (g(x_t) b_t - |g(x_t) - g(x_{t+1})| / mu)` of the
/// conservative machine. `from_start` selects the sharper form valid for
/// intervals beginning at the first round.
pub fn interval_reward_bound(
    p: &DnpParams,
    mu: f64,
    tau: usize,
    sum_b: f64,
    from_start: bool,
) -> f64 {
    let u = p.u();
    let tau = tau as f64;
    let drift = tau / p.n() * (u + 2.0 * mu);
    if from_start {
        (sum_b - drift - u).max(0.0) - p.zeta() * tau
    } else {
        (sum_b - drift - u - mu).max(0.0) - u - mu - p.zeta() * tau
    }
}

/// Lower bound on `sum_{t=r}^{s} (g(x_t) b_t - lambda |g(x_t) - g(x_{t+1})|)`
/// for the machine driven by bits `b_t / max(sqrt(lambda), 1)` with
/// `|b_t| <= 1`; `sum_b` is the unscaled bit sum.
pub fn scaled_reward_bound(p: &DnpParams, lambda: f64, tau: usize, sum_b: f64) -> f64 {
    let scale = lambda_scale(lambda);
    let u = p.u();
    let n = p.n();
    let tau = tau as f64;
    (sum_b - scale * u * (tau + n) / n - (2.0 * tau + n) / n).max(0.0)
        - scale * u
        - 1.0
        - scale * p.zeta() * tau
}

/// Bound on `|g(x_t) - g(x_{t+1})|`: `mu sqrt(ln(1/Z)/n) + Z mu / 4`.
pub fn per_step_change_bound(p: &DnpParams, mu: f64) -> f64 {
    mu * (p.log_inv_zeta() / p.n()).sqrt() + p.zeta() * mu / 4.0
}

/// Full record of a machine run over a bit stream. Deviations and
/// predictions carry one extra lookahead entry, so `xs.len() == bits.len() + 1`.
#[derive(Debug, Clone)]
pub struct BitRun {
    pub bits: Vec<f64>,
    pub xs: Vec<f64>,
    pub predictions: Vec<f64>,
    pub branches: Vec<Branch>,
    mu: f64,
    // prefix sums over t of payoff, switch and bit, 0-based with a leading 0
    payoff_prefix: Vec<f64>,
    switch_prefix: Vec<f64>,
    bit_prefix: Vec<f64>,
}

impl BitRun {
    pub fn record(mut state: DnpState, bits: &[f64]) -> Result<Self> {
        let mut xs = Vec::with_capacity(bits.len() + 1);
        let mut predictions = Vec::with_capacity(bits.len() + 1);
        let mut branches = Vec::with_capacity(bits.len());
        xs.push(state.x());
        predictions.push(state.predict());
        for &b in bits {
            branches.push(state.update(b)?);
            xs.push(state.x());
            predictions.push(state.predict());
        }

        let mut payoff_prefix = vec![0.0; bits.len() + 1];
        let mut switch_prefix = vec![0.0; bits.len() + 1];
        let mut bit_prefix = vec![0.0; bits.len() + 1];
        for t in 0..bits.len() {
            payoff_prefix[t + 1] = payoff_prefix[t] + predictions[t] * bits[t];
            switch_prefix[t + 1] = switch_prefix[t] + (predictions[t] - predictions[t + 1]).abs();
            bit_prefix[t + 1] = bit_prefix[t] + bits[t];
        }

        Ok(BitRun {
            bits: bits.to_vec(),
            xs,
            predictions,
            branches,
            mu: state.mu(),
            payoff_prefix,
            switch_prefix,
            bit_prefix,
        })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// `sum_{t=r}^{s} b_t`, 1-based inclusive.
    pub fn bit_sum(&self, r: usize, s: usize) -> f64 {
        self.bit_prefix[s] - self.bit_prefix[r - 1]
    }

    /// `sum_{t=r}^{s} (g(x_t) b_t - |g(x_t) - g(x_{t+1})| / mu)`, 1-based inclusive.
    pub fn reward(&self, r: usize, s: usize) -> f64 {
        self.weighted_reward(r, s, 1.0 / self.mu)
    }

    /// Same payoff with an arbitrary switching weight.
    pub fn weighted_reward(&self, r: usize, s: usize, weight: f64) -> f64 {
        let payoff = self.payoff_prefix[s] - self.payoff_prefix[r - 1];
        let switch = self.switch_prefix[s] - self.switch_prefix[r - 1];
        payoff - weight * switch
    }

    /// Per-round reward `g(x_t) b_t - |g(x_t) - g(x_{t+1})| / mu`, 1-based.
    pub fn round_reward(&self, t: usize) -> f64 {
        self.reward(t, t)
    }

    pub fn max_step_change(&self) -> f64 {
        self.predictions
            .windows(2)
            .map(|w| (w[0] - w[1]).abs())
            .fold(0.0, f64::max)
    }

    /// The stream the plain machine must see to retrace this run: bits
    /// zeroed wherever the conservative rule ignored them.
    pub fn induced_bits(&self) -> Vec<f64> {
        self.bits
            .iter()
            .zip(&self.branches)
            .map(|(&b, br)| match br {
                Branch::Standard => b,
                Branch::Shrink => 0.0,
            })
            .collect()
    }
}
