//! Smoothed OGD: `K` constant-step OGD experts on a geometric grid of
//! horizons, folded together by a chain of combiners.
//!
//! Level `i` (1-based) has horizon `n_i = T 2^(1-i)` and step
//! `eta_i = (D/G) sqrt(1 / ((1 + 2 lambda) n_i))`. `B^1` is `A^1`, and
//! `B^i` combines `B^(i-1)` with `A^i` through a DNP meta predictor of
//! horizon `n_i`. The played point is the output of `B^K`.

use std::f64::consts::E;

use crate::combiner::{combine_point, Combiner, CombinerConfig, DnpMixer};
use crate::error::{invalid, Error, Result};
use crate::experts::{ogd_step_size, BallDomain, ConvexLoss, ConvexSet, Expert, Ogd};
use crate::linalg::distance;
use crate::predictor::lambda_scale;

/// Movement constant used by every combiner of the stack.
pub const DEFAULT_M: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub n: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackSchedule {
    horizon: usize,
    lambda: f64,
    zeta: f64,
    m: f64,
    grad_bound: f64,
    diameter: f64,
    levels: Vec<Level>,
    warnings: Vec<String>,
}

impl StackSchedule {
    /// Level count `K = floor(log2(T / (32 max(lambda, 1) ln(1/Z)))) + 1`.
    pub fn new(
        horizon: usize,
        lambda: f64,
        zeta: f64,
        grad_bound: f64,
        diameter: f64,
    ) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid(format!(
                "lambda = {lambda} must be finite and >= 0"
            )));
        }
        if !(grad_bound > 0.0 && grad_bound.is_finite()) {
            return Err(invalid(format!("G = {grad_bound} must be positive")));
        }
        if !(diameter > 0.0 && diameter.is_finite()) {
            return Err(invalid(format!("D = {diameter} must be positive")));
        }
        if !(zeta > 0.0 && zeta <= (1.0 / E) * (1.0 + 1e-12)) {
            return Err(invalid(format!("Z = {zeta} violates 0 < Z <= 1/e")));
        }
        let floor_n = 32.0 * lambda.max(1.0) * (1.0 / zeta).ln();
        let ratio = horizon as f64 / floor_n;
        if !(ratio >= 1.0) {
            return Err(Error::HorizonTooShort {
                horizon,
                min_horizon: floor_n.ceil() as usize,
            });
        }
        let k = ratio.log2().floor() as usize + 1;
        let levels = (1..=k)
            .map(|i| {
                let n = horizon as f64 * 2f64.powi(1 - i as i32);
                Level {
                    n,
                    eta: ogd_step_size(diameter, grad_bound, lambda, n),
                }
            })
            .collect();

        let t = horizon as f64;
        let mut warnings = Vec::new();
        if t < lambda.sqrt() * t.log2() || t < E {
            warnings.push(format!(
                "T = {horizon} violates T >= max(sqrt(lambda) log2 T, e); combiner movement bounds may not hold"
            ));
        }

        Ok(StackSchedule {
            horizon,
            lambda,
            zeta,
            m: DEFAULT_M,
            grad_bound,
            diameter,
            levels,
            warnings,
        })
    }

    /// Schedule with `Z = 1/T`. When `T` is too short, the error reports the
    /// smallest horizon that works under the same `Z = 1/T` rule.
    pub fn with_default_zeta(
        horizon: usize,
        lambda: f64,
        grad_bound: f64,
        diameter: f64,
    ) -> Result<Self> {
        let zeta = 1.0 / horizon.max(1) as f64;
        if horizon < 3 {
            return Err(Error::HorizonTooShort {
                horizon,
                min_horizon: min_horizon_default_zeta(lambda),
            });
        }
        match StackSchedule::new(horizon, lambda, zeta, grad_bound, diameter) {
            Err(Error::HorizonTooShort { .. }) => Err(Error::HorizonTooShort {
                horizon,
                min_horizon: min_horizon_default_zeta(lambda),
            }),
            other => other,
        }
    }

    /// Overrides the movement constant (2 by default).
    pub fn with_m(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn grad_bound(&self) -> f64 {
        self.grad_bound
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn k(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn combiner_config(&self, level: &Level) -> CombinerConfig {
        CombinerConfig {
            m: self.m,
            n: level.n,
            zeta: self.zeta,
            lambda: self.lambda,
            grad_bound: self.grad_bound,
            diameter: self.diameter,
        }
    }
}

/// Smallest `T >= 3` with `T >= 32 max(lambda, 1) ln T`.
pub fn min_horizon_default_zeta(lambda: f64) -> usize {
    let c = 32.0 * lambda.max(1.0);
    (3usize..)
        .find(|&t| t as f64 >= c * (t as f64).ln())
        .expect("threshold is finite")
}

/// Per-level view of the stack at the current round.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSnapshot {
    /// Point of the OGD expert `A^i`.
    pub expert: Vec<f64>,
    /// Output of `B^i`.
    pub output: Vec<f64>,
    /// Weight `B^i` puts on `A^i`; `None` for `B^1`.
    pub weight: Option<f64>,
}

/// Running smoothed OGD instance.
#[derive(Debug, Clone)]
pub struct SmoothedOgd {
    schedule: StackSchedule,
    experts: Vec<Ogd<BallDomain>>,
    // mixers[j] drives B^(j+2)
    mixers: Vec<DnpMixer>,
    outputs: Vec<Vec<f64>>,
    round: usize,
}

impl SmoothedOgd {
    pub fn new(schedule: StackSchedule, domain: BallDomain, init: Vec<f64>) -> Result<Self> {
        if !domain.contains(&init, 1e-12) {
            return Err(invalid("initial point lies outside the domain"));
        }
        if domain.diameter() > schedule.diameter() * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "domain diameter {} exceeds the schedule's D = {}",
                domain.diameter(),
                schedule.diameter()
            )));
        }
        let experts = schedule
            .levels()
            .iter()
            .map(|l| Ogd::new(domain.clone(), init.clone(), l.eta, schedule.grad_bound()))
            .collect::<Result<Vec<_>>>()?;
        let mixers = schedule.levels()[1..]
            .iter()
            .map(|l| DnpMixer::new(schedule.combiner_config(l)))
            .collect::<Result<Vec<_>>>()?;
        let mut outputs = Vec::with_capacity(experts.len());
        outputs.push(init.clone());
        for (j, mixer) in mixers.iter().enumerate() {
            let below = &outputs[j];
            outputs.push(combine_point(below, &init, mixer.weight()));
        }
        Ok(SmoothedOgd {
            schedule,
            experts,
            mixers,
            outputs,
            round: 0,
        })
    }

    pub fn schedule(&self) -> &StackSchedule {
        &self.schedule
    }

    /// Rounds played so far.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Point to be played in the next round (after `T` rounds: `w_{T+1}`).
    pub fn prediction(&self) -> &[f64] {
        self.outputs.last().expect("K >= 1")
    }

    pub fn levels(&self) -> Vec<LevelSnapshot> {
        (0..self.experts.len())
            .map(|i| LevelSnapshot {
                expert: self.experts[i].current().to_vec(),
                output: self.outputs[i].clone(),
                weight: if i == 0 {
                    None
                } else {
                    Some(self.mixers[i - 1].weight())
                },
            })
            .collect()
    }

    /// Plays one round: returns `w_t`, then advances every level once.
    pub fn play(&mut self, loss: &dyn ConvexLoss) -> Result<Vec<f64>> {
        let horizon = self.schedule.horizon();
        if self.round >= horizon {
            return Err(Error::HorizonExceeded { horizon });
        }
        let played = self.prediction().to_vec();

        let f_experts: Vec<f64> = self
            .experts
            .iter()
            .map(|e| loss.normalized_value(e.current()))
            .collect();
        let f_outputs: Vec<f64> = self
            .outputs
            .iter()
            .map(|w| loss.normalized_value(w))
            .collect();
        let old_experts: Vec<Vec<f64>> =
            self.experts.iter().map(|e| e.current().to_vec()).collect();

        // leaves are independent of each other
        for e in &mut self.experts {
            e.feed(loss)?;
        }

        let mut outputs = Vec::with_capacity(self.outputs.len());
        outputs.push(self.experts[0].current().to_vec());
        for i in 1..self.experts.len() {
            let below_new = &outputs[i - 1];
            let move_left = distance(&self.outputs[i - 1], below_new);
            let move_right = distance(&old_experts[i], self.experts[i].current());
            let mixer = &mut self.mixers[i - 1];
            mixer.settle(f_outputs[i - 1], move_left, f_experts[i], move_right)?;
            let next = combine_point(below_new, self.experts[i].current(), mixer.weight());
            outputs.push(next);
        }
        self.outputs = outputs;
        self.round += 1;
        Ok(played)
    }
}

impl Expert for SmoothedOgd {
    fn current(&self) -> &[f64] {
        self.prediction()
    }

    fn feed(&mut self, loss: &dyn ConvexLoss) -> Result<()> {
        self.play(loss).map(|_| ())
    }
}

/// The same algorithm assembled literally from [`Combiner`] instances,
/// `B^i = Combiner(B^(i-1), A^i)`.
pub fn nested_stack(
    schedule: &StackSchedule,
    domain: &BallDomain,
    init: &[f64],
) -> Result<Box<dyn Expert>> {
    let levels = schedule.levels();
    let leaf = |l: &Level| Ogd::new(domain.clone(), init.to_vec(), l.eta, schedule.grad_bound());
    let mut top: Box<dyn Expert> = Box::new(leaf(&levels[0])?);
    for level in &levels[1..] {
        top = Box::new(Combiner::new(
            top,
            leaf(level)?,
            schedule.combiner_config(level),
        )?);
    }
    Ok(top)
}

/// Interval bound for regret with switching cost:
/// `2 G D sqrt((1 + lambda) tau) + 113 G D max(sqrt(lambda), 1) sqrt(tau ln T)`.
pub fn adaptive_regret_bound(
    tau: usize,
    lambda: f64,
    grad_bound: f64,
    diameter: f64,
    horizon: usize,
) -> f64 {
    adaptive_regret_bound_ln(tau, lambda, grad_bound, diameter, (horizon as f64).ln())
}

fn adaptive_regret_bound_ln(
    tau: usize,
    lambda: f64,
    grad_bound: f64,
    diameter: f64,
    ln_t: f64,
) -> f64 {
    let gd = grad_bound * diameter;
    let tau = tau as f64;
    2.0 * gd * ((1.0 + lambda) * tau).sqrt()
        + 113.0 * gd * lambda_scale(lambda) * (tau * ln_t).sqrt()
}

/// Interval bound for dynamic regret with switching cost against a
/// comparator sequence of path length `path`.
pub fn dynamic_regret_bound(
    tau: usize,
    lambda: f64,
    grad_bound: f64,
    diameter: f64,
    horizon: usize,
    path: f64,
) -> f64 {
    dynamic_regret_bound_ln(
        tau,
        lambda,
        grad_bound,
        diameter,
        (horizon as f64).ln(),
        path,
    )
}

fn dynamic_regret_bound_ln(
    tau: usize,
    lambda: f64,
    grad_bound: f64,
    diameter: f64,
    ln_t: f64,
    path: f64,
) -> f64 {
    let gd = grad_bound * diameter;
    let stretched = tau as f64 * (1.0 + 2.0 * path / diameter);
    2.0 * gd * ((1.0 + lambda) * stretched).sqrt()
        + 120.0 * gd * lambda_scale(lambda) * (stretched * ln_t).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::DistanceLoss;

    #[test]
    fn schedule_for_large_horizon() {
        let t = 1usize << 20;
        let s = StackSchedule::new(t, 1.0, 1.0 / t as f64, 1.0, 1.0).unwrap();
        assert_eq!(s.k(), 12);
        assert_eq!(s.levels()[0].n, t as f64);
        let floor_n = 32.0 * (t as f64).ln();
        assert!(s.levels().last().unwrap().n >= floor_n);
        assert!(s.warnings().is_empty());
    }

    #[test]
    fn short_horizon_reports_minimum() {
        match StackSchedule::new(64, 1.0, 1.0 / 64.0, 1.0, 1.0) {
            Err(Error::HorizonTooShort { min_horizon, .. }) => {
                // 32 ln 64 = 133.08...
                assert_eq!(min_horizon, 134);
            }
            other => panic!("{other:?}"),
        }
        match StackSchedule::with_default_zeta(64, 1.0, 1.0, 1.0) {
            Err(Error::HorizonTooShort { min_horizon, .. }) => {
                let m = min_horizon as f64;
                assert!(m >= 32.0 * m.ln());
                assert!(m - 1.0 < 32.0 * (m - 1.0).ln());
                assert!(StackSchedule::with_default_zeta(min_horizon, 1.0, 1.0, 1.0).is_ok());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn huge_lambda_cannot_build() {
        // 32e6 ln 100 > 4096
        let s = StackSchedule::new(4096, 1e6, 0.01, 1.0, 1.0);
        assert!(matches!(s, Err(Error::HorizonTooShort { .. })));
    }

    #[test]
    fn bound_formulas() {
        assert!((adaptive_regret_bound(1, 0.0, 1.0, 1.0, 1) - 2.0).abs() < 1e-12);
        let a = adaptive_regret_bound(25, 3.0, 1.5, 0.7, 999);
        let b = adaptive_regret_bound(100, 3.0, 1.5, 0.7, 999);
        assert!((b - 2.0 * a).abs() < 1e-9);
        let expected = 2.0 * 500f64.sqrt() + 113.0 * 2.0 * (100.0 * 1024f64.ln()).sqrt();
        assert!((adaptive_regret_bound(100, 4.0, 1.0, 1.0, 1024) - expected).abs() < 1e-9);

        let expected = 2.0 * (64.0f64 * 3.0).sqrt() + 120.0 * (64.0 * 3.0 * 4096f64.ln()).sqrt();
        assert!((dynamic_regret_bound(64, 0.0, 1.0, 1.0, 4096, 1.0) - expected).abs() < 1e-9);
        let p0 = dynamic_regret_bound(64, 2.0, 1.0, 1.0, 4096, 0.0);
        let diff = p0 - adaptive_regret_bound(64, 2.0, 1.0, 1.0, 4096);
        assert!((diff - 7.0 * 2f64.sqrt() * (64.0 * 4096f64.ln()).sqrt()).abs() < 1e-9);
        // doubling (1 + 2P/D) scales by sqrt 2
        let one = dynamic_regret_bound(64, 2.0, 1.0, 2.0, 4096, 1.0);
        let two = dynamic_regret_bound(64, 2.0, 1.0, 2.0, 4096, 3.0);
        assert!((two - 2f64.sqrt() * one).abs() < 1e-9);
    }

    #[test]
    fn bounds_at_ln_t_one() {
        assert!((adaptive_regret_bound_ln(1, 0.0, 1.0, 1.0, 1.0) - 115.0).abs() < 1e-12);
        assert!((dynamic_regret_bound_ln(1, 0.0, 1.0, 1.0, 1.0, 0.0) - 122.0).abs() < 1e-12);
    }

    #[test]
    fn single_level_matches_bare_ogd() {
        let t = 200;
        let s = StackSchedule::new(t, 0.0, 0.01, 1.0, 1.0).unwrap();
        assert_eq!(s.k(), 1);
        let ball = BallDomain::centered(1, 1.0).unwrap();
        let mut stack = SmoothedOgd::new(s.clone(), ball.clone(), vec![0.0]).unwrap();
        let mut ogd = Ogd::new(ball, vec![0.0], s.levels()[0].eta, 1.0).unwrap();
        for i in 0..t {
            let loss = DistanceLoss::new(vec![if (i / 25) % 2 == 0 { 0.4 } else { -0.3 }], 1.0);
            let w = stack.play(&loss).unwrap();
            assert_eq!(w, ogd.current());
            ogd.feed(&loss).unwrap();
        }
        assert!(matches!(
            stack.play(&DistanceLoss::new(vec![0.0], 1.0)),
            Err(Error::HorizonExceeded { .. })
        ));
    }

    #[test]
    fn zero_gradients_freeze_the_stack() {
        let s = StackSchedule::with_default_zeta(4096, 1.0, 1.0, 1.0).unwrap();
        let ball = BallDomain::centered(2, 1.0).unwrap();
        let init = vec![0.1, -0.2];
        let mut stack = SmoothedOgd::new(s, ball, init.clone()).unwrap();
        let loss = DistanceLoss::new(init.clone(), 1.0);
        for _ in 0..100 {
            assert_eq!(stack.play(&loss).unwrap(), init);
        }
    }

    #[test]
    fn nested_structure() {
        let s = StackSchedule::with_default_zeta(1 << 15, 0.0, 1.0, 1.0).unwrap();
        // 2^15 / (32 ln 2^15) = 98.5..., so K = 7
        assert_eq!(s.k(), 7);
        let ball = BallDomain::centered(1, 1.0).unwrap();
        let stack = SmoothedOgd::new(s, ball, vec![0.2]).unwrap();
        assert_eq!(stack.levels().len(), 7);
        assert_eq!(stack.levels()[0].weight, None);
        assert!(stack.levels()[1..].iter().all(|l| l.weight == Some(0.0)));
        assert_eq!(stack.prediction(), &[0.2]);
    }
}
