//! Two-expert aggregation driven by a conservative DNP instance.
//!
//! Each round the combiner plays `(1 - w) * left + w * right`, lets both
//! experts see the loss, and then feeds the meta predictor the bit
//!
//! ```text
//! l_t = (cost_left - cost_right) / ((1 + M) G D) / max(sqrt(lambda), 1)
//! ```
//!
//! where an expert's cost is its normalized loss plus `lambda G` times its
//! own movement. The next weight is the meta predictor's new confidence.
//! The round is therefore two-phase: emit with the current weight, settle
//! once both experts have produced their next points.

use crate::confidence::DnpParams;
use crate::error::{invalid, Error, Result};
use crate::experts::{ConvexLoss, Expert};
use crate::linalg::distance;
use crate::predictor::{lambda_scale, DnpState};

/// Slack on the expert-cost range check.
const COST_TOL: f64 = 1e-9;

/// `(1 - weight) * w1 + weight * w2`
pub fn combine_point(w1: &[f64], w2: &[f64], weight: f64) -> Vec<f64> {
    debug_assert!((0.0..=1.0).contains(&weight));
    w1.iter()
        .zip(w2)
        .map(|(a, b)| (1.0 - weight) * a + weight * b)
        .collect()
}

/// `f + lambda G * move`
pub fn expert_cost(f_value: f64, move_norm: f64, lambda: f64, grad_bound: f64) -> f64 {
    f_value + lambda * grad_bound * move_norm
}

/// Scaled cost difference in `[-1, 1]`. Costs outside `[0, (1+M) G D]`
/// mean an expert moved faster than the movement constant allows.
pub fn relative_loss_bit(l1: f64, l2: f64, m: f64, grad_bound: f64, diameter: f64) -> Result<f64> {
    let upper = (1.0 + m) * grad_bound * diameter;
    for cost in [l1, l2] {
        if !(cost >= -COST_TOL && cost <= upper + COST_TOL) {
            return Err(Error::CostOutOfRange { cost, upper });
        }
    }
    Ok(((l1 - l2) / upper).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinerConfig {
    /// Movement constant `M`.
    pub m: f64,
    /// Effective horizon of the meta predictor.
    pub n: f64,
    pub zeta: f64,
    pub lambda: f64,
    pub grad_bound: f64,
    pub diameter: f64,
}

/// What happened during the last settled round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleRecord {
    /// Normalized loss of each expert at its round-`t` point.
    pub f_left: f64,
    pub f_right: f64,
    pub move_left: f64,
    pub move_right: f64,
    /// `l_t` before the `1/max(sqrt(lambda),1)` scaling.
    pub ell: f64,
    pub weight_before: f64,
    pub weight_after: f64,
}

/// The weight-learning half of a combiner, independent of how the two
/// expert trajectories are produced.
#[derive(Debug, Clone)]
pub struct DnpMixer {
    meta: DnpState,
    config: CombinerConfig,
    weight: f64,
    scale: f64,
}

impl DnpMixer {
    pub fn new(config: CombinerConfig) -> Result<Self> {
        if !(config.m >= 0.0) {
            return Err(invalid(format!("M = {} must be >= 0", config.m)));
        }
        if !(config.grad_bound > 0.0 && config.diameter > 0.0) {
            return Err(invalid("G and D must be positive"));
        }
        let params = DnpParams::new(config.n, config.zeta)?;
        let meta = DnpState::scaled_for_lambda(params, config.lambda)?;
        let weight = meta.predict();
        Ok(DnpMixer {
            meta,
            config,
            weight,
            scale: lambda_scale(config.lambda),
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn meta(&self) -> &DnpState {
        &self.meta
    }

    pub fn config(&self) -> &CombinerConfig {
        &self.config
    }

    /// Feeds round `t`'s evidence and moves to `w_{t+1}`.
    pub fn settle(
        &mut self,
        f_left: f64,
        move_left: f64,
        f_right: f64,
        move_right: f64,
    ) -> Result<SettleRecord> {
        let c = &self.config;
        let l1 = expert_cost(f_left, move_left, c.lambda, c.grad_bound);
        let l2 = expert_cost(f_right, move_right, c.lambda, c.grad_bound);
        let ell = relative_loss_bit(l1, l2, c.m, c.grad_bound, c.diameter)?;
        // a scaled bit can exceed mu by an ulp after the division
        let bit = (ell / self.scale).clamp(-self.meta.mu(), self.meta.mu());
        self.meta.update(bit)?;
        let before = self.weight;
        self.weight = self.meta.predict();
        Ok(SettleRecord {
            f_left,
            f_right,
            move_left,
            move_right,
            ell,
            weight_before: before,
            weight_after: self.weight,
        })
    }
}

/// Aggregates two experts into one.
#[derive(Debug, Clone)]
pub struct Combiner<L, R> {
    mixer: DnpMixer,
    left: L,
    right: R,
    point: Vec<f64>,
    last: Option<SettleRecord>,
}

impl<L: Expert, R: Expert> Combiner<L, R> {
    pub fn new(left: L, right: R, config: CombinerConfig) -> Result<Self> {
        if left.current().len() != right.current().len() {
            return Err(Error::DimensionMismatch {
                expected: left.current().len(),
                got: right.current().len(),
            });
        }
        let mixer = DnpMixer::new(config)?;
        let point = combine_point(left.current(), right.current(), mixer.weight());
        Ok(Combiner {
            mixer,
            left,
            right,
            point,
            last: None,
        })
    }

    pub fn weight(&self) -> f64 {
        self.mixer.weight()
    }

    pub fn mixer(&self) -> &DnpMixer {
        &self.mixer
    }

    pub fn left(&self) -> &L {
        &self.left
    }

    pub fn right(&self) -> &R {
        &self.right
    }

    pub fn last_round(&self) -> Option<&SettleRecord> {
        self.last.as_ref()
    }
}

impl<L: Expert, R: Expert> Expert for Combiner<L, R> {
    fn current(&self) -> &[f64] {
        &self.point
    }

    fn feed(&mut self, loss: &dyn ConvexLoss) -> Result<()> {
        let w1 = self.left.current().to_vec();
        let w2 = self.right.current().to_vec();
        let f1 = loss.normalized_value(&w1);
        let f2 = loss.normalized_value(&w2);
        self.left.feed(loss)?;
        self.right.feed(loss)?;
        let move1 = distance(&w1, self.left.current());
        let move2 = distance(&w2, self.right.current());
        let record = self.mixer.settle(f1, move1, f2, move2)?;
        self.point = combine_point(
            self.left.current(),
            self.right.current(),
            self.mixer.weight(),
        );
        self.last = Some(record);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confidence::confidence;
    use crate::env::DistanceLoss;
    use std::f64::consts::E;

    /// Expert that never moves.
    struct Fixed(Vec<f64>);

    impl Expert for Fixed {
        fn current(&self) -> &[f64] {
            &self.0
        }
        fn feed(&mut self, _: &dyn ConvexLoss) -> Result<()> {
            Ok(())
        }
    }

    fn config(lambda: f64) -> CombinerConfig {
        CombinerConfig {
            m: 2.0,
            n: 64.0,
            zeta: 1.0 / E,
            lambda,
            grad_bound: 1.0,
            diameter: 1.0,
        }
    }

    #[test]
    fn point_and_cost_helpers() {
        assert_eq!(combine_point(&[1.0, 2.0], &[3.0, 4.0], 0.0), vec![1.0, 2.0]);
        assert_eq!(combine_point(&[1.0, 2.0], &[3.0, 4.0], 1.0), vec![3.0, 4.0]);
        assert_eq!(combine_point(&[0.0, 0.0], &[2.0, 2.0], 0.5), vec![1.0, 1.0]);
        assert_eq!(expert_cost(0.5, 0.3, 0.0, 1.0), 0.5);
        assert!((expert_cost(0.5, 0.2, 1.0, 1.0) - 0.7).abs() < 1e-15);
        assert_eq!(expert_cost(0.5, 0.0, 3.0, 2.0), 0.5);
    }

    #[test]
    fn loss_bit_range() {
        assert_eq!(relative_loss_bit(0.4, 0.4, 2.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(relative_loss_bit(3.0, 0.0, 2.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(relative_loss_bit(0.0, 3.0, 2.0, 1.0, 1.0).unwrap(), -1.0);
        assert!(matches!(
            relative_loss_bit(3.5, 0.0, 2.0, 1.0, 1.0),
            Err(Error::CostOutOfRange { .. })
        ));
        assert!(relative_loss_bit(0.0, -0.1, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn three_round_hand_trace() {
        // Left parked at -0.5, right at +0.5, targets 0.5, 0.5, -0.5.
        let mut c = Combiner::new(Fixed(vec![-0.5]), Fixed(vec![0.5]), config(0.0)).unwrap();
        let p = DnpParams::new(64.0, 1.0 / E).unwrap();
        let rho = 1.0 - 1.0 / 64.0;

        // Hand execution: ell = (|w1 - c| - |w2 - c|) / 3, x starts at 0 and
        // stays inside [0, U], so every bit is folded in.
        let x2 = 1.0 / 3.0;
        let x3 = rho * x2 + 1.0 / 3.0;
        let x4 = rho * x3 - 1.0 / 3.0;
        let expected_weights = [
            0.0,
            confidence(x2, &p),
            confidence(x3, &p),
            confidence(x4, &p),
        ];
        let expected_points: Vec<f64> = expected_weights.iter().map(|w| -0.5 + w).collect();

        assert_eq!(c.weight(), 0.0);
        assert_eq!(c.current(), &[-0.5]);
        for (t, target) in [0.5, 0.5, -0.5].into_iter().enumerate() {
            let loss = DistanceLoss::new(vec![target], 1.0);
            c.feed(&loss).unwrap();
            assert!(
                (c.weight() - expected_weights[t + 1]).abs() < 1e-15,
                "round {t}"
            );
            assert!((c.current()[0] - expected_points[t + 1]).abs() < 1e-15);
        }
        assert!((c.mixer().meta().x() - x4).abs() < 1e-15);
        assert!(expected_weights[3] > 0.0);
    }

    #[test]
    fn identical_experts_keep_zero_weight() {
        let mut c =
            Combiner::new(Fixed(vec![0.1, 0.2]), Fixed(vec![0.1, 0.2]), config(1.0)).unwrap();
        for t in 0..50 {
            let loss = DistanceLoss::new(vec![(t as f64 * 0.1).sin() * 0.4, 0.0], 1.0);
            c.feed(&loss).unwrap();
            assert_eq!(c.last_round().unwrap().ell, 0.0);
            assert_eq!(c.weight(), 0.0);
        }
    }

    #[test]
    fn dominated_right_expert_is_ignored() {
        let mut c = Combiner::new(Fixed(vec![0.0]), Fixed(vec![0.5]), config(4.0)).unwrap();
        for _ in 0..100 {
            let loss = DistanceLoss::new(vec![-0.3], 1.0);
            c.feed(&loss).unwrap();
            assert!(c.last_round().unwrap().ell <= 0.0);
            assert!(c.mixer().meta().x() <= 0.0);
            assert_eq!(c.weight(), 0.0);
            assert_eq!(c.current(), &[0.0]);
        }
    }
}
