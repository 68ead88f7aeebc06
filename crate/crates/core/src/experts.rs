//! Expert contract, convex domains and constant-step online gradient descent.

use crate::error::{invalid, Error, Result};
use crate::linalg::{axpy, distance, norm, sub};

/// Slack on the gradient-norm check.
pub const GRADIENT_TOL: f64 = 1e-9;

/// A closed convex decision set with an exact Euclidean projection.
pub trait ConvexSet {
    fn dim(&self) -> usize;

    /// Euclidean-nearest point of the set.
    fn project(&self, w: &[f64]) -> Result<Vec<f64>>;

    /// Upper bound on the distance between any two points of the set.
    fn diameter(&self) -> f64;

    fn contains(&self, w: &[f64], tol: f64) -> bool;
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallDomain {
    center: Vec<f64>,
    radius: f64,
}

impl BallDomain {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(invalid("ball dimension must be at least 1"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("radius = {radius} must be positive")));
        }
        Ok(BallDomain { center, radius })
    }

    /// Ball of the given diameter centred at the origin.
    pub fn centered(dim: usize, diameter: f64) -> Result<Self> {
        BallDomain::new(vec![0.0; dim], diameter / 2.0)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn check_dim(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                got: w.len(),
            });
        }
        Ok(())
    }
}

impl ConvexSet for BallDomain {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn project(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        let offset = sub(w, &self.center);
        let dist = norm(&offset);
        if dist <= self.radius {
            return Ok(w.to_vec());
        }
        Ok(axpy(&self.center, self.radius / dist, &offset))
    }

    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    fn contains(&self, w: &[f64], tol: f64) -> bool {
        w.len() == self.center.len() && distance(w, &self.center) <= self.radius + tol
    }
}

/// One round's convex loss.
pub trait ConvexLoss {
    fn value(&self, w: &[f64]) -> f64;

    /// A subgradient at `w`.
    fn gradient(&self, w: &[f64]) -> Vec<f64>;

    /// Minimum of [`ConvexLoss::value`] over the domain.
    fn min_value(&self) -> f64;

    /// Loss shifted so its minimum over the domain is zero; lies in
    /// `[0, G D]` under the gradient and diameter bounds.
    fn normalized_value(&self, w: &[f64]) -> f64 {
        self.value(w) - self.min_value()
    }
}

/// An online learner: exposes the point it plays this round and moves on
/// once the round's loss is revealed.
pub trait Expert {
    fn current(&self) -> &[f64];

    fn feed(&mut self, loss: &dyn ConvexLoss) -> Result<()>;
}

impl<E: Expert + ?Sized> Expert for Box<E> {
    fn current(&self) -> &[f64] {
        (**self).current()
    }

    fn feed(&mut self, loss: &dyn ConvexLoss) -> Result<()> {
        (**self).feed(loss)
    }
}

/// Projected online gradient descent with a constant step size.
#[derive(Debug, Clone)]
pub struct Ogd<S = BallDomain> {
    w: Vec<f64>,
    eta: f64,
    grad_bound: f64,
    domain: S,
}

impl<S: ConvexSet> Ogd<S> {
    pub fn new(domain: S, init: Vec<f64>, eta: f64, grad_bound: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("step size {eta} must be positive")));
        }
        if !(grad_bound > 0.0 && grad_bound.is_finite()) {
            return Err(invalid(format!(
                "gradient bound G = {grad_bound} must be positive"
            )));
        }
        if init.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: init.len(),
            });
        }
        if !domain.contains(&init, 1e-12) {
            return Err(invalid("initial point lies outside the domain"));
        }
        Ok(Ogd {
            w: init,
            eta,
            grad_bound,
            domain,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn domain(&self) -> &S {
        &self.domain
    }

    /// `w <- Proj(w - eta * grad)`
    pub fn step(&mut self, grad: &[f64]) -> Result<()> {
        if grad.len() != self.w.len() {
            return Err(Error::DimensionMismatch {
                expected: self.w.len(),
                got: grad.len(),
            });
        }
        let g = norm(grad);
        if !(g <= self.grad_bound + GRADIENT_TOL) {
            return Err(Error::GradientBound {
                norm: g,
                bound: self.grad_bound,
            });
        }
        self.w = self.domain.project(&axpy(&self.w, -self.eta, grad))?;
        Ok(())
    }
}

impl<S: ConvexSet> Expert for Ogd<S> {
    fn current(&self) -> &[f64] {
        &self.w
    }

    fn feed(&mut self, loss: &dyn ConvexLoss) -> Result<()> {
        let grad = loss.gradient(&self.w);
        self.step(&grad)
    }
}

/// `(D/G) sqrt(1 / ((1 + 2 lambda) n))`
pub fn ogd_step_size(diameter: f64, grad_bound: f64, lambda: f64, n: f64) -> f64 {
    diameter / grad_bound * (1.0 / ((1.0 + 2.0 * lambda) * n)).sqrt()
}

/// Interval regret-with-switching-cost bound for constant-step OGD against
/// any fixed comparator: `D^2/(2 eta) + (1 + 2 lambda) eta len G^2 / 2`.
pub fn ogd_regret_bound(diameter: f64, grad_bound: f64, lambda: f64, eta: f64, len: usize) -> f64 {
    assert!(len >= 1, "interval length must be at least 1");
    diameter * diameter / (2.0 * eta)
        + (1.0 + 2.0 * lambda) * eta * len as f64 * grad_bound * grad_bound / 2.0
}

/// Dynamic counterpart of [`ogd_regret_bound`]: adds `(D/eta) * path`.
pub fn ogd_dynamic_bound(
    diameter: f64,
    grad_bound: f64,
    lambda: f64,
    eta: f64,
    len: usize,
    path: f64,
) -> f64 {
    assert!(path >= 0.0, "path length must be nonnegative");
    ogd_regret_bound(diameter, grad_bound, lambda, eta, len) + diameter / eta * path
}
