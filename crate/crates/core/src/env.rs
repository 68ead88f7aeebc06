//! Seeded synthetic adversaries.
//!
//! All randomness comes from [`SplitMix64`], so every stream can be
//! regenerated bit-for-bit in any language:
//!
//! ```text
//! state  <- state + 0x9E3779B97F4A7C15            (wrapping)
//! z      <- state
//! z      <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9   (wrapping)
//! z      <- (z ^ (z >> 27)) * 0x94D049BB133111EB   (wrapping)
//! output <- z ^ (z >> 31)
//! ```
//!
//! A uniform `f64` in `[0, 1)` is `(output >> 11) * 2^-53`.
//!
//! Draw order, per generator:
//! * point in a ball: repeat { d uniforms `u_i`, `v_i = 2 u_i - 1` } until
//!   `|v| <= 1`; the point is `center + radius * v`.
//! * unit direction: as above but also rejecting `|v| < 1e-3`; the
//!   direction is `v / |v|`.
//! * piecewise targets: one ball point per segment, in segment order.
//! * drift targets: one ball point for `c_1`, then one direction per step.
//! * biased bits: one uniform per round, `+mu` iff `u < p`.
//! * random intervals: `r = 1 + floor(u1 * T)`, `s = r + floor(u2 * (T - r + 1))`.

use std::io::{Read, Write};
use std::path::Path;

use rand_core::{Rng, SeedableRng};

use crate::csvio::{self, CsvTable};
use crate::error::{invalid, Result};
use crate::experts::{BallDomain, ConvexLoss, ConvexSet};
use crate::linalg::{axpy, distance, norm, sub};

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    inner: rand_xoshiro::SplitMix64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 {
            inner: rand_xoshiro::SplitMix64::from_seed(seed.to_le_bytes()),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Independent child generator seeded from this one's next output.
    pub fn split(&mut self) -> SplitMix64 {
        SplitMix64::new(self.next_u64())
    }

    fn unit_cube_ball(&mut self, dim: usize, min_norm: f64) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| 2.0 * self.next_f64() - 1.0).collect();
            let r = norm(&v);
            if r <= 1.0 && r >= min_norm {
                return v;
            }
        }
    }

    pub fn point_in_ball(&mut self, ball: &BallDomain) -> Vec<f64> {
        let v = self.unit_cube_ball(ball.dim(), 0.0);
        axpy(ball.center(), ball.radius(), &v)
    }

    pub fn unit_direction(&mut self, dim: usize) -> Vec<f64> {
        let v = self.unit_cube_ball(dim, 1e-3);
        let r = norm(&v);
        v.iter().map(|x| x / r).collect()
    }
}

/// `f(w) = G |w - target|`: convex, gradient norm exactly `G` away from the
/// target, minimum 0 at the target.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceLoss {
    target: Vec<f64>,
    grad_bound: f64,
}

impl DistanceLoss {
    pub fn new(target: Vec<f64>, grad_bound: f64) -> Self {
        DistanceLoss { target, grad_bound }
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }
}

impl ConvexLoss for DistanceLoss {
    fn value(&self, w: &[f64]) -> f64 {
        self.grad_bound * distance(w, &self.target)
    }

    /// Zero vector at the kink `w == target`.
    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let diff = sub(w, &self.target);
        let r = norm(&diff);
        if r == 0.0 {
            return vec![0.0; w.len()];
        }
        diff.iter().map(|x| self.grad_bound * x / r).collect()
    }

    fn min_value(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetKind {
    Piecewise {
        segments: usize,
    },
    Drift {
        path_budget: f64,
    },
    /// Read back from a file; generation parameters unknown.
    Replayed,
}

/// Target sequence `c_1..c_T` of a distance-loss environment.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSchedule {
    targets: Vec<Vec<f64>>,
    kind: TargetKind,
    seed: u64,
}

impl TargetSchedule {
    pub fn from_targets(targets: Vec<Vec<f64>>, kind: TargetKind, seed: u64) -> Result<Self> {
        if targets.is_empty() {
            return Err(invalid("target schedule must cover at least one round"));
        }
        let d = targets[0].len();
        if d == 0 || targets.iter().any(|c| c.len() != d) {
            return Err(invalid("targets must share one positive dimension"));
        }
        Ok(TargetSchedule {
            targets,
            kind,
            seed,
        })
    }

    /// Piecewise-stationary targets; segment `j` ends at `ceil(j T / segments)`.
    pub fn piecewise(
        horizon: usize,
        segments: usize,
        domain: &BallDomain,
        seed: u64,
    ) -> Result<Self> {
        if segments < 1 || segments > horizon {
            return Err(invalid(format!(
                "segments = {segments} violates 1 <= segments <= T = {horizon}"
            )));
        }
        let mut rng = SplitMix64::new(seed);
        let mut targets = Vec::with_capacity(horizon);
        let mut start = 0;
        for j in 1..=segments {
            let end = (j * horizon).div_ceil(segments);
            let c = rng.point_in_ball(domain);
            targets.extend(std::iter::repeat_n(c, end - start));
            start = end;
        }
        TargetSchedule::from_targets(targets, TargetKind::Piecewise { segments }, seed)
    }

    /// Random walk with per-step displacement `path_budget / (T - 1)`,
    /// reflected radially back into the ball.
    pub fn drift(horizon: usize, path_budget: f64, domain: &BallDomain, seed: u64) -> Result<Self> {
        if horizon < 1 {
            return Err(invalid("horizon must be at least 1"));
        }
        if !(path_budget >= 0.0 && path_budget.is_finite()) {
            return Err(invalid(format!("path budget {path_budget} must be >= 0")));
        }
        let mut rng = SplitMix64::new(seed);
        let step = if horizon > 1 {
            path_budget / (horizon - 1) as f64
        } else {
            0.0
        };
        let mut targets = Vec::with_capacity(horizon);
        targets.push(rng.point_in_ball(domain));
        for _ in 1..horizon {
            let prev = targets.last().expect("nonempty");
            let dir = rng.unit_direction(domain.dim());
            let moved = axpy(prev, step, &dir);
            targets.push(reflect_into(domain, &moved)?);
        }
        TargetSchedule::from_targets(targets, TargetKind::Drift { path_budget }, seed)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.targets[0].len()
    }

    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    /// Target of round `t`, 1-based.
    pub fn at(&self, t: usize) -> &[f64] {
        &self.targets[t - 1]
    }

    pub fn loss(&self, t: usize, grad_bound: f64) -> DistanceLoss {
        DistanceLoss::new(self.at(t).to_vec(), grad_bound)
    }

    /// `sum_{t=r}^{s-1} |c_t - c_{t+1}|`: the sequence is taken to stand
    /// still after `s`.
    pub fn path_length(&self, r: usize, s: usize) -> f64 {
        (r..s).map(|t| distance(self.at(t), self.at(t + 1))).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim()).map(|i| format!("c_{i}")));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&header)?;
        for (i, c) in self.targets.iter().enumerate() {
            let mut row = vec![(i + 1).to_string()];
            row.extend(c.iter().map(|&v| csvio::fmt_f64(v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = csvio::create(path)?;
        self.write_csv(file).map_err(|e| csvio::csv_err(path, e))
    }

    pub fn read_csv<R: Read>(input: R, path: &Path) -> Result<Self> {
        let table = CsvTable::read(input, path)?;
        let dim = table.expect_prefixed_columns(&["t"], "c_", &[])?;
        let mut targets = Vec::with_capacity(table.rows.len());
        for i in 0..table.rows.len() {
            table.expect_index(i)?;
            let c = (1..=dim)
                .map(|j| table.parse_f64(i, j))
                .collect::<Result<Vec<_>>>()?;
            targets.push(c);
        }
        TargetSchedule::from_targets(targets, TargetKind::Replayed, 0)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = csvio::open(path)?;
        TargetSchedule::read_csv(file, path)
    }
}

fn reflect_into(domain: &BallDomain, p: &[f64]) -> Result<Vec<f64>> {
    let offset = sub(p, domain.center());
    let rho = norm(&offset);
    let radius = domain.radius();
    if rho <= radius {
        return Ok(p.to_vec());
    }
    let reflected = axpy(domain.center(), (2.0 * radius - rho) / rho, &offset);
    // only reached when one step exceeds the diameter
    domain.project(&reflected)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BitKind {
    /// `b_t = mu (-1)^(t+1)`
    Alternating,
    /// `+mu` with probability `p`, else `-mu`.
    Biased(f64),
    /// `+mu` for `len` rounds, then `-mu` for `len` rounds, and so on.
    Blocks(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BitStream {
    pub bits: Vec<f64>,
    pub kind: BitKind,
    pub mu: f64,
    pub seed: u64,
}

impl BitStream {
    pub fn generate(kind: BitKind, horizon: usize, mu: f64, seed: u64) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(invalid(format!("mu = {mu} violates 0 < mu <= 1")));
        }
        let bits = match kind {
            BitKind::Alternating => (0..horizon)
                .map(|i| if i % 2 == 0 { mu } else { -mu })
                .collect(),
            BitKind::Biased(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(invalid(format!("bias p = {p} must lie in [0, 1]")));
                }
                let mut rng = SplitMix64::new(seed);
                (0..horizon)
                    .map(|_| if rng.next_f64() < p { mu } else { -mu })
                    .collect()
            }
            BitKind::Blocks(len) => {
                if len == 0 {
                    return Err(invalid("block length must be positive"));
                }
                (0..horizon)
                    .map(|i| if (i / len) % 2 == 0 { mu } else { -mu })
                    .collect()
            }
        };
        Ok(BitStream {
            bits,
            kind,
            mu,
            seed,
        })
    }
}

/// `count` seeded intervals `[r, s]` with `1 <= r <= s <= horizon`.
pub fn random_intervals(horizon: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|_| {
            let r = 1 + ((rng.next_f64() * horizon as f64) as usize).min(horizon - 1);
            let span = horizon - r + 1;
            let s = r + ((rng.next_f64() * span as f64) as usize).min(span - 1);
            (r, s)
        })
        .collect()
}
