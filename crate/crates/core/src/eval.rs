//! Regret with switching cost, measured on recorded runs.
//!
//! All interval indices are 1-based and inclusive. Switching costs use the
//! forward convention `|w_t - w_{t+1}|` for `t = r..s`, so a trace over `T`
//! rounds carries `T + 1` predictions.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::csvio::{self, CsvTable};
use crate::env::TargetSchedule;
use crate::error::{invalid, Error, Result};
use crate::experts::{BallDomain, ConvexSet};
use crate::linalg::distance;
use crate::stack::{adaptive_regret_bound, dynamic_regret_bound};

/// Everything needed to score one run of a learner on a distance-loss
/// environment.
#[derive(Debug, Clone)]
pub struct RunTrace {
    predictions: Vec<Vec<f64>>,
    loss_values: Vec<f64>,
    targets: TargetSchedule,
    lambda: f64,
    grad_bound: f64,
    diameter: f64,
    loss_prefix: Vec<f64>,
    move_prefix: Vec<f64>,
}

impl RunTrace {
    /// `predictions` holds `w_1..w_{T+1}`; `loss_values` the normalized
    /// `f_t(w_t)` for `t = 1..T`.
    pub fn new(
        predictions: Vec<Vec<f64>>,
        loss_values: Vec<f64>,
        targets: TargetSchedule,
        lambda: f64,
        grad_bound: f64,
        diameter: f64,
    ) -> Result<Self> {
        let horizon = loss_values.len();
        if horizon == 0 {
            return Err(invalid("trace must cover at least one round"));
        }
        if predictions.len() != horizon + 1 {
            return Err(invalid(format!(
                "trace has {} losses but {} predictions (expected {})",
                horizon,
                predictions.len(),
                horizon + 1
            )));
        }
        if targets.len() != horizon {
            return Err(invalid(format!(
                "trace covers {horizon} rounds but the target schedule has {}",
                targets.len()
            )));
        }
        if predictions.iter().any(|w| w.len() != targets.dim()) {
            return Err(Error::DimensionMismatch {
                expected: targets.dim(),
                got: predictions
                    .iter()
                    .map(Vec::len)
                    .find(|&l| l != targets.dim())
                    .unwrap_or(0),
            });
        }
        let mut loss_prefix = vec![0.0; horizon + 1];
        let mut move_prefix = vec![0.0; horizon + 1];
        for t in 0..horizon {
            loss_prefix[t + 1] = loss_prefix[t] + loss_values[t];
            move_prefix[t + 1] = move_prefix[t] + distance(&predictions[t], &predictions[t + 1]);
        }
        Ok(RunTrace {
            predictions,
            loss_values,
            targets,
            lambda,
            grad_bound,
            diameter,
            loss_prefix,
            move_prefix,
        })
    }

    /// Scores `predictions` against the distance losses of `targets`.
    pub fn from_predictions(
        predictions: Vec<Vec<f64>>,
        targets: TargetSchedule,
        lambda: f64,
        grad_bound: f64,
        diameter: f64,
    ) -> Result<Self> {
        if predictions.len() != targets.len() + 1 {
            return Err(invalid(format!(
                "{} predictions for {} rounds (expected T + 1)",
                predictions.len(),
                targets.len()
            )));
        }
        let loss_values = (1..=targets.len())
            .map(|t| grad_bound * distance(&predictions[t - 1], targets.at(t)))
            .collect();
        RunTrace::new(
            predictions,
            loss_values,
            targets,
            lambda,
            grad_bound,
            diameter,
        )
    }

    pub fn horizon(&self) -> usize {
        self.loss_values.len()
    }

    pub fn predictions(&self) -> &[Vec<f64>] {
        &self.predictions
    }

    pub fn loss_values(&self) -> &[f64] {
        &self.loss_values
    }

    pub fn targets(&self) -> &TargetSchedule {
        &self.targets
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn grad_bound(&self) -> f64 {
        self.grad_bound
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `|w_t - w_{t+1}|`, 1-based.
    pub fn switch_norm(&self, t: usize) -> f64 {
        self.move_prefix[t] - self.move_prefix[t - 1]
    }

    fn check_interval(&self, r: usize, s: usize) -> Result<()> {
        if r < 1 || r > s || s > self.horizon() {
            return Err(Error::IntervalOutOfRange {
                r,
                s,
                horizon: self.horizon(),
            });
        }
        Ok(())
    }

    /// `sum_{t=r}^{s} f_t(w_t)`
    pub fn hitting_cost(&self, r: usize, s: usize) -> Result<f64> {
        self.check_interval(r, s)?;
        Ok(self.loss_prefix[s] - self.loss_prefix[r - 1])
    }

    /// `lambda G sum_{t=r}^{s} |w_t - w_{t+1}|`
    pub fn switching_cost(&self, r: usize, s: usize) -> Result<f64> {
        self.check_interval(r, s)?;
        Ok(self.lambda * self.grad_bound * (self.move_prefix[s] - self.move_prefix[r - 1]))
    }

    /// Hitting plus switching cost over `[r, s]`.
    pub fn total_cost(&self, r: usize, s: usize) -> Result<f64> {
        Ok(self.hitting_cost(r, s)? + self.switching_cost(r, s)?)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let d = self.targets.dim();
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|i| format!("w_{i}")));
        header.push("loss".into());
        header.push("switch".into());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&header)?;
        let horizon = self.horizon();
        for (i, p) in self.predictions.iter().enumerate() {
            let mut row = vec![(i + 1).to_string()];
            row.extend(p.iter().map(|&v| csvio::fmt_f64(v)));
            if i < horizon {
                row.push(csvio::fmt_f64(self.loss_values[i]));
                row.push(csvio::fmt_f64(self.switch_norm(i + 1)));
            } else {
                row.push(String::new());
                row.push(String::new());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = csvio::create(path)?;
        self.write_csv(file).map_err(|e| csvio::csv_err(path, e))
    }

    /// Reads the trace format written by [`RunTrace::write_csv`]: rows
    /// `t = 1..T+1`, the last with empty `loss` and `switch`.
    pub fn read_csv<R: Read>(
        input: R,
        path: &Path,
        targets: TargetSchedule,
        lambda: f64,
        grad_bound: f64,
        diameter: f64,
    ) -> Result<Self> {
        let table = CsvTable::read(input, path)?;
        let d = table.expect_prefixed_columns(&["t"], "w_", &["loss", "switch"])?;
        if table.rows.len() < 2 {
            return Err(table.format_error(table.rows.len(), "trace needs at least two rows"));
        }
        let last = table.rows.len() - 1;
        let mut predictions = Vec::with_capacity(table.rows.len());
        let mut losses = Vec::with_capacity(last);
        for i in 0..table.rows.len() {
            table.expect_index(i)?;
            let w = (1..=d)
                .map(|j| table.parse_f64(i, j))
                .collect::<Result<Vec<_>>>()?;
            predictions.push(w);
            let loss = table.parse_opt_f64(i, d + 1)?;
            table.parse_opt_f64(i, d + 2)?;
            match (i == last, loss) {
                (false, Some(v)) => losses.push(v),
                (false, None) => return Err(table.format_error(i + 1, "missing loss value")),
                (true, Some(_)) => {
                    return Err(table.format_error(i + 1, "final row carries only w_{T+1}"))
                }
                (true, None) => {}
            }
        }
        RunTrace::new(predictions, losses, targets, lambda, grad_bound, diameter)
    }

    pub fn load(
        path: &Path,
        targets: TargetSchedule,
        lambda: f64,
        grad_bound: f64,
        diameter: f64,
    ) -> Result<Self> {
        let file = csvio::open(path)?;
        RunTrace::read_csv(file, path, targets, lambda, grad_bound, diameter)
    }
}

/// Best grid point and its cumulative loss.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub point: Vec<f64>,
    pub value: f64,
}

/// Guaranteed gap between the grid oracle at `resolution` and the true
/// minimum over an interval of length `tau`.
pub fn oracle_slack(grad_bound: f64, tau: usize, resolution: f64, dim: usize) -> f64 {
    grad_bound * tau as f64 * resolution * (dim as f64).sqrt() / 10.0
}

/// Run-length compression of the targets on `[r, s]`.
fn weighted_targets(targets: &TargetSchedule, r: usize, s: usize) -> Vec<(&[f64], f64)> {
    let mut out: Vec<(&[f64], f64)> = Vec::new();
    for t in r..=s {
        let c = targets.at(t);
        match out.last_mut() {
            Some((prev, w)) if *prev == c => *w += 1.0,
            _ => out.push((c, 1.0)),
        }
    }
    out
}

fn weighted_distance_sum(w: &[f64], pts: &[(&[f64], f64)]) -> f64 {
    pts.iter().map(|(c, k)| k * distance(w, c)).sum()
}

/// Lattice points of spacing `step` centred at `origin`, within `half`
/// (per axis) of it, that lie in `domain`.
fn lattice(domain: &BallDomain, origin: &[f64], step: f64, half: f64) -> Vec<Vec<f64>> {
    let k = (half / step + 1e-9).floor() as i64;
    let axis: Vec<f64> = (-k..=k).map(|i| i as f64 * step).collect();
    let mut out = Vec::new();
    match origin.len() {
        1 => {
            for &a in &axis {
                let p = vec![origin[0] + a];
                if domain.contains(&p, 0.0) {
                    out.push(p);
                }
            }
        }
        2 => {
            for &a in &axis {
                for &b in &axis {
                    let p = vec![origin[0] + a, origin[1] + b];
                    if domain.contains(&p, 0.0) {
                        out.push(p);
                    }
                }
            }
        }
        _ => unreachable!("grid oracle is limited to d <= 2"),
    }
    out
}

/// Best fixed point for the distance losses on `[r, s]`: grid search at
/// `resolution`, then one refinement at `resolution / 10` around the
/// incumbent. Limited to `d <= 2`.
pub fn best_fixed_oracle(
    targets: &TargetSchedule,
    r: usize,
    s: usize,
    domain: &BallDomain,
    grad_bound: f64,
    resolution: f64,
) -> Result<OracleResult> {
    if domain.dim() > 2 {
        return Err(invalid(format!(
            "grid oracle supports d <= 2, got d = {}",
            domain.dim()
        )));
    }
    if domain.dim() != targets.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: targets.dim(),
        });
    }
    if !(resolution > 0.0) {
        return Err(invalid(format!("resolution {resolution} must be positive")));
    }
    if r < 1 || r > s || s > targets.len() {
        return Err(Error::IntervalOutOfRange {
            r,
            s,
            horizon: targets.len(),
        });
    }
    let pts = weighted_targets(targets, r, s);
    let search = |cands: Vec<Vec<f64>>, best: Option<OracleResult>| {
        cands.into_iter().fold(best, |best, p| {
            let v = weighted_distance_sum(&p, &pts);
            match best {
                Some(b) if b.value <= v => Some(b),
                _ => Some(OracleResult { point: p, value: v }),
            }
        })
    };
    let coarse = lattice(domain, domain.center(), resolution, domain.radius());
    let mut best = search(coarse, None).unwrap_or_else(|| OracleResult {
        point: domain.center().to_vec(),
        value: weighted_distance_sum(domain.center(), &pts),
    });
    let fine = lattice(domain, &best.point.clone(), resolution / 10.0, resolution);
    best = search(fine, Some(best)).expect("incumbent present");
    best.value *= grad_bound;
    Ok(best)
}

/// `RS(r, s)`: cost over `[r, s]` minus the grid oracle's best fixed loss.
pub fn interval_regret(
    trace: &RunTrace,
    domain: &BallDomain,
    r: usize,
    s: usize,
    resolution: f64,
) -> Result<f64> {
    let cost = trace.total_cost(r, s)?;
    let best = best_fixed_oracle(
        trace.targets(),
        r,
        s,
        domain,
        trace.grad_bound(),
        resolution,
    )?;
    Ok(cost - best.value)
}

/// Interval starts examined for each window length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartMode {
    /// `r = 1, 1 + tau/k, 1 + 2 tau/k, ...`
    Strided(usize),
    /// Every `r` with `r + tau - 1 <= T`.
    Exhaustive,
}

impl StartMode {
    pub fn starts(&self, horizon: usize, tau: usize) -> Vec<usize> {
        if tau == 0 || tau > horizon {
            return Vec::new();
        }
        let last = horizon + 1 - tau;
        let stride = match *self {
            StartMode::Strided(k) => (tau / k.max(1)).max(1),
            StartMode::Exhaustive => 1,
        };
        (1..=last).step_by(stride).collect()
    }
}

/// Powers of two from 8 up to `T`; just `[T]` for very short runs.
pub fn dyadic_windows(horizon: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut tau = 8;
    while tau <= horizon {
        out.push(tau);
        tau *= 2;
    }
    if out.is_empty() {
        out.push(horizon);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRow {
    pub tau: usize,
    pub r_star: usize,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicRow {
    pub tau: usize,
    pub r_star: usize,
    pub path: f64,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
}

/// For each window, the worst interval regret over the chosen starts,
/// paired with `bound(tau)`.
pub fn adaptive_profile_with<F>(
    trace: &RunTrace,
    domain: &BallDomain,
    windows: &[usize],
    starts: StartMode,
    resolution: f64,
    bound: F,
) -> Result<Vec<AdaptiveRow>>
where
    F: Fn(usize) -> f64,
{
    let horizon = trace.horizon();
    let mut rows = Vec::with_capacity(windows.len());
    for &tau in windows {
        if tau < 1 || tau > horizon {
            return Err(invalid(format!("window {tau} outside [1, {horizon}]")));
        }
        let cells = starts
            .starts(horizon, tau)
            .into_par_iter()
            .map(|r| interval_regret(trace, domain, r, r + tau - 1, resolution).map(|v| (r, v)))
            .collect::<Result<Vec<_>>>()?;
        // first maximum in r order
        let (r_star, measured) =
            cells.into_iter().fold(
                (0, f64::NEG_INFINITY),
                |acc, (r, v)| if v > acc.1 { (r, v) } else { acc },
            );
        let b = bound(tau);
        rows.push(AdaptiveRow {
            tau,
            r_star,
            measured,
            bound: b,
            margin: b - measured,
        });
    }
    Ok(rows)
}

/// Adaptive profile against the smoothed-OGD interval bound.
pub fn adaptive_profile(
    trace: &RunTrace,
    domain: &BallDomain,
    windows: &[usize],
    starts: StartMode,
    resolution: f64,
) -> Result<Vec<AdaptiveRow>> {
    let (lambda, g, d, horizon) = (
        trace.lambda(),
        trace.grad_bound(),
        trace.diameter(),
        trace.horizon(),
    );
    adaptive_profile_with(trace, domain, windows, starts, resolution, |tau| {
        adaptive_regret_bound(tau, lambda, g, d, horizon)
    })
}

/// Dynamic regret over `[r, s]` against `comparators`, with the path
/// length `sum_{t=r}^{s-1} |u_t - u_{t+1}|`.
pub fn dynamic_regret(
    trace: &RunTrace,
    comparators: &TargetSchedule,
    r: usize,
    s: usize,
) -> Result<(f64, f64)> {
    if comparators.len() != trace.horizon() || comparators.dim() != trace.targets().dim() {
        return Err(invalid(
            "comparator sequence must match the trace's horizon and dimension",
        ));
    }
    let cost = trace.total_cost(r, s)?;
    let g = trace.grad_bound();
    let comparator_loss: f64 = (r..=s)
        .map(|t| g * distance(comparators.at(t), trace.targets().at(t)))
        .sum();
    Ok((cost - comparator_loss, comparators.path_length(r, s)))
}

/// For each window, the start with the smallest margin against
/// `bound(tau, path)`.
pub fn dynamic_profile_with<F>(
    trace: &RunTrace,
    comparators: &TargetSchedule,
    windows: &[usize],
    starts: StartMode,
    bound: F,
) -> Result<Vec<DynamicRow>>
where
    F: Fn(usize, f64) -> f64 + Sync,
{
    let horizon = trace.horizon();
    let mut rows = Vec::with_capacity(windows.len());
    for &tau in windows {
        if tau < 1 || tau > horizon {
            return Err(invalid(format!("window {tau} outside [1, {horizon}]")));
        }
        let cells = starts
            .starts(horizon, tau)
            .into_par_iter()
            .map(|r| {
                let (measured, path) = dynamic_regret(trace, comparators, r, r + tau - 1)?;
                let b = bound(tau, path);
                Ok(DynamicRow {
                    tau,
                    r_star: r,
                    path,
                    measured,
                    bound: b,
                    margin: b - measured,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let worst = cells
            .into_iter()
            .reduce(|a, b| if b.margin < a.margin { b } else { a })
            .expect("at least one start");
        rows.push(worst);
    }
    Ok(rows)
}

/// Dynamic profile against the smoothed-OGD dynamic bound.
pub fn dynamic_profile(
    trace: &RunTrace,
    comparators: &TargetSchedule,
    windows: &[usize],
    starts: StartMode,
) -> Result<Vec<DynamicRow>> {
    let (lambda, g, d, horizon) = (
        trace.lambda(),
        trace.grad_bound(),
        trace.diameter(),
        trace.horizon(),
    );
    dynamic_profile_with(trace, comparators, windows, starts, |tau, path| {
        dynamic_regret_bound(tau, lambda, g, d, horizon, path)
    })
}

/// Adaptive and dynamic rows of one evaluation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretReport {
    pub adaptive: Vec<AdaptiveRow>,
    pub dynamic: Vec<DynamicRow>,
}

impl RegretReport {
    pub fn min_margin(&self) -> f64 {
        self.adaptive
            .iter()
            .map(|r| r.margin)
            .chain(self.dynamic.iter().map(|r| r.margin))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_adaptive_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau", "r_star", "measured", "bound", "margin"])?;
        for r in &self.adaptive {
            w.write_record([
                r.tau.to_string(),
                r.r_star.to_string(),
                csvio::fmt_f64(r.measured),
                csvio::fmt_f64(r.bound),
                csvio::fmt_f64(r.margin),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_dynamic_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau", "r_star", "path", "measured", "bound", "margin"])?;
        for r in &self.dynamic {
            w.write_record([
                r.tau.to_string(),
                r.r_star.to_string(),
                csvio::fmt_f64(r.path),
                csvio::fmt_f64(r.measured),
                csvio::fmt_f64(r.bound),
                csvio::fmt_f64(r.margin),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::TargetKind;

    fn line_targets(cs: &[f64]) -> TargetSchedule {
        TargetSchedule::from_targets(
            cs.iter().map(|&c| vec![c]).collect(),
            TargetKind::Replayed,
            0,
        )
        .unwrap()
    }

    fn line_trace(ws: &[f64], cs: &[f64], lambda: f64) -> RunTrace {
        RunTrace::from_predictions(
            ws.iter().map(|&w| vec![w]).collect(),
            line_targets(cs),
            lambda,
            1.0,
            2.0,
        )
        .unwrap()
    }

    fn unit_line() -> BallDomain {
        BallDomain::centered(1, 2.0).unwrap()
    }

    #[test]
    fn switching_cost_examples() {
        let t = line_trace(&[0.3, 0.3, 0.3, 0.3], &[0.0, 0.0, 0.0], 1.0);
        assert_eq!(t.switching_cost(1, 3).unwrap(), 0.0);
        let t = line_trace(&[0.0, 1.0, 0.0, 0.5], &[0.0, 0.0, 0.0], 0.0);
        assert_eq!(t.switching_cost(1, 3).unwrap(), 0.0);
        let t = line_trace(&[0.0, 1.0, 0.0, 0.5], &[0.0, 0.0, 0.0], 1.0);
        assert_eq!(t.switching_cost(1, 2).unwrap(), 2.0);
        assert!(matches!(
            t.switching_cost(0, 2),
            Err(Error::IntervalOutOfRange { .. })
        ));
        assert!(t.switching_cost(2, 4).is_err());
        assert!(t.switching_cost(3, 2).is_err());
    }

    #[test]
    fn length_consistency() {
        let targets = line_targets(&[0.0, 0.0]);
        assert!(RunTrace::new(
            vec![vec![0.0]; 2],
            vec![0.0; 2],
            targets.clone(),
            0.0,
            1.0,
            1.0
        )
        .is_err());
        assert!(RunTrace::new(vec![vec![0.0]; 3], vec![0.0; 2], targets, 0.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn oracle_identical_targets() {
        let ball = BallDomain::centered(2, 1.0).unwrap();
        let c = vec![0.123, -0.2];
        let s = TargetSchedule::from_targets(vec![c.clone(); 20], TargetKind::Replayed, 0).unwrap();
        let o = best_fixed_oracle(&s, 1, 20, &ball, 1.0, 1e-2).unwrap();
        assert!(distance(&o.point, &c) <= 1e-3 * 2f64.sqrt());
        assert!(o.value <= oracle_slack(1.0, 20, 1e-2, 2));
    }

    #[test]
    fn oracle_symmetric_pair() {
        let a = 0.37;
        let cs: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { -a } else { a }).collect();
        let s = line_targets(&cs);
        let o = best_fixed_oracle(&s, 1, 10, &unit_line(), 1.0, 1e-3).unwrap();
        assert!((o.value - 2.0 * a * 5.0).abs() < 1e-12);
        assert!(o.point[0].abs() <= a + 1e-12);
    }

    #[test]
    fn oracle_rejects_three_dimensions() {
        let ball = BallDomain::centered(3, 1.0).unwrap();
        let s =
            TargetSchedule::from_targets(vec![vec![0.0; 3]; 4], TargetKind::Replayed, 0).unwrap();
        assert!(best_fixed_oracle(&s, 1, 4, &ball, 1.0, 0.1).is_err());
    }

    #[test]
    fn interval_regret_hand_computed() {
        // w = (0, 0.5, -0.5, 0), targets (0.5, 0.5, -0.5), lambda = 1, G = 1.
        // hitting 0.5 + 0 + 0 = 0.5; switching 0.5 + 1 + 0.5 = 2;
        // best fixed point: median 0.5 gives 0 + 0 + 1 = 1.
        let t = line_trace(&[0.0, 0.5, -0.5, 0.0], &[0.5, 0.5, -0.5], 1.0);
        let v = interval_regret(&t, &unit_line(), 1, 3, 1e-3).unwrap();
        assert!((v - 1.5).abs() < 1e-9, "{v}");
        let t0 = line_trace(&[0.0, 0.5, -0.5, 0.0], &[0.5, 0.5, -0.5], 0.0);
        assert!((interval_regret(&t0, &unit_line(), 1, 3, 1e-3).unwrap() - -0.5).abs() < 1e-9);
    }

    #[test]
    fn stationary_optimal_play_has_no_regret() {
        let t = line_trace(&[0.25; 9], &[0.25; 8], 1.0);
        let v = interval_regret(&t, &unit_line(), 1, 8, 1e-3).unwrap();
        assert!(v <= oracle_slack(1.0, 8, 1e-3, 1));
    }

    #[test]
    fn starts_and_windows() {
        assert_eq!(StartMode::Strided(1).starts(16, 4), vec![1, 5, 9, 13]);
        assert_eq!(StartMode::Strided(2).starts(16, 8), vec![1, 5, 9]);
        assert_eq!(StartMode::Strided(2).starts(16, 16), vec![1]);
        assert_eq!(StartMode::Exhaustive.starts(5, 3), vec![1, 2, 3]);
        assert_eq!(
            dyadic_windows(4096),
            (3..=12).map(|k| 1usize << k).collect::<Vec<_>>()
        );
        assert_eq!(dyadic_windows(5), vec![5]);
    }

    #[test]
    fn full_window_profile_matches_single_interval() {
        let t = line_trace(
            &[0.0, 0.1, 0.2, 0.1, 0.0, -0.1, 0.0, 0.1, 0.2],
            &[0.3, 0.3, -0.2, -0.2, 0.5, 0.5, 0.5, 0.0],
            2.0,
        );
        let rows = adaptive_profile(&t, &unit_line(), &[8], StartMode::Strided(2), 1e-3).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].r_star, 1);
        assert_eq!(
            rows[0].measured,
            interval_regret(&t, &unit_line(), 1, 8, 1e-3).unwrap()
        );
        assert_eq!(rows[0].margin, rows[0].bound - rows[0].measured);
    }

    #[test]
    fn dynamic_regret_reductions() {
        let ws = [0.0, 0.1, 0.2, 0.1, 0.0];
        let cs = [0.3, -0.3, 0.4, 0.0];
        let t = line_trace(&ws, &cs, 1.5);

        // comparators = predictions: only switching remains
        let own = line_targets(&ws[..4]);
        let (reg, _) = dynamic_regret(&t, &own, 1, 4).unwrap();
        assert!((reg - t.switching_cost(1, 4).unwrap()).abs() < 1e-12);

        // comparators = targets: regret is the whole cost
        let (reg, path) = dynamic_regret(&t, t.targets(), 1, 4).unwrap();
        assert!((reg - t.total_cost(1, 4).unwrap()).abs() < 1e-12);
        assert!((path - (0.6 + 0.7 + 0.4)).abs() < 1e-12);

        // fixed comparator: path 0, regret is cost minus its fixed loss
        let fixed = line_targets(&[0.1; 4]);
        let (reg, path) = dynamic_regret(&t, &fixed, 2, 4).unwrap();
        assert_eq!(path, 0.0);
        let expected = t.total_cost(2, 4).unwrap() - (0.4 + 0.3 + 0.1);
        assert!((reg - expected).abs() < 1e-12);
    }

    #[test]
    fn trace_csv_round_trip() {
        let t = line_trace(&[0.0, 0.1, 0.2, 0.1, 0.0], &[0.3, -0.3, 0.4, 0.0], 1.5);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = RunTrace::read_csv(
            buf.as_slice(),
            Path::new("m"),
            t.targets().clone(),
            1.5,
            1.0,
            2.0,
        )
        .unwrap();
        assert_eq!(back.predictions(), t.predictions());
        assert_eq!(back.loss_values(), t.loss_values());

        let text = String::from_utf8(buf).unwrap().replace("\n3,", "\n3,zz");
        let err = RunTrace::read_csv(
            text.as_bytes(),
            Path::new("m"),
            t.targets().clone(),
            1.5,
            1.0,
            2.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
    }
}
