//! Experiment driver behind the `dnp-soco` binary.
//!
//! Three commands, each writing CSV files into the configured output
//! directory:
//!
//! - [`cmd_bitpred`]: conservative DNP on a bit stream, checked round by round
//!   and over seeded random intervals.
//! - [`cmd_soco`]: smoothed OGD on a distance-loss environment; writes the
//!   trace, the targets and the level schedule.
//! - [`cmd_eval`]: adaptive and dynamic regret profiles of a saved trace.
//!
//! Exit codes: 0 when every checked bound holds, 1 on a bound violation,
//! 2 on configuration, file or format errors.

use std::fs;
use std::path::{Path, PathBuf};

use crate::confidence::DnpParams;
use crate::csvio::{self, fmt_f64};
use crate::env::{random_intervals, BitKind, BitStream, SplitMix64, TargetSchedule};
use crate::error::{invalid, Result};
use crate::eval::{
    adaptive_profile, dyadic_windows, dynamic_profile, RegretReport, RunTrace, StartMode,
};
use crate::experts::{BallDomain, ConvexLoss, ConvexSet};
use crate::predictor::{
    interval_reward_bound, per_step_change_bound, BitRun, DnpState, UpdateMode,
};
use crate::stack::{SmoothedOgd, StackSchedule};

/// Slack on the interval reward check.
pub const REWARD_TOL: f64 = 1e-9;
/// Slack on the per-step confidence change check.
pub const STEP_TOL: f64 = 1e-12;
/// Number of random intervals scored by [`cmd_bitpred`].
pub const BITPRED_INTERVALS: usize = 1000;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    Piecewise,
    Drift,
    Alternating,
    Biased,
    Blocks,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Windows {
    Dyadic,
    List(Vec<usize>),
}

impl Windows {
    /// `"dyadic"` or a comma-separated list of positive lengths.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("dyadic") {
            return Ok(Windows::Dyadic);
        }
        let list = s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| invalid(format!("window '{part}' is not a positive integer")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Windows::List(list))
    }

    pub fn resolve(&self, horizon: usize) -> Vec<usize> {
        match self {
            Windows::Dyadic => dyadic_windows(horizon),
            Windows::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub horizon: usize,
    pub lambda: f64,
    /// `None` means `1/T`.
    pub zeta: Option<f64>,
    pub grad_bound: f64,
    pub diameter: f64,
    pub dim: usize,
    pub env: EnvKind,
    pub segments: usize,
    /// Total drift path length, in the same units as `D`.
    pub path_budget: f64,
    pub mu: f64,
    pub bias: f64,
    pub block_len: usize,
    /// DNP horizon for `bitpred`; `None` means `T`.
    pub dnp_n: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub windows: Windows,
    /// `None` picks `1e-3 D` in one dimension and `2e-2 D` in two.
    pub grid_res: Option<f64>,
    pub stride_divisor: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            horizon: 4096,
            lambda: 1.0,
            zeta: None,
            grad_bound: 1.0,
            diameter: 1.0,
            dim: 1,
            env: EnvKind::Piecewise,
            segments: 4,
            path_budget: 0.5,
            mu: 1.0,
            bias: 0.7,
            block_len: 64,
            dnp_n: None,
            seed: 7,
            out: PathBuf::from("out"),
            windows: Windows::Dyadic,
            grid_res: None,
            stride_divisor: 2,
        }
    }
}

impl ExperimentConfig {
    pub fn zeta(&self) -> f64 {
        self.zeta.unwrap_or(1.0 / self.horizon.max(1) as f64)
    }

    pub fn grid_res(&self) -> f64 {
        self.grid_res
            .unwrap_or(if self.dim <= 1 { 1e-3 } else { 2e-2 } * self.diameter)
    }

    pub fn domain(&self) -> Result<BallDomain> {
        BallDomain::centered(self.dim, self.diameter)
    }

    pub fn schedule(&self) -> Result<StackSchedule> {
        match self.zeta {
            Some(z) => {
                StackSchedule::new(self.horizon, self.lambda, z, self.grad_bound, self.diameter)
            }
            None => StackSchedule::with_default_zeta(
                self.horizon,
                self.lambda,
                self.grad_bound,
                self.diameter,
            ),
        }
    }

    pub fn dnp_params(&self) -> Result<DnpParams> {
        DnpParams::new(self.dnp_n.unwrap_or(self.horizon as f64), self.zeta())
    }

    fn check_common(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(invalid("horizon T must be at least 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!(
                "lambda = {} must be finite and >= 0",
                self.lambda
            )));
        }
        if !(self.grad_bound > 0.0 && self.grad_bound.is_finite()) {
            return Err(invalid(format!("G = {} must be positive", self.grad_bound)));
        }
        if !(self.diameter > 0.0 && self.diameter.is_finite()) {
            return Err(invalid(format!("D = {} must be positive", self.diameter)));
        }
        Ok(())
    }

    fn bit_kind(&self) -> Result<BitKind> {
        match self.env {
            EnvKind::Alternating => Ok(BitKind::Alternating),
            EnvKind::Biased => Ok(BitKind::Biased(self.bias)),
            EnvKind::Blocks => Ok(BitKind::Blocks(self.block_len)),
            other => Err(invalid(format!(
                "bitpred needs a bit environment (alternating, biased, blocks), got {other:?}"
            ))),
        }
    }

    fn targets(&self, domain: &BallDomain) -> Result<TargetSchedule> {
        match self.env {
            EnvKind::Piecewise => {
                TargetSchedule::piecewise(self.horizon, self.segments, domain, self.seed)
            }
            EnvKind::Drift => {
                TargetSchedule::drift(self.horizon, self.path_budget, domain, self.seed)
            }
            other => Err(invalid(format!(
                "soco needs a target environment (piecewise, drift), got {other:?}"
            ))),
        }
    }

    /// Checks everything `cmd_soco` needs before any file is touched.
    pub fn validate_soco(&self) -> Result<StackSchedule> {
        self.check_common()?;
        if self.dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        self.targets(&self.domain()?)?;
        self.schedule()
    }

    pub fn validate_bitpred(&self) -> Result<DnpParams> {
        if self.horizon == 0 {
            return Err(invalid("bit stream must have at least one round (T >= 1)"));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(invalid(format!("mu = {} violates 0 < mu <= 1", self.mu)));
        }
        self.bit_kind()?;
        self.dnp_params()
    }

    pub fn validate_eval(&self) -> Result<()> {
        self.check_common()?;
        if self.stride_divisor == 0 {
            return Err(invalid("stride divisor must be at least 1"));
        }
        if !self.grid_res.is_none_or(|r| r > 0.0 && r.is_finite()) {
            return Err(invalid("grid resolution must be positive"));
        }
        Ok(())
    }
}

/// Result of a command: the files written and whether every bound held.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub violations: usize,
    pub summary: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.violations == 0 {
            EXIT_OK
        } else {
            EXIT_VIOLATION
        }
    }
}

/// Exit code for a command result; errors are configuration errors.
pub fn exit_code(res: &Result<Outcome>) -> i32 {
    match res {
        Ok(o) => o.exit_code(),
        Err(_) => EXIT_CONFIG,
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| crate::error::Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_rows(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let file = csvio::create(path)?;
    let mut w = csv::Writer::from_writer(file);
    let run = |w: &mut csv::Writer<fs::File>| -> Result<(), csv::Error> {
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    };
    run(&mut w).map_err(|e| csvio::csv_err(path, e))
}

/// Runs the conservative DNP on the configured bit stream.
///
/// Writes `bitpred_rounds.csv` (`t, b_t, x_t, g_t, reward_t`) and
/// `bitpred_intervals.csv` (`r, s, tau, reward, bound, margin`).
pub fn cmd_bitpred(cfg: &ExperimentConfig) -> Result<Outcome> {
    let params = cfg.validate_bitpred()?;
    let stream = BitStream::generate(cfg.bit_kind()?, cfg.horizon, cfg.mu, cfg.seed)?;
    let state = DnpState::new(params, UpdateMode::Conservative, cfg.mu)?;
    let run = BitRun::record(state, &stream.bits)?;
    ensure_dir(&cfg.out)?;

    let step_cap = per_step_change_bound(&params, cfg.mu);
    let mut violations = 0;
    let rounds = (1..=run.len()).map(|t| {
        vec![
            t.to_string(),
            fmt_f64(run.bits[t - 1]),
            fmt_f64(run.xs[t - 1]),
            fmt_f64(run.predictions[t - 1]),
            fmt_f64(run.round_reward(t)),
        ]
    });
    let rounds_path = cfg.out.join("bitpred_rounds.csv");
    write_rows(
        &rounds_path,
        &["t", "b_t", "x_t", "g_t", "reward_t"],
        rounds,
    )?;
    let max_step = run.max_step_change();
    if max_step > step_cap + STEP_TOL {
        violations += 1;
    }

    let interval_seed = SplitMix64::new(cfg.seed).next_u64();
    let mut worst = f64::INFINITY;
    let mut rows = Vec::with_capacity(BITPRED_INTERVALS);
    for (r, s) in random_intervals(run.len(), BITPRED_INTERVALS, interval_seed) {
        let tau = s - r + 1;
        let reward = run.reward(r, s);
        let bound = interval_reward_bound(&params, cfg.mu, tau, run.bit_sum(r, s), r == 1);
        let margin = reward - bound;
        worst = worst.min(margin);
        if margin < -REWARD_TOL {
            violations += 1;
        }
        rows.push(vec![
            r.to_string(),
            s.to_string(),
            tau.to_string(),
            fmt_f64(reward),
            fmt_f64(bound),
            fmt_f64(margin),
        ]);
    }
    let intervals_path = cfg.out.join("bitpred_intervals.csv");
    write_rows(
        &intervals_path,
        &["r", "s", "tau", "reward", "bound", "margin"],
        rows,
    )?;

    Ok(Outcome {
        files: vec![rounds_path, intervals_path],
        violations,
        summary: vec![
            format!("U = {}", fmt_f64(params.u())),
            format!(
                "max step change {} (bound {})",
                fmt_f64(max_step),
                fmt_f64(step_cap)
            ),
            format!("min interval margin {}", fmt_f64(worst)),
        ],
    })
}

/// Plays smoothed OGD against the configured environment and returns the
/// trace, including `w_{T+1}`.
pub fn run_soco(
    schedule: StackSchedule,
    domain: &BallDomain,
    targets: TargetSchedule,
) -> Result<RunTrace> {
    let g = schedule.grad_bound();
    let (lambda, d) = (schedule.lambda(), schedule.diameter());
    let mut stack = SmoothedOgd::new(schedule, domain.clone(), domain.center().to_vec())?;
    let mut predictions = Vec::with_capacity(targets.len() + 1);
    let mut losses = Vec::with_capacity(targets.len());
    for t in 1..=targets.len() {
        let loss = targets.loss(t, g);
        let w = stack.play(&loss)?;
        losses.push(loss.normalized_value(&w));
        predictions.push(w);
    }
    predictions.push(stack.prediction().to_vec());
    RunTrace::new(predictions, losses, targets, lambda, g, d)
}

/// Writes `trace.csv`, `targets.csv` and `schedule.csv` (`i, n_i, eta_i`).
pub fn cmd_soco(cfg: &ExperimentConfig) -> Result<Outcome> {
    let schedule = cfg.validate_soco()?;
    let domain = cfg.domain()?;
    let targets = cfg.targets(&domain)?;
    ensure_dir(&cfg.out)?;

    let sched_path = cfg.out.join("schedule.csv");
    let rows = schedule
        .levels()
        .iter()
        .enumerate()
        .map(|(i, l)| vec![(i + 1).to_string(), fmt_f64(l.n), fmt_f64(l.eta)]);
    write_rows(&sched_path, &["i", "n_i", "eta_i"], rows)?;

    let targets_path = cfg.out.join("targets.csv");
    targets.save(&targets_path)?;

    let mut summary = vec![
        format!("K = {}", schedule.k()),
        format!("Z = {}", fmt_f64(schedule.zeta())),
    ];
    summary.extend(schedule.warnings().iter().map(|w| format!("warning: {w}")));

    let trace = run_soco(schedule, &domain, targets)?;
    let trace_path = cfg.out.join("trace.csv");
    trace.save(&trace_path)?;
    summary.push(format!(
        "total cost {}",
        fmt_f64(trace.total_cost(1, trace.horizon())?)
    ));

    Ok(Outcome {
        files: vec![trace_path, targets_path, sched_path],
        violations: 0,
        summary,
    })
}

/// Scores a saved trace. The comparator sequence of the dynamic profile is
/// the target sequence itself.
///
/// Writes `report_adaptive.csv` (`tau, r_star, measured, bound, margin`)
/// and `report_dynamic.csv` (`tau, r_star, path, measured, bound, margin`).
pub fn cmd_eval(cfg: &ExperimentConfig, trace_path: &Path, targets_path: &Path) -> Result<Outcome> {
    cfg.validate_eval()?;
    let targets = TargetSchedule::load(targets_path)?;
    let domain = BallDomain::centered(targets.dim(), cfg.diameter)?;
    let trace = RunTrace::load(
        trace_path,
        targets,
        cfg.lambda,
        cfg.grad_bound,
        cfg.diameter,
    )?;
    let windows = cfg.windows.resolve(trace.horizon());
    if windows.is_empty() {
        return Err(invalid("no evaluation windows"));
    }
    if domain.dim() > 2 {
        return Err(invalid(format!(
            "grid oracle supports d <= 2, got d = {}",
            domain.dim()
        )));
    }
    let starts = StartMode::Strided(cfg.stride_divisor);
    // the trace file, not --dim, decides the dimension here
    let grid_res = ExperimentConfig {
        dim: domain.dim(),
        ..cfg.clone()
    }
    .grid_res();
    let report = RegretReport {
        adaptive: adaptive_profile(&trace, &domain, &windows, starts, grid_res)?,
        dynamic: dynamic_profile(&trace, trace.targets(), &windows, starts)?,
    };
    ensure_dir(&cfg.out)?;
    let adaptive_path = cfg.out.join("report_adaptive.csv");
    let file = csvio::create(&adaptive_path)?;
    report
        .write_adaptive_csv(file)
        .map_err(|e| csvio::csv_err(&adaptive_path, e))?;
    let dynamic_path = cfg.out.join("report_dynamic.csv");
    let file = csvio::create(&dynamic_path)?;
    report
        .write_dynamic_csv(file)
        .map_err(|e| csvio::csv_err(&dynamic_path, e))?;

    let violations = report
        .adaptive
        .iter()
        .map(|r| r.margin)
        .chain(report.dynamic.iter().map(|r| r.margin))
        .filter(|&m| m < 0.0)
        .count();
    Ok(Outcome {
        files: vec![adaptive_path, dynamic_path],
        violations,
        summary: vec![format!("min margin {}", fmt_f64(report.min_margin()))],
    })
}
