use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dnp_soco::harness::{self, EnvKind, ExperimentConfig, Windows};

#[derive(Parser)]
#[command(
    name = "dnp-soco",
    version,
    about = "Smoothed OCO with switching costs: experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the conservative DNP on a bit stream and check its reward bounds.
    Bitpred(Common),
    /// Run smoothed OGD on a target environment and save the trace.
    Soco(Common),
    /// Score a saved trace against the adaptive and dynamic regret bounds.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Trace file (default: OUT/trace.csv).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Targets file (default: OUT/targets.csv).
        #[arg(long)]
        targets: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvArg {
    Piecewise,
    Drift,
    Alternating,
    Biased,
    Blocks,
}

impl From<EnvArg> for EnvKind {
    fn from(e: EnvArg) -> Self {
        match e {
            EnvArg::Piecewise => EnvKind::Piecewise,
            EnvArg::Drift => EnvKind::Drift,
            EnvArg::Alternating => EnvKind::Alternating,
            EnvArg::Biased => EnvKind::Biased,
            EnvArg::Blocks => EnvKind::Blocks,
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 4096)]
    horizon: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Base Z of the confidence function (default 1/T).
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, value_enum, default_value = "piecewise")]
    env: EnvArg,
    #[arg(long, default_value_t = 4)]
    segments: usize,
    #[arg(long, default_value_t = 0.5)]
    path_budget: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Comma-separated window lengths, or "dyadic".
    #[arg(long, default_value = "dyadic")]
    windows: String,
    /// Oracle grid resolution (default 1e-3 D in 1-D, 2e-2 D in 2-D).
    #[arg(long)]
    grid_res: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    grad_bound: f64,
    #[arg(long, default_value_t = 1.0)]
    diameter: f64,
    /// Effective horizon of the bit predictor (default T).
    #[arg(long)]
    dnp_n: Option<f64>,
    /// Probability of +mu in the biased stream.
    #[arg(long, default_value_t = 0.7)]
    bias: f64,
    #[arg(long, default_value_t = 64)]
    block_len: usize,
    /// Window starts are spaced tau / stride_divisor apart.
    #[arg(long, default_value_t = 2)]
    stride_divisor: usize,
}

impl Common {
    fn config(&self) -> dnp_soco::Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            horizon: self.horizon,
            lambda: self.lambda,
            zeta: self.zeta,
            grad_bound: self.grad_bound,
            diameter: self.diameter,
            dim: self.dim,
            env: self.env.into(),
            segments: self.segments,
            path_budget: self.path_budget,
            mu: self.mu,
            bias: self.bias,
            block_len: self.block_len,
            dnp_n: self.dnp_n,
            seed: self.seed,
            out: self.out.clone(),
            windows: Windows::parse(&self.windows)?,
            grid_res: self.grid_res,
            stride_divisor: self.stride_divisor,
        })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                harness::EXIT_CONFIG as u8
            } else {
                0
            });
        }
    };
    let res = match &cli.command {
        Command::Bitpred(c) => c.config().and_then(|cfg| harness::cmd_bitpred(&cfg)),
        Command::Soco(c) => c.config().and_then(|cfg| harness::cmd_soco(&cfg)),
        Command::Eval {
            common,
            trace,
            targets,
        } => common.config().and_then(|cfg| {
            let trace = trace.clone().unwrap_or_else(|| cfg.out.join("trace.csv"));
            let targets = targets
                .clone()
                .unwrap_or_else(|| cfg.out.join("targets.csv"));
            harness::cmd_eval(&cfg, &trace, &targets)
        }),
    };
    match &res {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.violations > 0 {
                eprintln!("{} bound violation(s)", outcome.violations);
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(harness::exit_code(&res) as u8)
}
