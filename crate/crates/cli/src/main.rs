use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairlag::audit::{BoundInputs, DEFAULT_C};
use fairlag::data::SchemaConfig;
use fairlag::lagrange::Objective;
use fairlag_cli::commands;
use fairlag_cli::config::{ConstraintName, Overrides, RunConfig};
use fairlag_cli::{CliError, Result};

#[derive(Parser)]
#[command(
    name = "fairlag",
    version,
    about = "Fairness-constrained neural classifiers trained by Lagrangian min-max"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a stratified 80/20 split and write model, log and report.
    Train(RunArgs),
    /// k-fold cross-validation with an aggregated report.
    Crossval(RunArgs),
    /// Cross-validate once per tolerance in the config's `sweep` list.
    Sweep(RunArgs),
    /// Print metrics of a saved model on a CSV file as JSON.
    Audit(AuditArgs),
    /// Generalization-bound table over a range of batch counts.
    Bounds(BoundArgs),
    /// Disparate-impact pairs that stay close in sup-norm but differ by 0.5.
    Counterexample(CounterArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep the multiplier at zero (unconstrained baseline, constraint still measured).
    #[arg(long)]
    lambda_zero: bool,
    #[arg(long, value_enum)]
    constraint: Option<ConstraintName>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    p_percent: Option<f64>,
    #[arg(long, value_enum)]
    objective: Option<ObjectiveArg>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ObjectiveArg {
    Ce,
    Qmean,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            seed: self.seed,
            out: self.out.clone(),
            lambda_zero: self.lambda_zero,
            constraint: self.constraint,
            epsilon: self.epsilon,
            p_percent: self.p_percent,
            objective: self.objective.map(|o| match o {
                ObjectiveArg::Ce => Objective::Ce,
                ObjectiveArg::Qmean => Objective::Qmean,
            }),
        })?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Schema JSON; needed only when the checkpoint carries no encoder.
    #[arg(long, conflicts_with = "preset")]
    schema: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value_t = 500)]
    batch_size: usize,
}

#[derive(Args)]
struct BoundArgs {
    /// Hidden-layer count.
    #[arg(long, default_value_t = 2)]
    r: u32,
    /// Parameter count.
    #[arg(long)]
    d: u64,
    /// Per-layer l1 weight bound.
    #[arg(long)]
    w: f64,
    /// Output bound.
    #[arg(long, default_value_t = 1.0)]
    l: f64,
    /// Batch size.
    #[arg(long)]
    s: u64,
    /// Smallest batch count as a power of ten.
    #[arg(long, default_value_t = 2)]
    b_min_exp: i32,
    /// Largest batch count as a power of ten.
    #[arg(long, default_value_t = 6)]
    b_max_exp: i32,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_C)]
    c: f64,
    /// Radius divisor: `s` or `2s`.
    #[arg(long, default_value = "s")]
    divisor: String,
    /// Empirical constraint mean added to the bound.
    #[arg(long, default_value_t = 0.0)]
    empirical: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CounterArgs {
    /// Sup-distance budgets; repeat or comma-separate.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    mu: Vec<f64>,
    /// Also print the hundred-row construction with delta = mu/2.
    #[arg(long)]
    hundred_row: bool,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.load()?;
            let r = commands::cmd_train(&cfg)?;
            let m = &r.folds[0].metrics;
            println!(
                "wrote {} (accuracy {:.4}, dp_soft {:.4}, p% {:.1})",
                cfg.out.display(),
                m.accuracy,
                m.dp_soft,
                m.p_percent
            );
        }
        Command::Crossval(args) => {
            let cfg = args.load()?;
            let r = commands::cmd_crossval(&cfg)?;
            println!(
                "wrote {} (mean accuracy {:.4} over {} folds)",
                cfg.out.join("report.json").display(),
                r.aggregate.mean["accuracy"],
                r.folds.len()
            );
        }
        Command::Sweep(args) => {
            let cfg = args.load()?;
            let rows = commands::cmd_sweep(&cfg)?;
            print!("{}", fairlag_cli::report::tradeoff_csv(&rows));
        }
        Command::Audit(args) => {
            let schema = match (&args.schema, &args.preset) {
                (Some(p), _) => Some(SchemaConfig::from_json(&std::fs::read_to_string(p)?)?),
                (None, Some(n)) => Some(
                    SchemaConfig::preset(n)
                        .ok_or_else(|| CliError::Usage(format!("unknown preset {n:?}")))?,
                ),
                (None, None) => None,
            };
            let m = commands::cmd_audit(&args.model, &args.data, schema.as_ref(), args.batch_size)?;
            println!("{}", serde_json::to_string_pretty(&m)?);
        }
        Command::Bounds(args) => {
            let inputs = BoundInputs {
                r: args.r,
                d: args.d,
                w: args.w,
                l: args.l,
                s: args.s,
                b: 1.0,
                delta: args.delta,
                c: args.c,
                radius_divisor: commands::parse_divisor(&args.divisor)?,
            };
            let bs = commands::decades(args.b_min_exp, args.b_max_exp)?;
            let csv = commands::cmd_bounds(&inputs, &bs, args.empirical)?;
            match &args.out {
                Some(p) => std::fs::write(p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Counterexample(args) => {
            print!(
                "{}",
                commands::cmd_counterexample(&args.mu, args.hundred_row)?
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
