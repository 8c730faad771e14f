use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use svclink::harness::{cmd_sweep, cmd_train, cmd_validate, exit, exit_code, ExperimentConfig, ValidateOptions};
use svclink::Error;

#[derive(Parser)]
#[command(name = "svclink", version, about = "Semantic keypoint transport simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train stage-1, stage-2 and detector models (plus optional extras).
    Train(Common),
    /// Run Monte Carlo sweeps over the channel grid and write a CSV.
    Sweep(Common),
    /// Run the invariant suite and report pass/fail per property.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// train: model directory; sweep: results CSV.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Trials per grid point.
    #[arg(long, value_name = "N")]
    trials: Option<usize>,
    /// Run a single scheme instead of the configured list.
    #[arg(long, value_name = "NAME")]
    scheme: Option<String>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// Random patterns per RS radius grid point.
    #[arg(long, value_name = "N", default_value_t = 100)]
    trials: usize,
    /// Swap two GF(256) log-table entries before the RS check.
    #[arg(long, hide = true)]
    corrupt_rs_table: bool,
}

fn load(args: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_overrides(args.seed, args.trials, args.scheme.as_deref(), None);
    Ok(cfg)
}

fn train(args: &Common) -> Result<(), Error> {
    let mut cfg = load(args)?;
    if let Some(out) = &args.out {
        cfg.models.dir = out.clone();
    }
    let dir = cfg.models.dir.clone();
    let report = cmd_train(&cfg, &dir, |name| eprintln!("trained {name}"))?;
    for f in report.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn sweep(args: &Common) -> Result<(), Error> {
    let mut cfg = load(args)?;
    cfg.apply_overrides(None, None, None, args.out.as_deref());
    let report = cmd_sweep(&cfg)?;
    for r in &report.rows {
        println!(
            "{:<22} {}={:<6} akd {:.5} ± {:.5}  bits {:7.1}  mse {:.3e}",
            r.scheme,
            r.channel,
            r.point,
            r.akd.mean(),
            r.akd.std(),
            r.bits.mean(),
            r.mse.mean()
        );
    }
    println!("wrote {}", report.csv.display());
    if let Some(p) = report.records {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn validate(args: &ValidateArgs) -> Result<bool, Error> {
    if args.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let opts = ValidateOptions { seed: args.seed, rs_trials: args.trials, corrupt_rs_table: args.corrupt_rs_table };
    let report = cmd_validate(&opts)?;
    for p in &report.properties {
        println!("{p}");
    }
    Ok(report.passed())
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => train(a),
        Command::Sweep(a) => sweep(a),
        Command::Validate(a) => match validate(a) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(exit::VALIDATION as u8),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
