//! `sigcascade` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error,
//! 3 cascade/training error, 4 oracle check failure.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "sigcascade", version, about = "Significance-maximizing weighted classification cascades")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a cascade and write model, trace and manifest.
    Cascade(CascadeArgs),
    /// Score a saved model, or a bare `s,b` summary.
    Eval(EvalArgs),
    /// Run the seeded oracle suite.
    Check(CheckArgs),
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Labelled CSV in the challenge layout.
    #[arg(long, conflicts_with = "synth")]
    pub data: Option<PathBuf>,
    /// Synthetic dataset: `default` or `key=value,...` overrides.
    #[arg(long)]
    pub synth: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct CascadeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Flat `key = value` config; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = ["ams2", "ams3"])]
    pub measure: Option<String>,
    #[arg(long, value_parser = ["fresh", "warmstart"])]
    pub variant: Option<String>,
    /// Maximum number of cascade rounds.
    #[arg(long = "T")]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub u0: Option<f64>,
    #[arg(long = "b-reg")]
    pub b_reg: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "val-frac", default_value_t = 0.3)]
    pub val_frac: f64,
    #[arg(long = "out-dir", default_value = "sigcascade-out")]
    pub out_dir: PathBuf,
    /// Also write a submission file scored on the full loaded dataset.
    #[arg(long)]
    pub submission: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, required_unless_present = "summary")]
    pub model: Option<PathBuf>,
    /// Skip model and data; evaluate the given `s,b` directly.
    #[arg(long, conflicts_with_all = ["model", "data", "synth", "submission"])]
    pub summary: Option<String>,
    #[arg(long = "b-reg", default_value_t = sigcascade::cascade::HIGGS_B_REG)]
    pub b_reg: f64,
    #[arg(long)]
    pub submission: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Base instance count per property.
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    /// Perturb the AMS₂ conjugate to prove the suite can fail.
    #[arg(long = "inject-fault")]
    pub inject_fault: bool,
}

fn main() -> ExitCode {
    // clap's own usage errors exit 2, which is taken by data errors here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => {
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            let _ = err.print();
            println!("status=error command=usage exit=1");
            return ExitCode::from(1);
        }
    };
    let (name, result) = match cli.command {
        Command::Cascade(args) => ("cascade", commands::cascade(&args)),
        Command::Eval(args) => ("eval", commands::eval(&args)),
        Command::Check(args) => ("check", commands::check(&args)),
    };
    match result {
        Ok(summary) => {
            println!("status=ok command={name} {summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {}", err.message);
            println!("status=error command={name} exit={}", err.code);
            ExitCode::from(err.code)
        }
    }
}
