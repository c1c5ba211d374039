use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sgd_verify::cli::{cmd_lemma, cmd_run, cmd_verify, CommandOutput, ScheduleSpec, Status, OUTPUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "sgd-verify", version, about = "Run SGD experiments and check their convergence bounds")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Constant,
    InverseTime,
}

#[derive(Subcommand)]
enum Command {
    /// Run the replications of a config and evaluate its checks.
    Run { config: PathBuf },
    /// Audit the hypothesis constants and gradients of a config without running SGD.
    Verify { config: PathBuf },
    /// Evaluate the product of (1 - rho_l mu) for l = n..=n+k.
    Lemma {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long)]
        c2: Option<f64>,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
    },
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::ConfigError.code() } else { 0 });
        }
    };
    let output = match args.command {
        Command::Run { config } => {
            let dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
            cmd_run(&config, dir.as_deref())
        }
        Command::Verify { config } => cmd_verify(&config),
        Command::Lemma { kind, rho, c1, c2, mu, n, k } => {
            let spec = match (kind, rho, c1, c2) {
                (Kind::Constant, Some(rho), None, None) => ScheduleSpec::Constant { rho },
                (Kind::InverseTime, None, Some(c1), Some(c2)) => ScheduleSpec::InverseTime { c1, c2 },
                _ => {
                    eprintln!("error: constant needs --rho; inverse-time needs --c1 and --c2");
                    return ExitCode::from(Status::ConfigError.code());
                }
            };
            cmd_lemma(&spec, mu, n, k)
        }
    };
    report(&output)
}

fn report(output: &CommandOutput) -> ExitCode {
    match output.status {
        Status::ConfigError | Status::Divergence => eprint!("{}", output.message),
        _ => print!("{}", output.message),
    }
    if !output.message.ends_with('\n') {
        println!();
    }
    ExitCode::from(output.status.code())
}
