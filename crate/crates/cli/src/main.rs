use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use caplab::config::RunConfig;
use caplab::convexity::Curve;
use caplab::pipeline::{run, RunOutcome, Subcommand};
use clap::{Parser, ValueEnum};
use serde_json::json;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Caps,
    Eigen,
    Solve,
    Kelvin,
    Verify,
    Appendix,
    Nonlin,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Caps => Subcommand::Caps,
            Command::Eigen => Subcommand::Eigen,
            Command::Solve => Subcommand::Solve,
            Command::Kelvin => Subcommand::Kelvin,
            Command::Verify => Subcommand::Verify,
            Command::Appendix => Subcommand::Appendix,
            Command::Nonlin => Subcommand::Nonlin,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CurveArg {
    Gamma1,
    Gamma2,
}

/// Moving-plane caps, Kelvin transforms and a priori bound checks.
#[derive(Debug, Parser)]
#[command(name = "caplab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Curve for `appendix`; overrides `appendix.curve`.
    #[arg(long, value_enum)]
    curve: Option<CurveArg>,
}

struct Failure {
    kind: &'static str,
    message: String,
}

impl From<caplab::Error> for Failure {
    fn from(e: caplab::Error) -> Self {
        Failure {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        kind: "io",
        message: format!("{}: {e}", path.display()),
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("CAPLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| Failure {
        kind: "config",
        message: format!("CAPLAB_THREADS must be a positive integer, got {raw:?}"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure {
            kind: "config",
            message: e.to_string(),
        })
}

fn execute(cli: &Cli) -> Result<(RunOutcome, PathBuf), Failure> {
    configure_threads()?;
    let text = fs::read_to_string(&cli.config).map_err(|e| io_failure(&cli.config, e))?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(c) = cli.curve {
        cfg.appendix.curve = match c {
            CurveArg::Gamma1 => Curve::Gamma1,
            CurveArg::Gamma2 => Curve::Gamma2,
        };
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let outcome = run(cli.command.into(), &cfg)?;
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    for a in &outcome.artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.contents).map_err(|e| io_failure(&path, e))?;
    }
    Ok((outcome, dir))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok((outcome, dir)) => {
            if let Some(text) = outcome.artifacts.iter().find(|a| a.name == "verify.txt") {
                print!("{}", text.contents);
            }
            for a in &outcome.artifacts {
                println!("wrote {}", dir.join(&a.name).display());
            }
            let status = if outcome.pass { "PASS" } else { "FAIL" };
            println!("{}: {status}", outcome.subcommand);
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("{}", json!({"kind": f.kind, "message": f.message}));
            ExitCode::from(2)
        }
    }
}
