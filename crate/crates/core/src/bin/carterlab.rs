use std::process::ExitCode;

use carterlab::config::{parse_config_with, Command};
use carterlab::runner::{run, EXIT_INTERNAL, EXIT_INVALID_INPUT};
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sub {
    Cert,
    SlabSpectrum,
    SlabEvolve,
    Modes,
    KnCheck,
    HorizonExtremal,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Cert => Command::Cert,
            Sub::SlabSpectrum => Command::SlabSpectrum,
            Sub::SlabEvolve => Command::SlabEvolve,
            Sub::Modes => Command::Modes,
            Sub::KnCheck => Command::KnCheck,
            Sub::HorizonExtremal => Command::HorizonExtremal,
        }
    }
}

/// Verification runs for the conformal scalar sector on Carter-family and
/// Kerr–Newman backgrounds.
#[derive(Parser, Debug)]
#[command(name = "carterlab", version)]
struct Cli {
    /// Subcommand to run.
    #[arg(value_enum)]
    command: Sub,
    /// TOML run configuration; its `command` key must match if present.
    #[arg(short, long)]
    config: Option<std::path::PathBuf>,
    /// Override a config key, e.g. `--set numerics.resolution=64`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Real-frequency scan for `modes`: FROM:TO:POINTS.
    #[arg(long)]
    scan: Option<String>,
    /// Output stem (overrides output.path).
    #[arg(short, long)]
    output: Option<String>,
}

fn fail(code: i32, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("carterlab: {msg}");
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("CARTERLAB_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => return fail(EXIT_INVALID_INPUT, format!("CARTERLAB_THREADS = {n:?} is not a positive integer")),
        }
    }
    let command: Command = cli.command.into();
    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => return fail(EXIT_INVALID_INPUT, format!("{}: {e}", p.display())),
        },
        None => String::new(),
    };
    let mut overrides = vec![format!("command=\"{}\"", command.name())];
    if let Ok(t) = text.parse::<toml::Table>() {
        if let Some(c) = t.get("command").and_then(|v| v.as_str()) {
            if c != command.name() {
                return fail(EXIT_INVALID_INPUT, format!("config is for `{c}`, not `{}`", command.name()));
            }
        }
    }
    if let Some(s) = &cli.scan {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return fail(EXIT_INVALID_INPUT, format!("--scan {s:?} is not FROM:TO:POINTS"));
        }
        overrides.push(format!("modes.scan.from={}", parts[0]));
        overrides.push(format!("modes.scan.to={}", parts[1]));
        overrides.push(format!("modes.scan.points={}", parts[2]));
    }
    overrides.extend(cli.overrides.iter().cloned());
    if let Some(o) = &cli.output {
        overrides.push(format!("output.path={}", toml::Value::String(o.clone())));
    }
    let cfg = match parse_config_with(&text, &overrides) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_INVALID_INPUT, e),
    };
    match run(&cfg) {
        Ok((outcome, files)) => {
            println!("{}", outcome.verdict);
            println!("summary: {}", files.summary.display());
            if let Some(c) = files.csv {
                println!("table: {}", c.display());
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => fail(EXIT_INTERNAL, format!("writing outputs: {e}")),
    }
}
