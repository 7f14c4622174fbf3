//! `chernoff-qkd`: CSV front-end to the security analysis toolkit.
//!
//! Exit codes: 0 ok, 2 input error, 3 internal invariant violation, 4 no threshold found.

mod commands;
mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chernoff_qkd::io::{parse_attack, parse_state};
use chernoff_qkd::scenarios::{honest_behavior, isotropic_attack};
use chernoff_qkd::{AttackModel, Error};
use clap::{Parser, Subcommand};

use commands::{Failure, Outcome};
use config::{config_hash, Params};

#[derive(Debug, Parser)]
#[command(name = "chernoff-qkd", version, about = "Chernoff-divergence security analysis of repetition-code advantage distillation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: Params,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trace distance, fidelity and Chernoff overlap between two state files.
    Measures { state0: PathBuf, state1: PathBuf },
    /// Devetak-Winter margin per block size for an attack file or the isotropic attack (--case, --q).
    Analyze { attack: Option<PathBuf> },
    /// All five security conditions for an attack file or the isotropic attack.
    Conditions { attack: Option<PathBuf> },
    /// Monte Carlo run of the repetition-code protocol.
    Simulate,
    /// Noise threshold of a condition for a scenario.
    Threshold,
    /// Device-independent guessing bound against the isotropic attack.
    Dibound,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Measures { .. } => "measures",
            Command::Analyze { .. } => "analyze",
            Command::Conditions { .. } => "conditions",
            Command::Simulate => "simulate",
            Command::Threshold => "threshold",
            Command::Dibound => "dibound",
        }
    }

    fn inputs(&self) -> Vec<&Path> {
        match self {
            Command::Measures { state0, state1 } => vec![state0, state1],
            Command::Analyze { attack: Some(a) } | Command::Conditions { attack: Some(a) } => vec![a],
            _ => vec![],
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
        partial: None,
    })
}

fn text(path: &Path, bytes: &[u8]) -> Result<String, Failure> {
    String::from_utf8(bytes.to_vec()).map_err(|_| Failure {
        code: 2,
        message: format!("{}: not UTF-8", path.display()),
        partial: None,
    })
}

fn with_path(path: &Path, e: Error) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

fn attack_from(file: Option<(&Path, &[u8])>, p: &Params) -> Result<AttackModel, Failure> {
    match file {
        Some((path, bytes)) => parse_attack(&text(path, bytes)?).map_err(|e| with_path(path, e)),
        None => Ok(isotropic_attack(p.scenario()?, p.q_required()?)?),
    }
}

fn dispatch(command: &Command, p: &Params, inputs: &[(&Path, Vec<u8>)]) -> Outcome {
    let file = inputs.first().map(|(path, b)| (*path, b.as_slice()));
    match command {
        Command::Measures { .. } => {
            let load = |(path, b): &(&Path, Vec<u8>)| parse_state(&text(path, b)?).map_err(|e| with_path(path, e));
            commands::measures(&load(&inputs[0])?, &load(&inputs[1])?)
        }
        Command::Analyze { .. } => commands::analyze(&attack_from(file, p)?, p.k.unwrap_or(3)),
        Command::Conditions { .. } => commands::conditions(&attack_from(file, p)?),
        Command::Simulate => {
            let eps = match p.eps {
                Some(e) => e,
                None => honest_behavior(p.scenario()?, p.q_required()?)?.qber(),
            };
            commands::simulate(eps, p.k.unwrap_or(3), p.blocks.unwrap_or(1_000_000), p.variant()?, p.seed_or_default())
        }
        Command::Threshold => commands::threshold(p),
        Command::Dibound => commands::dibound(p),
    }
}

fn write_output(out: Option<&Path>, body: &str) -> Result<(), Failure> {
    let result = match out {
        Some(path) => std::fs::write(path, body),
        None => std::io::stdout().lock().write_all(body.as_bytes()),
    };
    result.map_err(|e| Failure {
        code: 2,
        message: format!("writing output: {e}"),
        partial: None,
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file_params = match &cli.config {
        Some(path) => Params::load_file(path)?,
        None => Params::default(),
    };
    let params = cli.params.merged_over(file_params);
    params.validate()?;
    let inputs: Vec<(&Path, Vec<u8>)> = cli
        .command
        .inputs()
        .into_iter()
        .map(|p| Ok((p, read(p)?)))
        .collect::<Result<_, Failure>>()?;
    let hashed: Vec<(&Path, &[u8])> = inputs.iter().map(|(p, b)| (*p, b.as_slice())).collect();
    let header = format!(
        "# chernoff-qkd {} config={} seed={}\n",
        env!("CARGO_PKG_VERSION"),
        config_hash(cli.command.name(), &params, &hashed),
        params.seed_or_default()
    );
    match dispatch(&cli.command, &params, &inputs) {
        Ok(body) => write_output(params.out.as_deref(), &(header + &body)),
        Err(mut f) => {
            if let Some(body) = f.partial.take() {
                write_output(params.out.as_deref(), &(header + &body))?;
            }
            Err(f)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("chernoff-qkd: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
