//! `crossbell`: run cross-Bell teleportation experiments and audits.
//!
//! Exit codes: 0 success, 1 a check failed (fidelity, golden verdicts,
//! basis deviation), 2 bad configuration or input.

mod client;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crossbell::teleport::MAX_PARTIES;
use crossbell::ChannelSpec;
use serde::Serialize;

use client::ClientSource;

#[derive(Parser, Debug)]
#[command(name = "crossbell", version, about = "Cross-Bell-basis teleportation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Teleport a client state and report per-branch fidelities.
    Teleport(TeleportArgs),
    /// Audit the bundled printed tables against brute-force derivations.
    Verify(VerifyArgs),
    /// Check orthonormality of the n-pair cross-Bell basis.
    Basis(BasisArgs),
    /// Expand a state file in a cross-Bell basis.
    Expand(ExpandArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Enumerate,
    Sample,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug, Serialize)]
struct TeleportArgs {
    /// Number of teleported qubits.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=MAX_PARTIES as i64))]
    n: u8,
    /// Channel kinds, one per pair, e.g. `phi+,phi-`.
    #[arg(long)]
    #[serde(serialize_with = "output::display")]
    channel: ChannelSpec,
    /// `random`, `random:SEED`, `file:PATH` or `preset:{zero,uniform,ghz}`.
    #[arg(long, default_value = "random")]
    #[serde(serialize_with = "output::display")]
    client: ClientSource,
    /// Master seed for random clients and sampled measurements.
    #[arg(long, env = "CROSSBELL_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Enumerate)]
    mode: ModeArg,
    /// Number of sampled runs in sample mode.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Run each sample as an Alice/Bob session over a byte pipe.
    #[arg(long)]
    session: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Golden verdict file; defaults to the bundled one.
    #[arg(long)]
    golden: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct BasisArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    n: u8,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct ExpandArgs {
    /// State file (JSON with `qubits` and `amplitudes`).
    #[arg(long)]
    state: PathBuf,
    /// Pairs such as `1-3,2-4`.
    #[arg(long)]
    pairs: String,
    /// Also list coefficients below 1e-12.
    #[arg(long)]
    all: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Teleport(args) => commands::teleport(args),
        Command::Verify(args) => commands::verify(args),
        Command::Basis(args) => commands::basis(args),
        Command::Expand(args) => commands::expand(args),
    };
    match result {
        Ok(passed) if passed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
