//! `qgem`: entanglement-entropy and witness sweeps, finite-shot
//! certification, decoherence-rate estimates and Pauli grouping reports.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qgem::config::{Command, RunConfig};
use qgem::Error;

const EXIT_INVALID_CONFIG: u8 = 2;
const EXIT_NOT_CERTIFIABLE: u8 = 3;

#[derive(Parser)]
#[command(name = "qgem", version, about = "Gravitationally induced entanglement of superposed masses")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Entropy of single-particle reduced states over a time grid.
    EntropySweep(Opts),
    /// Witness expectation over decoherence rates and times.
    WitnessSweep(Opts),
    /// Simulated finite-shot certification: confidence curves and minimal budgets.
    Measure(Opts),
    /// Decoherence rate from gas and blackbody scattering over a temperature grid.
    DecoEstimate(Opts),
    /// Pauli decomposition of the witness and its qubit-wise commuting groups (JSON).
    GroupOps(Opts),
}

/// Every flag overrides the same key of `--config`, which overrides the
/// built-in defaults.
#[derive(Args, Default)]
struct Opts {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<String>,
    /// parallel, linear or star.
    #[arg(long)]
    setup: Option<String>,
    /// Number of particles (2 or 3).
    #[arg(long)]
    n: Option<String>,
    /// Arms per particle.
    #[arg(long)]
    d_levels: Option<String>,
    /// One-based particle index; repeatable or comma separated.
    #[arg(long)]
    subsystem: Vec<String>,
    /// Decoherence rate in Hz; repeatable or comma separated.
    #[arg(long)]
    gamma: Vec<String>,
    /// Interaction times in s as start:stop:steps or a single value.
    #[arg(long)]
    tau_grid: Option<String>,
    /// Environment temperatures in K as start:stop:steps or a single value.
    #[arg(long)]
    temp_grid: Option<String>,
    /// Largest total budget on the confidence curve.
    #[arg(long)]
    shots: Option<String>,
    /// Seed count N (seeds 0..N), range a..b, or list a,b,c.
    #[arg(long)]
    seeds: Option<String>,
    /// grouped or ungrouped.
    #[arg(long)]
    mode: Option<String>,
    /// self (rebuilt at every point) or fixed (built at the reference point).
    #[arg(long)]
    witness: Option<String>,
    /// Decoherence rate (Hz) at which a fixed witness is built.
    #[arg(long)]
    witness_ref_gamma: Option<String>,
    /// Time (s) at which a fixed witness is built; defaults to the first tau.
    #[arg(long)]
    witness_ref_tau: Option<String>,
    /// Target confidence for the minimal budget.
    #[arg(long)]
    target: Option<String>,
    /// Particle mass in kg.
    #[arg(long)]
    mass: Option<String>,
    /// Closest approach between particles in m.
    #[arg(long)]
    d_min: Option<String>,
    /// Superposition width in m.
    #[arg(long)]
    delta_x: Option<String>,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<String>,
}

impl Opts {
    fn resolve(&self, command: Command) -> qgem::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Parse(format!("cannot read config {path}: {e}")))?;
                RunConfig::from_config_str(&text)?
            }
            None => RunConfig::default(),
        };
        let single = [
            ("setup", &self.setup),
            ("n", &self.n),
            ("d_levels", &self.d_levels),
            ("tau_grid", &self.tau_grid),
            ("temp_grid", &self.temp_grid),
            ("shots", &self.shots),
            ("seeds", &self.seeds),
            ("mode", &self.mode),
            ("witness", &self.witness),
            ("witness_ref_gamma", &self.witness_ref_gamma),
            ("witness_ref_tau", &self.witness_ref_tau),
            ("target", &self.target),
            ("mass", &self.mass),
            ("d_min", &self.d_min),
            ("delta_x", &self.delta_x),
            ("out", &self.out),
        ];
        for (key, value) in single {
            if let Some(v) = value {
                cfg.apply(key, v)?;
            }
        }
        if !self.subsystem.is_empty() {
            cfg.apply("subsystem", &self.subsystem.join(","))?;
        }
        if !self.gamma.is_empty() {
            cfg.apply("gamma", &self.gamma.join(","))?;
        }
        cfg.command = Some(command);
        cfg.validate(command)?;
        Ok(cfg)
    }
}

fn run(command: Command, opts: &Opts) -> Result<(), (u8, String)> {
    let cfg = opts
        .resolve(command)
        .map_err(|e| (EXIT_INVALID_CONFIG, format!("invalid configuration: {e}")))?;
    let result = match command {
        Command::EntropySweep => commands::entropy_sweep(&cfg),
        Command::WitnessSweep => commands::witness_sweep(&cfg),
        Command::Measure => commands::measure(&cfg),
        Command::DecoEstimate => commands::deco_estimate(&cfg),
        Command::GroupOps => commands::group_ops(&cfg),
    };
    result.map_err(|e| match e {
        Error::NotCertifiable { .. } => (EXIT_NOT_CERTIFIABLE, e.to_string()),
        Error::Parse(_)
        | Error::InvalidParameter(_)
        | Error::InvalidSubsystem(_)
        | Error::Unsupported(_)
        | Error::TooLarge { .. } => (EXIT_INVALID_CONFIG, e.to_string()),
        other => (1, other.to_string()),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match &cli.command {
        Cmd::EntropySweep(o) => (Command::EntropySweep, o),
        Cmd::WitnessSweep(o) => (Command::WitnessSweep, o),
        Cmd::Measure(o) => (Command::Measure, o),
        Cmd::DecoEstimate(o) => (Command::DecoEstimate, o),
        Cmd::GroupOps(o) => (Command::GroupOps, o),
    };
    match run(command, opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
