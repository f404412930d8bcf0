use bec_memory::config::{default_config_text, Config, RunConfig};
use bec_memory::figures;
use bec_memory::Error;
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bec-memory", version, about = "Simulate an EIT polarization-qubit memory in a Bose-Einstein condensate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override a configuration entry, e.g. `--set pulse.tau_p_ns=80`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Magnetic noise preset: unsynchronized, line-synced, feed-forward.
    #[arg(long, global = true)]
    preset: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Single-shot and modeled S1/S0 versus storage time.
    Fig3,
    /// Damping factor from simulated process tomography for each noise preset.
    Fig4,
    /// Efficiency decay of a pure condensate.
    Fig5,
    /// Efficiency decay with an uncondensed fraction.
    Fig6,
    /// Efficiency factors versus control Rabi frequency.
    Fig7,
    /// Linear susceptibility versus two-photon detuning.
    Fig8,
    /// Repeated synthetic process tomography.
    Tomography,
    /// Maximize the efficiency over control Rabi frequency and switch-off time.
    Optimize,
    /// Print a configuration file with every key at its default.
    DefaultConfig,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
            Self::Fig6 => "fig6",
            Self::Fig7 => "fig7",
            Self::Fig8 => "fig8",
            Self::Tomography => "tomography",
            Self::Optimize => "optimize",
            Self::DefaultConfig => "default-config",
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let mut raw = match &cli.config {
        Some(p) => Config::from_file(p)?,
        None => Config::default(),
    };
    if let Some(p) = &cli.preset {
        raw.set("noise.preset", p)?;
    }
    if let Some(s) = cli.seed {
        raw.set("seed", &s.to_string())?;
    }
    for o in &cli.overrides {
        raw.set_pair(o)?;
    }
    RunConfig::from_config(raw)
}

fn emit(text: &str, out: Option<&PathBuf>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = if let Command::DefaultConfig = cli.command {
        Ok(default_config_text())
    } else {
        load(&cli).and_then(|cfg| figures::run(cli.command.name(), &cfg)).map(|t| t.to_csv())
    };
    match text {
        Ok(t) => match emit(&t, cli.out.as_ref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
