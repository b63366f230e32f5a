use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use duplex_asr::{execute, Command, Overrides};

/// Achievable sum rate of half- and full-duplex OFDM links.
///
/// Transmit power in dBm is the joint energy budget of both nodes over the
/// unit frame: E = 10^(dBm/10) mW · 1 s.
#[derive(Parser)]
#[command(name = "duplex-asr", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve each strategy at each power; one row per (power, strategy).
    Solve,
    /// Sum rates over the power range.
    Sweep,
    /// Full-duplex over half-duplex sum rate for each self-interference level.
    Ratio,
    /// Solver against exhaustive grid search (K <= 6).
    OracleCompare,
    /// Write the channel realization.
    Channel,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated strategies: hd-upa, hd-nupa, fd-upa, fd-nupa.
    #[arg(long, global = true, value_delimiter = ',')]
    strategy: Option<Vec<String>>,
    /// Comma-separated self-interference attenuations in dB.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    si_db: Option<Vec<f64>>,
    /// Power grid start:stop:step in dBm, or a single value.
    #[arg(long, global = true, allow_hyphen_values = true)]
    power_dbm: Option<String>,
    /// Seed of the random tap phases.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of sub-carriers.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Scan the multiplier on a fixed grid instead of bisecting.
    #[arg(long, global = true)]
    exact_grid: bool,
    /// Use the tabulated asymmetric taps without renormalization.
    #[arg(long, global = true)]
    raw_taps: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = cli.common;
    let over = Overrides {
        strategies: c.strategy,
        si_db: c.si_db,
        power_dbm: c.power_dbm,
        seed: c.seed,
        k: c.k,
        exact_grid: c.exact_grid,
        raw_taps: c.raw_taps,
        out: c.out,
    };
    let cmd = match cli.command {
        Cmd::Solve => Command::Solve,
        Cmd::Sweep => Command::Sweep,
        Cmd::Ratio => Command::Ratio,
        Cmd::OracleCompare => Command::OracleCompare,
        Cmd::Channel => Command::Channel,
    };
    let result = execute(cmd, c.config.as_deref(), over).and_then(|outcome| {
        for line in &outcome.summary {
            eprintln!("{line}");
        }
        for w in &outcome.warnings {
            eprintln!("warning: {w}");
        }
        outcome.status()
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
