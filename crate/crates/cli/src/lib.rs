//! Scenario runner around `duplex-asr-core`.
//!
//! Commands read a TOML scenario (see [`config`]), solve the requested
//! strategies over a power grid and write CSV: `solve`, `sweep`, `ratio`,
//! `oracle-compare` and `channel`. Power in dBm is the joint energy budget
//! of both nodes over the unit frame, `E = 10^(dBm/10)·1e-3` J.

pub mod channel_io;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::path::Path;

pub use config::{ConfigFile, Overrides, Scenario};
pub use error::{CliError, Result};
pub use run::{Outcome, Prepared};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Sweep,
    Ratio,
    OracleCompare,
    Channel,
}

/// Resolves the scenario, runs `cmd` and writes its table to the configured
/// output path, or stdout when there is none.
pub fn execute(cmd: Command, config: Option<&Path>, over: Overrides) -> Result<Outcome> {
    let file = match config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let prep = Prepared::new(Scenario::resolve(file, over)?)?;
    let pool = run::thread_pool()?;
    let outcome = match cmd {
        Command::Solve => run::run_solve(&prep, &pool),
        Command::Sweep => run::run_sweep(&prep, &pool),
        Command::Ratio => run::run_ratio(&prep, &pool),
        Command::OracleCompare => run::run_oracle_compare(&prep, &pool),
        Command::Channel => run::emit_channel(&prep),
    }?;
    outcome.table.write(prep.scenario.out.as_deref())?;
    Ok(outcome)
}
