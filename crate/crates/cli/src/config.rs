//! Scenario files and their resolution against command-line overrides.
//!
//! A scenario is a TOML document with the sections `[channel]`, `[system]`,
//! `[run]`, `[solver]`, `[oracle]` and `[output]`; every key is optional.
//! Flags given on the command line win over the file.

use std::path::{Path, PathBuf};

use duplex_asr_core::channel::TapScaling;
use duplex_asr_core::model::LinkBudget;
use duplex_asr_core::oracle::OracleConfig;
use duplex_asr_core::{SolverConfig, Strategy};
use serde::Deserialize;

use crate::error::{CliError, Result};

/// Largest `K` accepted by `oracle-compare`.
pub const ORACLE_MAX_SUBCARRIERS: usize = 6;
const MAX_POWER_POINTS: usize = 100_000;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// `flat`, `itu-a`, `asymmetric` or `file`.
    pub kind: Option<String>,
    pub file: Option<PathBuf>,
    pub si_atten_db: Option<f64>,
    pub beta_db: Option<f64>,
    pub seed: Option<u64>,
    /// `renormalized` or `raw`.
    pub taps: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub bandwidth_hz: Option<f64>,
    pub carrier_hz: Option<f64>,
    pub distance_m: Option<f64>,
    pub noise_figure_db: Option<f64>,
    pub evm_dbc: Option<f64>,
    pub antenna_gain_db: Option<f64>,
    pub noise_density_dbm_hz: Option<f64>,
    pub num_subcarriers: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum PowerSpec {
    Single(f64),
    Range(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub strategies: Option<Vec<String>>,
    pub power_dbm: Option<PowerSpec>,
    pub si_db: Option<Vec<f64>>,
    pub ratio_fd: Option<String>,
    pub ratio_hd: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub time_step: Option<f64>,
    pub energy_rel_tol: Option<f64>,
    pub exact_grid: Option<bool>,
    pub newton_alpha: Option<f64>,
    pub newton_beta: Option<f64>,
    pub newton_tol: Option<f64>,
    pub newton_max_iters: Option<usize>,
    pub typical_noise_fraction: Option<f64>,
    pub typical_min_sinr_db: Option<f64>,
    pub typical_max_asymmetry: Option<f64>,
    pub fallback_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub resolution: Option<usize>,
    pub refinements: Option<usize>,
    pub max_points: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: ConfigFile = toml::from_str(&text).map_err(|source| CliError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        // relative paths are relative to the scenario file
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(f) = cfg.channel.file.as_mut() {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        if let Some(f) = cfg.output.path.as_mut() {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        Ok(cfg)
    }
}

/// Inclusive power grid `start, start + step, …, ≤ stop` in dBm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl PowerRange {
    pub fn single(dbm: f64) -> Self {
        Self {
            start: dbm,
            stop: dbm,
            step: 1.0,
        }
    }

    /// Parses `start:stop:step` or a single value.
    pub fn parse(field: &str, text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| CliError::config(field, format!("`{s}` is not a number (expected start:stop:step)")))
        };
        let range = match parts.as_slice() {
            [one] => Self::single(num(one)?),
            [a, b, c] => Self {
                start: num(a)?,
                stop: num(b)?,
                step: num(c)?,
            },
            _ => return Err(CliError::config(field, format!("`{text}` is not of the form start:stop:step"))),
        };
        range.validate(field)?;
        Ok(range)
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(CliError::config(field, "bounds and step must be finite"));
        }
        if self.stop < self.start {
            return Err(CliError::config(field, format!("empty range {}..{}", self.start, self.stop)));
        }
        if self.step <= 0.0 {
            return Err(CliError::config(field, "step must be positive"));
        }
        if self.count() > MAX_POWER_POINTS {
            return Err(CliError::config(field, format!("more than {MAX_POWER_POINTS} points")));
        }
        Ok(())
    }

    /// Number of grid points; at least one.
    pub fn count(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count()).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKind {
    Flat,
    ItuA,
    Asymmetric,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub si_atten_db: f64,
    pub beta_db: f64,
    pub seed: u64,
    pub scaling: TapScaling,
}

/// Fully resolved inputs of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub channel: ChannelSpec,
    pub budget: LinkBudget,
    /// `K` was fixed by the file or a flag rather than defaulted.
    pub k_explicit: bool,
    pub strategies: Vec<Strategy>,
    pub powers: PowerRange,
    pub si_db: Vec<f64>,
    pub ratio_fd: Strategy,
    pub ratio_hd: Strategy,
    pub solver: SolverConfig,
    pub oracle: OracleConfig,
    pub out: Option<PathBuf>,
}

/// Command-line values that replace scenario-file keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub strategies: Option<Vec<String>>,
    pub si_db: Option<Vec<f64>>,
    pub power_dbm: Option<String>,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub exact_grid: bool,
    pub raw_taps: bool,
    pub out: Option<PathBuf>,
}

fn parse_strategy(field: &str, s: &str) -> Result<Strategy> {
    s.parse().map_err(|_| CliError::config(field, format!("unknown strategy `{s}` (expected hd-upa, hd-nupa, fd-upa or fd-nupa)")))
}

impl Scenario {
    pub fn resolve(file: ConfigFile, over: Overrides) -> Result<Self> {
        let ch = file.channel;
        let kind = match ch.kind.as_deref().unwrap_or("flat") {
            "flat" => ChannelKind::Flat,
            "itu-a" | "itu_a" | "itu" => ChannelKind::ItuA,
            "asymmetric" | "asym" => ChannelKind::Asymmetric,
            "file" => {
                let path = ch.file.ok_or_else(|| CliError::config("channel.file", "required when channel.kind = \"file\""))?;
                if !path.is_file() {
                    return Err(CliError::io(&path, std::io::Error::new(std::io::ErrorKind::NotFound, "channel file not found")));
                }
                ChannelKind::File(path)
            }
            other => return Err(CliError::config("channel.kind", format!("unknown kind `{other}` (expected flat, itu-a, asymmetric or file)"))),
        };
        let scaling = if over.raw_taps {
            TapScaling::Raw
        } else {
            match ch.taps.as_deref().unwrap_or("renormalized") {
                "renormalized" => TapScaling::Renormalized,
                "raw" => TapScaling::Raw,
                other => return Err(CliError::config("channel.taps", format!("unknown scaling `{other}` (expected renormalized or raw)"))),
            }
        };
        let channel = ChannelSpec {
            kind,
            si_atten_db: ch.si_atten_db.unwrap_or(-60.0),
            beta_db: ch.beta_db.unwrap_or(-40.0),
            seed: over.seed.or(ch.seed).unwrap_or(duplex_asr_core::channel::DEFAULT_SEED),
            scaling,
        };
        for (field, v) in [("channel.si_atten_db", channel.si_atten_db), ("channel.beta_db", channel.beta_db)] {
            if !v.is_finite() {
                return Err(CliError::config(field, "must be finite"));
            }
        }

        let sys = file.system;
        let d = LinkBudget::default();
        let k = over.k.or(sys.num_subcarriers);
        let budget = LinkBudget {
            bandwidth_hz: sys.bandwidth_hz.unwrap_or(d.bandwidth_hz),
            carrier_hz: sys.carrier_hz.unwrap_or(d.carrier_hz),
            distance_m: sys.distance_m.unwrap_or(d.distance_m),
            noise_figure_db: sys.noise_figure_db.unwrap_or(d.noise_figure_db),
            evm_dbc: sys.evm_dbc.unwrap_or(d.evm_dbc),
            antenna_gain_db: sys.antenna_gain_db.unwrap_or(d.antenna_gain_db),
            noise_density_dbm_hz: sys.noise_density_dbm_hz.unwrap_or(d.noise_density_dbm_hz),
            num_subcarriers: k.unwrap_or(d.num_subcarriers),
        };
        budget.validate().map_err(|e| match e {
            duplex_asr_core::Error::InvalidParameter { name, .. } => CliError::config(format!("system.{name}"), e.to_string()),
            other => other.into(),
        })?;

        let run = file.run;
        let (names, field) = match over.strategies {
            Some(s) => (s, "--strategy"),
            None => (run.strategies.unwrap_or_else(|| Strategy::ALL.iter().map(|s| s.name().to_string()).collect()), "run.strategies"),
        };
        if names.is_empty() {
            return Err(CliError::config(field, "at least one strategy is required"));
        }
        let mut strategies = Vec::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            let s = parse_strategy(&format!("{field}[{i}]"), n)?;
            if strategies.contains(&s) {
                return Err(CliError::config(format!("{field}[{i}]"), format!("`{s}` listed twice")));
            }
            strategies.push(s);
        }

        let powers = match (over.power_dbm, run.power_dbm) {
            (Some(text), _) => PowerRange::parse("--power-dbm", &text)?,
            (None, Some(PowerSpec::Range(text))) => PowerRange::parse("run.power_dbm", &text)?,
            (None, Some(PowerSpec::Single(v))) => {
                let r = PowerRange::single(v);
                r.validate("run.power_dbm")?;
                r
            }
            (None, None) => PowerRange {
                start: 0.0,
                stop: 40.0,
                step: 2.0,
            },
        };

        let si_db = over.si_db.or(run.si_db).unwrap_or_else(|| vec![-90.0, -80.0, -70.0, -60.0]);
        if si_db.is_empty() {
            return Err(CliError::config("run.si_db", "at least one attenuation is required"));
        }
        if si_db.iter().any(|v| !v.is_finite()) {
            return Err(CliError::config("run.si_db", "attenuations must be finite"));
        }
        let ratio_fd = parse_strategy("run.ratio_fd", run.ratio_fd.as_deref().unwrap_or("fd-nupa"))?;
        let ratio_hd = parse_strategy("run.ratio_hd", run.ratio_hd.as_deref().unwrap_or("hd-nupa"))?;
        if !ratio_fd.is_full_duplex() {
            return Err(CliError::config("run.ratio_fd", format!("`{ratio_fd}` is not a full-duplex strategy")));
        }
        if ratio_hd.is_full_duplex() {
            return Err(CliError::config("run.ratio_hd", format!("`{ratio_hd}` is not a half-duplex strategy")));
        }

        let s = file.solver;
        let mut solver = SolverConfig::default();
        solver.time_step = s.time_step.unwrap_or(solver.time_step);
        solver.energy_rel_tol = s.energy_rel_tol.unwrap_or(solver.energy_rel_tol);
        solver.exact_grid = over.exact_grid || s.exact_grid.unwrap_or(solver.exact_grid);
        solver.newton.alpha = s.newton_alpha.unwrap_or(solver.newton.alpha);
        solver.newton.beta = s.newton_beta.unwrap_or(solver.newton.beta);
        solver.newton.tol = s.newton_tol.unwrap_or(solver.newton.tol);
        solver.newton.max_iters = s.newton_max_iters.unwrap_or(solver.newton.max_iters);
        solver.typical_noise_fraction = s.typical_noise_fraction.unwrap_or(solver.typical_noise_fraction);
        solver.typical_min_sinr_db = s.typical_min_sinr_db.unwrap_or(solver.typical_min_sinr_db);
        solver.typical_max_asymmetry = s.typical_max_asymmetry.unwrap_or(solver.typical_max_asymmetry);
        solver.fallback_points = s.fallback_points.unwrap_or(solver.fallback_points);
        solver.validate().map_err(|e| match e {
            duplex_asr_core::Error::InvalidParameter { name, .. } => {
                let key = match name {
                    "alpha" | "beta" | "tol" | "max_iters" => format!("solver.newton_{name}"),
                    other => format!("solver.{other}"),
                };
                CliError::config(key, e.to_string())
            }
            other => other.into(),
        })?;

        let o = file.oracle;
        let mut oracle = OracleConfig::default();
        oracle.resolution = o.resolution.unwrap_or(oracle.resolution);
        oracle.refinements = o.refinements.unwrap_or(oracle.refinements);
        oracle.max_points = o.max_points.map(u128::from).unwrap_or(oracle.max_points);
        if oracle.resolution == 0 {
            return Err(CliError::config("oracle.resolution", "must be at least 1"));
        }

        Ok(Scenario {
            channel,
            budget,
            k_explicit: k.is_some(),
            strategies,
            powers,
            si_db,
            ratio_fd,
            ratio_hd,
            solver,
            oracle,
            out: over.out.or(file.output.path),
        })
    }
}
