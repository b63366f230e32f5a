//! The five commands. Each returns its table plus a short human-readable
//! summary; solves are spread over a bounded thread pool and collected in
//! input order, so output never depends on scheduling.

use duplex_asr_core::channel::{asymmetric_channel, flat_channel, itu_a_channel};
use duplex_asr_core::model::energy_from_dbm;
use duplex_asr_core::oracle::compare;
use duplex_asr_core::{solve, ChannelRealization, Strategy, StrategyResult, SystemParams};
use rayon::prelude::*;

use crate::channel_io::{channel_table, read_channel};
use crate::config::{ChannelKind, Scenario, ORACLE_MAX_SUBCARRIERS};
use crate::error::{CliError, Result};
use crate::output::{num, Table};

pub const SOLVE_HEADER: [&str; 11] = ["power_dbm", "strategy", "t1", "t2", "eps1_total", "eps2_total", "r1", "r2", "sum", "iterations", "residual"];
pub const SWEEP_HEADER: [&str; 5] = ["power_dbm", "strategy", "r1", "r2", "sum"];
pub const RATIO_HEADER: [&str; 3] = ["power_dbm", "si_db", "ratio"];
pub const ORACLE_HEADER: [&str; 5] = ["power_dbm", "strategy", "asr_solver", "asr_oracle", "gap_pct"];

pub const THREADS_VAR: &str = "DUPLEX_ASR_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
    /// Solves that reported no convergence, out of `total`.
    pub failed: usize,
    pub total: usize,
}

impl Outcome {
    fn new(table: Table) -> Self {
        Self {
            table,
            summary: Vec::new(),
            warnings: Vec::new(),
            failed: 0,
            total: 0,
        }
    }

    /// `Err` when some solve did not converge.
    pub fn status(&self) -> Result<()> {
        if self.failed == 0 {
            Ok(())
        } else {
            Err(CliError::NotConverged {
                failed: self.failed,
                total: self.total,
            })
        }
    }

    fn count(&mut self, r: &StrategyResult) {
        self.total += 1;
        if !r.report.converged {
            self.failed += 1;
            self.warnings.push(format!("{} did not converge: {}", r.strategy, r.report.notes));
        }
    }
}

/// Worker pool sized by `DUPLEX_ASR_THREADS` when set, else one thread per
/// core.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let n = match std::env::var(THREADS_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::config(THREADS_VAR, format!("`{v}` is not a thread count")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::config(THREADS_VAR, e.to_string()))
}

/// Scenario plus the channel file contents, if any.
pub struct Prepared {
    pub scenario: Scenario,
    file_channel: Option<ChannelRealization>,
}

impl Prepared {
    /// Loads a channel file and reconciles its length with `K`.
    pub fn new(mut scenario: Scenario) -> Result<Self> {
        let file_channel = match &scenario.channel.kind {
            ChannelKind::File(path) => {
                let ch = read_channel(path)?;
                if scenario.k_explicit && ch.len() != scenario.budget.num_subcarriers {
                    return Err(CliError::config(
                        "system.num_subcarriers",
                        format!("K = {} but {} lists {} sub-carriers", scenario.budget.num_subcarriers, path.display(), ch.len()),
                    ));
                }
                scenario.budget.num_subcarriers = ch.len();
                Some(ch)
            }
            _ => None,
        };
        Ok(Self { scenario, file_channel })
    }

    pub fn params(&self, dbm: f64) -> Result<SystemParams> {
        let e = energy_from_dbm(dbm);
        SystemParams::from_budget(&self.scenario.budget, e).map_err(|err| CliError::config("power_dbm", format!("{dbm} dBm: {err}")))
    }

    /// The configured channel with self-interference attenuation `si_db`.
    pub fn channel(&self, si_db: f64) -> Result<ChannelRealization> {
        let spec = &self.scenario.channel;
        let p = self.params(0.0)?;
        Ok(match &spec.kind {
            ChannelKind::Flat => flat_channel(&p, si_db, spec.beta_db)?,
            ChannelKind::ItuA => itu_a_channel(&p, si_db, spec.beta_db, spec.seed)?,
            ChannelKind::Asymmetric => asymmetric_channel(&p, si_db, spec.beta_db, spec.scaling)?,
            ChannelKind::File(_) => self.file_channel.clone().expect("loaded in Prepared::new"),
        })
    }

    fn default_channel(&self) -> Result<ChannelRealization> {
        self.channel(self.scenario.channel.si_atten_db)
    }

    /// `solve` for every `(power, strategy)`, in that order.
    fn solve_grid(&self, pool: &rayon::ThreadPool, ch: &ChannelRealization) -> Result<Vec<(f64, StrategyResult)>> {
        let jobs: Vec<(f64, Strategy)> = self
            .scenario
            .powers
            .points()
            .into_iter()
            .flat_map(|p| self.scenario.strategies.iter().map(move |&s| (p, s)))
            .collect();
        let results: Vec<Result<(f64, StrategyResult)>> = pool.install(|| {
            jobs.par_iter()
                .map(|&(dbm, s)| {
                    let params = self.params(dbm)?;
                    Ok((dbm, solve(s, &params, ch, &self.scenario.solver)?))
                })
                .collect()
        });
        results.into_iter().collect()
    }
}

pub fn run_solve(prep: &Prepared, pool: &rayon::ThreadPool) -> Result<Outcome> {
    let ch = prep.default_channel()?;
    let k = prep.scenario.budget.num_subcarriers;
    let mut out = Outcome::new(Table::new(&SOLVE_HEADER));
    for (dbm, r) in prep.solve_grid(pool, &ch)? {
        out.count(&r);
        let (t1, t2) = r.allocation.time_shares();
        let (e1, e2) = r.allocation.node_energies(k);
        out.table.push(vec![
            num(dbm),
            r.strategy.to_string(),
            num(t1),
            num(t2),
            num(e1),
            num(e2),
            num(r.rates.r1),
            num(r.rates.r2),
            num(r.rates.sum),
            r.report.iterations.to_string(),
            num(r.report.final_residual),
        ]);
        out.summary.push(format!(
            "{:>7} @ {dbm} dBm: t1 = {t1:.4}, r1 = {:.4}, r2 = {:.4}, sum = {:.4} bits/s/Hz ({}, {} iterations)",
            r.strategy.name(),
            r.rates.r1,
            r.rates.r2,
            r.rates.sum,
            if r.report.converged { "converged" } else { "not converged" },
            r.report.iterations,
        ));
    }
    Ok(out)
}

pub fn run_sweep(prep: &Prepared, pool: &rayon::ThreadPool) -> Result<Outcome> {
    let ch = prep.default_channel()?;
    let mut out = Outcome::new(Table::new(&SWEEP_HEADER));
    let rows = prep.solve_grid(pool, &ch)?;
    for (dbm, r) in &rows {
        out.count(r);
        out.table.push(vec![num(*dbm), r.strategy.to_string(), num(r.rates.r1), num(r.rates.r2), num(r.rates.sum)]);
    }
    for &s in &prep.scenario.strategies {
        let sums: Vec<f64> = rows.iter().filter(|(_, r)| r.strategy == s).map(|(_, r)| r.rates.sum).collect();
        let (first, last) = (sums[0], sums[sums.len() - 1]);
        out.summary.push(format!("{:>7}: sum rate {first:.4} -> {last:.4} bits/s/Hz over {} points", s.name(), sums.len()));
    }
    Ok(out)
}

pub fn run_ratio(prep: &Prepared, pool: &rayon::ThreadPool) -> Result<Outcome> {
    let sc = &prep.scenario;
    if matches!(sc.channel.kind, ChannelKind::File(_)) && sc.si_db.len() > 1 {
        return Err(CliError::config("run.si_db", "a channel file fixes the self-interference; give a single attenuation"));
    }
    let channels: Vec<(f64, ChannelRealization)> = sc.si_db.iter().map(|&si| Ok((si, prep.channel(si)?))).collect::<Result<_>>()?;
    let jobs: Vec<(f64, usize)> = sc.powers.points().into_iter().flat_map(|p| (0..channels.len()).map(move |i| (p, i))).collect();
    let results: Vec<Result<(StrategyResult, StrategyResult)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(dbm, i)| {
                let params = prep.params(dbm)?;
                let ch = &channels[i].1;
                Ok((solve(sc.ratio_fd, &params, ch, &sc.solver)?, solve(sc.ratio_hd, &params, ch, &sc.solver)?))
            })
            .collect()
    });
    let mut out = Outcome::new(Table::new(&RATIO_HEADER));
    let mut peaks: Vec<(f64, f64)> = vec![(f64::NEG_INFINITY, f64::NAN); channels.len()];
    for (&(dbm, i), res) in jobs.iter().zip(results) {
        let (fd, hd) = res?;
        out.count(&fd);
        out.count(&hd);
        let si = channels[i].0;
        let ratio = if hd.rates.sum > 0.0 {
            let r = fd.rates.sum / hd.rates.sum;
            if r > peaks[i].0 {
                peaks[i] = (r, dbm);
            }
            num(r)
        } else {
            out.warnings.push(format!("{} rate is zero at {dbm} dBm, si {si} dB; ratio left empty", sc.ratio_hd));
            String::new()
        };
        out.table.push(vec![num(dbm), num(si), ratio]);
    }
    for (i, (si, _)) in channels.iter().enumerate() {
        let (r, at) = peaks[i];
        if r.is_finite() {
            out.summary.push(format!("si {si} dB: peak {}/{} ratio {r:.4} at {at} dBm", sc.ratio_fd, sc.ratio_hd));
        }
    }
    Ok(out)
}

pub fn run_oracle_compare(prep: &Prepared, pool: &rayon::ThreadPool) -> Result<Outcome> {
    let sc = &prep.scenario;
    let k = sc.budget.num_subcarriers;
    if k > ORACLE_MAX_SUBCARRIERS {
        return Err(CliError::config(
            "system.num_subcarriers",
            format!("oracle-compare supports K <= {ORACLE_MAX_SUBCARRIERS}, got K = {k}; pass e.g. --k 4"),
        ));
    }
    let ch = prep.default_channel()?;
    let jobs: Vec<(f64, Strategy)> = sc.powers.points().into_iter().flat_map(|p| sc.strategies.iter().map(move |&s| (p, s))).collect();
    let results: Vec<Result<_>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(dbm, s)| {
                let params = prep.params(dbm)?;
                compare(s, &params, &ch, &sc.solver, &sc.oracle).map_err(|e| match e {
                    duplex_asr_core::Error::OracleTooLarge { .. } => CliError::config("oracle.resolution", e.to_string()),
                    other => other.into(),
                })
            })
            .collect()
    });
    let mut out = Outcome::new(Table::new(&ORACLE_HEADER));
    let mut worst = (f64::NEG_INFINITY, 0.0, Strategy::HdUpa);
    for (&(dbm, s), res) in jobs.iter().zip(results) {
        let g = res?;
        out.count(&g.solver);
        let pct = 100.0 * g.relative_gap;
        if pct > worst.0 {
            worst = (pct, dbm, s);
        }
        out.table.push(vec![num(dbm), s.to_string(), num(g.asr_solver), num(g.asr_oracle), num(pct)]);
    }
    out.summary.push(format!("worst gap {:.4}% ({} at {} dBm) over {} comparisons", worst.0, worst.2, worst.1, jobs.len()));
    Ok(out)
}

pub fn emit_channel(prep: &Prepared) -> Result<Outcome> {
    let ch = prep.default_channel()?;
    let mut out = Outcome::new(channel_table(&ch));
    out.summary.push(format!("{} sub-carriers", ch.len()));
    Ok(out)
}
