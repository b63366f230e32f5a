//! Exhaustive grid search over the feasible set, used as ground truth for
//! the solvers at small `K`.
//!
//! Energies are parameterized as shares of `E` on a simplex (two parts for
//! uniform strategies, `2K` parts otherwise) sampled at resolution `1/N`;
//! half-duplex strategies add `t1` on `0, 1/N, …, 1`. The best grid point is
//! then polished by pattern search: moves of `h` between pairs of shares and
//! `±h` on `t1`, hill-climbing to a local maximum before halving `h`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use num_traits::Float;

use crate::model::{Allocation, ChannelRealization, FdNupaAllocation, FdSubcarrier, FdUpaAllocation, HdNupaAllocation, HdUpaAllocation, SystemParams};
use crate::numerics::SolverReport;
use crate::solvers::{solve, Certificates, SolverConfig, Strategy, StrategyResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Grid resolution `N`.
    pub resolution: usize,
    /// Step halvings of the local refinement.
    pub refinements: usize,
    /// Largest admissible number of grid points.
    pub max_points: u128,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            resolution: 12,
            refinements: 2,
            max_points: 50_000_000,
        }
    }
}

/// `C(n, r)` saturating at `u128::MAX`.
fn binomial(n: u128, r: u128) -> u128 {
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

struct Space<'a> {
    strategy: Strategy,
    params: &'a SystemParams,
    subs: Vec<FdSubcarrier>,
    g1: Vec<f64>,
    g2: Vec<f64>,
}

impl Space<'_> {
    fn has_time(&self) -> bool {
        !self.strategy.is_full_duplex()
    }

    fn parts(&self) -> usize {
        if self.strategy.is_uniform() {
            2
        } else {
            2 * self.params.num_subcarriers
        }
    }

    /// Grid points needed at resolution `n`.
    fn points(&self, n: usize) -> u128 {
        let d = self.parts() as u128;
        let simplex = binomial(n as u128 + d - 1, d - 1);
        if self.has_time() {
            simplex.saturating_mul(n as u128 + 1)
        } else {
            simplex
        }
    }

    /// Per-sub-carrier energies of both nodes.
    fn energies(&self, shares: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k = self.params.num_subcarriers;
        let e = self.params.total_energy;
        if self.strategy.is_uniform() {
            (vec![shares[0] * e / k as f64; k], vec![shares[1] * e / k as f64; k])
        } else {
            (shares[..k].iter().map(|s| s * e).collect(), shares[k..].iter().map(|s| s * e).collect())
        }
    }

    /// Sum rate; `-inf` when a node has energy but no air time.
    fn value(&self, t1: f64, shares: &[f64]) -> f64 {
        let k = self.params.num_subcarriers;
        let kf = k as f64;
        let e = self.params.total_energy;
        let share = |node: usize, i: usize| {
            if self.strategy.is_uniform() {
                shares[node] / kf
            } else {
                shares[node * k + i]
            }
        };
        let gm = self.params.gamma_e;
        let mut acc = 0.0;
        if self.strategy.is_full_duplex() {
            for (i, s) in self.subs.iter().enumerate() {
                acc += s.sum_rate(share(0, i) * e, share(1, i) * e);
            }
            return acc / kf;
        }
        for (node, t, gains, noise) in [(0, t1, &self.g1, self.params.n2), (1, 1.0 - t1, &self.g2, self.params.n1)] {
            let mut side = 0.0;
            for (i, &g) in gains.iter().enumerate() {
                let eps = share(node, i) * e;
                if eps == 0.0 {
                    continue;
                }
                if t <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let x = eps * g / t;
                side += Float::ln_1p(gm * x / (x + (gm + 1.0) * noise));
            }
            acc += t * side;
        }
        acc / (kf * LN_2)
    }

    fn allocation(&self, t1: f64, shares: &[f64]) -> Allocation {
        let (e1, e2) = self.energies(shares);
        match self.strategy {
            Strategy::HdUpa => Allocation::HdUpa(HdUpaAllocation {
                t1,
                t2: 1.0 - t1,
                eps1: e1[0],
                eps2: e2[0],
            }),
            Strategy::FdUpa => Allocation::FdUpa(FdUpaAllocation { eps1: e1[0], eps2: e2[0] }),
            Strategy::HdNupa => Allocation::HdNupa(HdNupaAllocation {
                t1,
                t2: 1.0 - t1,
                eps1: e1,
                eps2: e2,
            }),
            Strategy::FdNupa => Allocation::FdNupa(FdNupaAllocation { eps1: e1, eps2: e2 }),
        }
    }
}

/// Calls `f` with every composition of `n` into `d` non-negative parts.
fn for_each_composition<F: FnMut(&[usize])>(n: usize, d: usize, f: &mut F) {
    fn rec<F: FnMut(&[usize])>(buf: &mut Vec<usize>, left: usize, d: usize, f: &mut F) {
        if buf.len() + 1 == d {
            buf.push(left);
            f(buf);
            buf.pop();
            return;
        }
        for v in 0..=left {
            buf.push(v);
            rec(buf, left - v, d, f);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(d);
    rec(&mut buf, n, d, f);
}

struct Best {
    t1: f64,
    shares: Vec<f64>,
    value: f64,
}

/// Best point of the feasible grid, refined locally.
pub fn exhaustive_search(strategy: Strategy, params: &SystemParams, ch: &ChannelRealization, cfg: &OracleConfig) -> Result<StrategyResult> {
    ch.check_params(params)?;
    if cfg.resolution == 0 {
        return Err(Error::InvalidParameter {
            name: "resolution",
            value: 0.0,
        });
    }
    let space = Space {
        strategy,
        params,
        subs: FdSubcarrier::all(params, ch),
        g1: crate::model::power_gains(&ch.h21),
        g2: crate::model::power_gains(&ch.h12),
    };
    let n = cfg.resolution;
    let points = space.points(n);
    if points > cfg.max_points {
        return Err(Error::OracleTooLarge {
            points,
            cap: cfg.max_points,
        });
    }
    let d = space.parts();
    let nf = n as f64;
    let times: Vec<f64> = if space.has_time() { (0..=n).map(|i| i as f64 / nf).collect() } else { vec![1.0] };

    let mut best = Best {
        t1: times[0],
        shares: vec![0.0; d],
        value: f64::NEG_INFINITY,
    };
    let mut evals: usize = 0;
    let mut shares = vec![0.0; d];
    for_each_composition(n, d, &mut |c| {
        for (s, &ci) in shares.iter_mut().zip(c) {
            *s = ci as f64 / nf;
        }
        for &t in &times {
            evals += 1;
            let v = space.value(t, &shares);
            if v > best.value {
                best = Best {
                    t1: t,
                    shares: shares.clone(),
                    value: v,
                };
            }
        }
    });

    let mut h = 1.0 / nf;
    for _ in 0..cfg.refinements {
        h *= 0.5;
        evals += climb(&space, &mut best, h);
    }

    let allocation = space.allocation(best.t1, &best.shares);
    let rates = allocation.rates(params, ch)?;
    let mut report = SolverReport {
        converged: true,
        iterations: evals,
        inner_solves: 0,
        final_residual: h,
        notes: Default::default(),
    };
    report.note(&alloc::format!("grid N={n}, {points} points, {} refinements", cfg.refinements));
    Ok(StrategyResult {
        strategy,
        allocation,
        rates,
        report,
        certificates: Certificates::default(),
    })
}

/// Pattern-search hill climb at step `h`; returns the evaluation count.
fn climb(space: &Space, best: &mut Best, h: f64) -> usize {
    let d = best.shares.len();
    let mut evals = 0;
    // each accepted move strictly improves the value
    for _ in 0..100_000 {
        let mut improved = false;
        if space.has_time() {
            for dt in [h, -h] {
                let t = (best.t1 + dt).clamp(0.0, 1.0);
                evals += 1;
                let v = space.value(t, &best.shares);
                if v > best.value {
                    best.t1 = t;
                    best.value = v;
                    improved = true;
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                if i == j || best.shares[i] < h * (1.0 - 1e-12) {
                    continue;
                }
                let mut trial = best.shares.clone();
                let step = h.min(trial[i]);
                trial[i] -= step;
                trial[j] += step;
                evals += 1;
                let v = space.value(best.t1, &trial);
                if v > best.value {
                    best.shares = trial;
                    best.value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    evals
}

/// Solver versus oracle on the same inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub strategy: Strategy,
    pub asr_solver: f64,
    pub asr_oracle: f64,
    /// `(oracle − solver)/oracle`; negative when the solver wins.
    pub relative_gap: f64,
    pub solver_feasible: bool,
    pub oracle_feasible: bool,
    pub solver: StrategyResult,
    pub oracle: StrategyResult,
}

pub fn compare(strategy: Strategy, params: &SystemParams, ch: &ChannelRealization, cfg: &SolverConfig, oracle: &OracleConfig) -> Result<GapReport> {
    let s = solve(strategy, params, ch, cfg)?;
    let o = exhaustive_search(strategy, params, ch, oracle)?;
    let tol = cfg.energy_rel_tol * params.total_energy;
    let relative_gap = if o.rates.sum > 0.0 { (o.rates.sum - s.rates.sum) / o.rates.sum } else { 0.0 };
    Ok(GapReport {
        strategy,
        asr_solver: s.rates.sum,
        asr_oracle: o.rates.sum,
        relative_gap,
        solver_feasible: s.allocation.check_feasible(params, tol).is_ok(),
        oracle_feasible: o.allocation.check_feasible(params, tol).is_ok(),
        solver: s,
        oracle: o,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::flat_channel;
    use crate::model::{energy_from_dbm, LinkBudget};

    fn params(k: usize, dbm: f64) -> SystemParams {
        let b = LinkBudget {
            num_subcarriers: k,
            ..LinkBudget::default()
        };
        SystemParams::from_budget(&b, energy_from_dbm(dbm)).unwrap()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(19, 7), 50388);
        assert_eq!(binomial(4, 0), 1);
    }

    #[test]
    fn composition_count_matches_binomial() {
        let mut count = 0u128;
        for_each_composition(6, 4, &mut |c| {
            assert_eq!(c.iter().sum::<usize>(), 6);
            count += 1;
        });
        assert_eq!(count, binomial(9, 3));
    }

    #[test]
    fn fd_upa_symmetric_split() {
        let p = params(4, 20.0);
        let ch = flat_channel(&p, -60.0, -40.0).unwrap();
        let cfg = OracleConfig {
            resolution: 1000,
            refinements: 0,
            ..OracleConfig::default()
        };
        let r = exhaustive_search(Strategy::FdUpa, &p, &ch, &cfg).unwrap();
        let Allocation::FdUpa(a) = r.allocation else { panic!() };
        let u = a.eps1 / p.energy_per_subcarrier();
        assert!((u - 0.5).abs() <= 1e-3, "{u}");
    }

    #[test]
    fn cap_is_enforced() {
        let p = params(16, 20.0);
        let ch = flat_channel(&p, -60.0, -40.0).unwrap();
        let err = exhaustive_search(Strategy::HdNupa, &p, &ch, &OracleConfig::default());
        assert!(matches!(err, Err(Error::OracleTooLarge { .. })));
    }

    #[test]
    fn zero_budget_gap() {
        let p = params(2, 20.0).with_total_energy(0.0);
        let ch = flat_channel(&p, -60.0, -40.0).unwrap();
        let g = compare(Strategy::HdUpa, &p, &ch, &SolverConfig::default(), &OracleConfig::default()).unwrap();
        assert_eq!(g.asr_oracle, 0.0);
        assert_eq!(g.relative_gap, 0.0);
    }
}
