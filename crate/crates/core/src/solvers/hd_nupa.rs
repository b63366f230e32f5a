//! Half-duplex, per-sub-carrier energies.
//!
//! For a fixed `t1` the energies are water-filling levels of a common
//! multiplier `λ`, found by bisection on `ln λ` so that the budget is spent.
//! The outer loop scans `t1` on a grid of step `ξ` for the point where the
//! two time derivatives balance, then bisects between the neighbouring grid
//! points when they bracket the balance.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::{budget_tol, finish, hd_symmetric, normalize_energies, pick_best, Candidate, Certificates, SolverConfig, Strategy, StrategyResult};
use crate::model::{power_gains, Allocation, ChannelRealization, HdDirection, HdNupaAllocation, SystemParams};
use crate::numerics::{bisection, grid_closest_root, SolverReport};
use crate::{Error, Result};

struct Problem<'a> {
    fwd: HdDirection<'a>,
    bwd: HdDirection<'a>,
    total: f64,
    k: usize,
}

/// Water-filling solution at one time split.
struct Split {
    t1: f64,
    lambda: f64,
    e1: Vec<f64>,
    e2: Vec<f64>,
}

impl Problem<'_> {
    fn fill(&self, lambda: f64, t1: f64, e1: &mut [f64], e2: &mut [f64]) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.k {
            e1[i] = self.fwd.energy_for_multiplier(i, lambda, t1);
            e2[i] = self.bwd.energy_for_multiplier(i, lambda, 1.0 - t1);
            sum += e1[i] + e2[i];
        }
        sum
    }

    fn lambda_max(&self, t1: f64) -> f64 {
        let f = if t1 > 0.0 { self.fwd.max_marginal() } else { 0.0 };
        let b = if t1 < 1.0 { self.bwd.max_marginal() } else { 0.0 };
        f.max(b)
    }

    /// Multiplier that spends the budget exactly at `t1`.
    fn split(&self, t1: f64, solves: &mut usize) -> Result<Split> {
        let hi = self.lambda_max(t1);
        if !(hi > 0.0) {
            return Err(Error::MultiplierBracket { lambda: hi });
        }
        let mut e1 = vec![0.0; self.k];
        let mut e2 = vec![0.0; self.k];
        let mut lo = hi * 1e-3;
        let mut tries = 0;
        while self.fill(lo, t1, &mut e1, &mut e2) < self.total {
            lo *= 1e-3;
            tries += 1;
            if tries > 100 || lo == 0.0 {
                return Err(Error::MultiplierBracket { lambda: lo });
            }
        }
        let tol = 1e-12 * self.total;
        let out = bisection(
            |ln_l| self.fill(Float::exp(ln_l), t1, &mut e1, &mut e2) - self.total,
            Float::ln(lo),
            Float::ln(hi),
            tol,
        )?;
        *solves += 1;
        let lambda = Float::exp(out.root);
        self.fill(lambda, t1, &mut e1, &mut e2);
        normalize_energies(&mut e1, &mut e2, self.total);
        Ok(Split { t1, lambda, e1, e2 })
    }

    /// `∂r1/∂t1 − ∂r2/∂t2` at the water-filling solution for `t1`.
    fn balance(&self, s: &Split) -> f64 {
        self.fwd.d_t(&s.e1, s.t1) - self.bwd.d_t(&s.e2, 1.0 - s.t1)
    }

    fn kkt(&self, s: &Split) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.k {
            if s.e1[i] > 0.0 {
                worst = worst.max((self.fwd.d_eps(i, s.e1[i], s.t1) - s.lambda).abs() / s.lambda);
            }
            if s.e2[i] > 0.0 {
                worst = worst.max((self.bwd.d_eps(i, s.e2[i], 1.0 - s.t1) - s.lambda).abs() / s.lambda);
            }
        }
        worst
    }

    fn allocation(&self, s: Split) -> Allocation {
        Allocation::HdNupa(HdNupaAllocation {
            t1: s.t1,
            t2: 1.0 - s.t1,
            eps1: s.e1,
            eps2: s.e2,
        })
    }
}

pub fn solve_hd_nupa(params: &SystemParams, ch: &ChannelRealization, cfg: &SolverConfig) -> Result<StrategyResult> {
    cfg.validate()?;
    ch.check_params(params)?;
    let n = params.num_subcarriers;
    let mut report = SolverReport::default();
    if params.total_energy == 0.0 {
        report.converged = true;
        report.note("zero budget");
        let a = Allocation::HdNupa(HdNupaAllocation {
            t1: 0.5,
            t2: 0.5,
            eps1: vec![0.0; n],
            eps2: vec![0.0; n],
        });
        return Ok(finish(Strategy::HdNupa, Candidate::new(params, ch, a, "zero allocation")?, report));
    }

    let g1 = power_gains(&ch.h21);
    let g2 = power_gains(&ch.h12);
    let prob = Problem {
        fwd: HdDirection {
            gains: &g1,
            gamma: params.gamma_e,
            noise: params.n2,
            k: params.k(),
        },
        bwd: HdDirection {
            gains: &g2,
            gamma: params.gamma_e,
            noise: params.n1,
            k: params.k(),
        },
        total: params.total_energy,
        k: n,
    };
    let xi = cfg.time_step;
    let mut solves = 0usize;
    let mut cands = Vec::new();

    for (t1, label) in [(1.0, "forward-only boundary"), (0.0, "backward-only boundary")] {
        match prob.split(t1, &mut solves) {
            Ok(s) => {
                let cert = Certificates {
                    kkt_residual: Some(prob.kkt(&s)),
                    multiplier: Some(s.lambda),
                    ..Certificates::default()
                };
                cands.push(Candidate::new(params, ch, prob.allocation(s), label)?.with_certificates(cert));
            }
            Err(_) => report.note(label),
        }
    }

    let chosen = if hd_symmetric(params, ch) {
        // the time balance vanishes for every t1; pick the symmetric split
        report.note("symmetric channel");
        Some(0.5)
    } else {
        let mut failures = 0usize;
        let best = grid_closest_root(
            |t| match prob.split(t, &mut solves) {
                Ok(s) => prob.balance(&s),
                Err(_) => {
                    failures += 1;
                    f64::NAN
                }
            },
            xi,
            1.0 - xi,
            xi,
        )?;
        report.iterations = best.evaluations;
        if failures > 0 {
            report.note(&alloc::format!("{failures} grid points without a multiplier"));
        }
        best.value.is_finite().then_some(best.x)
    };

    let mut interior_ok = false;
    if let Some(t_grid) = chosen {
        let at = |t: f64, solves: &mut usize| prob.split(t, solves).map(|s| prob.balance(&s));
        let d0 = at(t_grid, &mut solves)?;
        let lo = (t_grid - xi).max(xi * 0.5);
        let hi = (t_grid + xi).min(1.0 - xi * 0.5);
        let d_lo = at(lo, &mut solves)?;
        let d_hi = at(hi, &mut solves)?;
        let lipschitz = ((d0 - d_lo).abs() / (t_grid - lo)).max((d_hi - d0).abs() / (hi - t_grid));

        let mut t_star = t_grid;
        if d0 != 0.0 {
            let bracket = if d_lo.signum() != d0.signum() {
                Some((lo, t_grid))
            } else if d_hi.signum() != d0.signum() {
                Some((t_grid, hi))
            } else {
                None
            };
            if let Some((a, b)) = bracket {
                let mut local = 0usize;
                let tol = 1e-12 * (d0.abs() + lipschitz * xi);
                let out = bisection(|t| at(t, &mut local).unwrap_or(f64::NAN), a, b, tol)?;
                solves += local;
                t_star = out.root;
                report.note("time share refined between grid points");
            }
        }
        let s = prob.split(t_star, &mut solves)?;
        let balance = prob.balance(&s);
        let cert = Certificates {
            interior: true,
            kkt_residual: Some(prob.kkt(&s)),
            multiplier: Some(s.lambda),
            time_balance: Some(balance.abs()),
            time_lipschitz: Some(lipschitz),
            ..Certificates::default()
        };
        report.final_residual = balance.abs();
        cands.insert(0, Candidate::new(params, ch, prob.allocation(s), "balanced time split")?.with_certificates(cert));
        interior_ok = true;
    } else {
        report.note("no interior time split");
    }
    report.inner_solves = solves;
    report.converged = interior_ok || !cands.is_empty();
    if cands.is_empty() {
        return Err(Error::MultiplierBracket { lambda: 0.0 });
    }
    let best = pick_best(cands);
    best.allocation.check_feasible(params, budget_tol(params, cfg))?;
    Ok(finish(Strategy::HdNupa, best, report))
}
