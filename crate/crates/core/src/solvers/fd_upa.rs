//! Full-duplex, uniform energy per sub-carrier.
//!
//! The budget leaves one free variable, the split `u = ε1·K/E` with
//! `ε2 = E/K − ε1`. In the typical regime the even split is returned
//! directly; otherwise Newton runs on `dr/du`, with a dense scan plus
//! golden-section refinement as fallback.

use alloc::vec;
use alloc::vec::Vec;

use super::{budget_tol, check_typical_conditions, finish, pick_best, Candidate, Certificates, SolverConfig, Strategy, StrategyResult};
use crate::model::{Allocation, ChannelRealization, FdSubcarrier, FdUpaAllocation, SystemParams};
use crate::numerics::{golden_section_max, newton_backtracking, SolverReport};
use crate::Result;

struct Split<'a> {
    subs: &'a [FdSubcarrier],
    p_ref: f64,
    k: f64,
}

impl Split<'_> {
    fn rate(&self, u: f64) -> f64 {
        let (x, y) = (u * self.p_ref, (1.0 - u) * self.p_ref);
        self.subs.iter().map(|s| s.sum_rate(x, y)).sum::<f64>() / self.k
    }

    fn d1(&self, u: f64) -> f64 {
        let (x, y) = (u * self.p_ref, (1.0 - u) * self.p_ref);
        let s: f64 = self.subs.iter().map(|s| {
            let [gx, gy] = s.gradient(x, y);
            gx - gy
        }).sum();
        s * self.p_ref / self.k
    }

    fn d2(&self, u: f64) -> f64 {
        let (x, y) = (u * self.p_ref, (1.0 - u) * self.p_ref);
        let s: f64 = self.subs.iter().map(|s| {
            let h = s.hessian(x, y);
            h[0][0] - 2.0 * h[0][1] + h[1][1]
        }).sum();
        s * self.p_ref * self.p_ref / self.k
    }
}

fn alloc_at(u: f64, p_ref: f64) -> Allocation {
    Allocation::FdUpa(FdUpaAllocation {
        eps1: u * p_ref,
        eps2: (1.0 - u) * p_ref,
    })
}

pub fn solve_fd_upa(params: &SystemParams, ch: &ChannelRealization, cfg: &SolverConfig) -> Result<StrategyResult> {
    cfg.validate()?;
    ch.check_params(params)?;
    let p_ref = params.energy_per_subcarrier();
    let mut report = SolverReport::default();
    if p_ref == 0.0 {
        report.converged = true;
        report.note("zero budget");
        return Ok(finish(Strategy::FdUpa, Candidate::new(params, ch, alloc_at(0.5, 0.0), "zero allocation")?, report));
    }
    let subs = FdSubcarrier::all(params, ch);
    let split = Split {
        subs: &subs,
        p_ref,
        k: params.k(),
    };

    let mut cands: Vec<Candidate> = vec![
        Candidate::new(params, ch, alloc_at(1.0, p_ref), "forward-only boundary")?,
        Candidate::new(params, ch, alloc_at(0.0, p_ref), "backward-only boundary")?,
    ];

    let typical = check_typical_conditions(params, ch, cfg)?;
    let mut interior = None;
    if typical.holds {
        report.note("typical conditions");
        interior = Some((0.5, "even split"));
    } else {
        let res = |u: &[f64; 1]| {
            if u[0] > 0.0 && u[0] < 1.0 {
                [split.d1(u[0])]
            } else {
                [f64::NAN]
            }
        };
        match newton_backtracking(res, |u| [[split.d2(u[0])]], [0.5], &cfg.newton) {
            Ok((u, nr)) => {
                report.iterations = nr.iterations;
                report.final_residual = nr.final_residual;
                if !nr.notes.is_empty() {
                    report.note(&nr.notes);
                }
                if nr.converged && split.d2(u[0]) < 0.0 {
                    interior = Some((u[0], "newton stationary point"));
                } else if nr.converged {
                    report.note("newton reached a minimum");
                } else {
                    report.note("newton did not converge");
                }
            }
            Err(e) => report.note(&alloc::format!("newton failed: {e}")),
        }
    }

    match interior {
        Some((u, label)) => {
            let cert = Certificates {
                interior: true,
                split_derivative: Some(split.d1(u).abs()),
                ..Certificates::default()
            };
            cands.insert(0, Candidate::new(params, ch, alloc_at(u, p_ref), label)?.with_certificates(cert));
        }
        None => {
            let n = cfg.fallback_points;
            let h = 1.0 / n as f64;
            let (mut best_i, mut best_v) = (0usize, f64::NEG_INFINITY);
            for i in 0..=n {
                let v = split.rate(i as f64 * h);
                if v > best_v {
                    best_i = i;
                    best_v = v;
                }
            }
            let lo = (best_i as f64 - 1.0).max(0.0) * h;
            let hi = ((best_i + 1) as f64 * h).min(1.0);
            let (u, _, evals) = golden_section_max(|u| split.rate(u), lo, hi, 1e-12);
            report.inner_solves += n + 1 + evals;
            report.note("dense scan fallback");
            cands.push(Candidate::new(params, ch, alloc_at(u, p_ref), "scan fallback")?);
        }
    }
    report.converged = true;
    let best = pick_best(cands);
    best.allocation.check_feasible(params, budget_tol(params, cfg))?;
    Ok(finish(Strategy::FdUpa, best, report))
}
