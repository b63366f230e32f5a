//! Half-duplex, uniform energy per sub-carrier.
//!
//! Unknowns are the per-sub-carrier powers `p_i = ε_i / t_i` while
//! transmitting. Newton runs on `(p1, p2) / (E/K)` with the first residual
//! scaled by `E/K`, so both coordinates and both residuals are
//! dimensionless. Time shares follow from the budget:
//! `t1 = (p2 − E/K)/(p2 − p1)`.
//!
//! Each direction's rate is the perspective of a concave function, so the
//! problem is jointly concave. A stationary point exists only when the two
//! directions' rate curves cross; otherwise the stronger direction alone is
//! optimal and Newton is not expected to converge.

use alloc::vec;

use super::{budget_tol, finish, pick_best, Candidate, Certificates, SolverConfig, Strategy, StrategyResult};
use crate::model::{abc_unchecked, Allocation, ChannelRealization, HdUpaAllocation, HdUpaResiduals, SideAbc, SystemParams};
use crate::numerics::{golden_section_max, newton_backtracking, SolverReport};
use crate::Result;

/// Sum rate of the uniform half-duplex allocation; a direction with no time
/// contributes nothing.
fn value(fwd: &SideAbc, bwd: &SideAbc, k: f64, t1: f64, e1: f64, e2: f64) -> f64 {
    let side = |s: &SideAbc, t: f64, e: f64| if t > 0.0 && e > 0.0 { t * s.log_sum(e / t) / k } else { 0.0 };
    side(fwd, t1, e1) + side(bwd, 1.0 - t1, e2)
}

/// Allocation from transmit powers; `None` when the powers coincide.
fn recover(p1: f64, p2: f64, p_ref: f64) -> Option<(HdUpaAllocation, bool)> {
    if (p2 - p1).abs() <= 1e-12 * p_ref {
        return None;
    }
    let raw = (p2 - p_ref) / (p2 - p1);
    let t1 = raw.clamp(0.0, 1.0);
    let t2 = 1.0 - t1;
    let (mut e1, mut e2) = (p1 * t1, p2 * t2);
    let total = e1 + e2;
    if total > 0.0 {
        e1 *= p_ref / total;
        e2 *= p_ref / total;
    }
    let interior = raw > 0.0 && raw < 1.0;
    Some((HdUpaAllocation { t1, t2, eps1: e1, eps2: e2 }, interior))
}

pub fn solve_hd_upa(params: &SystemParams, ch: &ChannelRealization, cfg: &SolverConfig) -> Result<StrategyResult> {
    cfg.validate()?;
    ch.check_params(params)?;
    let k = params.k();
    let p_ref = params.energy_per_subcarrier();
    let mut report = SolverReport::default();

    let symmetric_alloc = HdUpaAllocation {
        t1: 0.5,
        t2: 0.5,
        eps1: p_ref / 2.0,
        eps2: p_ref / 2.0,
    };
    if p_ref == 0.0 {
        report.converged = true;
        report.note("zero budget");
        let c = Candidate::new(params, ch, Allocation::HdUpa(symmetric_alloc), "zero allocation")?;
        return Ok(finish(Strategy::HdUpa, c, report));
    }

    let mut cands = vec![
        Candidate::new(
            params,
            ch,
            Allocation::HdUpa(HdUpaAllocation {
                t1: 1.0,
                t2: 0.0,
                eps1: p_ref,
                eps2: 0.0,
            }),
            "forward-only boundary",
        )?,
        Candidate::new(
            params,
            ch,
            Allocation::HdUpa(HdUpaAllocation {
                t1: 0.0,
                t2: 1.0,
                eps1: 0.0,
                eps2: p_ref,
            }),
            "backward-only boundary",
        )?,
    ];

    let abc = abc_unchecked(params, ch);
    let dead = |s: &SideAbc| s.a.iter().all(|&a| a == 0.0);
    let mut interior_found = false;
    if !dead(&abc.forward) && !dead(&abc.backward) {
        let sys = HdUpaResiduals::from_abc(abc.clone());
        let res = |z: &[f64; 2]| {
            if !(z[0] > 0.0 && z[1] > 0.0) {
                return [f64::NAN; 2];
            }
            let [f1, f2] = sys.residuals(p_ref * z[0], p_ref * z[1]);
            [p_ref * f1, f2]
        };
        let jac = |z: &[f64; 2]| {
            let j = sys.jacobian(p_ref * z[0], p_ref * z[1]);
            let s2 = p_ref * p_ref;
            [[s2 * j[0][0], s2 * j[0][1]], [p_ref * j[1][0], p_ref * j[1][1]]]
        };
        match newton_backtracking(res, jac, [1.0, 1.0], &cfg.newton) {
            Ok((z, nr)) => {
                report.iterations = nr.iterations;
                report.final_residual = nr.final_residual;
                if !nr.notes.is_empty() {
                    report.note(&nr.notes);
                }
                if nr.converged {
                    let r = res(&z);
                    match recover(p_ref * z[0], p_ref * z[1], p_ref) {
                        Some((a, interior)) => {
                            let cert = Certificates {
                                interior,
                                hd_upa_residuals: interior.then_some([r[0].abs(), r[1].abs()]),
                                ..Certificates::default()
                            };
                            let label = if interior { "newton stationary point" } else { "clipped newton point" };
                            cands.insert(0, Candidate::new(params, ch, Allocation::HdUpa(a), label)?.with_certificates(cert));
                            interior_found = interior;
                        }
                        None => {
                            let cert = Certificates {
                                interior: true,
                                hd_upa_residuals: Some([r[0].abs(), r[1].abs()]),
                                ..Certificates::default()
                            };
                            // symmetric channels start on the root: the split of time is free
                            cands.insert(0, Candidate::new(params, ch, Allocation::HdUpa(symmetric_alloc), "coincident powers")?.with_certificates(cert));
                            interior_found = true;
                        }
                    }
                } else {
                    report.note("newton did not converge");
                }
            }
            Err(e) => report.note(&alloc::format!("newton failed: {e}")),
        }
    } else {
        report.note("one direction has no gain");
    }

    if !interior_found {
        // the objective is jointly concave in (t1, ε1, ε2), so the inner
        // maximum over the split is concave in t1
        let (fwd, bwd) = (&abc.forward, &abc.backward);
        let inner = |t1: f64| {
            golden_section_max(|w| value(fwd, bwd, k, t1, w * p_ref, (1.0 - w) * p_ref), 0.0, 1.0, 1e-10)
        };
        let (t1, _, outer_evals) = golden_section_max(|t| inner(t).1, 0.0, 1.0, 1e-9);
        let (w, _, _) = inner(t1);
        report.inner_solves += outer_evals;
        report.final_residual = 1e-9;
        report.note("nested golden-section fallback");
        let a = HdUpaAllocation {
            t1,
            t2: 1.0 - t1,
            eps1: w * p_ref,
            eps2: (1.0 - w) * p_ref,
        };
        cands.push(Candidate::new(params, ch, Allocation::HdUpa(a), "golden-section fallback")?);
    }
    report.converged = true;

    let best = pick_best(cands);
    best.allocation.check_feasible(params, budget_tol(params, cfg))?;
    Ok(finish(Strategy::HdUpa, best, report))
}
