//! Full-duplex, per-sub-carrier energies.
//!
//! For a multiplier `λ` each sub-carrier independently maximizes
//! `L_k = r_k(x, y)/K − λ(x + y)` over `x, y ≥ 0`. Candidates are the
//! interior stationary point (two-variable Newton), the two single-link
//! water-filling levels and zero. Total energy falls as `λ` grows, so `λ` is
//! bracketed and bisected on `ln λ` until the budget is spent.
//!
//! Spent energy jumps where a sub-carrier's best candidate switches between
//! the pair and a single link, and no `λ` then spends exactly `E`. The
//! sub-carriers that switch are pinned to one side each and the search is
//! repeated with those choices held, which is continuous again.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::{budget_tol, finish, normalize_energies, pick_best, single_link_energy, solve_fd_upa, Candidate, Certificates, SolverConfig, Strategy, StrategyResult};
use crate::model::{Allocation, ChannelRealization, FdNupaAllocation, FdSubcarrier, FdUpaAllocation, SystemParams};
use crate::numerics::{bisection, grid_closest_root, newton_backtracking, NewtonConfig, SolverReport};
use crate::{Error, Result};

/// What a sub-carrier may do at a given multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Choice {
    /// Best of the pair, either single link and silence.
    Free,
    /// The interior stationary point when there is one, else `Free`.
    Pair,
    Forward,
    Backward,
    Off,
}

impl Choice {
    /// What `(x, y)` amounts to.
    fn of(x: f64, y: f64) -> Self {
        match (x > 0.0, y > 0.0) {
            (true, true) => Choice::Pair,
            (true, false) => Choice::Forward,
            (false, true) => Choice::Backward,
            (false, false) => Choice::Off,
        }
    }
}

/// Most sub-carriers whose sides are enumerated exhaustively when recovering
/// from a jump; beyond this the count taking each side is scanned instead.
const EXHAUSTIVE_SWITCHES: usize = 4;

const UNCERTIFIED: &str = "normalized multiplier search";

/// Side length of the per-sub-carrier fallback scan.
const SCAN: usize = 48;

struct Inner<'a> {
    subs: &'a [FdSubcarrier],
    k: f64,
    p_ref: f64,
    newton: NewtonConfig,
    warm: Vec<Option<[f64; 2]>>,
    solves: usize,
    scans: usize,
}

impl Inner<'_> {
    fn lagrangian(&self, idx: usize, lambda: f64, x: f64, y: f64) -> f64 {
        self.subs[idx].sum_rate(x, y) / self.k - lambda * (x + y)
    }

    fn best_pair(&mut self, idx: usize, lambda: f64, choice: Choice) -> (f64, f64) {
        let s = self.subs[idx];
        let xs = single_link_energy(s.gamma, s.a, s.n, self.k, lambda);
        let ys = single_link_energy(s.gamma, s.b, s.m, self.k, lambda);
        match choice {
            Choice::Off => return (0.0, 0.0),
            Choice::Forward => return (xs, 0.0),
            Choice::Backward => return (0.0, ys),
            Choice::Pair if xs > 0.0 && ys > 0.0 => {
                if let Some(p) = self.interior(idx, lambda, xs, ys) {
                    return p;
                }
            }
            Choice::Pair | Choice::Free => {}
        }
        let mut best = (0.0, 0.0, 0.0);
        let mut consider = |this: &Self, x: f64, y: f64| {
            let v = this.lagrangian(idx, lambda, x, y);
            if v > best.2 {
                best = (x, y, v);
            }
        };
        consider(self, xs, 0.0);
        consider(self, 0.0, ys);
        // an interior maximizer lies in [0, xs] × [0, ys]
        if choice == Choice::Free && xs > 0.0 && ys > 0.0 {
            if let Some((x, y)) = self.interior(idx, lambda, xs, ys) {
                consider(self, x, y);
            }
        }
        (best.0, best.1)
    }

    fn newton_from(&mut self, idx: usize, lambda: f64, z0: [f64; 2]) -> Option<[f64; 2]> {
        let s = self.subs[idx];
        let (scale, k) = (self.p_ref, self.k);
        self.solves += 1;
        let res = |z: &[f64; 2]| {
            if !(z[0] > 0.0 && z[1] > 0.0) {
                return [f64::NAN; 2];
            }
            let [gx, gy] = s.gradient(z[0] * scale, z[1] * scale);
            [(gx / k - lambda) / lambda, (gy / k - lambda) / lambda]
        };
        let jac = |z: &[f64; 2]| {
            let h = s.hessian(z[0] * scale, z[1] * scale);
            let f = scale / (k * lambda);
            [[h[0][0] * f, h[0][1] * f], [h[1][0] * f, h[1][1] * f]]
        };
        let (z, rep) = newton_backtracking(res, jac, z0, &self.newton).ok()?;
        if !rep.converged {
            return None;
        }
        let h = s.hessian(z[0] * scale, z[1] * scale);
        let neg_def = h[0][0] < 0.0 && h[0][0] * h[1][1] - h[0][1] * h[1][0] > 0.0;
        neg_def.then_some(z)
    }

    fn interior(&mut self, idx: usize, lambda: f64, xs: f64, ys: f64) -> Option<(f64, f64)> {
        let scale = self.p_ref;
        let starts = [self.warm[idx], Some([0.5 * xs / scale, 0.5 * ys / scale])];
        for z0 in starts.into_iter().flatten() {
            if let Some(z) = self.newton_from(idx, lambda, z0) {
                self.warm[idx] = Some(z);
                return Some((z[0] * scale, z[1] * scale));
            }
        }
        // no interior maximum from the Newton starts: scan the box
        self.scans += 1;
        let mut best = (0.0, 0.0, f64::NEG_INFINITY);
        for i in 1..=SCAN {
            for j in 1..=SCAN {
                let (x, y) = (xs * i as f64 / SCAN as f64, ys * j as f64 / SCAN as f64);
                let v = self.lagrangian(idx, lambda, x, y);
                if v > best.2 {
                    best = (x, y, v);
                }
            }
        }
        match self.newton_from(idx, lambda, [best.0 / scale, best.1 / scale]) {
            Some(z) => {
                self.warm[idx] = Some(z);
                Some((z[0] * scale, z[1] * scale))
            }
            None => Some((best.0, best.1)),
        }
    }

    fn fill(&mut self, lambda: f64, choices: &[Choice], e1: &mut [f64], e2: &mut [f64]) -> f64 {
        let mut sum = 0.0;
        for idx in 0..self.subs.len() {
            let (x, y) = self.best_pair(idx, lambda, choices[idx]);
            e1[idx] = x;
            e2[idx] = y;
            sum += x + y;
        }
        sum
    }

    /// Smallest multiplier at which every sub-carrier stays silent.
    fn lambda_max(&self, choices: &[Choice]) -> f64 {
        let ln2 = core::f64::consts::LN_2;
        self.subs
            .iter()
            .zip(choices)
            .map(|(s, &c)| {
                let f = if matches!(c, Choice::Backward | Choice::Off) { 0.0 } else { s.gamma * s.a / (s.n * self.k * ln2) };
                let b = if matches!(c, Choice::Forward | Choice::Off) { 0.0 } else { s.gamma * s.b / (s.m * self.k * ln2) };
                f.max(b)
            })
            .fold(0.0, f64::max)
    }
}

/// Multiplier search outcome before normalization.
struct Fill {
    lambda: f64,
    e1: Vec<f64>,
    e2: Vec<f64>,
    /// `|Σε − E|` before normalization.
    gap: f64,
    evaluations: usize,
}

fn search(inner: &mut Inner, choices: &[Choice], total: f64, exact_grid: Option<f64>) -> Result<Fill> {
    let n = inner.subs.len();
    let hi = inner.lambda_max(choices);
    if !(hi > 0.0) {
        return Err(Error::MultiplierBracket { lambda: hi });
    }
    let mut e1 = vec![0.0; n];
    let mut e2 = vec![0.0; n];
    let mut evaluations = 0usize;
    let lambda = if let Some(step) = exact_grid {
        let best = grid_closest_root(
            |frac| {
                evaluations += 1;
                inner.fill(frac * hi, choices, &mut e1, &mut e2) - total
            },
            step,
            1.0,
            step,
        )?;
        best.x * hi
    } else {
        let mut lo = hi * 1e-3;
        let mut tries = 0;
        loop {
            evaluations += 1;
            if inner.fill(lo, choices, &mut e1, &mut e2) >= total {
                break;
            }
            lo *= 1e-3;
            tries += 1;
            if tries > 100 || lo == 0.0 {
                return Err(Error::MultiplierBracket { lambda: lo });
            }
        }
        let out = bisection(
            |ln_l| {
                evaluations += 1;
                inner.fill(Float::exp(ln_l), choices, &mut e1, &mut e2) - total
            },
            Float::ln(lo),
            Float::ln(hi),
            1e-9 * total,
        )?;
        Float::exp(out.root)
    };
    let sum = inner.fill(lambda, choices, &mut e1, &mut e2);
    evaluations += 1;
    normalize_energies(&mut e1, &mut e2, total);
    Ok(Fill {
        lambda,
        e1,
        e2,
        gap: (sum - total).abs(),
        evaluations,
    })
}

/// Searches again with the sub-carriers that switch across the jump at
/// `lambda` pinned to one side each.
fn recover(inner: &mut Inner, lambda: f64, total: f64) -> Vec<Fill> {
    let n = inner.subs.len();
    let free = vec![Choice::Free; n];
    let (mut e1, mut e2) = (vec![0.0; n], vec![0.0; n]);
    let mut side = |inner: &mut Inner, l: f64| -> Vec<(Choice, f64)> {
        inner.fill(l, &free, &mut e1, &mut e2);
        (0..n).map(|i| (Choice::of(e1[i], e2[i]), e1[i] + e2[i])).collect()
    };
    // the bisection pins λ to within a few ulps of the jump
    let below = side(inner, lambda * (1.0 - 1e-9));
    let above = side(inner, lambda * (1.0 + 1e-9));
    let mut switching: Vec<usize> = (0..n).filter(|&i| below[i].0 != above[i].0).collect();
    let swing = |i: usize| (below[i].1 - above[i].1).abs();
    switching.sort_by(|&i, &j| swing(j).total_cmp(&swing(i)).then(i.cmp(&j)));
    let m = switching.len();
    let patterns: Vec<Vec<bool>> = if m == 0 {
        Vec::new()
    } else if m <= EXHAUSTIVE_SWITCHES {
        (0..1usize << m).map(|mask| (0..m).map(|b| mask >> b & 1 == 1).collect()).collect()
    } else {
        // many alike sub-carriers switch together: vary how many take the
        // high-energy side, largest swings first
        let step = m.div_ceil(32);
        let mut counts: Vec<usize> = (0..=m).step_by(step).collect();
        if counts.last() != Some(&m) {
            counts.push(m);
        }
        counts.into_iter().map(|c| (0..m).map(|b| b < c).collect()).collect()
    };
    let mut out = Vec::new();
    for takes_below in patterns {
        let mut choices = free.clone();
        for (b, &i) in switching.iter().enumerate() {
            choices[i] = if takes_below[b] { below[i].0 } else { above[i].0 };
        }
        if let Ok(f) = search(inner, &choices, total, None) {
            out.push(f);
        }
    }
    out
}

/// On a sub-carrier that mirrors itself, sending only forward and sending
/// only backward are equally good; hand such sub-carriers to the weaker
/// direction, largest first. Returns the number of swaps.
fn balance_ties(subs: &[FdSubcarrier], e1: &mut [f64], e2: &mut [f64]) -> usize {
    let same = |u: f64, v: f64| (u - v).abs() <= 1e-12 * u.abs().max(v.abs());
    let (mut r1, mut r2) = (0.0, 0.0);
    let mut ties = Vec::new();
    for (i, s) in subs.iter().enumerate() {
        let mirrored = same(s.a, s.b) && same(s.s, s.q) && same(s.n, s.m);
        let single = (e1[i] > 0.0) != (e2[i] > 0.0);
        if mirrored && single {
            let (f, b) = s.rates(e1[i], e2[i]);
            ties.push((f + b, i));
        } else {
            let (f, b) = s.rates(e1[i], e2[i]);
            r1 += f;
            r2 += b;
        }
    }
    ties.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let mut swaps = 0;
    for (rate, i) in ties {
        let forward = e1[i] > 0.0;
        let want_forward = r1 <= r2;
        if forward != want_forward {
            core::mem::swap(&mut e1[i], &mut e2[i]);
            swaps += 1;
        }
        if want_forward {
            r1 += rate;
        } else {
            r2 += rate;
        }
    }
    swaps
}

/// Mean marginal rate over entries with positive energy.
fn mean_marginal(subs: &[FdSubcarrier], k: f64, e1: &[f64], e2: &[f64]) -> f64 {
    let (mut acc, mut count) = (0.0, 0usize);
    for (i, s) in subs.iter().enumerate() {
        let [gx, gy] = s.gradient(e1[i], e2[i]);
        for (e, g) in [(e1[i], gx), (e2[i], gy)] {
            if e > 0.0 {
                acc += g / k;
                count += 1;
            }
        }
    }
    acc / count.max(1) as f64
}

/// Largest `|∂r/∂ε − λ|/λ` over entries with positive energy.
fn kkt_residual(subs: &[FdSubcarrier], k: f64, lambda: f64, e1: &[f64], e2: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, s) in subs.iter().enumerate() {
        let [gx, gy] = s.gradient(e1[i], e2[i]);
        if e1[i] > 0.0 {
            worst = worst.max((gx / k - lambda).abs() / lambda);
        }
        if e2[i] > 0.0 {
            worst = worst.max((gy / k - lambda).abs() / lambda);
        }
    }
    worst
}

pub fn solve_fd_nupa(params: &SystemParams, ch: &ChannelRealization, cfg: &SolverConfig) -> Result<StrategyResult> {
    cfg.validate()?;
    ch.check_params(params)?;
    let n = params.num_subcarriers;
    let total = params.total_energy;
    let mut report = SolverReport::default();
    let as_nupa = |e1: Vec<f64>, e2: Vec<f64>| Allocation::FdNupa(FdNupaAllocation { eps1: e1, eps2: e2 });
    if total == 0.0 {
        report.converged = true;
        report.note("zero budget");
        let c = Candidate::new(params, ch, as_nupa(vec![0.0; n], vec![0.0; n]), "zero allocation")?;
        return Ok(finish(Strategy::FdNupa, c, report));
    }

    let subs = FdSubcarrier::all(params, ch);
    let k = params.k();
    let mut inner = Inner {
        subs: &subs,
        k,
        p_ref: params.energy_per_subcarrier(),
        newton: cfg.newton,
        warm: vec![None; n],
        solves: 0,
        scans: 0,
    };
    let mut cands = Vec::new();
    let tol = budget_tol(params, cfg);

    let free = vec![Choice::Free; n];
    let grid = cfg.exact_grid.then_some(cfg.time_step);
    let mut uncertified = Vec::new();
    let mut searched = false;
    match search(&mut inner, &free, total, grid) {
        Ok(first) => {
            searched = true;
            report.iterations = first.evaluations;
            let mut fills = Vec::new();
            // the grid scan misses the budget by its resolution anyway
            if first.gap > tol && grid.is_none() {
                let pinned = recover(&mut inner, first.lambda, total);
                report.note(&alloc::format!("spent energy jumps at the multiplier; {} pinned searches", pinned.len()));
                fills.extend(pinned.into_iter().map(|f| (f, "pinned multiplier search")));
            }
            fills.insert(0, (first, "multiplier search"));
            let mut swaps = 0;
            let mut gap = f64::INFINITY;
            for (mut f, label) in fills {
                swaps += balance_ties(&subs, &mut f.e1, &mut f.e2);
                gap = gap.min(f.gap);
                let within = f.gap <= tol;
                let cert = Certificates {
                    interior: within,
                    kkt_residual: Some(kkt_residual(&subs, k, f.lambda, &f.e1, &f.e2)),
                    multiplier: Some(f.lambda),
                    ..Certificates::default()
                };
                let label = if within { label } else { UNCERTIFIED };
                let c = Candidate::new(params, ch, as_nupa(f.e1, f.e2), label)?.with_certificates(cert);
                if within {
                    cands.push(c);
                } else {
                    // normalized across a jump in spent energy: only a strict
                    // improvement over the certified candidates selects it
                    uncertified.push(c);
                }
            }
            if swaps > 0 {
                report.note(&alloc::format!("{swaps} single-link sub-carriers moved to the weaker direction"));
            }
            report.final_residual = gap / total;
            if gap > tol {
                report.note(&alloc::format!("budget mismatch {gap:e} J before normalization"));
            }
        }
        Err(e) => report.note(&alloc::format!("multiplier search failed: {e}")),
    }
    report.inner_solves = inner.solves;
    if inner.scans > 0 {
        report.note(&alloc::format!("{} sub-carrier scans", inner.scans));
    }

    for (choice, label) in [(Choice::Forward, "forward-only boundary"), (Choice::Backward, "backward-only boundary")] {
        if let Ok(f) = search(&mut inner, &vec![choice; n], total, None) {
            let cert = Certificates {
                kkt_residual: Some(kkt_residual(&subs, k, f.lambda, &f.e1, &f.e2)),
                multiplier: Some(f.lambda),
                ..Certificates::default()
            };
            cands.push(Candidate::new(params, ch, as_nupa(f.e1, f.e2), label)?.with_certificates(cert));
        }
    }

    let upa = solve_fd_upa(params, ch, cfg)?;
    if let Allocation::FdUpa(FdUpaAllocation { eps1, eps2 }) = upa.allocation {
        let (e1, e2) = (vec![eps1; n], vec![eps2; n]);
        let cert = if upa.certificates.interior {
            let lambda = mean_marginal(&subs, k, &e1, &e2);
            Certificates {
                interior: true,
                kkt_residual: Some(kkt_residual(&subs, k, lambda, &e1, &e2)),
                multiplier: Some(lambda),
                ..Certificates::default()
            }
        } else {
            Certificates::default()
        };
        cands.push(Candidate::new(params, ch, as_nupa(e1, e2), "uniform allocation")?.with_certificates(cert));
    }
    cands.extend(uncertified);
    if !searched {
        report.note("fell back to boundary and uniform candidates");
    }

    let best = pick_best(cands);
    report.converged = best.label != UNCERTIFIED;
    best.allocation.check_feasible(params, tol)?;
    Ok(finish(Strategy::FdNupa, best, report))
}
