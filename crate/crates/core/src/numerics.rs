//! Small numerical kernels shared by the solvers.

use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use crate::{Error, Result};

/// Newton iteration with backtracking line search on the merit
/// `f(x) = Σ residual²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Armijo slope fraction, `0 < alpha < 0.5`.
    pub alpha: f64,
    /// Step shrink factor, `0 < beta < 1`.
    pub beta: f64,
    /// Stop once the residual norm drops below this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            beta: 0.5,
            tol: 1e-8,
            max_iters: 100,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: self.alpha,
            });
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: self.beta,
            });
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol",
                value: self.tol,
            });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iters",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// Outcome bookkeeping shared by kernels and solvers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverReport {
    pub converged: bool,
    pub iterations: usize,
    /// Inner solves launched (bisection steps, per-sub-carrier Newton runs).
    pub inner_solves: usize,
    pub final_residual: f64,
    pub notes: String,
}

impl SolverReport {
    pub fn note(&mut self, msg: &str) {
        if !self.notes.is_empty() {
            self.notes.push_str("; ");
        }
        self.notes.push_str(msg);
    }
}

/// Solves `residuals(x) = 0` by Newton steps `J Δx = −r` with backtracking.
///
/// The step length restarts at 1 every outer iteration and shrinks by `beta`
/// until `f(x + tΔx) <= f(x) + alpha·t·∇fᵀΔx` (with `∇fᵀΔx = −2f(x)`). A
/// trial point where the residual is not finite counts as a failed trial, so
/// callers can encode a domain by returning NaN outside it.
///
/// Non-convergence is not an error: the best iterate is returned with
/// `converged = false`. A singular linear system is.
pub fn newton_backtracking<const N: usize, R, J>(
    mut residuals: R,
    mut jacobian: J,
    x0: [f64; N],
    cfg: &NewtonConfig,
) -> Result<([f64; N], SolverReport)>
where
    R: FnMut(&[f64; N]) -> [f64; N],
    J: FnMut(&[f64; N]) -> [[f64; N]; N],
{
    cfg.validate()?;
    let merit = |r: &[f64; N]| r.iter().map(|v| v * v).sum::<f64>();
    let mut x = x0;
    let mut r = residuals(&x);
    let mut f = merit(&r);
    if !f.is_finite() {
        return Err(Error::InvalidParameter {
            name: "newton start point",
            value: f,
        });
    }
    let tol2 = cfg.tol * cfg.tol;
    let mut report = SolverReport::default();
    while f >= tol2 && report.iterations < cfg.max_iters {
        report.iterations += 1;
        let mut rhs = r;
        rhs.iter_mut().for_each(|v| *v = -*v);
        let step = solve_linear(jacobian(&x), rhs)?;
        let slope = -2.0 * f;
        let mut t = 1.0;
        let mut accepted = None;
        // 2^-60 is far below any useful step
        for _ in 0..60 {
            let mut trial = x;
            for i in 0..N {
                trial[i] += t * step[i];
            }
            let rt = residuals(&trial);
            let ft = merit(&rt);
            if ft.is_finite() && ft <= f + cfg.alpha * t * slope {
                accepted = Some((trial, rt, ft));
                break;
            }
            t *= cfg.beta;
        }
        match accepted {
            Some((xn, rn, fn_)) => {
                x = xn;
                r = rn;
                f = fn_;
            }
            None => {
                report.note("line search stalled");
                break;
            }
        }
    }
    report.converged = f < tol2;
    report.final_residual = Float::sqrt(f);
    Ok((x, report))
}

/// Gaussian elimination with partial pivoting.
pub fn solve_linear<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Result<[f64; N]> {
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::SingularJacobian { condition: 0.0 });
    }
    let mut min_pivot = f64::INFINITY;
    for col in 0..N {
        let piv = (col..N)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col];
        min_pivot = min_pivot.min(p.abs());
        if p.abs() <= scale * 1e-14 {
            return Err(Error::SingularJacobian {
                condition: p.abs() / scale,
            });
        }
        for row in col + 1..N {
            let factor = a[row][col] / p;
            for c in col..N {
                a[row][c] -= factor * a[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut acc = b[row];
        for c in row + 1..N {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionOutcome {
    pub root: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Root of a monotone `g` on `[lo, hi]`.
///
/// Stops when `|g(mid)| < tol` or the bracket collapses to a few ulps.
pub fn bisection<G>(mut g: G, lo: f64, hi: f64, tol: f64) -> Result<BisectionOutcome>
where
    G: FnMut(f64) -> f64,
{
    if !(lo < hi) {
        return Err(Error::EmptyRange { a: lo, b: hi, step: 0.0 });
    }
    let (mut a, mut b) = (lo, hi);
    let ga = g(a);
    let gb = g(b);
    if ga.abs() < tol {
        return Ok(BisectionOutcome {
            root: a,
            residual: ga,
            iterations: 0,
        });
    }
    if gb.abs() < tol {
        return Ok(BisectionOutcome {
            root: b,
            residual: gb,
            iterations: 0,
        });
    }
    if ga.signum() == gb.signum() || ga.is_nan() || gb.is_nan() {
        return Err(Error::SameSignBracket {
            lo,
            hi,
            g_lo: ga,
            g_hi: gb,
        });
    }
    let increasing = gb > ga;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mid = 0.5 * (a + b);
        let gm = g(mid);
        let floor = 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        if gm.abs() < tol || (b - a) <= floor || iterations >= 2000 {
            return Ok(BisectionOutcome {
                root: mid,
                residual: gm,
                iterations,
            });
        }
        if (gm > 0.0) == increasing {
            b = mid;
        } else {
            a = mid;
        }
    }
}

/// Best grid point of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub x: f64,
    pub value: f64,
    pub index: usize,
    pub evaluations: usize,
}

/// Number of points `a, a+step, …` not exceeding `b`.
pub fn grid_len(a: f64, b: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::EmptyRange { a, b, step });
    }
    // a small slack keeps 1.0/0.1 from rounding down to 9
    Ok(Float::floor((b - a) / step + 1e-9) as usize + 1)
}

/// Minimises `f` over `a, a+step, …, b`; ties go to the smaller abscissa.
pub fn grid_minimize<F>(mut f: F, a: f64, b: f64, step: f64) -> Result<GridPoint>
where
    F: FnMut(f64) -> f64,
{
    let n = grid_len(a, b, step)?;
    let mut best = GridPoint {
        x: a,
        value: f64::INFINITY,
        index: 0,
        evaluations: n,
    };
    for i in 0..n {
        let x = a + i as f64 * step;
        let v = f(x);
        if v < best.value {
            best = GridPoint {
                x,
                value: v,
                index: i,
                evaluations: n,
            };
        }
    }
    Ok(best)
}

/// Grid point with the smallest `|g|`; ties go to the smaller abscissa.
///
/// `value` holds the signed residual at the chosen point.
pub fn grid_closest_root<G>(mut g: G, a: f64, b: f64, step: f64) -> Result<GridPoint>
where
    G: FnMut(f64) -> f64,
{
    let mut signed = 0.0;
    let mut best = grid_minimize(
        |x| {
            let v = g(x);
            v.abs()
        },
        a,
        b,
        step,
    )?;
    // re-evaluate once for the sign; g is pure for every caller
    if best.value.is_finite() {
        signed = g(best.x);
    }
    best.value = signed;
    Ok(best)
}

/// Central-difference gradient.
pub fn finite_difference_gradient<F>(mut f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Golden-section maximisation of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64, usize)
where
    F: FnMut(f64) -> f64,
{
    let ratio = (Float::sqrt(5.0) - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut evals = 2;
    while (b - a) > tol && evals < 500 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
        evals += 1;
    }
    if fc > fd {
        (c, fc, evals)
    } else {
        (d, fd, evals)
    }
}
