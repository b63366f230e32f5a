//! The four strategy solvers.
//!
//! Every solver returns the best of its interior stationary point and the
//! boundary allocations that put the whole budget on one direction, so the
//! result is never worse than either node transmitting alone. Allocations are
//! normalized to spend exactly `E` and rates are re-evaluated from the
//! returned allocation.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use num_traits::Float;

use crate::model::{
    db_to_linear, linear_to_db, si_power, Allocation, ChannelRealization, FdNupaAllocation, FdUpaAllocation, HdNupaAllocation, HdUpaAllocation, RateBreakdown,
    SystemParams,
};
use crate::numerics::{NewtonConfig, SolverReport};
use crate::{Error, Result};

mod fd_nupa;
mod fd_upa;
mod hd_nupa;
mod hd_upa;

pub use fd_nupa::solve_fd_nupa;
pub use fd_upa::solve_fd_upa;
pub use hd_nupa::solve_hd_nupa;
pub use hd_upa::solve_hd_upa;

/// Transmission strategy tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    HdUpa,
    HdNupa,
    FdUpa,
    FdNupa,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::HdUpa, Strategy::HdNupa, Strategy::FdUpa, Strategy::FdNupa];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::HdUpa => "hd-upa",
            Strategy::HdNupa => "hd-nupa",
            Strategy::FdUpa => "fd-upa",
            Strategy::FdNupa => "fd-nupa",
        }
    }

    pub fn is_full_duplex(self) -> bool {
        matches!(self, Strategy::FdUpa | Strategy::FdNupa)
    }

    pub fn is_uniform(self) -> bool {
        matches!(self, Strategy::HdUpa | Strategy::FdUpa)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unknown strategy name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseStrategyError(pub String);

impl fmt::Display for ParseStrategyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown strategy `{}` (expected hd-upa, hd-nupa, fd-upa or fd-nupa)", self.0)
    }
}

impl core::error::Error for ParseStrategyError {}

impl FromStr for Strategy {
    type Err = ParseStrategyError;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        let norm: String = s.trim().chars().map(|c| if c == '_' { '-' } else { c.to_ascii_lowercase() }).collect();
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == norm)
            .ok_or_else(|| ParseStrategyError(s.into()))
    }
}

/// Tunables shared by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub newton: NewtonConfig,
    /// Time-share grid step `ξ` of the half-duplex non-uniform solver; also
    /// the multiplier grid step (relative to its upper bound) in exact-grid
    /// mode.
    pub time_step: f64,
    /// Budget tolerance `δ_E` relative to `E`.
    pub energy_rel_tol: f64,
    /// Scan the multiplier on a forward grid from zero instead of
    /// bracketing and bisecting.
    pub exact_grid: bool,
    /// Thermal noise must be below this fraction of the interference plus
    /// EVM power for the typical regime.
    pub typical_noise_fraction: f64,
    /// Minimum per-sub-carrier SINR (dB) at the uniform split for the
    /// typical regime.
    pub typical_min_sinr_db: f64,
    /// Maximum mirrored-link asymmetry for the typical regime.
    pub typical_max_asymmetry: f64,
    /// Points of the dense fallback scans.
    pub fallback_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton: NewtonConfig::default(),
            time_step: 1e-3,
            energy_rel_tol: 1e-6,
            exact_grid: false,
            typical_noise_fraction: 0.01,
            typical_min_sinr_db: 10.0,
            typical_max_asymmetry: 1e-9,
            fallback_points: 1000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.newton.validate()?;
        if !(self.time_step > 0.0 && self.time_step < 0.5) {
            return Err(Error::InvalidParameter {
                name: "time_step",
                value: self.time_step,
            });
        }
        if !(self.energy_rel_tol > 0.0 && self.energy_rel_tol < 1.0) {
            return Err(Error::InvalidParameter {
                name: "energy_rel_tol",
                value: self.energy_rel_tol,
            });
        }
        if self.fallback_points < 3 {
            return Err(Error::InvalidParameter {
                name: "fallback_points",
                value: self.fallback_points as f64,
            });
        }
        Ok(())
    }
}

/// Optimality evidence attached to a solution. Fields are `None` when the
/// corresponding condition does not apply to the selected point (boundary
/// or fallback solutions, other strategies).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Certificates {
    /// The selected allocation is an interior stationary point.
    pub interior: bool,
    /// HD-UPA `(|f1|·E/K, |f2|)`, both dimensionless.
    pub hd_upa_residuals: Option<[f64; 2]>,
    /// Largest `|∂r/∂ε − λ|/λ` over sub-carriers with positive energy.
    pub kkt_residual: Option<f64>,
    /// Energy multiplier `λ` in bits/s/Hz per joule.
    pub multiplier: Option<f64>,
    /// HD-NUPA `|∂r1/∂t1 − ∂r2/∂t2|`.
    pub time_balance: Option<f64>,
    /// Local Lipschitz estimate `L` of the time balance around the chosen `t1`.
    pub time_lipschitz: Option<f64>,
    /// FD-UPA `|dr/du|` with `u = ε1·K/E`.
    pub split_derivative: Option<f64>,
}

/// Output of a solver.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub allocation: Allocation,
    pub rates: RateBreakdown,
    pub report: SolverReport,
    pub certificates: Certificates,
}

/// Dispatches to the solver for `strategy`.
pub fn solve(strategy: Strategy, params: &SystemParams, ch: &ChannelRealization, cfg: &SolverConfig) -> Result<StrategyResult> {
    if ch.len() == params.num_subcarriers && ch.h21.iter().chain(&ch.h12).all(|h| h.norm_sqr() == 0.0) {
        return silent_links(strategy, params, ch);
    }
    match strategy {
        Strategy::HdUpa => solve_hd_upa(params, ch, cfg),
        Strategy::HdNupa => solve_hd_nupa(params, ch, cfg),
        Strategy::FdUpa => solve_fd_upa(params, ch, cfg),
        Strategy::FdNupa => solve_fd_nupa(params, ch, cfg),
    }
}

// Both links dead: every feasible allocation scores zero, and the multiplier
// searches have nothing to bracket. Return the even split.
fn silent_links(strategy: Strategy, params: &SystemParams, ch: &ChannelRealization) -> Result<StrategyResult> {
    let k = params.num_subcarriers;
    let eps = params.total_energy / (2.0 * k as f64);
    let allocation = match strategy {
        Strategy::HdUpa => Allocation::HdUpa(HdUpaAllocation { t1: 0.5, t2: 0.5, eps1: eps, eps2: eps }),
        Strategy::HdNupa => Allocation::HdNupa(HdNupaAllocation {
            t1: 0.5,
            t2: 0.5,
            eps1: alloc::vec![eps; k],
            eps2: alloc::vec![eps; k],
        }),
        Strategy::FdUpa => Allocation::FdUpa(FdUpaAllocation { eps1: eps, eps2: eps }),
        Strategy::FdNupa => Allocation::FdNupa(FdNupaAllocation {
            eps1: alloc::vec![eps; k],
            eps2: alloc::vec![eps; k],
        }),
    };
    let best = Candidate::new(params, ch, allocation, "even split")?;
    let mut report = SolverReport {
        converged: true,
        ..SolverReport::default()
    };
    report.note("both links have zero gain");
    Ok(finish(strategy, best, report))
}

/// Evaluated predicates of the typical regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalConditions {
    pub holds: bool,
    pub noise_ok: bool,
    pub sinr_ok: bool,
    pub symmetric: bool,
    /// Largest `(γ+1)N / (interference + EVM power)` over sub-carriers and
    /// receivers at the uniform split.
    pub noise_ratio: f64,
    /// Smallest per-sub-carrier SINR at the uniform split, dB.
    pub min_sinr_db: f64,
    pub asymmetry: f64,
}

/// Thermal noise well below EVM noise, high SINR and a symmetric channel,
/// all evaluated at `ε1 = ε2 = E/(2K)`.
pub fn check_typical_conditions(params: &SystemParams, ch: &ChannelRealization, cfg: &SolverConfig) -> Result<TypicalConditions> {
    ch.check_params(params)?;
    let g = params.gamma_e;
    let e = params.energy_per_subcarrier() / 2.0;
    let mut noise_ratio: f64 = 0.0;
    let mut min_sinr = f64::INFINITY;
    for k in 0..params.num_subcarriers {
        let sides = [
            (ch.h21[k].norm_sqr(), si_power(g, ch.h22[k], ch.beta2[k]), params.n2),
            (ch.h12[k].norm_sqr(), si_power(g, ch.h11[k], ch.beta1[k]), params.n1),
        ];
        for (a, s, n) in sides {
            let thermal = (g + 1.0) * n;
            let evm = e * a + e * s;
            noise_ratio = noise_ratio.max(if evm > 0.0 { thermal / evm } else { f64::INFINITY });
            min_sinr = min_sinr.min(g * a * e / (evm + thermal));
        }
    }
    let noise_asym = (params.n1 - params.n2).abs() / params.n1.max(params.n2);
    let asymmetry = ch.max_asymmetry(g).max(noise_asym);
    let min_sinr_db = if min_sinr > 0.0 { linear_to_db(min_sinr) } else { f64::NEG_INFINITY };
    let noise_ok = noise_ratio <= cfg.typical_noise_fraction;
    let sinr_ok = min_sinr > db_to_linear(cfg.typical_min_sinr_db);
    let symmetric = asymmetry < cfg.typical_max_asymmetry;
    Ok(TypicalConditions {
        holds: noise_ok && sinr_ok && symmetric && params.total_energy > 0.0,
        noise_ok,
        sinr_ok,
        symmetric,
        noise_ratio,
        min_sinr_db,
        asymmetry,
    })
}

/// Direction gains and receiver noise agree exactly enough that the
/// half-duplex problem is invariant under swapping the nodes.
pub(crate) fn hd_symmetric(params: &SystemParams, ch: &ChannelRealization) -> bool {
    let rel = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs());
    rel(params.n1, params.n2) && ch.h21.iter().zip(&ch.h12).all(|(a, b)| rel(a.norm_sqr(), b.norm_sqr()))
}

pub(crate) fn budget_tol(params: &SystemParams, cfg: &SolverConfig) -> f64 {
    cfg.energy_rel_tol * params.total_energy
}

/// Candidate allocation with its evaluated rates.
pub(crate) struct Candidate {
    pub allocation: Allocation,
    pub rates: RateBreakdown,
    pub certificates: Certificates,
    pub label: &'static str,
}

impl Candidate {
    pub fn new(params: &SystemParams, ch: &ChannelRealization, allocation: Allocation, label: &'static str) -> Result<Self> {
        let rates = allocation.rates(params, ch)?;
        Ok(Self {
            allocation,
            rates,
            certificates: Certificates::default(),
            label,
        })
    }

    pub fn with_certificates(mut self, c: Certificates) -> Self {
        self.certificates = c;
        self
    }
}

/// Highest sum rate; a later candidate must win by more than rounding.
pub(crate) fn pick_best(cands: alloc::vec::Vec<Candidate>) -> Candidate {
    let mut best: Option<Candidate> = None;
    for c in cands {
        let better = match &best {
            None => true,
            Some(b) => c.rates.sum > b.rates.sum + 1e-12 * b.rates.sum.abs(),
        };
        if better {
            best = Some(c);
        }
    }
    best.expect("at least one candidate")
}

pub(crate) fn finish(strategy: Strategy, best: Candidate, mut report: SolverReport) -> StrategyResult {
    report.note(&alloc::format!("selected {}", best.label));
    StrategyResult {
        strategy,
        allocation: best.allocation,
        rates: best.rates,
        report,
        certificates: best.certificates,
    }
}

/// Energy that makes the marginal rate of a single always-on link equal to
/// `lambda`; zero when the first joule is already worth less.
///
/// The link rate is `log2(1 + γ g x / (g x + c))` averaged over `k`
/// sub-carriers, with `c` the effective noise `(γ+1)N`.
pub(crate) fn single_link_energy(gamma: f64, g: f64, c: f64, k: f64, lambda: f64) -> f64 {
    if g <= 0.0 || !(lambda > 0.0) {
        return 0.0;
    }
    // marginal γ g c / (k ln2 (g x + c)((γ+1) g x + c)) = λ
    let qa = (gamma + 1.0) * g * g;
    let qb = (gamma + 2.0) * g * c;
    let qc = c * c - gamma * g * c / (k * lambda * core::f64::consts::LN_2);
    if qc >= 0.0 {
        return 0.0;
    }
    -2.0 * qc / (qb + Float::sqrt(qb * qb - 4.0 * qa * qc))
}

/// Scales both energy vectors by a common factor so they sum to `total`.
pub(crate) fn normalize_energies(e1: &mut [f64], e2: &mut [f64], total: f64) {
    let sum: f64 = e1.iter().sum::<f64>() + e2.iter().sum::<f64>();
    if sum > 0.0 {
        let s = total / sum;
        e1.iter_mut().chain(e2.iter_mut()).for_each(|v| *v *= s);
    }
}
