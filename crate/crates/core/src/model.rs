//! System parameters, channel realisations, allocations and the rate model.
//!
//! Rates are spectral efficiencies in bits/s/Hz averaged over the `K`
//! sub-carriers. Per sub-carrier the received SINR of the forward link is
//!
//! ```text
//! HD:  (eps1/t1)·γ|h21|² / ((eps1/t1)|h21|² + (γ+1)N2)
//! FD:  eps1·γ|h21|² / (eps1|h21|² + eps2(γ|h22·β2|² + |h22|²) + (γ+1)N2)
//! ```
//!
//! and the backward link mirrors it with `h12`, `h11`, `β1`, `N1`. Because the
//! EVM term scales with the signal, the SINR never exceeds `γ`.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use num_complex::Complex64;
use num_traits::Float;

use crate::{Error, Result};

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    Float::powf(10.0, db / 10.0)
}

/// `10·log10(x)`.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * Float::log10(x)
}

/// Signal-to-EVM power ratio from an EVM level in dBc.
pub fn ser_from_evm_dbc(evm_dbc: f64) -> f64 {
    db_to_linear(-evm_dbc)
}

/// Energy budget in joules over the unit frame for a power level in dBm.
pub fn energy_from_dbm(power_dbm: f64) -> f64 {
    db_to_linear(power_dbm) * 1e-3
}

/// Raw link-budget inputs a [`SystemParams`] can be derived from.
///
/// [`LinkBudget::default`] is the reference configuration: 10 MHz, 2 GHz,
/// 0 dB antenna gain, −174 dBm/Hz, 10 dB noise figure, −30 dBc EVM,
/// 64 sub-carriers, 30 m separation.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub distance_m: f64,
    pub noise_figure_db: f64,
    pub evm_dbc: f64,
    pub antenna_gain_db: f64,
    pub noise_density_dbm_hz: f64,
    pub num_subcarriers: usize,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            bandwidth_hz: 10e6,
            carrier_hz: 2e9,
            distance_m: 30.0,
            noise_figure_db: 10.0,
            evm_dbc: -30.0,
            antenna_gain_db: 0.0,
            noise_density_dbm_hz: -174.0,
            num_subcarriers: 64,
        }
    }
}

impl LinkBudget {
    /// Thermal noise power on one sub-carrier, in watts.
    pub fn noise_power_per_subcarrier(&self) -> f64 {
        noise_power_per_subcarrier(self)
    }

    pub fn validate(&self) -> Result<()> {
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("distance_m", self.distance_m)?;
        if self.num_subcarriers == 0 {
            return Err(Error::InvalidParameter {
                name: "num_subcarriers",
                value: 0.0,
            });
        }
        for (name, v) in [
            ("carrier_hz", self.carrier_hz),
            ("noise_figure_db", self.noise_figure_db),
            ("evm_dbc", self.evm_dbc),
            ("antenna_gain_db", self.antenna_gain_db),
            ("noise_density_dbm_hz", self.noise_density_dbm_hz),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        Ok(())
    }
}

/// Noise density plus noise figure integrated over one sub-carrier bandwidth.
pub fn noise_power_per_subcarrier(budget: &LinkBudget) -> f64 {
    let mw_per_hz = db_to_linear(budget.noise_density_dbm_hz + budget.noise_figure_db);
    mw_per_hz * 1e-3 * (budget.bandwidth_hz / budget.num_subcarriers as f64)
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}

/// Scalar system constants.
///
/// `total_energy` is the joint budget of both nodes over the unit frame, so it
/// is numerically equal to the maximum average transmit power in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub gamma_e: f64,
    pub n1: f64,
    pub n2: f64,
    pub total_energy: f64,
    pub num_subcarriers: usize,
    /// Present when the parameters were derived from a link budget.
    pub budget: Option<LinkBudget>,
}

impl SystemParams {
    pub fn new(gamma_e: f64, n1: f64, n2: f64, total_energy: f64, k: usize) -> Result<Self> {
        let p = Self {
            gamma_e,
            n1,
            n2,
            total_energy,
            num_subcarriers: k,
            budget: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Identical receivers at both nodes, `gamma_e` from the EVM level.
    pub fn from_budget(budget: &LinkBudget, total_energy: f64) -> Result<Self> {
        budget.validate()?;
        let n = budget.noise_power_per_subcarrier();
        let mut p = Self::new(
            ser_from_evm_dbc(budget.evm_dbc),
            n,
            n,
            total_energy,
            budget.num_subcarriers,
        )?;
        p.budget = Some(budget.clone());
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("gamma_e", self.gamma_e)?;
        positive("n1", self.n1)?;
        positive("n2", self.n2)?;
        if !(self.total_energy >= 0.0 && self.total_energy.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "total_energy",
                value: self.total_energy,
            });
        }
        if self.num_subcarriers == 0 {
            return Err(Error::InvalidParameter {
                name: "num_subcarriers",
                value: 0.0,
            });
        }
        Ok(())
    }

    pub fn with_total_energy(&self, total_energy: f64) -> Self {
        Self {
            total_energy,
            ..self.clone()
        }
    }

    pub fn k(&self) -> f64 {
        self.num_subcarriers as f64
    }

    /// Per-sub-carrier energy `E/K`.
    pub fn energy_per_subcarrier(&self) -> f64 {
        self.total_energy / self.k()
    }

    /// Saturation rate `log2(1 + γ)` of a single link.
    pub fn saturation_rate(&self) -> f64 {
        Float::log2(1.0 + self.gamma_e)
    }

    /// Node 1 and node 2 exchange roles.
    pub fn swapped(&self) -> Self {
        Self {
            n1: self.n2,
            n2: self.n1,
            ..self.clone()
        }
    }
}

/// Per-sub-carrier complex gains of the four links plus baseband cancellation.
///
/// `hji` is the link from node `i` to node `j`; `h11`/`h22` are the residual
/// self-interference channels after the antenna and RF stages and `beta_i` the
/// amplitude attenuation applied by digital cancellation at node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h21: Vec<Complex64>,
    pub h12: Vec<Complex64>,
    pub h11: Vec<Complex64>,
    pub h22: Vec<Complex64>,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
}

impl ChannelRealization {
    pub fn new(
        h21: Vec<Complex64>,
        h12: Vec<Complex64>,
        h11: Vec<Complex64>,
        h22: Vec<Complex64>,
        beta1: Vec<f64>,
        beta2: Vec<f64>,
    ) -> Result<Self> {
        let ch = Self {
            h21,
            h12,
            h11,
            h22,
            beta1,
            beta2,
        };
        ch.validate(ch.h21.len())?;
        Ok(ch)
    }

    pub fn len(&self) -> usize {
        self.h21.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h21.is_empty()
    }

    /// Every vector has length `k`, every gain is finite and `0 <= beta <= 1`.
    pub fn validate(&self, k: usize) -> Result<()> {
        let lens = [
            ("h21", self.h21.len()),
            ("h12", self.h12.len()),
            ("h11", self.h11.len()),
            ("h22", self.h22.len()),
            ("beta1", self.beta1.len()),
            ("beta2", self.beta2.len()),
        ];
        for (field, found) in lens {
            if found != k {
                return Err(Error::LengthMismatch {
                    field,
                    expected: k,
                    found,
                });
            }
        }
        for (name, v) in [("h21", &self.h21), ("h12", &self.h12), ("h11", &self.h11), ("h22", &self.h22)] {
            if let Some(bad) = v.iter().find(|h| !(h.re.is_finite() && h.im.is_finite())) {
                return Err(Error::InvalidParameter {
                    name,
                    value: bad.norm_sqr(),
                });
            }
        }
        for (name, v) in [("beta1", &self.beta1), ("beta2", &self.beta2)] {
            if let Some(&bad) = v.iter().find(|b| !(0.0..=1.0).contains(*b)) {
                return Err(Error::InvalidParameter { name, value: bad });
            }
        }
        Ok(())
    }

    pub(crate) fn check_params(&self, params: &SystemParams) -> Result<()> {
        params.validate()?;
        self.validate(params.num_subcarriers)
    }

    /// Node 1 and node 2 exchange roles.
    pub fn swapped(&self) -> Self {
        Self {
            h21: self.h12.clone(),
            h12: self.h21.clone(),
            h11: self.h22.clone(),
            h22: self.h11.clone(),
            beta1: self.beta2.clone(),
            beta2: self.beta1.clone(),
        }
    }

    /// Largest elementwise relative difference between the mirrored links
    /// (`|h21|²` vs `|h12|²` and the SI power seen by each receiver).
    pub fn max_asymmetry(&self, gamma_e: f64) -> f64 {
        let rel = |x: f64, y: f64| {
            let scale = x.abs().max(y.abs());
            if scale == 0.0 {
                0.0
            } else {
                (x - y).abs() / scale
            }
        };
        let mut worst: f64 = 0.0;
        for k in 0..self.len() {
            worst = worst.max(rel(self.h21[k].norm_sqr(), self.h12[k].norm_sqr()));
            let si1 = si_power(gamma_e, self.h11[k], self.beta1[k]);
            let si2 = si_power(gamma_e, self.h22[k], self.beta2[k]);
            worst = worst.max(rel(si1, si2));
        }
        worst
    }
}

/// Residual SI plus EVM coupling `γ|h·β|² + |h|²` of one receiver.
pub(crate) fn si_power(gamma_e: f64, h: Complex64, beta: f64) -> f64 {
    let g = h.norm_sqr();
    gamma_e * g * beta * beta + g
}

/// Forward/backward spectral efficiencies in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBreakdown {
    pub r1: f64,
    pub r2: f64,
    pub sum: f64,
}

impl RateBreakdown {
    pub fn new(r1: f64, r2: f64) -> Self {
        Self {
            r1,
            r2,
            sum: r1 + r2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HdUpaAllocation {
    pub t1: f64,
    pub t2: f64,
    /// Joules per sub-carrier.
    pub eps1: f64,
    pub eps2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HdNupaAllocation {
    pub t1: f64,
    pub t2: f64,
    pub eps1: Vec<f64>,
    pub eps2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdUpaAllocation {
    pub eps1: f64,
    pub eps2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdNupaAllocation {
    pub eps1: Vec<f64>,
    pub eps2: Vec<f64>,
}

/// Allocation produced by any of the four strategies.
#[derive(Debug, Clone, PartialEq)]
pub enum Allocation {
    HdUpa(HdUpaAllocation),
    HdNupa(HdNupaAllocation),
    FdUpa(FdUpaAllocation),
    FdNupa(FdNupaAllocation),
}

impl Allocation {
    pub fn rates(&self, params: &SystemParams, ch: &ChannelRealization) -> Result<RateBreakdown> {
        match self {
            Allocation::HdUpa(a) => hd_upa_rates(params, ch, a),
            Allocation::HdNupa(a) => hd_nupa_rates(params, ch, a),
            Allocation::FdUpa(a) => fd_upa_rates(params, ch, a),
            Allocation::FdNupa(a) => fd_nupa_rates(params, ch, a),
        }
    }

    /// `(t1, t2)`; full-duplex allocations occupy the whole frame at both ends.
    pub fn time_shares(&self) -> (f64, f64) {
        match self {
            Allocation::HdUpa(a) => (a.t1, a.t2),
            Allocation::HdNupa(a) => (a.t1, a.t2),
            Allocation::FdUpa(_) | Allocation::FdNupa(_) => (1.0, 1.0),
        }
    }

    /// Energy spent by node 1 and node 2 over all sub-carriers.
    pub fn node_energies(&self, k: usize) -> (f64, f64) {
        let k = k as f64;
        match self {
            Allocation::HdUpa(a) => (k * a.eps1, k * a.eps2),
            Allocation::FdUpa(a) => (k * a.eps1, k * a.eps2),
            Allocation::HdNupa(a) => (a.eps1.iter().sum(), a.eps2.iter().sum()),
            Allocation::FdNupa(a) => (a.eps1.iter().sum(), a.eps2.iter().sum()),
        }
    }

    /// Time simplex (HD only), energy budget within `energy_tol` and
    /// non-negativity.
    pub fn check_feasible(&self, params: &SystemParams, energy_tol: f64) -> Result<()> {
        let k = params.num_subcarriers;
        let nonneg = |name: &'static str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, value: v })
            }
        };
        let check_vec = |name: &'static str, v: &[f64]| -> Result<()> {
            if v.len() != k {
                return Err(Error::LengthMismatch {
                    field: name,
                    expected: k,
                    found: v.len(),
                });
            }
            v.iter().try_for_each(|&x| nonneg(name, x))
        };
        match self {
            Allocation::HdUpa(a) => {
                nonneg("t1", a.t1)?;
                nonneg("t2", a.t2)?;
                nonneg("eps1", a.eps1)?;
                nonneg("eps2", a.eps2)?;
            }
            Allocation::HdNupa(a) => {
                nonneg("t1", a.t1)?;
                nonneg("t2", a.t2)?;
                check_vec("eps1", &a.eps1)?;
                check_vec("eps2", &a.eps2)?;
            }
            Allocation::FdUpa(a) => {
                nonneg("eps1", a.eps1)?;
                nonneg("eps2", a.eps2)?;
            }
            Allocation::FdNupa(a) => {
                check_vec("eps1", &a.eps1)?;
                check_vec("eps2", &a.eps2)?;
            }
        }
        if let Allocation::HdUpa(HdUpaAllocation { t1, t2, .. })
        | Allocation::HdNupa(HdNupaAllocation { t1, t2, .. }) = self
        {
            if (t1 + t2 - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter {
                    name: "t1 + t2",
                    value: t1 + t2,
                });
            }
        }
        let (e1, e2) = self.node_energies(k);
        if (e1 + e2 - params.total_energy).abs() > energy_tol {
            return Err(Error::InvalidParameter {
                name: "total energy",
                value: e1 + e2,
            });
        }
        Ok(())
    }
}

/// Coefficients of one half-duplex direction: `a = γ|h|²`, `b = |h|²`,
/// `c = (γ+1)N` of the receiving node.
#[derive(Debug, Clone, PartialEq)]
pub struct SideAbc {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// Per-sub-carrier coefficients for both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct AbcCoefficients {
    /// Node 1 to node 2 (`A_k1`, `B_k1`, `C_k1`).
    pub forward: SideAbc,
    /// Node 2 to node 1 (`A_k2`, `B_k2`, `C_k2`).
    pub backward: SideAbc,
}

/// Rejects zero-magnitude transmission gains (`A` must be strictly positive).
pub fn abc_coefficients(params: &SystemParams, ch: &ChannelRealization) -> Result<AbcCoefficients> {
    ch.check_params(params)?;
    for (link, h) in [("h21", &ch.h21), ("h12", &ch.h12)] {
        if let Some(k) = h.iter().position(|h| h.norm_sqr() == 0.0) {
            return Err(Error::ZeroChannelGain { link, subcarrier: k });
        }
    }
    Ok(abc_unchecked(params, ch))
}

pub(crate) fn abc_unchecked(params: &SystemParams, ch: &ChannelRealization) -> AbcCoefficients {
    let side = |h: &[Complex64], noise: f64| {
        let b: Vec<f64> = h.iter().map(|h| h.norm_sqr()).collect();
        SideAbc {
            a: b.iter().map(|b| params.gamma_e * b).collect(),
            c: alloc::vec![(params.gamma_e + 1.0) * noise; b.len()],
            b,
        }
    };
    AbcCoefficients {
        forward: side(&ch.h21, params.n2),
        backward: side(&ch.h12, params.n1),
    }
}

impl SideAbc {
    /// `Σ_k log2(1 + A p / (B p + C))` at per-sub-carrier power `p`.
    pub fn log_sum(&self, p: f64) -> f64 {
        self.iter()
            .map(|(a, b, c)| Float::ln_1p(a * p / (b * p + c)))
            .sum::<f64>()
            / LN_2
    }

    /// `Σ_k A C / (((A+B) p + C)(B p + C))`, the marginal rate per unit power
    /// without the `1/(K ln 2)` factor.
    pub fn marginal_sum(&self, p: f64) -> f64 {
        self.iter()
            .map(|(a, b, c)| a * c / (((a + b) * p + c) * (b * p + c)))
            .sum()
    }

    /// `d/dp` of [`SideAbc::marginal_sum`].
    pub fn marginal_sum_dp(&self, p: f64) -> f64 {
        self.iter()
            .map(|(a, b, c)| {
                let u = (a + b) * p + c;
                let v = b * p + c;
                -a * c * ((a + b) * v + b * u) / (u * u * v * v)
            })
            .sum()
    }

    fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.a
            .iter()
            .zip(&self.b)
            .zip(&self.c)
            .map(|((&a, &b), &c)| (a, b, c))
    }
}

fn hd_side_rate<I>(t: f64, eps: I, gains: &[Complex64], gamma: f64, noise: f64, node: u8, k: f64) -> Result<f64>
where
    I: Iterator<Item = f64>,
{
    let mut acc = 0.0;
    for (e, h) in eps.zip(gains) {
        if e == 0.0 {
            continue;
        }
        if t <= 0.0 {
            return Err(Error::DegenerateTime { node });
        }
        let g = h.norm_sqr();
        let x = e * g / t;
        acc += Float::ln_1p(gamma * x / (x + (gamma + 1.0) * noise));
    }
    Ok(t * acc / (k * LN_2))
}

/// Half-duplex, uniform energy per sub-carrier.
///
/// A node with zero energy has zero rate whatever its time share.
pub fn hd_upa_rates(params: &SystemParams, ch: &ChannelRealization, alloc: &HdUpaAllocation) -> Result<RateBreakdown> {
    ch.check_params(params)?;
    let k = params.k();
    let n = params.num_subcarriers;
    let r1 = hd_side_rate(alloc.t1, core::iter::repeat_n(alloc.eps1, n), &ch.h21, params.gamma_e, params.n2, 1, k)?;
    let r2 = hd_side_rate(alloc.t2, core::iter::repeat_n(alloc.eps2, n), &ch.h12, params.gamma_e, params.n1, 2, k)?;
    Ok(RateBreakdown::new(r1, r2))
}

/// Half-duplex, per-sub-carrier energies.
pub fn hd_nupa_rates(params: &SystemParams, ch: &ChannelRealization, alloc: &HdNupaAllocation) -> Result<RateBreakdown> {
    ch.check_params(params)?;
    check_len("eps1", &alloc.eps1, params.num_subcarriers)?;
    check_len("eps2", &alloc.eps2, params.num_subcarriers)?;
    let k = params.k();
    let r1 = hd_side_rate(alloc.t1, alloc.eps1.iter().copied(), &ch.h21, params.gamma_e, params.n2, 1, k)?;
    let r2 = hd_side_rate(alloc.t2, alloc.eps2.iter().copied(), &ch.h12, params.gamma_e, params.n1, 2, k)?;
    Ok(RateBreakdown::new(r1, r2))
}

fn check_len(field: &'static str, v: &[f64], k: usize) -> Result<()> {
    if v.len() == k {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            field,
            expected: k,
            found: v.len(),
        })
    }
}

/// Full-duplex link quantities on one sub-carrier.
///
/// With `x = eps1[k]`, `y = eps2[k]`:
/// `u1 = (γ+1)a x + s y + n`, `v1 = a x + s y + n` and the forward rate is
/// `log2(u1/v1)`; the backward link mirrors it with `b`, `q`, `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FdSubcarrier {
    pub gamma: f64,
    /// `|h21|²`
    pub a: f64,
    /// SI coupling into node 2, `γ|h22 β2|² + |h22|²`
    pub s: f64,
    /// `(γ+1)N2`
    pub n: f64,
    /// `|h12|²`
    pub b: f64,
    /// SI coupling into node 1
    pub q: f64,
    /// `(γ+1)N1`
    pub m: f64,
}

impl FdSubcarrier {
    pub fn all(params: &SystemParams, ch: &ChannelRealization) -> Vec<Self> {
        let g = params.gamma_e;
        (0..params.num_subcarriers)
            .map(|k| Self {
                gamma: g,
                a: ch.h21[k].norm_sqr(),
                s: si_power(g, ch.h22[k], ch.beta2[k]),
                n: (g + 1.0) * params.n2,
                b: ch.h12[k].norm_sqr(),
                q: si_power(g, ch.h11[k], ch.beta1[k]),
                m: (g + 1.0) * params.n1,
            })
            .collect()
    }

    /// Rates of the two links in bits/s/Hz (not averaged over `K`).
    pub fn rates(&self, x: f64, y: f64) -> (f64, f64) {
        let v1 = self.a * x + self.s * y + self.n;
        let v2 = self.b * y + self.q * x + self.m;
        (
            Float::ln_1p(self.gamma * self.a * x / v1) / LN_2,
            Float::ln_1p(self.gamma * self.b * y / v2) / LN_2,
        )
    }

    pub fn sum_rate(&self, x: f64, y: f64) -> f64 {
        let (r1, r2) = self.rates(x, y);
        r1 + r2
    }

    /// Gradient of [`FdSubcarrier::sum_rate`].
    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let g = self.gamma;
        let v1 = self.a * x + self.s * y + self.n;
        let u1 = v1 + g * self.a * x;
        let v2 = self.b * y + self.q * x + self.m;
        let u2 = v2 + g * self.b * y;
        let w1 = 1.0 / (u1 * v1);
        let w2 = 1.0 / (u2 * v2);
        [
            (g * self.a * (self.s * y + self.n) * w1 - g * self.b * self.q * y * w2) / LN_2,
            (g * self.b * (self.q * x + self.m) * w2 - g * self.a * self.s * x * w1) / LN_2,
        ]
    }

    /// Hessian of [`FdSubcarrier::sum_rate`].
    pub fn hessian(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let g = self.gamma;
        let v1 = self.a * x + self.s * y + self.n;
        let u1 = v1 + g * self.a * x;
        let v2 = self.b * y + self.q * x + self.m;
        let u2 = v2 + g * self.b * y;
        // d/dz ln(w) = w_z / w, d²/dzdz' ln(w) = -w_z w_z' / w²
        let (u1x, u1y, v1x, v1y) = ((g + 1.0) * self.a, self.s, self.a, self.s);
        let (u2x, u2y, v2x, v2y) = (self.q, (g + 1.0) * self.b, self.q, self.b);
        let second = |ux: f64, uy: f64, vx: f64, vy: f64, u: f64, v: f64| {
            let (iu, iv) = (1.0 / (u * u), 1.0 / (v * v));
            [
                -ux * ux * iu + vx * vx * iv,
                -ux * uy * iu + vx * vy * iv,
                -uy * uy * iu + vy * vy * iv,
            ]
        };
        let s1 = second(u1x, u1y, v1x, v1y, u1, v1);
        let s2 = second(u2x, u2y, v2x, v2y, u2, v2);
        let xx = (s1[0] + s2[0]) / LN_2;
        let xy = (s1[1] + s2[1]) / LN_2;
        let yy = (s1[2] + s2[2]) / LN_2;
        [[xx, xy], [xy, yy]]
    }
}

/// Full-duplex, uniform energy per sub-carrier.
pub fn fd_upa_rates(params: &SystemParams, ch: &ChannelRealization, alloc: &FdUpaAllocation) -> Result<RateBreakdown> {
    ch.check_params(params)?;
    Ok(fd_rates_iter(
        params,
        ch,
        core::iter::repeat((alloc.eps1, alloc.eps2)),
    ))
}

/// Full-duplex, per-sub-carrier energies.
pub fn fd_nupa_rates(params: &SystemParams, ch: &ChannelRealization, alloc: &FdNupaAllocation) -> Result<RateBreakdown> {
    ch.check_params(params)?;
    check_len("eps1", &alloc.eps1, params.num_subcarriers)?;
    check_len("eps2", &alloc.eps2, params.num_subcarriers)?;
    Ok(fd_rates_iter(
        params,
        ch,
        alloc.eps1.iter().copied().zip(alloc.eps2.iter().copied()),
    ))
}

fn fd_rates_iter<I>(params: &SystemParams, ch: &ChannelRealization, eps: I) -> RateBreakdown
where
    I: Iterator<Item = (f64, f64)>,
{
    let (mut r1, mut r2) = (0.0, 0.0);
    for (sc, (x, y)) in FdSubcarrier::all(params, ch).iter().zip(eps) {
        let (a, b) = sc.rates(x, y);
        r1 += a;
        r2 += b;
    }
    let k = params.k();
    RateBreakdown::new(r1 / k, r2 / k)
}

/// `(∂r/∂eps1, ∂r/∂eps2, ∂r/∂t1, ∂r/∂t2)` of the HD-UPA sum rate.
///
/// Requires strictly positive time shares and energies.
pub fn hd_upa_gradients(
    params: &SystemParams,
    ch: &ChannelRealization,
    alloc: &HdUpaAllocation,
) -> Result<[f64; 4]> {
    ch.check_params(params)?;
    for (name, v) in [("t1", alloc.t1), ("t2", alloc.t2), ("eps1", alloc.eps1), ("eps2", alloc.eps2)] {
        positive(name, v)?;
    }
    let abc = abc_unchecked(params, ch);
    let k = params.k();
    let d_eps = |side: &SideAbc, eps: f64, t: f64| side.marginal_sum(eps / t) / (k * LN_2);
    let d_t = |side: &SideAbc, eps: f64, t: f64| {
        let ratio = t / eps;
        let logs: f64 = side
            .iter()
            .map(|(a, b, c)| Float::ln_1p(a / (b + c * ratio)))
            .sum::<f64>()
            / LN_2;
        let tail: f64 = side
            .iter()
            .map(|(a, b, c)| a * c / ((a + b + c * ratio) * (b + c * ratio)))
            .sum();
        logs / k - ratio * tail / (k * LN_2)
    };
    Ok([
        d_eps(&abc.forward, alloc.eps1, alloc.t1),
        d_eps(&abc.backward, alloc.eps2, alloc.t2),
        d_t(&abc.forward, alloc.eps1, alloc.t1),
        d_t(&abc.backward, alloc.eps2, alloc.t2),
    ])
}

/// Derivatives of the HD-NUPA sum rate.
#[derive(Debug, Clone, PartialEq)]
pub struct HdNupaGradients {
    pub d_eps1: Vec<f64>,
    pub d_eps2: Vec<f64>,
    /// `∂r1/∂t1` at fixed energies.
    pub d_t1: f64,
    /// `∂r2/∂t2` at fixed energies.
    pub d_t2: f64,
}

/// One half-duplex direction with per-sub-carrier energies: marginal rate
/// per joule on sub-carrier `k` is
/// `γ g N t² / (K ln2 (eps g + N t)(eps g + (γ+1) N t))`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HdDirection<'a> {
    pub gains: &'a [f64],
    pub gamma: f64,
    pub noise: f64,
    pub k: f64,
}

impl HdDirection<'_> {
    pub fn d_eps(&self, idx: usize, eps: f64, t: f64) -> f64 {
        let (g, gm, n) = (self.gains[idx], self.gamma, self.noise);
        let x = eps * g;
        gm * g * n * t * t / (self.k * LN_2 * (x + n * t) * (x + (gm + 1.0) * n * t))
    }

    pub fn d_t(&self, eps: &[f64], t: f64) -> f64 {
        let (gm, n) = (self.gamma, self.noise);
        let mut logs = 0.0;
        let mut tail = 0.0;
        for (&e, &g) in eps.iter().zip(self.gains) {
            let x = e * g;
            if x == 0.0 {
                continue;
            }
            let lo = x + n * t;
            let hi = x + (gm + 1.0) * n * t;
            logs += Float::ln_1p(gm * x / hi);
            tail += x * gm * n / (lo * hi);
        }
        logs / (self.k * LN_2) - t * tail / (self.k * LN_2)
    }

    /// Energy on sub-carrier `idx` whose marginal rate equals `lambda`, or
    /// zero when even the first joule is worth less than `lambda`.
    ///
    /// Positive root of `g² e² + g N t (γ+2) e + (γ+1) N² t² − γ g N t² / (K λ ln2)`.
    pub fn energy_for_multiplier(&self, idx: usize, lambda: f64, t: f64) -> f64 {
        let (g, gm, n) = (self.gains[idx], self.gamma, self.noise);
        if g == 0.0 || t <= 0.0 {
            return 0.0;
        }
        let qa = g * g;
        let qb = g * n * t * (gm + 2.0);
        let qc = (gm + 1.0) * n * n * t * t - gm * g * n * t * t / (self.k * lambda * LN_2);
        if qc >= 0.0 {
            return 0.0;
        }
        // -2c / (b + sqrt(b² - 4ac)) is the larger root without cancellation
        -2.0 * qc / (qb + Float::sqrt(qb * qb - 4.0 * qa * qc))
    }

    /// Marginal rate of the first joule; independent of `t`.
    pub fn max_marginal(&self) -> f64 {
        self.gains
            .iter()
            .map(|&g| self.gamma * g / (self.k * LN_2 * (self.gamma + 1.0) * self.noise))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn power_gains(h: &[Complex64]) -> Vec<f64> {
    h.iter().map(|h| h.norm_sqr()).collect()
}

pub fn hd_nupa_gradients(
    params: &SystemParams,
    ch: &ChannelRealization,
    alloc: &HdNupaAllocation,
) -> Result<HdNupaGradients> {
    ch.check_params(params)?;
    check_len("eps1", &alloc.eps1, params.num_subcarriers)?;
    check_len("eps2", &alloc.eps2, params.num_subcarriers)?;
    for (name, t) in [("t1", alloc.t1), ("t2", alloc.t2)] {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidParameter { name, value: t });
        }
    }
    let g1 = power_gains(&ch.h21);
    let g2 = power_gains(&ch.h12);
    let fwd = HdDirection {
        gains: &g1,
        gamma: params.gamma_e,
        noise: params.n2,
        k: params.k(),
    };
    let bwd = HdDirection {
        gains: &g2,
        gamma: params.gamma_e,
        noise: params.n1,
        k: params.k(),
    };
    Ok(HdNupaGradients {
        d_eps1: (0..params.num_subcarriers)
            .map(|i| fwd.d_eps(i, alloc.eps1[i], alloc.t1))
            .collect(),
        d_eps2: (0..params.num_subcarriers)
            .map(|i| bwd.d_eps(i, alloc.eps2[i], alloc.t2))
            .collect(),
        d_t1: fwd.d_t(&alloc.eps1, alloc.t1),
        d_t2: bwd.d_t(&alloc.eps2, alloc.t2),
    })
}

/// Per-sub-carrier partial derivatives `(∂r/∂eps1[k], ∂r/∂eps2[k])` of the
/// FD sum rate (averaged over `K`).
pub fn fd_nupa_gradients(
    params: &SystemParams,
    ch: &ChannelRealization,
    alloc: &FdNupaAllocation,
) -> Result<(Vec<f64>, Vec<f64>)> {
    ch.check_params(params)?;
    check_len("eps1", &alloc.eps1, params.num_subcarriers)?;
    check_len("eps2", &alloc.eps2, params.num_subcarriers)?;
    let k = params.k();
    let (mut d1, mut d2) = (Vec::new(), Vec::new());
    for (i, sc) in FdSubcarrier::all(params, ch).iter().enumerate() {
        let [gx, gy] = sc.gradient(alloc.eps1[i], alloc.eps2[i]);
        d1.push(gx / k);
        d2.push(gy / k);
    }
    Ok((d1, d2))
}

/// Stationarity residuals of the HD-UPA problem in per-sub-carrier powers
/// `p_i = eps_i / t_i`.
///
/// `f1` balances the marginal rates per joule of the two directions and `f2`
/// the marginal rates per unit time, simplified with `f1 = 0`:
///
/// ```text
/// f1 = G1(p1) − G2(p2)
/// f2 = S1(p1) − S2(p2) − (p1 − p2)·G1(p1)/ln2
/// ```
///
/// where `G_i` is [`SideAbc::marginal_sum`] and `S_i` is [`SideAbc::log_sum`].
#[derive(Debug, Clone)]
pub struct HdUpaResiduals {
    abc: AbcCoefficients,
}

impl HdUpaResiduals {
    pub fn new(params: &SystemParams, ch: &ChannelRealization) -> Result<Self> {
        ch.check_params(params)?;
        Ok(Self {
            abc: abc_unchecked(params, ch),
        })
    }

    pub fn from_abc(abc: AbcCoefficients) -> Self {
        Self { abc }
    }

    pub fn coefficients(&self) -> &AbcCoefficients {
        &self.abc
    }

    pub fn residuals(&self, p1: f64, p2: f64) -> [f64; 2] {
        let (f, b) = (&self.abc.forward, &self.abc.backward);
        let g1 = f.marginal_sum(p1);
        let g2 = b.marginal_sum(p2);
        [g1 - g2, f.log_sum(p1) - b.log_sum(p2) - (p1 - p2) * g1 / LN_2]
    }

    pub fn jacobian(&self, p1: f64, p2: f64) -> [[f64; 2]; 2] {
        let (f, b) = (&self.abc.forward, &self.abc.backward);
        let g1 = f.marginal_sum(p1);
        let g2 = b.marginal_sum(p2);
        let dg1 = f.marginal_sum_dp(p1);
        let dg2 = b.marginal_sum_dp(p2);
        [
            [dg1, -dg2],
            // d/dp1: G1/ln2 − G1/ln2 − (p1 − p2) G1'/ln2
            [-(p1 - p2) * dg1 / LN_2, (g1 - g2) / LN_2],
        ]
    }
}

/// `(f1, f2)` of [`HdUpaResiduals`] at `(p1, p2)`.
pub fn residual_system_hd_upa(params: &SystemParams, ch: &ChannelRealization, p1: f64, p2: f64) -> Result<[f64; 2]> {
    positive("p1", p1)?;
    positive("p2", p2)?;
    Ok(HdUpaResiduals::new(params, ch)?.residuals(p1, p2))
}
