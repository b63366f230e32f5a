//! Channel generators: symmetric flat, symmetric ITU outdoor A and the
//! tabulated asymmetric frequency-selective setting.
//!
//! Transmission links are scaled so that their mean power gain over the `K`
//! sub-carriers equals `10^((G_ant − PL(d))/10)`; self-interference links are
//! scaled to `10^(si_atten_db/10)`. Sub-carrier `k` sits at baseband
//! frequency `k·B/K`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::model::{db_to_linear, ChannelRealization, LinkBudget, SystemParams};
use crate::{Error, Result};

/// Discrete multipath profile.
#[derive(Debug, Clone, PartialEq)]
pub struct TapProfile {
    pub delays_ns: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
    pub label: String,
}

impl TapProfile {
    pub fn new(label: &str, delays_ns: Vec<f64>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if delays_ns.is_empty() || delays_ns.len() != amplitudes.len() {
            return Err(Error::LengthMismatch {
                field: "taps",
                expected: delays_ns.len().max(1),
                found: amplitudes.len(),
            });
        }
        if delays_ns[0] < 0.0 || delays_ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "delays_ns",
                value: delays_ns[0],
            });
        }
        Ok(Self {
            delays_ns,
            amplitudes,
            label: label.into(),
        })
    }

    /// Taps on the sample grid `l/bandwidth`, `l = 0, 1, …`.
    pub fn sample_spaced(label: &str, amplitudes: Vec<Complex64>, bandwidth_hz: f64) -> Result<Self> {
        let ts = 1e9 / bandwidth_hz;
        let delays = (0..amplitudes.len()).map(|l| l as f64 * ts).collect();
        Self::new(label, delays, amplitudes)
    }

    pub fn total_power(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// How the tabulated asymmetric taps are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TapScaling {
    /// Mean power of each link matches the flat-channel target.
    #[default]
    Renormalized,
    /// Table values used verbatim as complex amplitudes.
    Raw,
}

/// Outdoor line-of-sight path loss in dB at `distance_m` metres.
pub fn path_loss_db(distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::InvalidParameter {
            name: "distance_m",
            value: distance_m,
        });
    }
    Ok(103.8 + 20.9 * Float::log10(distance_m / 1000.0))
}

/// Mean power gain of the transmission links implied by the budget.
pub fn link_power_gain(budget: &LinkBudget) -> Result<f64> {
    Ok(db_to_linear(budget.antenna_gain_db - path_loss_db(budget.distance_m)?))
}

fn budget_of(params: &SystemParams) -> LinkBudget {
    params.budget.clone().unwrap_or_default()
}

fn constant(k: usize, power: f64) -> Vec<Complex64> {
    vec![Complex64::new(Float::sqrt(power), 0.0); k]
}

fn beta_amplitude(beta_db: f64) -> Result<f64> {
    let b = Float::powf(10.0, beta_db / 20.0);
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::InvalidParameter {
            name: "beta_db",
            value: beta_db,
        });
    }
    Ok(b)
}

/// Every link has the same gain on all sub-carriers; phases are zero.
///
/// `beta_db` is a power attenuation, so the amplitude factor is
/// `10^(beta_db/20)`.
pub fn flat_channel(params: &SystemParams, si_atten_db: f64, beta_db: f64) -> Result<ChannelRealization> {
    let k = params.num_subcarriers;
    let gain = link_power_gain(&budget_of(params))?;
    let si = db_to_linear(si_atten_db);
    let beta = beta_amplitude(beta_db)?;
    ChannelRealization::new(
        constant(k, gain),
        constant(k, gain),
        constant(k, si),
        constant(k, si),
        vec![beta; k],
        vec![beta; k],
    )
}

/// Four symbol-spaced self-interference taps with amplitudes `∝ exp(−t)`,
/// `t = 0..3`, scaled so the total tap power is `10^(atten_db/10)`.
///
/// Delays are in units of the sampling period; use
/// [`si_tap_profile_at`] for physical delays.
pub fn si_tap_profile(atten_db: f64) -> TapProfile {
    let shape: Vec<f64> = (0..4).map(|t| Float::exp(-(t as f64))).collect();
    let norm: f64 = shape.iter().sum();
    let amps: Vec<f64> = shape.iter().map(|s| s / norm).collect();
    let power: f64 = amps.iter().map(|a| a * a).sum();
    let scale = Float::sqrt(db_to_linear(atten_db) / power);
    TapProfile {
        delays_ns: (0..4).map(|t| t as f64).collect(),
        amplitudes: amps.iter().map(|a| Complex64::new(a * scale, 0.0)).collect(),
        label: "si-exp4".into(),
    }
}

/// [`si_tap_profile`] with delays converted to nanoseconds at `bandwidth_hz`.
pub fn si_tap_profile_at(atten_db: f64, bandwidth_hz: f64) -> TapProfile {
    let mut p = si_tap_profile(atten_db);
    let ts = 1e9 / bandwidth_hz;
    p.delays_ns.iter_mut().for_each(|d| *d *= ts);
    p
}

/// ITU outdoor A relative delays (ns) and average powers (dB).
pub const ITU_A_DELAYS_NS: [f64; 6] = [0.0, 300.0, 700.0, 1100.0, 1700.0, 2500.0];
pub const ITU_A_POWERS_DB: [f64; 6] = [0.0, -1.0, -9.0, -10.0, -15.0, -20.0];

/// Seed used when a scenario does not name one.
pub const DEFAULT_SEED: u64 = 7;

/// ITU outdoor A with uniformly random tap phases drawn from `seed`.
pub fn itu_a_profile(seed: u64) -> TapProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amplitudes = ITU_A_POWERS_DB
        .iter()
        .map(|&db| {
            // 53 random mantissa bits -> uniform on [0, 1)
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            Complex64::from_polar(Float::sqrt(db_to_linear(db)), 2.0 * PI * u)
        })
        .collect();
    TapProfile {
        delays_ns: ITU_A_DELAYS_NS.to_vec(),
        amplitudes,
        label: "itu-outdoor-a".into(),
    }
}

/// `H[k] = Σ_l a_l exp(−j2π f_k τ_l)`, `f_k = k·bandwidth/K`.
pub fn frequency_response(taps: &TapProfile, k: usize, bandwidth_hz: f64) -> Vec<Complex64> {
    let df = bandwidth_hz / k as f64;
    (0..k)
        .map(|idx| {
            let f = idx as f64 * df;
            taps.delays_ns
                .iter()
                .zip(&taps.amplitudes)
                .map(|(&tau, &a)| {
                    // reduce the phase in cycles first to keep it accurate
                    let cycles = f * tau * 1e-9;
                    let frac = cycles - Float::floor(cycles);
                    a * Complex64::from_polar(1.0, -2.0 * PI * frac)
                })
                .sum()
        })
        .collect()
}

/// Scales `h` so that its mean power over the sub-carriers is `target`.
fn normalize_mean_power(mut h: Vec<Complex64>, target: f64) -> Vec<Complex64> {
    let mean = h.iter().map(|v| v.norm_sqr()).sum::<f64>() / h.len() as f64;
    if mean > 0.0 {
        let s = Float::sqrt(target / mean);
        h.iter_mut().for_each(|v| *v *= s);
    }
    h
}

/// Symmetric frequency-selective channel: ITU outdoor A for both directions
/// (`h12 = h21`) and the 4-tap SI profile at both nodes (`h11 = h22`).
pub fn itu_a_channel(params: &SystemParams, si_atten_db: f64, beta_db: f64, seed: u64) -> Result<ChannelRealization> {
    let budget = budget_of(params);
    let k = params.num_subcarriers;
    let gain = link_power_gain(&budget)?;
    let h = normalize_mean_power(frequency_response(&itu_a_profile(seed), k, budget.bandwidth_hz), gain);
    let si_target = db_to_linear(si_atten_db);
    let si = normalize_mean_power(
        frequency_response(&si_tap_profile_at(si_atten_db, budget.bandwidth_hz), k, budget.bandwidth_hz),
        si_target,
    );
    let beta = beta_amplitude(beta_db)?;
    ChannelRealization::new(h.clone(), h, si.clone(), si, vec![beta; k], vec![beta; k])
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn im(x: f64) -> Complex64 {
    Complex64::new(0.0, x)
}

/// Tabulated asymmetric taps: node 1 to node 2.
pub fn asym_taps_12() -> [Complex64; 6] {
    [re(9.9863e2), re(2.6934e2), im(3.3458e2), re(3.1862e2), im(2.1856e2), re(0.9111e2)]
}

/// Tabulated asymmetric taps: node 2 to node 1.
pub fn asym_taps_21() -> [Complex64; 6] {
    [im(1.4921e3), re(1.1503e3), re(0.8853e3), re(1.1284e3), re(0.1637e3), im(0.4007e3)]
}

/// Tabulated asymmetric SI taps at node 1.
pub fn asym_si_taps_11() -> [Complex64; 4] {
    [re(1.3103e2), im(1.6827e2), re(1.3241e2), re(1.0621e2)]
}

/// Tabulated asymmetric SI taps at node 2.
pub fn asym_si_taps_22() -> [Complex64; 4] {
    [re(1.3712e2), re(0.3585e2), im(0.4396e2), im(0.2212e2)]
}

/// Asymmetric frequency-selective channel from the tabulated taps, placed on
/// the sample grid `l/B`.
///
/// With [`TapScaling::Renormalized`] each transmission link is scaled to the
/// flat-channel mean gain and each SI link to `si_atten_db`; with
/// [`TapScaling::Raw`] the table values are used as-is.
pub fn asymmetric_channel(params: &SystemParams, si_atten_db: f64, beta_db: f64, scaling: TapScaling) -> Result<ChannelRealization> {
    let budget = budget_of(params);
    let k = params.num_subcarriers;
    let bw = budget.bandwidth_hz;
    let resp = |label: &str, taps: &[Complex64]| -> Result<Vec<Complex64>> {
        Ok(frequency_response(&TapProfile::sample_spaced(label, taps.to_vec(), bw)?, k, bw))
    };
    let mut h21 = resp("asym-1to2", &asym_taps_12())?;
    let mut h12 = resp("asym-2to1", &asym_taps_21())?;
    let mut h11 = resp("asym-si-1", &asym_si_taps_11())?;
    let mut h22 = resp("asym-si-2", &asym_si_taps_22())?;
    if scaling == TapScaling::Renormalized {
        let gain = link_power_gain(&budget)?;
        let si = db_to_linear(si_atten_db);
        h21 = normalize_mean_power(h21, gain);
        h12 = normalize_mean_power(h12, gain);
        h11 = normalize_mean_power(h11, si);
        h22 = normalize_mean_power(h22, si);
    }
    let beta = beta_amplitude(beta_db)?;
    ChannelRealization::new(h21, h12, h11, h22, vec![beta; k], vec![beta; k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(k: usize) -> SystemParams {
        let budget = LinkBudget {
            num_subcarriers: k,
            ..LinkBudget::default()
        };
        SystemParams::from_budget(&budget, 0.1).unwrap()
    }

    fn mean_power(h: &[Complex64]) -> f64 {
        h.iter().map(|v| v.norm_sqr()).sum::<f64>() / h.len() as f64
    }

    #[test]
    fn path_loss_values() {
        assert_relative_eq!(path_loss_db(1000.0).unwrap(), 103.8, epsilon = 1e-12);
        // 103.8 + 20.9·log10(0.03)
        assert_relative_eq!(path_loss_db(30.0).unwrap(), 71.97, epsilon = 0.005);
        assert_relative_eq!(path_loss_db(100.0).unwrap(), 82.90, epsilon = 1e-12);
        assert!(path_loss_db(0.0).is_err());
        assert!(path_loss_db(-3.0).is_err());
    }

    #[test]
    fn flat_channel_gains() {
        let p = params(64);
        let ch = flat_channel(&p, -60.0, -40.0).unwrap();
        assert_eq!(ch.len(), 64);
        let target = db_to_linear(-path_loss_db(30.0).unwrap());
        assert_relative_eq!(target, Float::powf(10.0, -7.197), max_relative = 2e-3);
        for k in 0..64 {
            assert_relative_eq!(ch.h21[k].norm_sqr(), target, max_relative = 1e-12);
            assert_eq!(ch.h21[k], ch.h12[k]);
            let si = (ch.h22[k] * ch.beta2[k]).norm_sqr();
            assert_relative_eq!(si, 1e-10, max_relative = 1e-12);
        }
    }

    #[test]
    fn si_profile_power_fractions() {
        let p = si_tap_profile(0.0);
        assert_eq!(p.amplitudes.len(), 4);
        let total = p.total_power();
        assert_relative_eq!(total, 1.0, max_relative = 1e-12);
        // amplitude ∝ e^{-t} -> power fractions e^{-2t}/Σ e^{-2t}
        let denom: f64 = (0..4).map(|t| (-2.0 * t as f64).exp()).sum();
        for (t, a) in p.amplitudes.iter().enumerate() {
            assert_relative_eq!(a.norm_sqr(), (-2.0 * t as f64).exp() / denom, max_relative = 1e-12);
        }
        assert_relative_eq!(si_tap_profile(-60.0).total_power(), 1e-6, max_relative = 1e-12);
        assert_eq!(si_tap_profile(-90.0).delays_ns.len(), 4);
    }

    #[test]
    fn frequency_response_examples() {
        let one = TapProfile::new("unit", vec![0.0], vec![re(1.0)]).unwrap();
        assert!(frequency_response(&one, 8, 1e6).iter().all(|h| (*h - re(1.0)).norm() < 1e-15));

        let delayed = TapProfile::new("d", vec![1234.0], vec![re(1.0)]).unwrap();
        for h in frequency_response(&delayed, 16, 10e6) {
            assert_relative_eq!(h.norm(), 1.0, epsilon = 1e-12);
        }

        // delay of K/2 samples (sample period K/B) flips sign on odd bins
        let k = 8;
        let bw = 8e6;
        let half = (k as f64 / 2.0) * 1e9 / bw;
        let two = TapProfile::new("pair", vec![0.0, half], vec![re(1.0), re(1.0)]).unwrap();
        let h = frequency_response(&two, k, bw);
        for (i, v) in h.iter().enumerate() {
            let expect = if i % 2 == 0 { 2.0 } else { 0.0 };
            assert_relative_eq!(v.norm(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn frequency_response_parseval_on_sample_grid() {
        let taps = TapProfile::sample_spaced("p", vec![re(0.5), im(-0.25), Complex64::new(0.1, 0.3)], 10e6).unwrap();
        let h = frequency_response(&taps, 16, 10e6);
        assert_relative_eq!(mean_power(&h), taps.total_power(), max_relative = 1e-12);
    }

    #[test]
    fn itu_channel_contract() {
        let p = params(64);
        let a = itu_a_channel(&p, -60.0, -40.0, 7).unwrap();
        let b = itu_a_channel(&p, -60.0, -40.0, 7).unwrap();
        assert_eq!(a, b);
        let target = db_to_linear(-path_loss_db(30.0).unwrap());
        assert_relative_eq!(mean_power(&a.h21), target, max_relative = 1e-12);
        assert_relative_eq!(mean_power(&a.h11), 1e-6, max_relative = 1e-12);
        assert!(a.h12.iter().zip(&a.h21).all(|(x, y)| x == y));
        assert!(a.h11.iter().zip(&a.h22).all(|(x, y)| x == y));
        let c = itu_a_channel(&p, -60.0, -40.0, 8).unwrap();
        assert_ne!(a.h21, c.h21);
        // frequency selective
        let spread = a.h21.iter().map(|h| h.norm_sqr()).fold(0.0, f64::max) / a.h21.iter().map(|h| h.norm_sqr()).fold(f64::INFINITY, f64::min);
        assert!(spread > 2.0);
    }

    #[test]
    fn asymmetric_channel_contract() {
        let p = params(64);
        let ch = asymmetric_channel(&p, -60.0, -40.0, TapScaling::Renormalized).unwrap();
        let again = asymmetric_channel(&p, -60.0, -40.0, TapScaling::Renormalized).unwrap();
        assert_eq!(ch, again);
        let target = db_to_linear(-path_loss_db(30.0).unwrap());
        assert_relative_eq!(mean_power(&ch.h21), target, max_relative = 1e-12);
        assert_relative_eq!(mean_power(&ch.h12), target, max_relative = 1e-12);
        assert_relative_eq!(mean_power(&ch.h22), 1e-6, max_relative = 1e-12);
        assert!(ch.h21.iter().zip(&ch.h12).any(|(a, b)| (a.norm() - b.norm()).abs() > 1e-3 * a.norm()));

        let raw = asymmetric_channel(&p, -60.0, -40.0, TapScaling::Raw).unwrap();
        let tap_power: f64 = asym_taps_12().iter().map(|a| a.norm_sqr()).sum();
        assert_relative_eq!(mean_power(&raw.h21), tap_power, max_relative = 1e-12);
    }

    #[test]
    fn tap_profile_validation() {
        assert!(TapProfile::new("x", vec![], vec![]).is_err());
        assert!(TapProfile::new("x", vec![0.0, 0.0], vec![re(1.0), re(1.0)]).is_err());
        assert!(TapProfile::new("x", vec![0.0, 1.0], vec![re(1.0)]).is_err());
    }
}
