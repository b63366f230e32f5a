//! Analytic derivatives against central finite differences of the rate
//! functions, at random interior points.

#![allow(clippy::needless_range_loop)]

use duplex_asr_core::channel::{asymmetric_channel, itu_a_channel, TapScaling};
use duplex_asr_core::model::{
    energy_from_dbm, fd_nupa_gradients, fd_nupa_rates, fd_upa_rates, hd_nupa_gradients, hd_nupa_rates, hd_upa_gradients, hd_upa_rates, HdUpaResiduals,
    LinkBudget,
};
use duplex_asr_core::{ChannelRealization, FdNupaAllocation, FdUpaAllocation, HdNupaAllocation, HdUpaAllocation, SystemParams};
use proptest::prelude::*;

const K: usize = 16;
/// Relative step of the central differences.
const DELTA: f64 = 1e-3;
const TOL: f64 = 1e-6;

fn setup(dbm: f64, seed: u64, si_db: f64) -> (SystemParams, ChannelRealization) {
    let b = LinkBudget {
        num_subcarriers: K,
        ..LinkBudget::default()
    };
    let p = SystemParams::from_budget(&b, energy_from_dbm(dbm)).unwrap();
    // odd seeds draw a Rayleigh-faded channel, even seeds the tabulated one
    let ch = if seed % 2 == 1 {
        itu_a_channel(&p, si_db, -40.0, seed).unwrap()
    } else {
        asymmetric_channel(&p, si_db, -40.0, TapScaling::Renormalized).unwrap()
    };
    (p, ch)
}

/// Richardson-extrapolated central difference along coordinate `i`:
/// `(4·D(h/2) − D(h))/3` cancels the `h²` term, so the step can stay wide and
/// residuals built from nearly cancelling rates keep their precision.
fn central(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize) -> f64 {
    let d = |h: f64| {
        let mut up = x.to_vec();
        let mut down = x.to_vec();
        up[i] += h;
        down[i] -= h;
        (f(&up) - f(&down)) / (2.0 * h)
    };
    let h = DELTA * x[i];
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Component errors relative to the largest analytic component, so sign
/// changes of a single entry do not blow up the ratio.
fn worst_relative(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(scale))
        .fold(0.0, f64::max)
}

fn split() -> impl Strategy<Value = f64> {
    0.05f64..0.95
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn hd_upa_gradient_matches_differences(dbm in 0.0f64..40.0, seed in 0u64..64, t1 in split(), w in split()) {
        let (p, ch) = setup(dbm, seed, -60.0);
        let per = p.energy_per_subcarrier();
        let x = [w * per, (1.0 - w) * per, t1, 1.0 - t1];
        let sum = |v: &[f64]| {
            let a = HdUpaAllocation { t1: v[2], t2: v[3], eps1: v[0], eps2: v[1] };
            hd_upa_rates(&p, &ch, &a).unwrap().sum
        };
        let a = HdUpaAllocation { t1: x[2], t2: x[3], eps1: x[0], eps2: x[1] };
        let analytic = hd_upa_gradients(&p, &ch, &a).unwrap();
        let numeric: Vec<f64> = (0..4).map(|i| central(&sum, &x, i)).collect();
        let err = worst_relative(&analytic, &numeric);
        prop_assert!(err <= TOL, "{err:e} {analytic:?} {numeric:?}");
    }

    #[test]
    fn hd_upa_jacobian_matches_differences(dbm in 0.0f64..40.0, seed in 0u64..64, z1 in 0.2f64..3.0, z2 in 0.2f64..3.0) {
        let (p, ch) = setup(dbm, seed, -60.0);
        let sys = HdUpaResiduals::new(&p, &ch).unwrap();
        let per = p.energy_per_subcarrier();
        let x = [z1 * per, z2 * per];
        let jac = sys.jacobian(x[0], x[1]);
        for row in 0..2 {
            let f = |v: &[f64]| sys.residuals(v[0], v[1])[row];
            let numeric = [central(&f, &x, 0), central(&f, &x, 1)];
            let err = worst_relative(&jac[row], &numeric);
            prop_assert!(err <= TOL, "row {row}: {err:e} {:?} {numeric:?}", jac[row]);
        }
    }

    #[test]
    fn hd_nupa_gradient_matches_differences(dbm in 0.0f64..40.0, seed in 0u64..64, t1 in split(), mix in prop::collection::vec(0.1f64..1.0, 2 * K)) {
        let (p, ch) = setup(dbm, seed, -60.0);
        let norm: f64 = mix.iter().sum();
        let mut x: Vec<f64> = mix.iter().map(|m| m / norm * p.total_energy).collect();
        x.push(t1);
        x.push(1.0 - t1);
        let unpack = |v: &[f64]| HdNupaAllocation { t1: v[2 * K], t2: v[2 * K + 1], eps1: v[..K].to_vec(), eps2: v[K..2 * K].to_vec() };
        let sum = |v: &[f64]| hd_nupa_rates(&p, &ch, &unpack(v)).unwrap().sum;
        let g = hd_nupa_gradients(&p, &ch, &unpack(&x)).unwrap();
        let mut analytic = g.d_eps1.clone();
        analytic.extend(&g.d_eps2);
        analytic.push(g.d_t1);
        analytic.push(g.d_t2);
        let numeric: Vec<f64> = (0..x.len()).map(|i| central(&sum, &x, i)).collect();
        let err = worst_relative(&analytic, &numeric);
        prop_assert!(err <= TOL, "{err:e}");
    }

    #[test]
    fn fd_upa_gradient_matches_differences(dbm in 0.0f64..40.0, seed in 0u64..64, w in split(), si in -90.0f64..-50.0) {
        let (p, ch) = setup(dbm, seed, si);
        let per = p.energy_per_subcarrier();
        let x = [w * per, (1.0 - w) * per];
        let sum = |v: &[f64]| fd_upa_rates(&p, &ch, &FdUpaAllocation { eps1: v[0], eps2: v[1] }).unwrap().sum;
        let uniform = FdNupaAllocation { eps1: vec![x[0]; K], eps2: vec![x[1]; K] };
        let (d1, d2) = fd_nupa_gradients(&p, &ch, &uniform).unwrap();
        let analytic = [d1.iter().sum::<f64>(), d2.iter().sum::<f64>()];
        let numeric = [central(&sum, &x, 0), central(&sum, &x, 1)];
        let err = worst_relative(&analytic, &numeric);
        prop_assert!(err <= TOL, "{err:e} {analytic:?} {numeric:?}");
    }

    #[test]
    fn fd_nupa_gradient_matches_differences(dbm in 0.0f64..40.0, seed in 0u64..64, si in -90.0f64..-50.0, mix in prop::collection::vec(0.1f64..1.0, 2 * K)) {
        let (p, ch) = setup(dbm, seed, si);
        let norm: f64 = mix.iter().sum();
        let x: Vec<f64> = mix.iter().map(|m| m / norm * p.total_energy).collect();
        let unpack = |v: &[f64]| FdNupaAllocation { eps1: v[..K].to_vec(), eps2: v[K..].to_vec() };
        let sum = |v: &[f64]| fd_nupa_rates(&p, &ch, &unpack(v)).unwrap().sum;
        let (mut analytic, d2) = fd_nupa_gradients(&p, &ch, &unpack(&x)).unwrap();
        analytic.extend(d2);
        let numeric: Vec<f64> = (0..x.len()).map(|i| central(&sum, &x, i)).collect();
        let err = worst_relative(&analytic, &numeric);
        prop_assert!(err <= TOL, "{err:e}");
    }
}
