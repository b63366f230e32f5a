//! Achievable-sum-rate optimisation for bidirectional OFDM links.
//!
//! Two peer nodes exchange data over `K` sub-carriers either in half-duplex
//! (time-division, shares `t1 + t2 = 1`) or full-duplex (simultaneous, with
//! residual self-interference). Transceiver non-ideality is modelled as an
//! additive Gaussian EVM noise with signal-to-EVM ratio `gamma_e`. Four
//! strategies are covered:
//!
//! * HD-UPA: half-duplex, same energy on every sub-carrier,
//! * HD-NUPA: half-duplex, per-sub-carrier energies,
//! * FD-UPA: full-duplex, same energy on every sub-carrier,
//! * FD-NUPA: full-duplex, per-sub-carrier energies.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; IO, scenario files and the command line live in
//! the `duplex-asr` companion crate.
//!
//! Module map:
//!
//! * [`model`]: parameters, channel realisations, allocations, rate functions
//!   and their analytic derivatives,
//! * [`channel`]: flat, ITU outdoor A and tabulated asymmetric channel
//!   generators,
//! * [`numerics`]: damped Newton, bisection, grid search, finite differences,
//! * [`solvers`]: the four strategy solvers,
//! * [`oracle`]: exhaustive grid search used to validate the solvers.
//!
//! Frame duration is normalised to one, so an energy budget in joules and an
//! average transmit power in watts are the same number.

#![no_std]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// small dense kernels read better with explicit indices
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
mod error;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod solvers;

pub use error::{Error, Result};
pub use model::{
    Allocation, ChannelRealization, FdNupaAllocation, FdUpaAllocation, HdNupaAllocation,
    HdUpaAllocation, RateBreakdown, SystemParams,
};
pub use numerics::{NewtonConfig, SolverReport};
pub use solvers::{solve, SolverConfig, Strategy, StrategyResult};

pub use num_complex::Complex64;
