use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the model, generators, kernels and solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar parameter is out of its admissible range.
    InvalidParameter { name: &'static str, value: f64 },
    /// A per-sub-carrier vector does not have length `K`.
    LengthMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    /// A transmission channel gain is exactly zero where a strictly positive
    /// gain is required.
    ZeroChannelGain { link: &'static str, subcarrier: usize },
    /// A node was given energy but no air time.
    DegenerateTime { node: u8 },
    /// The linearised Newton system could not be solved.
    SingularJacobian { condition: f64 },
    /// Bisection bracket does not enclose a sign change.
    SameSignBracket {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },
    /// Grid search was handed an empty range or a non-positive step.
    EmptyRange { a: f64, b: f64, step: f64 },
    /// Exhaustive search grid exceeds the evaluation cap.
    OracleTooLarge { points: u128, cap: u128 },
    /// The Lagrange multiplier could not be bracketed.
    MultiplierBracket { lambda: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid value {value} for parameter `{name}`")
            }
            Error::LengthMismatch {
                field,
                expected,
                found,
            } => write!(f, "`{field}` has length {found}, expected {expected}"),
            Error::ZeroChannelGain { link, subcarrier } => {
                write!(f, "channel {link} has zero gain on sub-carrier {subcarrier}")
            }
            Error::DegenerateTime { node } => {
                write!(f, "node {node} has positive energy but zero time share")
            }
            Error::SingularJacobian { condition } => {
                write!(f, "singular Newton system (pivot ratio {condition:e})")
            }
            Error::SameSignBracket { lo, hi, g_lo, g_hi } => write!(
                f,
                "bracket [{lo}, {hi}] has same-sign ends ({g_lo}, {g_hi}); expand the bracket"
            ),
            Error::EmptyRange { a, b, step } => {
                write!(f, "empty grid range [{a}, {b}] with step {step}")
            }
            Error::OracleTooLarge { points, cap } => write!(
                f,
                "exhaustive grid needs {points} evaluations (cap {cap}); reduce K or the resolution N"
            ),
            Error::MultiplierBracket { lambda } => {
                write!(f, "could not bracket the energy multiplier (last tried {lambda:e})")
            }
        }
    }
}

impl core::error::Error for Error {}
