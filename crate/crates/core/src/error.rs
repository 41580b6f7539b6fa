use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the core. Each variant names the violated precondition.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// `|a| = 1`: every closed form divides by `1 - a^2`.
    UnitGain {
        a: f64,
    },
    /// The operation needs a stable gain, `|a| < 1`.
    NotStable {
        a: f64,
    },
    /// The operation needs an unstable gain, `|a| > 1`.
    NotUnstable {
        a: f64,
    },
    /// A scalar parameter is outside its admissible range.
    InvalidParameter {
        name: &'static str,
        rule: &'static str,
        value: f64,
    },
    /// A controller is not admissible for the given system.
    Inadmissible {
        controller: &'static str,
        rule: &'static str,
    },
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    IndexOutOfRange {
        index: usize,
        len: usize,
    },
    /// Cholesky broke down at the given pivot.
    NotPositiveDefinite {
        pivot: usize,
    },
    /// An unstable trajectory left the representable range.
    Overflow {
        step: usize,
        value: f64,
    },
    /// Requested horizon exceeds the cap for unstable simulation.
    HorizonExceeded {
        n: usize,
        max: usize,
    },
    /// No Gaussian closed form exists for the requested law.
    NotGaussian {
        controller: &'static str,
    },
    /// A result that must be nonnegative came out clearly negative.
    Numerical {
        what: &'static str,
        value: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnitGain { a } => write!(f, "gain a = {a} violates |a| != 1"),
            Error::NotStable { a } => write!(f, "gain a = {a} violates |a| < 1"),
            Error::NotUnstable { a } => write!(f, "gain a = {a} violates |a| > 1"),
            Error::InvalidParameter { name, rule, value } => {
                write!(f, "{name} = {value} violates {rule}")
            }
            Error::Inadmissible { controller, rule } => {
                write!(
                    f,
                    "{controller} controller is inadmissible: requires {rule}"
                )
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::IndexOutOfRange { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
            Error::NotPositiveDefinite { pivot } => {
                write!(f, "matrix is not positive definite (pivot {pivot})")
            }
            Error::Overflow { step, value } => {
                write!(
                    f,
                    "state overflow at step {step}: |x| = {value} exceeds 1e15"
                )
            }
            Error::HorizonExceeded { n, max } => {
                write!(
                    f,
                    "horizon n = {n} exceeds the unstable-simulation cap {max}"
                )
            }
            Error::NotGaussian { controller } => {
                write!(
                    f,
                    "{controller} controller does not yield a Gaussian state law"
                )
            }
            Error::Numerical { what, value } => {
                write!(f, "numerical breakdown in {what}: value {value}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn require(
    cond: bool,
    name: &'static str,
    rule: &'static str,
    value: f64,
) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, rule, value })
    }
}

/// `|a| != 1` and finite.
pub(crate) fn non_unit_gain(a: f64) -> Result<()> {
    require(a.is_finite(), "a", "finite", a)?;
    if libm::fabs(a) == 1.0 {
        return Err(Error::UnitGain { a });
    }
    Ok(())
}

pub(crate) fn stable_gain(a: f64) -> Result<()> {
    require(a.is_finite(), "a", "finite", a)?;
    if libm::fabs(a) < 1.0 {
        Ok(())
    } else if libm::fabs(a) == 1.0 {
        Err(Error::UnitGain { a })
    } else {
        Err(Error::NotStable { a })
    }
}

pub(crate) fn probability_open(name: &'static str, p: f64) -> Result<()> {
    require(p > 0.0 && p < 1.0, name, "0 < value < 1", p)
}

pub(crate) fn positive(name: &'static str, v: f64) -> Result<()> {
    require(v > 0.0 && v.is_finite(), name, "finite and > 0", v)
}
