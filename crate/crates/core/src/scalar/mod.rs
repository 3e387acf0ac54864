//! Arithmetic foundation: exact rationals, precision-tracked balls, and the
//! [`Field`] abstraction the rest of the crate is generic over.
//!
//! A computation picks its mode once by choosing the field type: `Rational`
//! for exact runs, [`PrecReal`] for approximate ones. The type system keeps
//! a run in one mode end to end; the dynamic [`Scalar`] union is only used
//! at reporting boundaries, where mixing modes is reported as an error.

mod ball;
mod series;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ball::{PrecReal, DEFAULT_PRECISION, MIN_PRECISION};

pub use series::{sum_series, RatioBound, SeriesError, MAX_SERIES_TERMS};

/// Exact rational number; always stored reduced with a positive denominator.
pub type Rational = num_rational::BigRational;

/// Bits of working precision reserved to absorb accumulated rounding when
/// approximate residuals are compared against zero.
pub const GUARD_BITS: u32 = 38;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("cannot combine an exact and an approximate scalar")]
    ModeMismatch,
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid rational literal `{0}` (expected p or p/q)")]
    Parse(String),
    #[error("precision {0} is below the minimum of {MIN_PRECISION} bits")]
    PrecisionTooLow(u32),
}

/// Parse `p` or `p/q` into a canonical rational.
pub fn parse_rational(s: &str) -> Result<Rational, ScalarError> {
    let t = s.trim();
    let bad = || ScalarError::Parse(s.to_string());
    match t.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => BigInt::from_str(t).map(Rational::from_integer).map_err(|_| bad()),
    }
}

/// `p/q` (or `p` for integers), the serialization used in every report.
pub fn rational_to_string(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Arithmetic mode of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum Mode {
    Exact,
    Approx { precision: u32 },
}

impl Mode {
    pub fn approx(precision: u32) -> Result<Mode, ScalarError> {
        if precision < MIN_PRECISION {
            return Err(ScalarError::PrecisionTooLow(precision));
        }
        Ok(Mode::Approx { precision })
    }

    /// Working precision in bits; exact mode reports the default so that any
    /// rational-to-ball conversion still has a defined width.
    pub fn precision(&self) -> u32 {
        match self {
            Mode::Exact => DEFAULT_PRECISION,
            Mode::Approx { precision } => *precision,
        }
    }

    /// Residuals must satisfy `|r| <= 2^-tolerance_bits` in approximate mode.
    pub fn tolerance_bits(&self) -> i64 {
        self.precision() as i64 - GUARD_BITS as i64
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Mode::Exact)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => write!(f, "exact"),
            Mode::Approx { precision } => write!(f, "approx@{precision}"),
        }
    }
}

/// Outcome of a single machine check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Worst of two verdicts: fail beats inconclusive beats pass.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Three-way answer to "is this value zero?".
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroTest {
    Zero,
    NonZero,
    Unknown,
}

/// Scalar field the polynomial and functional machinery is generic over.
pub trait Field:
    Clone
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(i: i64) -> Self;
    fn from_bigint(i: &BigInt) -> Self;
    /// Lift a rational; approximate fields round to `precision` bits.
    fn from_rational(q: &Rational, precision: u32) -> Self;
    /// Lift a ball. Exact fields cannot hold a transcendental value and
    /// return `None`.
    fn from_ball(b: &PrecReal) -> Option<Self>;
    fn zero_test(&self) -> ZeroTest;
    /// True only for a value that is certainly zero with no uncertainty.
    fn is_exact_zero(&self) -> bool;
    fn to_scalar(&self) -> Scalar;
    fn is_exact_field() -> bool;

    /// Residual verdict: exact zero in exact mode, `|r| <= 2^-tol_bits` in
    /// approximate mode (inconclusive when the ball straddles the threshold).
    fn residual_verdict(&self, tol_bits: i64) -> Verdict;

    /// Equality verdict under the same policy as [`Field::residual_verdict`].
    fn agrees_with(&self, other: &Self, tol_bits: i64) -> Verdict {
        (self.clone() - other.clone()).residual_verdict(tol_bits)
    }

    /// Verdict for a quantity that must be nonzero.
    fn nonzero_verdict(&self) -> Verdict {
        match self.zero_test() {
            ZeroTest::NonZero => Verdict::Pass,
            ZeroTest::Zero => Verdict::Fail,
            ZeroTest::Unknown => Verdict::Inconclusive,
        }
    }

    fn to_f64(&self) -> f64;
}

impl Field for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_int(i: i64) -> Self {
        int(i)
    }
    fn from_bigint(i: &BigInt) -> Self {
        Rational::from_integer(i.clone())
    }
    fn from_rational(q: &Rational, _precision: u32) -> Self {
        q.clone()
    }
    fn from_ball(_b: &PrecReal) -> Option<Self> {
        None
    }
    fn zero_test(&self) -> ZeroTest {
        if self.is_zero() {
            ZeroTest::Zero
        } else {
            ZeroTest::NonZero
        }
    }
    fn is_exact_zero(&self) -> bool {
        self.is_zero()
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Exact(self.clone())
    }
    fn is_exact_field() -> bool {
        true
    }
    fn residual_verdict(&self, _tol_bits: i64) -> Verdict {
        Verdict::from_bool(self.is_zero())
    }
    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Field for PrecReal {
    fn zero() -> Self {
        PrecReal::zero()
    }
    fn one() -> Self {
        PrecReal::from_int(1)
    }
    fn from_int(i: i64) -> Self {
        PrecReal::from_int(i)
    }
    fn from_bigint(i: &BigInt) -> Self {
        PrecReal::from_bigint(i)
    }
    fn from_rational(q: &Rational, precision: u32) -> Self {
        PrecReal::from_rational(q, precision)
    }
    fn from_ball(b: &PrecReal) -> Option<Self> {
        Some(b.clone())
    }
    fn zero_test(&self) -> ZeroTest {
        if !self.contains_zero() {
            ZeroTest::NonZero
        } else if self.is_exact() {
            ZeroTest::Zero
        } else {
            ZeroTest::Unknown
        }
    }
    fn is_exact_zero(&self) -> bool {
        self.is_exact() && self.mid_rational().is_zero()
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Approx(self.clone())
    }
    fn is_exact_field() -> bool {
        false
    }
    fn residual_verdict(&self, tol_bits: i64) -> Verdict {
        if self.abs_le_pow2(-tol_bits) {
            Verdict::Pass
        } else if self.abs_gt_pow2(-tol_bits) {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }
    fn to_f64(&self) -> f64 {
        self.mid_f64()
    }
}

/// Mode-tagged scalar used at reporting and FFI boundaries.
#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(Rational),
    Approx(PrecReal),
}

impl Scalar {
    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            Scalar::Exact(q) => Some(q.clone()),
            Scalar::Approx(_) => None,
        }
    }

    pub fn as_ball(&self) -> Option<PrecReal> {
        match self {
            Scalar::Approx(b) => Some(b.clone()),
            Scalar::Exact(_) => None,
        }
    }

    fn binary(
        &self,
        other: &Scalar,
        exact: impl FnOnce(&Rational, &Rational) -> Result<Rational, ScalarError>,
        approx: impl FnOnce(&PrecReal, &PrecReal) -> PrecReal,
    ) -> Result<Scalar, ScalarError> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => exact(a, b).map(Scalar::Exact),
            (Scalar::Approx(a), Scalar::Approx(b)) => Ok(Scalar::Approx(approx(a, b))),
            _ => Err(ScalarError::ModeMismatch),
        }
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        self.binary(other, |a, b| Ok(a + b), |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        self.binary(other, |a, b| Ok(a - b), |a, b| a - b)
    }

    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        self.binary(other, |a, b| Ok(a * b), |a, b| a * b)
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        self.binary(
            other,
            |a, b| if b.is_zero() { Err(ScalarError::DivisionByZero) } else { Ok(a / b) },
            |a, b| a / b,
        )
    }

    /// Value as an exact rational when one is known.
    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(q) => Some(q),
            Scalar::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => q.to_f64(),
            Scalar::Approx(b) => b.mid_f64(),
        }
    }

    pub fn is_zero(&self) -> ZeroTest {
        match self {
            Scalar::Exact(q) => q.zero_test(),
            Scalar::Approx(b) => b.zero_test(),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => f.write_str(&rational_to_string(q)),
            Scalar::Approx(b) => write!(f, "{b}"),
        }
    }
}
