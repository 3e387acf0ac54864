//! Certified summation of series with an eventually geometric tail.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::{rational_to_string, PrecReal, Rational, Scalar};

/// Hard cap on the number of terms a single series may consume.
pub const MAX_SERIES_TERMS: usize = 10_000_000;

/// Extra bits carried while accumulating a series.
const SERIES_GUARD_BITS: u32 = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("ratio certificate {0} is not below 1; the tail bound does not converge")]
    NonConvergent(String),
    #[error("series needs more than {MAX_SERIES_TERMS} terms (onset {0})")]
    TooManyTerms(usize),
}

/// Certificate that `|term(k+1)| <= ratio * |term(k)|` for every `k >= onset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioBound {
    pub ratio: Rational,
    pub onset: usize,
}

impl RatioBound {
    pub fn new(ratio: Rational, onset: usize) -> Self {
        RatioBound { ratio, onset }
    }
}

/// Sum `term(0) + term(1) + ...` to relative accuracy `2^-target_bits`.
///
/// `term` is called with consecutive indices starting at 0. Summation stops
/// at the first index `X >= onset` where the geometric tail bound
/// `|term(X)| r/(1-r)` falls below `2^-(target_bits+2)` times the partial
/// sum's magnitude (or below `2^-(target_bits+2)` absolutely, for series
/// whose value is that small). The returned ball contains the exact sum.
pub fn sum_series<T>(mut term: T, bound: &RatioBound, target_bits: u32) -> Result<PrecReal, SeriesError>
where
    T: FnMut(usize) -> Scalar,
{
    let r = &bound.ratio;
    if r.is_negative() || r >= &Rational::one() {
        return Err(SeriesError::NonConvergent(rational_to_string(r)));
    }
    if bound.onset > MAX_SERIES_TERMS {
        return Err(SeriesError::TooManyTerms(bound.onset));
    }
    let prec = target_bits + SERIES_GUARD_BITS;
    let tail_factor = r / (Rational::one() - r);
    let rel = Rational::new(1.into(), num_bigint::BigInt::one() << (target_bits as usize + 2));

    let floor = Rational::new(1.into(), num_bigint::BigInt::one() << (target_bits as usize));
    let mut sum = PrecReal::zero();
    for k in 0..=MAX_SERIES_TERMS {
        let t = match term(k) {
            Scalar::Exact(q) => PrecReal::from_rational(&q, prec),
            Scalar::Approx(b) => b.with_precision(prec.max(b.precision())),
        };
        sum = &sum + &t;
        if k < bound.onset {
            continue;
        }
        let Some(t_abs) = t.abs_upper() else {
            continue;
        };
        let tail = &t_abs * &tail_factor;
        // Relative to the partial sum, floored at 2^-target_bits in magnitude.
        let budget = &rel * sum.abs_lower().max(floor.clone());
        if tail <= budget {
            return Ok(widen(&sum, &tail));
        }
    }
    Err(SeriesError::TooManyTerms(bound.onset))
}

fn widen(b: &PrecReal, extra: &Rational) -> PrecReal {
    if extra.is_zero() {
        return b.clone();
    }
    let zero_ball = PrecReal::from_rational_ball(&Rational::zero(), extra, b.precision());
    b + &zero_ball
}
