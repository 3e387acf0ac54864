//! Midpoint-radius ("ball") reals over arbitrary-size binary floats.
//!
//! A [`PrecReal`] stands for every real number inside `mid ± rad`. Every
//! operation rounds the midpoint to the working precision and folds the
//! rounding error, together with the propagated input radii, into the
//! result radius. Radii are always rounded upward.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Rational;

/// Smallest working precision accepted for approximate runs.
pub const MIN_PRECISION: u32 = 64;
/// Working precision used when no explicit precision is requested.
pub const DEFAULT_PRECISION: u32 = 128;

/// Mantissa bits kept in radii. Radii only need a few correct bits.
const MAG_BITS: u64 = 40;

/// Exact binary number `man * 2^exp`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Dyadic {
    man: BigInt,
    exp: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dir {
    /// Toward zero (magnitude truncated).
    Down,
    /// Away from zero (magnitude rounded up).
    Up,
}

impl Dyadic {
    fn zero() -> Self {
        Dyadic { man: BigInt::zero(), exp: 0 }
    }

    fn new(man: BigInt, exp: i64) -> Self {
        let mut d = Dyadic { man, exp };
        d.normalize();
        d
    }

    fn pow2(exp: i64) -> Self {
        Dyadic { man: BigInt::one(), exp }
    }

    fn normalize(&mut self) {
        if self.man.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.man.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.man >>= tz;
            self.exp += tz as i64;
        }
    }

    fn is_zero(&self) -> bool {
        self.man.is_zero()
    }

    fn bits(&self) -> u64 {
        self.man.bits()
    }

    fn abs(&self) -> Self {
        Dyadic { man: self.man.abs(), exp: self.exp }
    }

    fn neg(&self) -> Self {
        Dyadic { man: -&self.man, exp: self.exp }
    }

    fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let a = &self.man << ((self.exp - e) as usize);
        let b = &other.man << ((other.exp - e) as usize);
        Dyadic::new(a + b, e)
    }

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Dyadic::zero();
        }
        Dyadic::new(&self.man * &other.man, self.exp + other.exp)
    }

    /// Magnitude ordering.
    fn cmp_abs(&self, other: &Self) -> Ordering {
        self.abs().cmp_value(&other.abs())
    }

    fn cmp_value(&self, other: &Self) -> Ordering {
        let d = self.sub(other);
        match d.man.sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        }
    }

    /// Round the magnitude to `prec` bits in direction `dir`, keeping the sign.
    /// Returns the rounded value and whether it differs from the input.
    fn round(&self, prec: u64, dir: Dir) -> (Self, bool) {
        let bits = self.bits();
        if bits <= prec {
            return (self.clone(), false);
        }
        let shift = bits - prec;
        let (sign, mag) = (self.man.sign(), self.man.magnitude());
        let mut kept: BigUint = mag >> shift;
        let dropped = (&kept << shift) != *mag;
        if dropped && dir == Dir::Up {
            kept += 1u32;
        }
        let man = BigInt::from_biguint(sign, kept);
        (Dyadic::new(man, self.exp + shift as i64), dropped)
    }

    /// Binary approximation of a rational with `prec` bits.
    fn from_rational(q: &Rational, prec: u64, dir: Dir) -> (Self, bool) {
        if q.is_zero() {
            return (Dyadic::zero(), false);
        }
        let num = q.numer();
        let den = q.denom();
        // Shift so the integer quotient carries at least `prec` bits.
        let k = prec as i64 + den.bits() as i64 - num.bits() as i64 + 1;
        let (scaled_num, scaled_den) = if k >= 0 {
            (num.abs() << (k as usize), den.clone())
        } else {
            (num.abs(), den << ((-k) as usize))
        };
        let (quot, rem) = scaled_num.div_rem(&scaled_den);
        let inexact = !rem.is_zero();
        let mut quot = quot;
        if inexact && dir == Dir::Up {
            quot += 1;
        }
        let quot = if num.is_negative() { -quot } else { quot };
        let (rounded, more) = Dyadic::new(quot, -k).round(prec, dir);
        (rounded, inexact || more)
    }

    fn to_rational(&self) -> Rational {
        if self.exp >= 0 {
            Rational::from_integer(&self.man << (self.exp as usize))
        } else {
            Rational::new(self.man.clone(), BigInt::one() << ((-self.exp) as usize))
        }
    }

    fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let (r, _) = self.round(60, Dir::Down);
        let m = r.man.to_f64().unwrap_or(f64::NAN);
        m * 2f64.powi(r.exp.clamp(i32::MIN as i64, i32::MAX as i64) as i32)
    }

    /// Exponent of the leading bit: `2^top <= |self| < 2^(top+1)`.
    fn top_exp(&self) -> i64 {
        self.exp + self.bits() as i64 - 1
    }
}

/// Nonnegative upper bound used for radii; may be infinite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Mag {
    Finite(Dyadic),
    Infinite,
}

impl Mag {
    fn zero() -> Self {
        Mag::Finite(Dyadic::zero())
    }

    fn from_upper(d: &Dyadic) -> Self {
        Mag::Finite(d.abs().round(MAG_BITS, Dir::Up).0)
    }

    fn is_zero(&self) -> bool {
        matches!(self, Mag::Finite(d) if d.is_zero())
    }

    fn add(&self, other: &Mag) -> Mag {
        match (self, other) {
            (Mag::Finite(a), Mag::Finite(b)) => Mag::from_upper(&a.add(b)),
            _ => Mag::Infinite,
        }
    }

    fn mul(&self, other: &Mag) -> Mag {
        if self.is_zero() || other.is_zero() {
            return Mag::zero();
        }
        match (self, other) {
            (Mag::Finite(a), Mag::Finite(b)) => Mag::from_upper(&a.mul(b)),
            _ => Mag::Infinite,
        }
    }

    fn mul_dyadic(&self, d: &Dyadic) -> Mag {
        self.mul(&Mag::from_upper(d))
    }

    /// Upper bound of `self / den` where `den` is a positive lower bound.
    fn div_lower(&self, den: &Dyadic) -> Mag {
        match self {
            Mag::Infinite => Mag::Infinite,
            Mag::Finite(n) if n.is_zero() => Mag::zero(),
            Mag::Finite(n) => {
                let q = n.to_rational() / den.to_rational();
                Mag::Finite(Dyadic::from_rational(&q, MAG_BITS, Dir::Up).0)
            }
        }
    }

    fn as_dyadic(&self) -> Option<&Dyadic> {
        match self {
            Mag::Finite(d) => Some(d),
            Mag::Infinite => None,
        }
    }

    fn to_f64(&self) -> f64 {
        match self {
            Mag::Finite(d) => d.to_f64(),
            Mag::Infinite => f64::INFINITY,
        }
    }
}

/// A real number known to lie in `mid ± rad`, carrying its own working
/// precision in bits.
///
/// Integer constants built with [`PrecReal::from_int`] are exact and carry
/// precision 0, meaning they adopt the precision of whatever they are
/// combined with.
#[derive(Clone, Debug)]
pub struct PrecReal {
    mid: Dyadic,
    rad: Mag,
    prec: u32,
}

impl PrecReal {
    pub fn zero() -> Self {
        PrecReal { mid: Dyadic::zero(), rad: Mag::zero(), prec: 0 }
    }

    pub fn from_int(i: i64) -> Self {
        PrecReal { mid: Dyadic::new(BigInt::from(i), 0), rad: Mag::zero(), prec: 0 }
    }

    pub fn from_bigint(i: &BigInt) -> Self {
        PrecReal { mid: Dyadic::new(i.clone(), 0), rad: Mag::zero(), prec: 0 }
    }

    /// Nearest-below binary approximation of `q` with `prec` bits; exact
    /// (zero radius) when `q` is representable.
    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        let prec = prec.max(MIN_PRECISION);
        let (mid, inexact) = Dyadic::from_rational(q, prec as u64, Dir::Down);
        let rad = if inexact {
            Mag::from_upper(&Dyadic::pow2(mid.top_exp() - prec as i64 + 1))
        } else {
            Mag::zero()
        };
        PrecReal { mid, rad, prec }
    }

    /// `mid ± rad` given both as rationals; the radius is rounded up and the
    /// midpoint's own rounding is added to it.
    pub fn from_rational_ball(mid: &Rational, rad: &Rational, prec: u32) -> Self {
        let base = PrecReal::from_rational(mid, prec);
        let extra = Dyadic::from_rational(&rad.abs(), MAG_BITS, Dir::Up).0;
        PrecReal { rad: base.rad.add(&Mag::Finite(extra)), ..base }
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Re-round to `prec` bits (widening the radius if bits are dropped).
    pub fn with_precision(&self, prec: u32) -> Self {
        let prec = prec.max(MIN_PRECISION);
        let (mid, err) = round_mid(&self.mid, prec);
        PrecReal { mid, rad: self.rad.add(&err), prec }
    }

    pub fn mid_rational(&self) -> Rational {
        self.mid.to_rational()
    }

    /// Radius as an exact rational, `None` when unbounded.
    pub fn radius_rational(&self) -> Option<Rational> {
        self.rad.as_dyadic().map(Dyadic::to_rational)
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid.to_f64()
    }

    pub fn radius_f64(&self) -> f64 {
        self.rad.to_f64()
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self.rad, Mag::Infinite)
    }

    /// True when `x` lies in the ball.
    pub fn contains(&self, x: &Rational) -> bool {
        match self.radius_rational() {
            None => true,
            Some(r) => (x - self.mid_rational()).abs() <= r,
        }
    }

    /// True when the two balls share a point.
    pub fn overlaps(&self, other: &PrecReal) -> bool {
        match (self.radius_rational(), other.radius_rational()) {
            (Some(r1), Some(r2)) => (self.mid_rational() - other.mid_rational()).abs() <= r1 + r2,
            _ => true,
        }
    }

    pub fn contains_zero(&self) -> bool {
        match &self.rad {
            Mag::Infinite => true,
            Mag::Finite(r) => self.mid.cmp_abs(r) != Ordering::Greater,
        }
    }

    /// Upper bound on every `|x|` in the ball.
    pub fn abs_upper(&self) -> Option<Rational> {
        self.radius_rational().map(|r| self.mid_rational().abs() + r)
    }

    /// `sup |x| <= 2^exp` over the ball.
    pub fn abs_le_pow2(&self, exp: i64) -> bool {
        match &self.rad {
            Mag::Infinite => false,
            Mag::Finite(r) => self.mid.abs().add(r).cmp_value(&Dyadic::pow2(exp)) != Ordering::Greater,
        }
    }

    /// `inf |x| > 2^exp` over the ball.
    pub fn abs_gt_pow2(&self, exp: i64) -> bool {
        match &self.rad {
            Mag::Infinite => false,
            Mag::Finite(r) => self.mid.abs().sub(r).cmp_value(&Dyadic::pow2(exp)) == Ordering::Greater,
        }
    }

    /// Largest lower bound on `|x|` over the ball, as an exact rational.
    pub fn abs_lower(&self) -> Rational {
        match self.radius_rational() {
            None => Rational::zero(),
            Some(r) => {
                let l = self.mid_rational().abs() - r;
                if l.is_negative() {
                    Rational::zero()
                } else {
                    l
                }
            }
        }
    }

    pub fn is_positive(&self) -> bool {
        !self.contains_zero() && self.mid.man.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        !self.contains_zero() && self.mid.man.is_negative()
    }

    fn combined_prec(&self, other: &PrecReal) -> u32 {
        self.prec.max(other.prec)
    }

    fn div_ref(&self, other: &PrecReal) -> PrecReal {
        let prec = match self.combined_prec(other) {
            0 => DEFAULT_PRECISION,
            p => p,
        };
        let den_lower = match &other.rad {
            Mag::Infinite => None,
            Mag::Finite(r) => {
                let l = other.mid.abs().sub(r);
                if l.man.is_positive() {
                    Some(l)
                } else {
                    None
                }
            }
        };
        let Some(den_lower) = den_lower else {
            return PrecReal { mid: Dyadic::zero(), rad: Mag::Infinite, prec };
        };
        // Midpoint quotient, truncated; one unit in the last place of error.
        let (mid, err) = if self.mid.is_zero() {
            (Dyadic::zero(), Mag::zero())
        } else {
            let q = self.mid.to_rational() / other.mid.to_rational();
            let (m, inexact) = Dyadic::from_rational(&q, prec as u64, Dir::Down);
            let err = if inexact {
                Mag::from_upper(&Dyadic::pow2(m.top_exp() - prec as i64 + 1))
            } else {
                Mag::zero()
            };
            (m, err)
        };
        // |a/b - am/bm| <= (ra |bm| + |am| rb) / (|bm| (|bm| - rb))
        let num = self.rad.mul_dyadic(&other.mid).add(&other.rad.mul_dyadic(&self.mid));
        let den = other.mid.abs().mul(&den_lower);
        let prop = num.div_lower(&den);
        PrecReal { mid, rad: prop.add(&err), prec }
    }
}

fn round_mid(d: &Dyadic, prec: u32) -> (Dyadic, Mag) {
    if prec == 0 {
        return (d.clone(), Mag::zero());
    }
    let (r, inexact) = d.round(prec as u64, Dir::Down);
    if !inexact {
        return (r, Mag::zero());
    }
    (r, Mag::from_upper(&Dyadic::pow2(d.top_exp() - prec as i64 + 1)))
}

impl Add for &PrecReal {
    type Output = PrecReal;
    fn add(self, other: &PrecReal) -> PrecReal {
        let prec = self.combined_prec(other);
        let (mid, err) = round_mid(&self.mid.add(&other.mid), prec);
        PrecReal { mid, rad: self.rad.add(&other.rad).add(&err), prec }
    }
}

impl Sub for &PrecReal {
    type Output = PrecReal;
    fn sub(self, other: &PrecReal) -> PrecReal {
        let prec = self.combined_prec(other);
        let (mid, err) = round_mid(&self.mid.sub(&other.mid), prec);
        PrecReal { mid, rad: self.rad.add(&other.rad).add(&err), prec }
    }
}

impl Mul for &PrecReal {
    type Output = PrecReal;
    fn mul(self, other: &PrecReal) -> PrecReal {
        let prec = self.combined_prec(other);
        let (mid, err) = round_mid(&self.mid.mul(&other.mid), prec);
        // |ab - am bm| <= |am| rb + |bm| ra + ra rb
        let rad = other
            .rad
            .mul_dyadic(&self.mid)
            .add(&self.rad.mul_dyadic(&other.mid))
            .add(&self.rad.mul(&other.rad))
            .add(&err);
        PrecReal { mid, rad, prec }
    }
}

impl Div for &PrecReal {
    type Output = PrecReal;
    fn div(self, other: &PrecReal) -> PrecReal {
        self.div_ref(other)
    }
}

impl Neg for &PrecReal {
    type Output = PrecReal;
    fn neg(self) -> PrecReal {
        PrecReal { mid: self.mid.neg(), rad: self.rad.clone(), prec: self.prec }
    }
}

macro_rules! forward_owned {
    ($($tr:ident :: $m:ident),*) => {$(
        impl $tr for PrecReal {
            type Output = PrecReal;
            fn $m(self, other: PrecReal) -> PrecReal {
                (&self).$m(&other)
            }
        }
    )*};
}

forward_owned!(Add::add, Sub::sub, Mul::mul, Div::div);

impl Neg for PrecReal {
    type Output = PrecReal;
    fn neg(self) -> PrecReal {
        -&self
    }
}

impl fmt::Display for PrecReal {
    /// `mid±rad` in scientific notation; the radius is rounded up.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = ((self.prec.max(MIN_PRECISION) as f64) * std::f64::consts::LOG10_2).ceil() as usize;
        let mid = format_sci(&self.mid.to_rational(), digits, false);
        let rad = match self.radius_rational() {
            None => "inf".to_string(),
            Some(r) => format_sci(&r, 3, true),
        };
        write!(f, "{mid}±{rad}")
    }
}

/// Decimal scientific notation with `digits` significant digits. Truncates
/// toward zero unless `round_up` is set, in which case the magnitude is
/// rounded up.
pub(crate) fn format_sci(q: &Rational, digits: usize, round_up: bool) -> String {
    if q.is_zero() {
        return "0".to_string();
    }
    let neg = q.is_negative();
    let a = q.abs();
    // Find e with 10^e <= a < 10^(e+1).
    let approx = a.numer().bits() as i64 - a.denom().bits() as i64;
    let mut e = ((approx as f64) * std::f64::consts::LOG10_2).floor() as i64;
    let pow10 = |k: i64| -> Rational {
        if k >= 0 {
            Rational::from_integer(num_traits::pow(BigInt::from(10), k as usize))
        } else {
            Rational::new(BigInt::one(), num_traits::pow(BigInt::from(10), (-k) as usize))
        }
    };
    while pow10(e) > a {
        e -= 1;
    }
    while pow10(e + 1) <= a {
        e += 1;
    }
    let scaled = &a / pow10(e - digits as i64 + 1);
    let mut m = scaled.to_integer();
    if round_up && Rational::from_integer(m.clone()) != scaled {
        m += 1;
    }
    let mut s = m.to_string();
    if s.len() > digits {
        // Rounding up carried into a new digit.
        s.truncate(digits);
        e += 1;
    }
    let (head, tail) = s.split_at(1);
    let tail = tail.trim_end_matches('0');
    let sign = if neg { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}e{e}")
    } else {
        format!("{sign}{head}.{tail}e{e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn exact_inputs_have_zero_radius() {
        let a = PrecReal::from_rational(&q(3, 4), 128);
        assert!(a.is_exact());
        assert_eq!(a.mid_rational(), q(3, 4));
    }

    #[test]
    fn one_third_is_enclosed() {
        let a = PrecReal::from_rational(&q(1, 3), 128);
        assert!(!a.is_exact());
        assert!(a.contains(&q(1, 3)));
        assert!(a.radius_f64() < 1e-38);
    }

    #[test]
    fn division_encloses_quotient() {
        let a = PrecReal::from_rational(&q(2, 7), 100);
        let b = PrecReal::from_rational(&q(-5, 11), 100);
        let c = &a / &b;
        assert!(c.contains(&(q(2, 7) / q(-5, 11))));
        let d = &(&a * &b) + &PrecReal::from_int(3);
        assert!(d.contains(&(q(2, 7) * q(-5, 11) + q(3, 1))));
    }

    #[test]
    fn division_by_ball_containing_zero_is_unbounded() {
        let tiny = PrecReal::from_rational_ball(&q(0, 1), &q(1, 1000), 128);
        let r = &PrecReal::from_int(1) / &tiny;
        assert!(!r.is_bounded());
        assert!(r.contains_zero());
    }

    #[test]
    fn cancellation_keeps_soundness() {
        let x = PrecReal::from_rational(&q(1, 3), 64);
        let y = &(&x * &PrecReal::from_int(3)) - &PrecReal::from_int(1);
        assert!(y.contains(&q(0, 1)));
        assert!(y.abs_le_pow2(-60));
    }

    #[test]
    fn display_formats() {
        assert_eq!(format_sci(&q(1234, 1), 3, false), "1.23e3");
        assert_eq!(format_sci(&q(1234, 1), 3, true), "1.24e3");
        assert_eq!(format_sci(&q(-1, 8), 5, false), "-1.25e-1");
        assert_eq!(format_sci(&q(999, 1), 2, true), "1e3");
    }
}
