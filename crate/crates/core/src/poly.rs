//! Univariate polynomials over the monomial and falling-factorial bases,
//! with the forward and backward difference operators.
//!
//! The falling factorials `φ_n(x) = x(x-1)…(x-n+1)` are the working basis:
//! `Δφ_n = n φ_{n-1}` and `x φ_n = φ_{n+1} + n φ_n`, so differences and
//! multiplication by `x` are plain coefficient bookkeeping there. The
//! monomial basis is used for input and output.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{Field, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Monomial,
    FallingFactorial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `Δp(x) = p(x+1) - p(x)`
    Forward,
    /// `∇p(x) = p(x) - p(x-1)`
    Backward,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("falling-factorial index must be nonnegative, got {0}")]
    NegativeIndex(i64),
}

/// Dense polynomial with coefficients indexed by basis degree.
///
/// Trailing coefficients that are exactly zero are always trimmed, so the
/// zero polynomial has no coefficients.
#[derive(Clone, Debug)]
pub struct Polynomial<F> {
    basis: Basis,
    coeffs: Vec<F>,
}

impl<F: Field> Polynomial<F> {
    pub fn new(basis: Basis, coeffs: Vec<F>) -> Self {
        let mut p = Polynomial { basis, coeffs };
        p.trim();
        p
    }

    pub fn zero(basis: Basis) -> Self {
        Polynomial { basis, coeffs: Vec::new() }
    }

    pub fn constant(c: F, basis: Basis) -> Self {
        Polynomial::new(basis, vec![c])
    }

    pub fn one(basis: Basis) -> Self {
        Polynomial::constant(F::one(), basis)
    }

    /// `x - c` in the requested basis (identical coefficients in both bases).
    pub fn linear(c: F, basis: Basis) -> Self {
        Polynomial::new(basis, vec![-c, F::one()])
    }

    /// `φ_n` as a unit vector in the falling-factorial basis.
    pub fn ff_basis(n: usize) -> Self {
        let mut coeffs = vec![F::zero(); n + 1];
        coeffs[n] = F::one();
        Polynomial { basis: Basis::FallingFactorial, coeffs }
    }

    /// [`Polynomial::ff_basis`] for an index coming from untrusted input.
    pub fn try_ff_basis(n: i64) -> Result<Self, PolyError> {
        usize::try_from(n).map(Self::ff_basis).map_err(|_| PolyError::NegativeIndex(n))
    }

    /// `x^n` in the monomial basis.
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![F::zero(); n + 1];
        coeffs[n] = F::one();
        Polynomial { basis: Basis::Monomial, coeffs }
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(F::is_exact_zero) {
            self.coeffs.pop();
        }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<F> {
        self.coeffs
    }

    /// Coefficient of basis element `k` (zero past the end).
    pub fn coeff(&self, k: usize) -> F {
        self.coeffs.get(k).cloned().unwrap_or_else(F::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> F {
        self.coeffs.last().cloned().unwrap_or_else(F::zero)
    }

    /// Map coefficients into another field (same basis).
    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Polynomial<G> {
        Polynomial::new(self.basis, self.coeffs.iter().map(f).collect())
    }

    pub fn scale(&self, c: &F) -> Self {
        Polynomial::new(self.basis, self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    pub fn to_basis(&self, target: Basis) -> Self {
        if self.basis == target || self.is_zero() {
            return Polynomial { basis: target, coeffs: self.coeffs.clone() };
        }
        let n = self.coeffs.len() - 1;
        let cache = StirlingCache::global();
        let mut out = vec![F::zero(); n + 1];
        match target {
            // x^k = Σ_j S2(k, j) φ_j
            Basis::FallingFactorial => cache.with(n, |t| {
                for (k, c) in self.coeffs.iter().enumerate() {
                    for (j, s) in t.second_kind[k].iter().enumerate() {
                        if !s.is_zero_int() {
                            out[j] = out[j].clone() + c.clone() * F::from_bigint(s);
                        }
                    }
                }
            }),
            // φ_k = Σ_j s(k, j) x^j
            Basis::Monomial => cache.with(n, |t| {
                for (k, c) in self.coeffs.iter().enumerate() {
                    for (j, s) in t.first_kind[k].iter().enumerate() {
                        if !s.is_zero_int() {
                            out[j] = out[j].clone() + c.clone() * F::from_bigint(s);
                        }
                    }
                }
            }),
        }
        Polynomial::new(target, out)
    }

    pub fn to_ff(&self) -> Self {
        self.to_basis(Basis::FallingFactorial)
    }

    pub fn to_monomial(&self) -> Self {
        self.to_basis(Basis::Monomial)
    }

    pub fn eval(&self, x: &F) -> F {
        let mut acc = F::zero();
        match self.basis {
            Basis::Monomial => {
                for c in self.coeffs.iter().rev() {
                    acc = acc * x.clone() + c.clone();
                }
            }
            // p = c0 + x(c1 + (x-1)(c2 + (x-2)(...)))
            Basis::FallingFactorial => {
                for (k, c) in self.coeffs.iter().enumerate().rev() {
                    acc = acc * (x.clone() - F::from_int(k as i64)) + c.clone();
                }
            }
        }
        acc
    }

    pub fn eval_int(&self, x: i64) -> F {
        self.eval(&F::from_int(x))
    }

    /// Forward or backward difference; the result stays in the input basis.
    pub fn difference(&self, direction: Direction) -> Self {
        let ff = self.to_ff();
        let d = match direction {
            Direction::Forward => ff.ff_forward_difference(),
            Direction::Backward => &ff - &ff.shift_back(),
        };
        d.to_basis(self.basis)
    }

    pub fn delta(&self) -> Self {
        self.difference(Direction::Forward)
    }

    pub fn nabla(&self) -> Self {
        self.difference(Direction::Backward)
    }

    fn ff_forward_difference(&self) -> Self {
        debug_assert_eq!(self.basis, Basis::FallingFactorial);
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, c)| c.clone() * F::from_int(n as i64))
            .collect();
        Polynomial::new(Basis::FallingFactorial, coeffs)
    }

    /// `p(x - 1)`, expanded with `φ_n(x-1) = Σ_k (-1)^k φ_k(n) φ_{n-k}(x)`.
    pub fn shift_back(&self) -> Self {
        let ff = self.to_ff();
        let mut out = vec![F::zero(); ff.coeffs.len()];
        for (n, c) in ff.coeffs.iter().enumerate() {
            let exp = shifted_ff_coefficients(n);
            for (k, e) in exp.iter().enumerate() {
                out[n - k] = out[n - k].clone() + c.clone() * F::from_bigint(e);
            }
        }
        Polynomial::new(Basis::FallingFactorial, out).to_basis(self.basis)
    }

    /// `p(x + 1) = p + Δp`.
    pub fn shift_forward(&self) -> Self {
        self + &self.delta()
    }

    /// `(x - c) p`, computed in the falling-factorial basis.
    pub fn mul_linear(&self, c: &F) -> Self {
        let ff = self.to_ff();
        let mut out = vec![F::zero(); ff.coeffs.len() + 1];
        for (n, a) in ff.coeffs.iter().enumerate() {
            // (x - c) φ_n = φ_{n+1} + (n - c) φ_n
            out[n + 1] = out[n + 1].clone() + a.clone();
            out[n] = out[n].clone() + a.clone() * (F::from_int(n as i64) - c.clone());
        }
        Polynomial::new(Basis::FallingFactorial, out).to_basis(self.basis)
    }

    fn add_impl(&self, other: &Self, sign: bool) -> Self {
        let other = other.to_basis(self.basis);
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| {
                let a = self.coeff(k);
                let b = other.coeff(k);
                if sign {
                    a + b
                } else {
                    a - b
                }
            })
            .collect();
        Polynomial::new(self.basis, coeffs)
    }

    fn mul_impl(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero(self.basis);
        }
        match self.basis {
            Basis::Monomial => {
                let other = other.to_monomial();
                let mut out = vec![F::zero(); self.coeffs.len() + other.coeffs.len() - 1];
                for (i, a) in self.coeffs.iter().enumerate() {
                    for (j, b) in other.coeffs.iter().enumerate() {
                        out[i + j] = out[i + j].clone() + a.clone() * b.clone();
                    }
                }
                Polynomial::new(Basis::Monomial, out)
            }
            // self * Σ_j b_j φ_j with self·φ_{j+1} = (x - j)·(self·φ_j).
            Basis::FallingFactorial => {
                let other = other.to_ff();
                let mut acc = Polynomial::zero(Basis::FallingFactorial);
                let mut running = self.clone();
                for (j, b) in other.coeffs.iter().enumerate() {
                    if !b.is_exact_zero() {
                        acc = &acc + &running.scale(b);
                    }
                    if j + 1 < other.coeffs.len() {
                        running = running.mul_linear(&F::from_int(j as i64));
                    }
                }
                acc
            }
        }
    }
}

impl Polynomial<Rational> {
    /// Lift into any field, rounding to `precision` bits when approximate.
    pub fn lift<G: Field>(&self, precision: u32) -> Polynomial<G> {
        self.map(|c| G::from_rational(c, precision))
    }

    /// Coefficient-wise equality after moving both sides to the same basis.
    pub fn same_as(&self, other: &Polynomial<Rational>) -> bool {
        let o = other.to_basis(self.basis);
        self.coeffs == o.coeffs
    }
}

impl<F: Field> Add for &Polynomial<F> {
    type Output = Polynomial<F>;
    fn add(self, other: &Polynomial<F>) -> Polynomial<F> {
        self.add_impl(other, true)
    }
}

impl<F: Field> Sub for &Polynomial<F> {
    type Output = Polynomial<F>;
    fn sub(self, other: &Polynomial<F>) -> Polynomial<F> {
        self.add_impl(other, false)
    }
}

impl<F: Field> Mul for &Polynomial<F> {
    type Output = Polynomial<F>;
    fn mul(self, other: &Polynomial<F>) -> Polynomial<F> {
        self.mul_impl(other)
    }
}

impl<F: Field> Neg for &Polynomial<F> {
    type Output = Polynomial<F>;
    fn neg(self) -> Polynomial<F> {
        Polynomial::new(self.basis, self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

impl<F: Field> fmt::Display for Polynomial<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let sym = match self.basis {
            Basis::Monomial => "x^",
            Basis::FallingFactorial => "φ_",
        };
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_exact_zero())
            .map(|(k, c)| format!("({c}){sym}{k}"))
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

/// Coefficients `(-1)^k φ_k(n)` of `φ_n(x-1)` on `φ_{n-k}(x)`, `k = 0..=n`.
pub fn shifted_ff_coefficients(n: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(n + 1);
    let mut falling = BigInt::from(1);
    for k in 0..=n {
        if k > 0 {
            falling *= BigInt::from((n - k + 1) as i64);
        }
        out.push(if k % 2 == 0 { falling.clone() } else { -falling.clone() });
    }
    out
}

/// `φ_n(x-1)` expanded in the falling-factorial basis.
pub fn shifted_ff_expand(n: usize) -> Polynomial<Rational> {
    let c = shifted_ff_coefficients(n);
    let mut coeffs = vec![Rational::from_integer(0.into()); n + 1];
    for (k, v) in c.into_iter().enumerate() {
        coeffs[n - k] = Rational::from_integer(v);
    }
    Polynomial::new(Basis::FallingFactorial, coeffs)
}

/// Falling factorial `φ_n(x)` evaluated at an integer.
pub fn falling_factorial(x: i64, n: usize) -> BigInt {
    (0..n as i64).fold(BigInt::from(1), |acc, k| acc * BigInt::from(x - k))
}

trait IntZero {
    fn is_zero_int(&self) -> bool;
}

impl IntZero for BigInt {
    fn is_zero_int(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}

/// Triangular Stirling tables used for basis changes.
///
/// `first_kind[n][k]` is the signed Stirling number `s(n, k)` (coefficient of
/// `x^k` in `φ_n`), `second_kind[n][k]` is `S(n, k)` (coefficient of `φ_k` in
/// `x^n`).
#[derive(Debug, Default)]
pub struct StirlingTables {
    pub first_kind: Vec<Vec<BigInt>>,
    pub second_kind: Vec<Vec<BigInt>>,
}

impl StirlingTables {
    fn degree(&self) -> Option<usize> {
        self.first_kind.len().checked_sub(1)
    }

    fn extend_to(&mut self, n: usize) {
        if self.first_kind.is_empty() {
            self.first_kind.push(vec![BigInt::from(1)]);
            self.second_kind.push(vec![BigInt::from(1)]);
        }
        while self.first_kind.len() <= n {
            let m = self.first_kind.len();
            let prev1 = &self.first_kind[m - 1];
            let prev2 = &self.second_kind[m - 1];
            let mut row1 = vec![BigInt::from(0); m + 1];
            let mut row2 = vec![BigInt::from(0); m + 1];
            for k in 0..=m {
                let up1 = if k >= 1 { prev1[k - 1].clone() } else { BigInt::from(0) };
                let same1 = prev1.get(k).cloned().unwrap_or_default();
                // s(m, k) = s(m-1, k-1) - (m-1) s(m-1, k)
                row1[k] = up1 - BigInt::from((m - 1) as i64) * same1;
                let up2 = if k >= 1 { prev2[k - 1].clone() } else { BigInt::from(0) };
                let same2 = prev2.get(k).cloned().unwrap_or_default();
                // S(m, k) = S(m-1, k-1) + k S(m-1, k)
                row2[k] = up2 + BigInt::from(k as i64) * same2;
            }
            self.first_kind.push(row1);
            self.second_kind.push(row2);
        }
    }
}

/// Lazily grown, append-only Stirling tables shared across threads.
#[derive(Debug, Default)]
pub struct StirlingCache {
    tables: RwLock<StirlingTables>,
}

impl StirlingCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn global() -> &'static StirlingCache {
        static CACHE: OnceLock<StirlingCache> = OnceLock::new();
        CACHE.get_or_init(StirlingCache::new)
    }

    /// Run `f` with tables covering at least degree `n`.
    pub fn with<R>(&self, n: usize, f: impl FnOnce(&StirlingTables) -> R) -> R {
        {
            let t = self.tables.read().unwrap_or_else(|e| e.into_inner());
            if t.degree().is_some_and(|d| d >= n) {
                return f(&t);
            }
        }
        let mut t = self.tables.write().unwrap_or_else(|e| e.into_inner());
        t.extend_to(n);
        f(&t)
    }

    pub fn second_kind(&self, n: usize, k: usize) -> BigInt {
        self.with(n, |t| t.second_kind[n].get(k).cloned().unwrap_or_default())
    }

    pub fn first_kind(&self, n: usize, k: usize) -> BigInt {
        self.with(n, |t| t.first_kind[n].get(k).cloned().unwrap_or_default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};
    use proptest::prelude::*;

    type P = Polynomial<Rational>;

    fn mono(c: &[i64]) -> P {
        P::new(Basis::Monomial, c.iter().map(|&v| int(v)).collect())
    }

    fn ff(c: &[i64]) -> P {
        P::new(Basis::FallingFactorial, c.iter().map(|&v| int(v)).collect())
    }

    #[test]
    fn ff_basis_examples() {
        assert!(P::ff_basis(0).same_as(&mono(&[1])));
        assert_eq!(P::ff_basis(3).eval_int(5), int(60));
        assert!(P::ff_basis(2).to_monomial().same_as(&mono(&[0, -1, 1])));
        assert_eq!(P::try_ff_basis(-1).unwrap_err(), PolyError::NegativeIndex(-1));
    }

    #[test]
    fn difference_examples() {
        assert!(P::ff_basis(3).delta().same_as(&ff(&[0, 0, 3])));
        assert!(mono(&[7]).delta().is_zero());
        assert!(mono(&[0, 0, 1]).nabla().same_as(&mono(&[-1, 2])));
        assert_eq!(mono(&[0, 0, 1]).nabla().basis(), Basis::Monomial);
    }

    #[test]
    fn convert_examples() {
        assert!(mono(&[0, 0, 1]).to_ff().same_as(&ff(&[0, 1, 1])));
        assert!(P::ff_basis(3).to_monomial().same_as(&mono(&[0, 2, -3, 1])));
    }

    #[test]
    fn shifted_expansion_examples() {
        assert!(shifted_ff_expand(0).same_as(&ff(&[1])));
        assert!(shifted_ff_expand(2).same_as(&ff(&[2, -2, 1])));
        assert_eq!(shifted_ff_expand(2).eval_int(3), int(2));
        assert_eq!(P::ff_basis(2).eval_int(2), int(2));
    }

    #[test]
    fn stirling_rows() {
        let c = StirlingCache::new();
        for n in 0..12 {
            assert_eq!(c.second_kind(n, n), BigInt::from(1));
            assert_eq!(c.second_kind(n, 0), BigInt::from(if n == 0 { 1 } else { 0 }));
            // signed first-kind row sums: φ_n(1) = [n <= 1]
            let sum: BigInt = (0..=n).map(|k| c.first_kind(n, k)).sum();
            assert_eq!(sum, BigInt::from(if n <= 1 { 1 } else { 0 }));
        }
    }

    #[test]
    fn basic_identity_x_phi() {
        for n in 0..=30usize {
            let lhs = &mono(&[0, 1]) * &P::ff_basis(n);
            let rhs = &P::ff_basis(n + 1) + &P::ff_basis(n).scale(&int(n as i64));
            assert!(lhs.same_as(&rhs), "n = {n}");
        }
    }

    #[test]
    fn zero_poly_has_no_coeffs() {
        let p = ff(&[1, 2]);
        let z = &p - &p;
        assert!(z.is_zero());
        assert_eq!(z.degree(), None);
    }

    #[test]
    fn degree_drops_by_one() {
        let p = mono(&[3, 0, -2, 5]);
        assert_eq!(p.delta().degree(), Some(2));
        assert_eq!(p.nabla().degree(), Some(2));
        assert_eq!(p.delta().leading(), int(15));
    }

    #[test]
    fn mixed_basis_product() {
        let a = ff(&[1, 1]);
        let b = mono(&[-1, 0, 1]);
        let p = &a * &b;
        for x in -3..5 {
            assert_eq!(p.eval_int(x), a.eval_int(x) * b.eval_int(x));
        }
        let h = rat(1, 2);
        assert_eq!(p.eval(&h), a.eval(&h) * b.eval(&h));
    }

    fn arb_poly(max_deg: usize) -> impl Strategy<Value = P> {
        (proptest::collection::vec((-20i64..20, 1i64..6), 0..=max_deg + 1), any::<bool>()).prop_map(|(c, ffb)| {
            let basis = if ffb { Basis::FallingFactorial } else { Basis::Monomial };
            P::new(basis, c.into_iter().map(|(n, d)| rat(n, d)).collect())
        })
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(p in arb_poly(8)) {
            let back = p.to_basis(Basis::Monomial).to_basis(Basis::FallingFactorial).to_basis(p.basis());
            prop_assert_eq!(back.coeffs(), p.coeffs());
        }

        #[test]
        fn conversion_preserves_values(p in arb_poly(8), x in -10i64..10) {
            prop_assert_eq!(p.to_monomial().eval_int(x), p.to_ff().eval_int(x));
        }

        #[test]
        fn forward_product_rule(f in arb_poly(5), g in arb_poly(5)) {
            let lhs = (&f * &g).delta();
            let rhs = &(&(&g * &f.delta()) + &(&f * &g.delta())) + &(&f.delta() * &g.delta());
            prop_assert!(lhs.to_ff().same_as(&rhs));
        }

        #[test]
        fn backward_product_rule(f in arb_poly(5), g in arb_poly(5)) {
            let lhs = (&f * &g).nabla();
            let rhs = &(&(&g * &f.nabla()) + &(&f * &g.nabla())) - &(&f.nabla() * &g.nabla());
            prop_assert!(lhs.to_ff().same_as(&rhs));
        }

        #[test]
        fn summation_by_parts(f in arb_poly(5), g in arb_poly(5), a in 0i64..=20, len in 0i64..=20) {
            let b = (a + len).min(20);
            let dg = g.delta();
            let nf = f.nabla();
            let lhs: Rational = (a..=b).map(|x| f.eval_int(x) * dg.eval_int(x)).sum();
            let boundary = f.eval_int(b) * g.eval_int(b + 1) - f.eval_int(a - 1) * g.eval_int(a);
            let rest: Rational = (a..=b).map(|x| g.eval_int(x) * nf.eval_int(x)).sum();
            prop_assert_eq!(lhs, boundary - rest);
        }

        #[test]
        fn differences_match_pointwise(p in arb_poly(7), x in -8i64..8) {
            prop_assert_eq!(p.delta().eval_int(x), p.eval_int(x + 1) - p.eval_int(x));
            prop_assert_eq!(p.nabla().eval_int(x), p.eval_int(x) - p.eval_int(x - 1));
            prop_assert_eq!(p.shift_back().eval_int(x), p.eval_int(x - 1));
        }
    }
}
