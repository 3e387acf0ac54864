//! Monic orthogonal polynomial sequences built from moment functionals.
//!
//! The primary construction is the modified Chebyshev algorithm run directly
//! on the falling-factorial moments (for which `x φ_l = φ_{l+1} + l φ_l`, so
//! the auxiliary recurrence has `a_l = l`, `b_l = 0`). The Hankel
//! construction on power moments is kept as an independent second path.

use std::ops::{Add, Div, Mul, Sub};
use std::sync::Arc;

use num_traits::Zero;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::MomentFunctional;
use crate::linalg::solve;
use crate::poly::{Basis, Polynomial};
use crate::scalar::{Field, PrecReal, Rational, Verdict, ZeroTest, GUARD_BITS};
use crate::weights::PearsonPair;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Truncation {
    /// The support has only `cap + 1` points.
    DegreeCap { cap: usize },
    /// `h_k` is exactly zero.
    VanishingNorm { k: usize },
    /// `h_k` could not be certified nonzero.
    UndecidedNorm { k: usize },
}

/// `P_{n+1} = (x - α_n) P_n - β_n P_{n-1}`, `P_{-1} = 0`, `P_0 = 1`.
#[derive(Clone, Debug)]
pub struct MopSequence<F: Field> {
    /// `α_0 … α_{nmax-1}`.
    pub alpha: Vec<F>,
    /// `β_n` at index `n` for `1 <= n < nmax`; index 0 is unused and zero.
    pub beta: Vec<F>,
    /// `h_0 … h_nmax`.
    pub norms: Vec<F>,
    pub nmax: usize,
    /// Set when fewer degrees than requested could be built.
    pub truncation: Option<Truncation>,
    polys: Vec<Polynomial<F>>,
    owner: Arc<MomentFunctional<F>>,
}

impl<F: Field> MopSequence<F> {
    /// `P_n` in the falling-factorial basis.
    pub fn poly(&self, n: usize) -> &Polynomial<F> {
        &self.polys[n]
    }

    /// `P_n`, or the zero polynomial for `n = -1`.
    pub fn poly_or_zero(&self, n: i64) -> Polynomial<F> {
        if n < 0 {
            Polynomial::zero(Basis::FallingFactorial)
        } else {
            self.polys[n as usize].clone()
        }
    }

    pub fn polys(&self) -> &[Polynomial<F>] {
        &self.polys
    }

    pub fn owner(&self) -> &Arc<MomentFunctional<F>> {
        &self.owner
    }

    pub fn norm(&self, n: usize) -> &F {
        &self.norms[n]
    }

    /// Coefficients of `p` on `P_0 … P_deg p`.
    pub fn expand(&self, p: &Polynomial<F>) -> Result<Vec<F>> {
        expand_in_basis(p, &self.polys)
    }

    /// `L[φ_k P_n]` for every `k < n <= nmax`, and `L[φ_n P_n] - h_n`.
    pub fn orthogonality_residuals(&self) -> Result<Vec<OrthoResidual<F>>> {
        let nu = self.owner.ff_moments(2 * self.nmax)?;
        let mut out = Vec::new();
        for n in 0..=self.nmax {
            let p = &self.polys[n];
            for k in 0..=n {
                // L[φ_k P_n] = Σ_j c_j L[φ_k φ_j]; expand φ_k φ_j through the product
                let prod = &Polynomial::<F>::ff_basis(k) * p;
                let v = prod
                    .coeffs()
                    .iter()
                    .zip(&nu)
                    .fold(F::zero(), |acc, (c, m)| acc + c.clone() * m.clone());
                let value = if k == n { v - self.norms[n].clone() } else { v };
                out.push(OrthoResidual { n, k, value });
            }
        }
        Ok(out)
    }
}

/// Polynomials as coordinate vectors on `P_0, P_1, …`, manipulated through
/// the recurrence coefficients only.
impl<F: Field> MopSequence<F> {
    /// Coordinates of `x·p`: `x P_j = P_{j+1} + α_j P_j + β_j P_{j-1}`.
    pub fn coords_times_x(&self, c: &[F]) -> Result<Vec<F>> {
        let d = c.len();
        if d > self.nmax {
            return Err(Error::InvalidParameter(format!("x·p needs MOPs to degree {d}, have {}", self.nmax)));
        }
        let mut out = vec![F::zero(); d + 1];
        for (j, cj) in c.iter().enumerate() {
            out[j + 1] = out[j + 1].clone() + cj.clone();
            out[j] = out[j].clone() + self.alpha[j].clone() * cj.clone();
            if j >= 1 {
                out[j - 1] = out[j - 1].clone() + self.beta[j].clone() * cj.clone();
            }
        }
        Ok(out)
    }

    /// Coordinates of `q·p` for a rational `q`, by Horner's rule in `x`.
    pub fn coords_times_poly(&self, q: &Polynomial<Rational>, c: &[F]) -> Result<Vec<F>> {
        let prec = self.owner.precision();
        let m = q.to_monomial();
        let mut acc: Vec<F> = Vec::new();
        for a in m.coeffs().iter().rev() {
            acc = if acc.is_empty() { acc } else { self.coords_times_x(&acc)? };
            let a = F::from_rational(a, prec);
            if acc.len() < c.len() {
                acc.resize(c.len(), F::zero());
            }
            for (t, cj) in acc.iter_mut().zip(c) {
                *t = t.clone() + a.clone() * cj.clone();
            }
        }
        Ok(acc)
    }

    /// Coordinates of `P_0(x+1) … P_m(x+1)`.
    pub fn shifted_coords(&self, m: usize) -> Result<Vec<Vec<F>>> {
        let mut out: Vec<Vec<F>> = vec![vec![F::one()]];
        for k in 0..m {
            let mut next = self.coords_times_x(&out[k])?;
            let shift = F::one() - self.alpha[k].clone();
            for (t, c) in next.iter_mut().zip(&out[k]) {
                *t = t.clone() + shift.clone() * c.clone();
            }
            if k >= 1 {
                for (t, c) in next.iter_mut().zip(&out[k - 1]) {
                    *t = t.clone() - self.beta[k].clone() * c.clone();
                }
            }
            out.push(next);
        }
        Ok(out)
    }

    /// Coordinates of `ΔP_n`.
    pub fn delta_coords(&self, n: usize) -> Result<Vec<F>> {
        let mut d = self.shifted_coords(n)?.pop().expect("nonempty");
        d[n] = d[n].clone() - F::one();
        d.truncate(n.max(1));
        if n == 0 {
            d[0] = F::zero();
        }
        Ok(d)
    }

    /// `L[fg] = Σ f_j g_j h_j` for coordinate vectors.
    pub fn pair_coords(&self, f: &[F], g: &[F]) -> F {
        f.iter().zip(g).zip(&self.norms).fold(F::zero(), |a, ((x, y), h)| a + x.clone() * y.clone() * h.clone())
    }
}

#[derive(Clone, Debug)]
pub struct OrthoResidual<F> {
    pub n: usize,
    pub k: usize,
    /// `L[φ_k P_n]` for `k < n`; `L[φ_n P_n] - h_n` for `k = n`.
    pub value: F,
}

/// Residual tolerance in bits for a functional's precision.
pub fn tolerance_bits(precision: u32) -> i64 {
    precision as i64 - GUARD_BITS as i64
}

/// Coefficients of `p` on a monic basis `basis[k]` of exact degree `k`.
pub fn expand_in_basis<F: Field>(p: &Polynomial<F>, basis: &[Polynomial<F>]) -> Result<Vec<F>> {
    let ff = p.to_ff();
    let mut v: Vec<F> = ff.coeffs().to_vec();
    let Some(d) = ff.degree() else {
        return Ok(Vec::new());
    };
    if d >= basis.len() {
        return Err(Error::InvalidParameter(format!(
            "expansion needs basis degree {d}, only {} available",
            basis.len().saturating_sub(1)
        )));
    }
    let mut out = vec![F::zero(); d + 1];
    for k in (0..=d).rev() {
        let c = v[k].clone();
        let b = basis[k].to_ff();
        for (j, bj) in b.coeffs().iter().enumerate().take(k) {
            v[j] = v[j].clone() - c.clone() * bj.clone();
        }
        out[k] = c;
    }
    Ok(out)
}

/// Arithmetic used by the Chebyshev recursion.
trait ChebScalar: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> {
    fn int(i: i64) -> Self;
    fn exact_zero(&self) -> bool;
}

impl ChebScalar for Rational {
    fn int(i: i64) -> Self {
        Rational::from_integer(i.into())
    }
    fn exact_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl ChebScalar for PrecReal {
    fn int(i: i64) -> Self {
        PrecReal::from_int(i)
    }
    fn exact_zero(&self) -> bool {
        self.is_exact() && Zero::is_zero(&self.mid_rational())
    }
}

/// A ball together with its gradient with respect to the moments; an empty
/// gradient stands for a constant.
#[derive(Clone, Debug)]
struct Grad {
    v: PrecReal,
    d: Vec<PrecReal>,
}

impl Grad {
    fn combine(a: &[PrecReal], ka: &PrecReal, b: &[PrecReal], kb: &PrecReal) -> Vec<PrecReal> {
        let n = a.len().max(b.len());
        (0..n)
            .map(|j| match (a.get(j), b.get(j)) {
                (Some(x), Some(y)) => ka * x + kb * y,
                (Some(x), None) => ka * x,
                (None, Some(y)) => kb * y,
                (None, None) => PrecReal::zero(),
            })
            .collect()
    }
}

impl Add for Grad {
    type Output = Grad;
    fn add(self, o: Grad) -> Grad {
        let one = PrecReal::from_int(1);
        Grad { v: &self.v + &o.v, d: Grad::combine(&self.d, &one, &o.d, &one) }
    }
}

impl Sub for Grad {
    type Output = Grad;
    fn sub(self, o: Grad) -> Grad {
        Grad { v: &self.v - &o.v, d: Grad::combine(&self.d, &PrecReal::from_int(1), &o.d, &PrecReal::from_int(-1)) }
    }
}

impl Mul for Grad {
    type Output = Grad;
    fn mul(self, o: Grad) -> Grad {
        Grad { d: Grad::combine(&self.d, &o.v, &o.d, &self.v), v: &self.v * &o.v }
    }
}

impl Div for Grad {
    type Output = Grad;
    fn div(self, o: Grad) -> Grad {
        // (a/b)' = (a' - (a/b) b') / b
        let q = &self.v / &o.v;
        let inv = &PrecReal::from_int(1) / &o.v;
        let d = Grad::combine(&self.d, &inv, &o.d, &-(&q * &inv));
        Grad { v: q, d }
    }
}

impl ChebScalar for Grad {
    fn int(i: i64) -> Self {
        Grad { v: PrecReal::from_int(i), d: Vec::new() }
    }
    fn exact_zero(&self) -> bool {
        ChebScalar::exact_zero(&self.v) && self.d.iter().all(ChebScalar::exact_zero)
    }
}

struct ChebRun<T> {
    alpha: Vec<T>,
    /// Index 0 is a placeholder.
    beta: Vec<T>,
    norms: Vec<T>,
    reached: usize,
    /// Degree whose norm came out exactly zero.
    vanished: Option<usize>,
}

/// Modified Chebyshev recursion on falling-factorial moments `nu[0..=2 target]`.
fn chebyshev<T: ChebScalar>(nu: &[T], target: usize) -> ChebRun<T> {
    let m = 2 * target + 1;
    let zero = T::int(0);
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = vec![zero.clone()];
    let mut norms: Vec<T> = vec![nu[0].clone()];
    let mut prev2: Vec<T> = vec![zero.clone(); m + 1];
    let mut prev: Vec<T> = nu[..=m].to_vec();
    let mut reached = 0usize;
    let mut vanished = None;
    if target > 0 {
        alpha.push(prev[1].clone() / prev[0].clone());
    }
    for k in 1..=target {
        let mut cur = vec![zero.clone(); m + 1];
        let a_prev = alpha[k - 1].clone();
        for l_idx in k..=m - k {
            let mut v = prev[l_idx + 1].clone() - (a_prev.clone() - T::int(l_idx as i64)) * prev[l_idx].clone();
            if k >= 2 {
                v = v - beta[k - 1].clone() * prev2[l_idx].clone();
            }
            cur[l_idx] = v;
        }
        let h = cur[k].clone();
        if h.exact_zero() {
            vanished = Some(k);
            break;
        }
        norms.push(h.clone());
        beta.push(h.clone() / norms[k - 1].clone());
        reached = k;
        if k < target {
            alpha.push(T::int(k as i64) + cur[k + 1].clone() / h.clone() - prev[k].clone() / prev[k - 1].clone());
        }
        prev2 = prev;
        prev = cur;
    }
    ChebRun { alpha, beta, norms, reached, vanished }
}

/// Encloses the recurrence data for ball moments by the tighter of two
/// enclosures: the plain ball recursion, and the mean-value form
/// `f(mid) + ∇f(box)·(ν - mid)` with `f(mid)` computed exactly. The second
/// avoids the radius growth caused by correlated moment errors.
fn chebyshev_balls(nu: &[PrecReal], target: usize, prec: u32) -> (ChebRun<PrecReal>, Option<Truncation>) {
    let direct = chebyshev(nu, target);
    let mids: Vec<Rational> = nu.iter().map(PrecReal::mid_rational).collect();
    let exact = chebyshev(&mids, target);
    let grads: Vec<Grad> = nu
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let mut d = vec![PrecReal::zero(); j + 1];
            d[j] = PrecReal::from_int(1);
            Grad { v: v.clone(), d }
        })
        .collect();
    let slope = chebyshev(&grads, target);
    let offsets: Option<Vec<PrecReal>> = nu
        .iter()
        .map(|v| v.radius_rational().map(|r| PrecReal::from_rational_ball(&crate::scalar::int(0), &r, prec)))
        .collect();

    let tighter = |d: &PrecReal, e: Option<&Rational>, g: Option<&Grad>| -> PrecReal {
        let (Some(e), Some(g), Some(off)) = (e, g, offsets.as_ref()) else { return d.clone() };
        let mv = g.d.iter().zip(off).fold(PrecReal::from_rational(e, prec), |a, (x, o)| &a + &(x * o));
        if mv.is_bounded() && (!d.is_bounded() || mv.radius_f64() < d.radius_f64()) {
            mv
        } else {
            d.clone()
        }
    };
    let reach = direct.reached.min(exact.reached).min(slope.reached);
    let mut out = ChebRun { alpha: Vec::new(), beta: vec![PrecReal::zero()], norms: Vec::new(), reached: 0, vanished: None };
    out.norms.push(tighter(&direct.norms[0], exact.norms.first(), slope.norms.first()));
    let mut truncation = None;
    for k in 0..=reach {
        if k >= 1 {
            let h = tighter(&direct.norms[k], exact.norms.get(k), slope.norms.get(k));
            match h.zero_test() {
                ZeroTest::NonZero => {}
                ZeroTest::Zero => {
                    truncation = Some(Truncation::VanishingNorm { k });
                    break;
                }
                ZeroTest::Unknown => {
                    truncation = Some(Truncation::UndecidedNorm { k });
                    break;
                }
            }
            out.norms.push(h);
            out.beta.push(tighter(&direct.beta[k], exact.beta.get(k), slope.beta.get(k)));
            out.reached = k;
        }
        if k < target && k < direct.alpha.len() {
            out.alpha.push(tighter(&direct.alpha[k], exact.alpha.get(k), slope.alpha.get(k)));
        }
    }
    if truncation.is_none() && reach < target {
        let k = reach + 1;
        truncation = Some(if direct.vanished == Some(k) {
            Truncation::VanishingNorm { k }
        } else {
            Truncation::UndecidedNorm { k }
        });
    }
    (out, truncation)
}

/// Modified Chebyshev construction up to degree `nmax` (or the largest
/// degree the functional supports).
pub fn build_mops<F: Field>(l: &Arc<MomentFunctional<F>>, nmax: usize) -> Result<MopSequence<F>> {
    let mut truncation = None;
    let mut target = nmax;
    if let Some(cap) = l.degree_cap() {
        if nmax > cap {
            target = cap;
            truncation = Some(Truncation::DegreeCap { cap });
        }
    }
    let nu = l.ff_moments(2 * target + 1)?;
    let prec = l.precision();

    let (mut alpha, mut beta, mut norms, reached): (Vec<F>, Vec<F>, Vec<F>, usize) = if F::is_exact_field() {
        let q: Vec<Rational> = nu.iter().map(|v| v.to_scalar().as_rational().expect("exact moments")).collect();
        let run = chebyshev(&q, target);
        if let Some(k) = run.vanished {
            truncation = Some(Truncation::VanishingNorm { k });
        }
        let lift = |v: &[Rational]| v.iter().map(|x| F::from_rational(x, prec)).collect::<Vec<F>>();
        (lift(&run.alpha), lift(&run.beta), lift(&run.norms), run.reached)
    } else {
        let balls: Vec<PrecReal> = nu.iter().map(|v| v.to_scalar().as_ball().expect("ball moments")).collect();
        let (run, t) = chebyshev_balls(&balls, target, prec);
        if t.is_some() {
            truncation = t;
        }
        let lift = |v: &[PrecReal]| v.iter().map(|x| F::from_ball(x).expect("ball field")).collect::<Vec<F>>();
        (lift(&run.alpha), lift(&run.beta), lift(&run.norms), run.reached)
    };
    alpha.truncate(reached);
    beta.truncate(reached.max(1));
    norms.truncate(reached + 1);

    let mut polys = vec![Polynomial::one(Basis::FallingFactorial)];
    for n in 0..reached {
        let mut next = polys[n].mul_linear(&alpha[n]);
        if n >= 1 {
            next = &next - &polys[n - 1].scale(&beta[n]);
        }
        polys.push(next);
    }
    Ok(MopSequence { alpha, beta, norms, nmax: reached, truncation, polys, owner: l.clone() })
}

/// Recurrence data from the Hankel construction on power moments.
#[derive(Clone, Debug)]
pub struct HankelMops<F> {
    pub alpha: Vec<F>,
    pub beta: Vec<F>,
    pub norms: Vec<F>,
    /// Monic `P_n` in the monomial basis.
    pub polys: Vec<Polynomial<F>>,
}

/// Solve `Σ_j c_j μ_{i+j} = -μ_{i+n}` for each monic `P_n`.
pub fn hankel_mops<F: Field>(l: &MomentFunctional<F>, nmax: usize) -> Result<HankelMops<F>> {
    let mu = l.power_moments(2 * nmax + 2)?;
    let mut polys: Vec<Polynomial<F>> = Vec::with_capacity(nmax + 2);
    let mut norms = Vec::with_capacity(nmax + 1);
    for n in 0..=nmax + 1 {
        let coeffs = if n == 0 {
            vec![F::one()]
        } else {
            let a = (0..n).map(|i| (0..n).map(|j| mu[i + j].clone()).collect()).collect();
            let b = (0..n).map(|i| -mu[i + n].clone()).collect();
            let mut c = solve(a, b).ok_or_else(|| Error::Degenerate(format!("Hankel system of order {n} is singular")))?;
            c.push(F::one());
            c
        };
        if n <= nmax {
            let h = coeffs.iter().enumerate().fold(F::zero(), |acc, (j, c)| acc + c.clone() * mu[n + j].clone());
            norms.push(h);
        }
        polys.push(Polynomial::new(Basis::Monomial, coeffs));
    }
    // compare x^n coefficients in P_{n+1} = (x - α_n) P_n - β_n P_{n-1}
    let alpha = (0..=nmax)
        .map(|n| {
            let below = if n == 0 { F::zero() } else { polys[n].coeff(n - 1) };
            below - polys[n + 1].coeff(n)
        })
        .collect();
    let mut beta = vec![F::zero()];
    for n in 1..=nmax {
        beta.push(norms[n].clone() / norms[n - 1].clone());
    }
    polys.truncate(nmax + 1);
    Ok(HankelMops { alpha, beta, norms, polys })
}

/// Per-degree verdicts for the two construction paths.
#[derive(Clone, Debug)]
pub struct DualPathReport {
    pub alpha: Vec<Verdict>,
    pub beta: Vec<Verdict>,
    pub norms: Vec<Verdict>,
}

impl DualPathReport {
    pub fn verdict(&self) -> Verdict {
        self.alpha.iter().chain(&self.beta).chain(&self.norms).fold(Verdict::Pass, |a, v| a.and(*v))
    }
}

pub fn compare_paths<F: Field>(mops: &MopSequence<F>, hankel: &HankelMops<F>, tol_bits: i64) -> DualPathReport {
    let cmp = |a: &[F], b: &[F], skip: usize| -> Vec<Verdict> {
        a.iter().zip(b).skip(skip).map(|(x, y)| x.agrees_with(y, tol_bits)).collect()
    };
    DualPathReport {
        alpha: cmp(&mops.alpha, &hankel.alpha, 0),
        beta: cmp(&mops.beta, &hankel.beta, 1),
        norms: cmp(&mops.norms, &hankel.norms, 0),
    }
}

/// `φ ΔP_{n+1} = Σ_k ε_{n,k} P_k`.
#[derive(Clone, Debug)]
pub struct StructureTable<F> {
    pub n: usize,
    pub class_s: usize,
    /// `ε_{n,0} … ε_{n,n+d1}`.
    pub eps: Vec<F>,
    /// Closed-form value of the anchor coefficient `ε_{n,n-s}`.
    pub anchor_closed_form: F,
    /// `ε_{n,k} = 0` for every `k < n - s`.
    pub lower_vanish: Verdict,
    /// `ε_{n,n-s} != 0`.
    pub anchor_nonzero: Verdict,
    /// `ε_{n,n-s}` equals the closed form.
    pub anchor_matches: Verdict,
    /// Largest `|ε_{n,k}|` (midpoint) below the band, for reporting.
    pub worst_lower: Option<F>,
}

impl<F: Field> StructureTable<F> {
    pub fn verdict(&self) -> Verdict {
        self.lower_vanish.and(self.anchor_nonzero).and(self.anchor_matches)
    }
}

/// Expand `φ ΔP_{n+1}` in the MOP basis and test the band structure.
pub fn structure_table<F: Field>(mops: &MopSequence<F>, pair: &PearsonPair, n: usize) -> Result<StructureTable<F>> {
    let s = pair.class_s as usize;
    let (d1, d2) = (pair.d1(), pair.d2());
    if n <= s {
        return Err(Error::InvalidParameter(format!("structure relation needs n > s = {s}, got n = {n}")));
    }
    if n + d1 > mops.nmax || n + 1 > mops.nmax {
        return Err(Error::InvalidParameter(format!(
            "structure relation at n = {n} needs MOPs to degree {}, have {}",
            (n + d1).max(n + 1),
            mops.nmax
        )));
    }
    let prec = mops.owner().precision();
    let tol = tolerance_bits(prec);
    let eps = mops.coords_times_poly(&pair.phi, &mops.delta_coords(n + 1)?)?;
    let mut lower_vanish = Verdict::Pass;
    let mut worst: Option<F> = None;
    for e in eps.iter().take(n - s) {
        lower_vanish = lower_vanish.and(e.residual_verdict(tol));
        if worst.as_ref().is_none_or(|w| e.to_f64().abs() > w.to_f64().abs()) {
            worst = Some(e.clone());
        }
    }
    let h = &mops.norms;
    let psi_lead: F = F::from_rational(&pair.psi.leading(), prec);
    let mut anchor = F::zero();
    if d2 == s + 1 {
        anchor = anchor + psi_lead / h[n + 1 - d2].clone();
    }
    if d1 == s + 2 {
        anchor = anchor - F::from_int((n + 2 - d1) as i64) / h[n + 2 - d1].clone();
    }
    let anchor = h[n + 1].clone() * anchor;
    let got = eps.get(n - s).cloned().unwrap_or_else(F::zero);
    Ok(StructureTable {
        n,
        class_s: s,
        anchor_nonzero: got.nonzero_verdict(),
        anchor_matches: got.agrees_with(&anchor, tol),
        anchor_closed_form: anchor,
        lower_vanish,
        worst_lower: worst,
        eps,
    })
}

/// `L[φ Δφ_k ΔP_n]` for `1 <= k < n - s` (must vanish) and at `k = n - s`.
#[derive(Clone, Debug)]
pub struct Prop2Report<F> {
    pub n: usize,
    pub values: Vec<(usize, F)>,
    pub boundary: Option<(usize, F)>,
    pub verdict: Verdict,
}

pub fn prop2_check<F: Field>(mops: &MopSequence<F>, pair: &PearsonPair, n: usize) -> Result<Prop2Report<F>> {
    let s = pair.class_s as usize;
    if n > mops.nmax {
        return Err(Error::InvalidParameter(format!("need P_{n}, have up to P_{}", mops.nmax)));
    }
    let tol = tolerance_bits(mops.owner().precision());
    let dpn = mops.delta_coords(n)?;
    let top = n.saturating_sub(s);
    // φ_{k-1} for k = 1..=top, then L[φ Δφ_k ΔP_n] = k L[φ φ_{k-1} ΔP_n]
    let mut ff: Vec<F> = vec![F::one()];
    let mut values = Vec::new();
    let mut boundary = None;
    let mut verdict = Verdict::Pass;
    for k in 1..=top {
        if k >= 2 {
            let mut next = mops.coords_times_x(&ff)?;
            let shift = F::from_int(k as i64 - 2);
            for (t, c) in next.iter_mut().zip(&ff) {
                *t = t.clone() - shift.clone() * c.clone();
            }
            ff = next;
        }
        let g = mops.coords_times_poly(&pair.phi, &ff)?;
        let v = F::from_int(k as i64) * mops.pair_coords(&g, &dpn);
        if k < top {
            verdict = verdict.and(v.residual_verdict(tol));
            values.push((k, v));
        } else {
            boundary = Some((k, v));
        }
    }
    Ok(Prop2Report { n, values, boundary, verdict })
}

/// `L[φ Δφ_k ΔP_n]` for `1 <= k <= n - s`, evaluated on the moments.
pub fn prop2_by_functional<F: Field>(mops: &MopSequence<F>, pair: &PearsonPair, n: usize) -> Result<Vec<F>> {
    let l = mops.owner();
    let phi: Polynomial<F> = pair.phi.lift(l.precision());
    let base = &phi * &mops.poly(n).delta();
    (1..=n.saturating_sub(pair.class_s as usize))
        .map(|k| l.apply(&(&base * &Polynomial::<F>::ff_basis(k).delta())))
        .collect()
}

/// Orthogonality expansion oracle: `ε_{n,k} = L[φ P_k ΔP_{n+1}] / h_k`.
pub fn structure_by_orthogonality<F: Field>(mops: &MopSequence<F>, phi: &Polynomial<Rational>, n: usize) -> Result<Vec<F>> {
    let l = mops.owner();
    let phi: Polynomial<F> = phi.lift(l.precision());
    let lhs = &phi * &mops.poly(n + 1).delta();
    let d = lhs.degree().unwrap_or(0);
    (0..=d).map(|k| Ok(l.apply(&(&lhs * mops.poly(k)))? / mops.norms[k].clone())).collect()
}
