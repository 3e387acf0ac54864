//! Linear functionals realized as streams of falling-factorial moments
//! `ν_n = L[φ_n]`.
//!
//! Moments are produced per source:
//!
//! * finite support: exact finite sums `Σ φ_n(x) ρ(x)`;
//! * infinite support, class 0: the Pearson moment recurrence from `ν_0 = 1`
//!   (moments are exact in units of the total mass);
//! * infinite support, class 1: the seeds are transcendental, so moments are
//!   certified series sums (approximate mode only), with the recurrence run
//!   alongside as a consistency check;
//! * Christoffel transforms `L_1 = Λ L_0`: `ν'_n = L_0[Λ φ_n]`.

use std::sync::{Arc, RwLock};

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{leading_pivots, Matrix};
use crate::poly::{falling_factorial, Basis, Polynomial, StirlingCache};
use crate::scalar::{
    int, rational_to_string, sum_series, Field, PrecReal, RatioBound, Rational, Scalar, Verdict, ZeroTest,
    MAX_SERIES_TERMS,
};
use crate::weights::{pearson_data, PearsonPair, WeightFamily};

/// Extra bits carried by series seeds beyond the run precision.
const SEED_GUARD_BITS: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentStrategy {
    FiniteSum,
    Recurrence,
    DirectSeries,
    Christoffel,
}

/// Unit in which moments are expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `L[p] = Σ p(x) ρ(x)` with `ρ(0) = 1`.
    WeightSum,
    /// `L[p] = Σ p(x) ρ(x) / Σ ρ(x)`, so `ν_0 = 1`.
    UnitMass,
    /// Inherited from the base of a Christoffel transform.
    Inherited,
}

pub enum Source<F: Field> {
    Family(WeightFamily),
    Christoffel { base: Arc<MomentFunctional<F>>, multiplier: Polynomial<Rational> },
}

pub struct MomentFunctional<F: Field> {
    source: Source<F>,
    precision: u32,
    strategy: MomentStrategy,
    pearson: Option<PearsonPair>,
    moments: RwLock<Vec<F>>,
}

impl<F: Field> std::fmt::Debug for MomentFunctional<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MomentFunctional({})", self.describe())
    }
}

/// Leading principal Hankel minors of the power moments.
#[derive(Clone, Debug)]
pub struct HankelProfile<F> {
    /// `D_0, D_1, …` up to the first minor that is not certainly nonzero.
    pub minors: Vec<F>,
    /// First index whose minor is exactly zero.
    pub first_vanishing: Option<usize>,
    /// First index whose minor could not be decided in ball arithmetic.
    pub undecided: Option<usize>,
    pub verdict: Verdict,
}

impl<F> HankelProfile<F> {
    /// Largest `k` with `D_0 … D_k` all certainly nonzero.
    pub fn definite_order(&self) -> Option<usize> {
        let bad = self.first_vanishing.or(self.undecided);
        match bad {
            Some(0) => None,
            Some(k) => Some(k - 1),
            None => self.minors.len().checked_sub(1),
        }
    }
}

/// Moments obtained along two independent paths.
#[derive(Clone, Debug)]
pub struct MomentPaths<F> {
    pub recurrence: Vec<F>,
    pub direct: Vec<F>,
}

impl<F: Field> MomentFunctional<F> {
    pub fn from_family(family: WeightFamily, precision: u32) -> Result<Arc<Self>> {
        let pair = pearson_data(&family);
        let strategy = if family.support_top().is_some() {
            MomentStrategy::FiniteSum
        } else if pair.class_s == 0 {
            MomentStrategy::Recurrence
        } else if F::is_exact_field() {
            return Err(Error::TranscendentalSeeds(family.to_string()));
        } else {
            MomentStrategy::DirectSeries
        };
        let l = Arc::new(MomentFunctional {
            source: Source::Family(family),
            precision,
            strategy,
            pearson: Some(pair),
            moments: RwLock::new(Vec::new()),
        });
        l.check_mass()?;
        Ok(l)
    }

    /// `L_1[p] = L_0[multiplier · p]`.
    pub fn christoffel(base: &Arc<Self>, multiplier: Polynomial<Rational>) -> Result<Arc<Self>> {
        if multiplier.is_zero() {
            return Err(Error::Degenerate("Christoffel multiplier is the zero polynomial".into()));
        }
        let l = Arc::new(MomentFunctional {
            source: Source::Christoffel { base: base.clone(), multiplier: multiplier.to_ff() },
            precision: base.precision,
            strategy: MomentStrategy::Christoffel,
            pearson: None,
            moments: RwLock::new(Vec::new()),
        });
        l.check_mass()?;
        Ok(l)
    }

    fn check_mass(&self) -> Result<()> {
        let nu0 = self.moment(0)?;
        match nu0.zero_test() {
            ZeroTest::NonZero => Ok(()),
            ZeroTest::Zero => Err(Error::Degenerate(format!("{}: nu_0 = 0", self.describe()))),
            ZeroTest::Unknown => Err(Error::Degenerate(format!("{}: nu_0 = {nu0} is not certainly nonzero", self.describe()))),
        }
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn strategy(&self) -> MomentStrategy {
        self.strategy
    }

    pub fn normalization(&self) -> Normalization {
        match self.strategy {
            MomentStrategy::FiniteSum => Normalization::WeightSum,
            MomentStrategy::Recurrence | MomentStrategy::DirectSeries => Normalization::UnitMass,
            MomentStrategy::Christoffel => Normalization::Inherited,
        }
    }

    pub fn source(&self) -> &Source<F> {
        &self.source
    }

    /// The catalog family at the root of this functional.
    pub fn root_family(&self) -> &WeightFamily {
        match &self.source {
            Source::Family(f) => f,
            Source::Christoffel { base, .. } => base.root_family(),
        }
    }

    /// Pearson data of a catalog source (`None` for transforms).
    pub fn pearson(&self) -> Option<&PearsonPair> {
        self.pearson.as_ref()
    }

    /// Combined multiplier from the root family's weight to this functional.
    pub fn total_multiplier(&self) -> Polynomial<Rational> {
        match &self.source {
            Source::Family(_) => Polynomial::one(Basis::Monomial),
            Source::Christoffel { base, multiplier } => (&base.total_multiplier() * multiplier).to_monomial(),
        }
    }

    pub fn describe(&self) -> String {
        match &self.source {
            Source::Family(f) => f.to_string(),
            Source::Christoffel { base, multiplier } => {
                format!("({}) * {}", multiplier.to_monomial(), base.describe())
            }
        }
    }

    /// Number of support points, `None` when infinite.
    pub fn support_points(&self) -> Option<u64> {
        let top = self.root_family().support_top()?;
        let m = self.total_multiplier();
        Some((0..=top as i64).filter(|&x| !m.eval_int(x).is_zero()).count() as u64)
    }

    /// Highest degree an orthogonal sequence can reach, `None` when unbounded.
    pub fn degree_cap(&self) -> Option<usize> {
        self.support_points().map(|p| (p as usize).saturating_sub(1))
    }

    /// Make `ν_0 … ν_n` available.
    pub fn extend_to(&self, n: usize) -> Result<()> {
        if self.moments.read().unwrap_or_else(|e| e.into_inner()).len() > n {
            return Ok(());
        }
        let mut guard = self.moments.write().unwrap_or_else(|e| e.into_inner());
        if guard.len() > n {
            return Ok(());
        }
        // grow generously so that callers walking upwards do not recompute
        let target = n.max(guard.len() * 2);
        let fresh = self.compute_moments(target)?;
        *guard = fresh;
        Ok(())
    }

    pub fn moment(&self, n: usize) -> Result<F> {
        self.extend_to(n)?;
        Ok(self.moments.read().unwrap_or_else(|e| e.into_inner())[n].clone())
    }

    /// `ν_0 … ν_nmax` in this functional's own unit.
    pub fn ff_moments(&self, nmax: usize) -> Result<Vec<F>> {
        self.extend_to(nmax)?;
        Ok(self.moments.read().unwrap_or_else(|e| e.into_inner())[..=nmax].to_vec())
    }

    /// `ν_n / ν_0` for `0 <= n <= nmax`.
    pub fn normalized_moments(&self, nmax: usize) -> Result<Vec<F>> {
        let m = self.ff_moments(nmax)?;
        let nu0 = m[0].clone();
        Ok(m.into_iter().map(|v| v / nu0.clone()).collect())
    }

    /// Power moments `L[x^m]` for `0 <= m <= mmax`.
    pub fn power_moments(&self, mmax: usize) -> Result<Vec<F>> {
        let nu = self.ff_moments(mmax)?;
        Ok(StirlingCache::global().with(mmax, |t| {
            (0..=mmax)
                .map(|m| {
                    t.second_kind[m]
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| !s.is_zero())
                        .fold(F::zero(), |acc, (j, s)| acc + F::from_bigint(s) * nu[j].clone())
                })
                .collect()
        }))
    }

    /// `L[p] = Σ c_n ν_n` over the falling-factorial coefficients of `p`.
    pub fn apply(&self, p: &Polynomial<F>) -> Result<F> {
        let ff = p.to_ff();
        let Some(d) = ff.degree() else {
            return Ok(F::zero());
        };
        let nu = self.ff_moments(d)?;
        Ok(ff
            .coeffs()
            .iter()
            .zip(&nu)
            .filter(|(c, _)| !c.is_exact_zero())
            .fold(F::zero(), |acc, (c, v)| acc + c.clone() * v.clone()))
    }

    /// [`MomentFunctional::apply`] for a polynomial with rational coefficients.
    pub fn apply_exact(&self, p: &Polynomial<Rational>) -> Result<F> {
        self.apply(&p.lift(self.precision))
    }

    pub fn lift(&self, q: &Rational) -> F {
        F::from_rational(q, self.precision)
    }

    fn compute_moments(&self, nmax: usize) -> Result<Vec<F>> {
        match &self.source {
            Source::Family(fam) => match self.strategy {
                MomentStrategy::FiniteSum => Ok(finite_moments(fam, nmax).iter().map(|q| self.lift(q)).collect()),
                MomentStrategy::Recurrence => {
                    let pair = self.pearson.as_ref().expect("catalog source");
                    let exact = pearson_recurrence(pair, vec![int(1)], nmax, self.precision)?;
                    Ok(exact.iter().map(|q| self.lift(q)).collect())
                }
                MomentStrategy::DirectSeries => {
                    let paths = self.series_paths(fam, nmax)?;
                    for (n, (r, d)) in paths.recurrence.iter().zip(&paths.direct).enumerate() {
                        if !r.overlaps(d) {
                            return Err(Error::Inconsistent(format!(
                                "{fam}: recurrence moment nu_{n} = {r} does not overlap direct sum {d}"
                            )));
                        }
                    }
                    paths
                        .direct
                        .iter()
                        .map(|b| {
                            F::from_ball(&b.with_precision(self.precision))
                                .ok_or_else(|| Error::TranscendentalSeeds(fam.to_string()))
                        })
                        .collect()
                }
                MomentStrategy::Christoffel => unreachable!("family sources never use the Christoffel strategy"),
            },
            Source::Christoffel { base, multiplier } => {
                let deg = multiplier.degree().unwrap_or(0);
                let nu = base.ff_moments(nmax + deg)?;
                Ok((0..=nmax)
                    .map(|n| {
                        let prod = multiplier * &Polynomial::<Rational>::ff_basis(n);
                        prod.coeffs()
                            .iter()
                            .enumerate()
                            .filter(|(_, c)| !c.is_zero())
                            .fold(F::zero(), |acc, (j, c)| acc + self.lift(c) * nu[j].clone())
                    })
                    .collect())
            }
        }
    }

    /// Recurrence (seeded from series sums) and direct series moments, both
    /// normalized to unit mass, at `precision + 32` bits.
    fn series_paths(&self, fam: &WeightFamily, nmax: usize) -> Result<MomentPaths<PrecReal>> {
        let target = self.precision + SEED_GUARD_BITS;
        let sums = direct_moment_sums(fam, nmax, target)?;
        let direct: Vec<PrecReal> = sums.iter().map(|s| s / &sums[0]).collect();
        let pair = self.pearson.as_ref().expect("catalog source");
        let seeds = direct[..pair.d2().min(direct.len())].to_vec();
        let recurrence = pearson_recurrence(pair, seeds, nmax, target)?;
        Ok(MomentPaths { recurrence, direct })
    }

    /// Moments along the Pearson recurrence and by direct summation.
    ///
    /// Only defined for catalog functionals with infinite support, where the
    /// two paths are genuinely different; requires approximate arithmetic.
    pub fn moment_paths(&self, nmax: usize) -> Result<MomentPaths<F>> {
        let Source::Family(fam) = &self.source else {
            return Err(Error::InvalidParameter("moment paths are defined for catalog functionals only".into()));
        };
        if fam.support_top().is_some() {
            return Err(Error::InvalidParameter(format!("{fam}: finite support has a single exact path")));
        }
        let p = self.series_paths(fam, nmax)?;
        let conv = |v: Vec<PrecReal>| -> Result<Vec<F>> {
            v.iter()
                .map(|b| F::from_ball(&b.with_precision(self.precision)).ok_or_else(|| Error::TranscendentalSeeds(fam.to_string())))
                .collect()
        };
        Ok(MomentPaths { recurrence: conv(p.recurrence)?, direct: conv(p.direct)? })
    }

    /// Leading principal minors `D_0 … D_nmax` of the power-moment Hankel
    /// matrix.
    pub fn quasidefinite_profile(&self, nmax: usize) -> Result<HankelProfile<F>> {
        let mu = self.power_moments(2 * nmax)?;
        let h: Matrix<F> = (0..=nmax).map(|i| (0..=nmax).map(|j| mu[i + j].clone()).collect()).collect();
        let pivots = leading_pivots(h);
        let mut minors = Vec::with_capacity(pivots.len());
        let mut acc = F::one();
        let (mut first_vanishing, mut undecided) = (None, None);
        for (k, p) in pivots.into_iter().enumerate() {
            acc = acc * p.clone();
            minors.push(acc.clone());
            match p.zero_test() {
                ZeroTest::NonZero => {}
                ZeroTest::Zero => first_vanishing = Some(k),
                ZeroTest::Unknown => undecided = Some(k),
            }
        }
        let verdict = if first_vanishing.is_some() {
            Verdict::Fail
        } else if undecided.is_some() {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        };
        Ok(HankelProfile { minors, first_vanishing, undecided, verdict })
    }
}

/// Exact `Σ_x φ_n(x) ρ(x)` over a finite support, `0 <= n <= nmax`.
pub fn finite_moments(fam: &WeightFamily, nmax: usize) -> Vec<Rational> {
    let top = fam.support_top().expect("finite support") as usize;
    let rho = fam.rho_table(top);
    (0..=nmax)
        .map(|n| {
            (n..=top)
                .filter(|&x| !rho[x].is_zero())
                .fold(int(0), |acc, x| acc + Rational::from_integer(falling_factorial(x as i64, n)) * &rho[x])
        })
        .collect()
}

/// Moments from `L[n φ φ_{n-1} - ψ φ_n] = 0`, `n = 0, 1, …`, given the
/// leading seeds. Each relation fixes the moment of its top index.
///
/// Recurrence coefficients are lifted to `precision` bits.
pub fn pearson_recurrence<F: Field>(pair: &PearsonPair, seeds: Vec<F>, nmax: usize, precision: u32) -> Result<Vec<F>> {
    let phi = pair.phi.to_ff();
    let psi = pair.psi.to_ff();
    let mut nu = seeds;
    let mut n = 0usize;
    while nu.len() <= nmax {
        let lhs = if n == 0 {
            Polynomial::zero(Basis::FallingFactorial)
        } else {
            (&phi * &Polynomial::ff_basis(n - 1)).scale(&int(n as i64))
        };
        let rel = &lhs - &(&psi * &Polynomial::ff_basis(n));
        let Some(m) = rel.degree() else {
            n += 1;
            continue;
        };
        if m > nu.len() {
            return Err(Error::Inconsistent(format!(
                "moment recurrence needs {} seeds, got {}",
                m,
                nu.len()
            )));
        }
        if m == nu.len() {
            let c = rel.coeffs();
            let partial = (0..m)
                .filter(|&j| !c[j].is_zero())
                .fold(F::zero(), |acc, j| acc + F::from_rational(&c[j], precision) * nu[j].clone());
            let top = F::from_rational(&c[m], precision);
            nu.push(-partial / top);
        }
        n += 1;
        if n > nmax + pair.d1() + pair.d2() + 4 {
            return Err(Error::Inconsistent("moment recurrence stalled".into()));
        }
    }
    nu.truncate(nmax + 1);
    Ok(nu)
}

/// Ratio certificate for `Σ_x φ_n(x) ρ(x)`: the summand ratio at `x >= X` is
/// `z ∏(x + α_i) / ((x + 1 - n) ∏(x + 1 + β_j))`.
pub fn moment_ratio_bound(fam: &WeightFamily, n: usize) -> Result<RatioBound> {
    let numer: Vec<Rational> = fam.numerator().to_vec();
    let mut denom: Vec<Rational> = vec![int(1) - int(n as i64)];
    denom.extend(fam.denominator().iter().map(|b| b + int(1)));
    let zabs = fam.z().abs();
    if numer.len() > denom.len() {
        return Err(crate::scalar::SeriesError::NonConvergent("unbounded term ratio".into()).into());
    }
    let limit = if numer.len() == denom.len() { zabs.clone() } else { int(0) };
    let half = Rational::new(1.into(), 2.into());
    if limit >= int(1) {
        return Err(crate::scalar::SeriesError::NonConvergent(rational_to_string(&limit)).into());
    }
    let target = if limit < half { half } else { (int(1) + &limit) / int(2) };
    let bound_at = |x: &Rational| -> Option<Rational> {
        let mut b = zabs.clone();
        for (i, d) in denom.iter().enumerate() {
            let xd = x + d;
            if !xd.is_positive() {
                return None;
            }
            match numer.get(i) {
                Some(c) if c >= d => b *= (x + c) / &xd,
                Some(c) => {
                    if (int(2) * x + c + d).is_negative() {
                        return None;
                    }
                }
                None => b /= xd,
            }
        }
        Some(b)
    };
    for onset in n..=MAX_SERIES_TERMS {
        if let Some(b) = bound_at(&int(onset as i64)) {
            if b <= target {
                return Ok(RatioBound::new(target, onset));
            }
        }
    }
    Err(crate::scalar::SeriesError::TooManyTerms(MAX_SERIES_TERMS).into())
}

/// Certified `S_n = Σ_x φ_n(x) ρ(x)` for `0 <= n <= nmax` (weight-sum unit).
pub fn direct_moment_sums(fam: &WeightFamily, nmax: usize, target_bits: u32) -> Result<Vec<PrecReal>> {
    (0..=nmax)
        .map(|n| {
            let bound = moment_ratio_bound(fam, n)?;
            let mut rho = int(1);
            let mut ffv = int(0);
            let term = |k: usize| {
                if k > 0 {
                    rho *= fam.step_ratio(k as i64);
                }
                ffv = if k < n {
                    int(0)
                } else if k == n {
                    Rational::from_integer(falling_factorial(n as i64, n))
                } else {
                    &ffv * int(k as i64) / int((k - n) as i64)
                };
                Scalar::Exact(&ffv * &rho)
            };
            Ok(sum_series(term, &bound, target_bits)?)
        })
        .collect()
}
