//! Δ-coherent pairs of the second kind.
//!
//! A pair `(L0, L1)` with `L1 = Λ3 L0` is built from a catalog functional and
//! a monic `q` through `Λ2 = (q - ∇q) ψ0 - φ0 ∇q`, `Λ3 = q φ0`, so that
//! `∇(Λ3 ρ0) + Λ2 ρ0 = 0`. In functional form this reads
//! `Δ*L1 = -Λ2 L0`; the polynomial `-Λ2` is the one that enters `τ_n` and the
//! reconstruction from the two MOP sequences (see [`CoherentPairCase::lambda2_functional`]).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::MomentFunctional;
use crate::identify::{identify, Affine, ClaimedMapping, Identification};
use crate::mops::{build_mops, tolerance_bits, MopSequence};
use crate::poly::{Basis, Polynomial};
use crate::scalar::{int, Field, Rational, Verdict};
use crate::weights::{make_family, pearson_data, FamilyTag, Params, PearsonPair, RatioForm, WeightFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CaseTag {
    I,
    IIa,
    IIb,
    III,
    IV,
}

impl CaseTag {
    pub const ALL: [CaseTag; 5] = [CaseTag::I, CaseTag::IIa, CaseTag::IIb, CaseTag::III, CaseTag::IV];

    pub fn name(self) -> &'static str {
        match self {
            CaseTag::I => "I",
            CaseTag::IIa => "IIa",
            CaseTag::IIb => "IIb",
            CaseTag::III => "III",
            CaseTag::IV => "IV",
        }
    }

    /// Family of `L0`.
    pub fn base_tag(self) -> FamilyTag {
        match self {
            CaseTag::I => FamilyTag::GenCharlier,
            CaseTag::IIa => FamilyTag::Charlier,
            CaseTag::IIb => FamilyTag::Kravchuk,
            CaseTag::III => FamilyTag::Meixner,
            CaseTag::IV => FamilyTag::Hahn,
        }
    }

    pub fn has_omega(self) -> bool {
        self != CaseTag::I
    }

    /// Parameters the case expects: the base family's plus `omega`.
    pub fn parameters(self) -> Vec<&'static str> {
        let mut p = self.base_tag().parameters().to_vec();
        if self.has_omega() {
            p.push("omega");
        }
        p
    }

    /// Companion family and mapping as stated with the classification.
    pub fn claimed_companion(self) -> ClaimedMapping {
        let w = Affine::sym("omega");
        let a = Affine::sym("a");
        let m = |v: Vec<(&str, Affine)>| v.into_iter().map(|(k, a)| (k.to_string(), a)).collect();
        match self {
            CaseTag::I => ClaimedMapping { tag: FamilyTag::GenCharlier, mapping: m(vec![]) },
            CaseTag::IIa => ClaimedMapping { tag: FamilyTag::GenMeixner, mapping: m(vec![("a", w.clone()), ("b", w.shift(-1))]) },
            CaseTag::IIb => ClaimedMapping { tag: FamilyTag::GenKravchuk, mapping: m(vec![("a", w.clone()), ("b", w.shift(-1))]) },
            CaseTag::III => ClaimedMapping {
                tag: FamilyTag::GenHahnI,
                mapping: m(vec![("a1", a), ("a2", w.clone()), ("b", w.shift(-1))]),
            },
            CaseTag::IV => ClaimedMapping {
                tag: FamilyTag::GenHahnII,
                mapping: m(vec![("a1", a), ("a2", w.clone()), ("b1", Affine::sym("b")), ("b2", w.shift(-1))]),
            },
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        CaseTag::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::UnknownCase(s.to_string()))
    }
}

fn mono(coeffs: Vec<Rational>) -> Polynomial<Rational> {
    Polynomial::new(Basis::Monomial, coeffs)
}

/// `(Λ2, Λ3) = ((q - ∇q) ψ0 - φ0 ∇q, q φ0)`.
pub fn lambdas_from_multiplier(q: &Polynomial<Rational>, phi0: &Polynomial<Rational>, psi0: &Polynomial<Rational>) -> (Polynomial<Rational>, Polynomial<Rational>) {
    let q = q.to_monomial();
    let nq = q.nabla();
    let l2 = &(&(&q - &nq) * &psi0.to_monomial()) - &(&phi0.to_monomial() * &nq);
    let l3 = &q * &phi0.to_monomial();
    (l2.to_monomial(), l3.to_monomial())
}

/// `∇(Λ3 ρ)(x) + Λ2(x) ρ(x)` for a weight table with `ρ(-1) = 0`.
pub fn pointwise_relation(rho: &[Rational], l3: &Polynomial<Rational>, l2: &Polynomial<Rational>, x: i64) -> Rational {
    let r = |t: i64| if t < 0 { int(0) } else { rho[t as usize].clone() };
    l3.eval_int(x) * r(x) - l3.eval_int(x - 1) * r(x - 1) + l2.eval_int(x) * r(x)
}

/// `Λ2` and `Λ3` exactly as displayed for each case.
pub fn displayed_lambdas(case: CaseTag, p: &Params) -> Result<(Polynomial<Rational>, Polynomial<Rational>)> {
    let get = |k: &str| -> Result<Rational> {
        p.get(k).cloned().ok_or_else(|| Error::MissingParameter { family: format!("case {case}"), name: k.into() })
    };
    let x = mono(vec![int(0), int(1)]);
    let lin = |c: Rational| mono(vec![c, int(1)]);
    Ok(match case {
        CaseTag::I => {
            let (b, z) = (get("b")?, get("z")?);
            // x(x+b)/z - 1
            (mono(vec![int(-1), &b / &z, z.recip()]), mono(vec![int(1)]))
        }
        CaseTag::IIa => {
            let (z, w) = (get("z")?, get("omega")?);
            // (x/z)(x+ω-1) - (x+ω)
            let l2 = &(&x.scale(&z.recip()) * &lin(&w - int(1))) - &lin(w.clone());
            (l2, lin(w))
        }
        CaseTag::IIb => {
            let (n, z, w) = (get("N")?, get("z")?, get("omega")?);
            // (x/z)(x+ω-1) - (x+ω)(x-N)
            let l2 = &(&x.scale(&z.recip()) * &lin(&w - int(1))) - &(&lin(w.clone()) * &lin(-n));
            (l2, lin(w))
        }
        CaseTag::III => {
            let (a, z, w) = (get("a")?, get("z")?, get("omega")?);
            // (x/z)(x+ω-1) - (x+ω)(x+a)
            let l2 = &(&x.scale(&z.recip()) * &lin(&w - int(1))) - &(&lin(w.clone()) * &lin(a.clone()));
            (l2, &lin(w) * &lin(a))
        }
        CaseTag::IV => {
            let (n, a, b, w) = (get("N")?, get("a")?, get("b")?, get("omega")?);
            // (N-a+b-1)x² + (Nω+Na-aω+bω-b)x + Naω
            let l2 = mono(vec![
                &n * &a * &w,
                &n * &w + &n * &a - &a * &w + &b * &w - &b,
                &n - &a + &b - int(1),
            ]);
            (l2, &(&lin(w) * &lin(-n)) * &lin(a))
        }
    })
}

/// Root `n` of `λ2^(2) + (n-1) λ3^(3)` in functional convention, when it is a
/// positive integer (or `n = 1` when the expression vanishes identically).
pub fn pair_admissibility(lambda2_lead: &Rational, lambda3_cubic: &Rational) -> Option<u64> {
    use num_traits::{Signed, ToPrimitive};
    if *lambda3_cubic == int(0) {
        return (*lambda2_lead == int(0)).then_some(1);
    }
    let root = int(1) - lambda2_lead / lambda3_cubic;
    (root.is_integer() && root.is_positive()).then(|| root.to_integer().to_u64()).flatten()
}

/// Comparison of the built `Λ3` with the displayed one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DisplayedLambda3 {
    Matches,
    Differs,
}

pub struct CoherentPairCase<F: Field> {
    pub case: CaseTag,
    pub params: Params,
    pub omega: Option<Rational>,
    pub base: WeightFamily,
    pub base_pair: PearsonPair,
    /// Monic `q` fed to the construction.
    pub q: Polynomial<Rational>,
    /// `Λ2` with `∇(Λ3 ρ0) + Λ2 ρ0 = 0` (monomial basis).
    pub lambda2: Polynomial<Rational>,
    pub lambda3: Polynomial<Rational>,
    pub displayed_lambda3: Polynomial<Rational>,
    pub lambda3_display: DisplayedLambda3,
    pub l0: Arc<MomentFunctional<F>>,
    pub l1: Arc<MomentFunctional<F>>,
    pub mops0: MopSequence<F>,
    pub mops1: MopSequence<F>,
    pub nmax: usize,
}

impl<F: Field> fmt::Debug for CoherentPairCase<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoherentPairCase")
            .field("case", &self.case)
            .field("base", &self.base.to_string())
            .field("omega", &self.omega)
            .field("nmax", &self.nmax)
            .finish()
    }
}

/// Build a case with MOPs of `L0` to degree `nmax + 1` and of `L1` to `nmax`.
pub fn build_case<F: Field>(case: CaseTag, params: &Params, nmax: usize, precision: u32) -> Result<CoherentPairCase<F>> {
    let mut base_params = params.clone();
    let omega = base_params.remove("omega");
    match (case.has_omega(), &omega) {
        (true, None) => return Err(Error::MissingParameter { family: format!("case {case}"), name: "omega".into() }),
        (false, Some(_)) => return Err(Error::UnexpectedParameter { family: format!("case {case}"), name: "omega".into() }),
        _ => {}
    }
    let base = make_family(case.base_tag(), &base_params)?;
    let base_pair = pearson_data(&base);
    let q = match &omega {
        Some(w) => mono(vec![w.clone(), int(1)]),
        None => mono(vec![int(1)]),
    };
    let (lambda2, lambda3) = lambdas_from_multiplier(&q, &base_pair.phi, &base_pair.psi);
    let (shown2, shown3) = displayed_lambdas(case, params)?;
    if !shown2.same_as(&lambda2) {
        return Err(Error::Inconsistent(format!(
            "case {case}: constructed Λ2 differs from the displayed formula"
        )));
    }
    if lambda2.degree() != Some(2) || lambda3.degree().is_none_or(|d| d > 3) {
        return Err(Error::InvalidParameter(format!(
            "case {case}: need deg Λ2 = 2 and deg Λ3 <= 3 (z must be nonzero, parameters generic)"
        )));
    }
    let lambda3_display = if shown3.same_as(&lambda3) { DisplayedLambda3::Matches } else { DisplayedLambda3::Differs };
    if let Some(n) = pair_admissibility(&-lambda2.coeff(2), &lambda3.coeff(3)) {
        return Err(Error::PairInadmissible { n });
    }
    let l0 = MomentFunctional::<F>::from_family(base.clone(), precision)?;
    let l1 = MomentFunctional::christoffel(&l0, lambda3.to_ff())?;
    let mops0 = build_mops(&l0, nmax + 1)?;
    if mops0.nmax < nmax + 1 {
        return Err(Error::Degenerate(format!(
            "L0 = {} has MOPs only to degree {} ({:?}), need {}",
            base,
            mops0.nmax,
            mops0.truncation,
            nmax + 1
        )));
    }
    let mops1 = build_mops(&l1, nmax)?;
    if mops1.nmax < nmax {
        return Err(Error::Degenerate(format!(
            "L1 = Λ3·L0 has MOPs only to degree {} ({:?}), need {nmax}",
            mops1.nmax, mops1.truncation
        )));
    }
    Ok(CoherentPairCase {
        case,
        params: params.clone(),
        omega,
        base,
        base_pair,
        q,
        lambda2,
        lambda3,
        displayed_lambda3: shown3,
        lambda3_display,
        l0,
        l1,
        mops0,
        mops1,
        nmax,
    })
}

/// `L[p]` against a monomial-basis rational polynomial lifted to `F`.
fn lift<F: Field>(p: &Polynomial<Rational>, precision: u32) -> Polynomial<F> {
    p.lift(precision)
}

impl<F: Field> CoherentPairCase<F> {
    pub fn precision(&self) -> u32 {
        self.l0.precision()
    }

    pub fn tol_bits(&self) -> i64 {
        tolerance_bits(self.precision())
    }

    pub fn subject(&self) -> String {
        let ps: Vec<String> = self
            .case
            .parameters()
            .iter()
            .map(|k| format!("{k}={}", crate::scalar::rational_to_string(&self.params[*k])))
            .collect();
        format!("case {} ({})", self.case, ps.join(", "))
    }

    /// `-Λ2`, the polynomial with `Δ*L1 = Λ L0`.
    pub fn lambda2_functional(&self) -> Polynomial<Rational> {
        self.lambda2.scale(&int(-1))
    }

    /// `λ2^(2) + (n-1) λ3^(3)` in functional convention.
    pub fn tau_numerator(&self, n: usize) -> Rational {
        -self.lambda2.coeff(2) + int(n as i64 - 1) * self.lambda3.coeff(3)
    }

    /// `τ_n = [λ2^(2) + (n-1) λ3^(3)]/(n+1) · h0_{n+1} / h1_{n-1}` for `n >= 1`.
    pub fn tau(&self, n: usize) -> Result<F> {
        self.need(n)?;
        let c = F::from_rational(&(self.tau_numerator(n) / int(n as i64 + 1)), self.precision());
        Ok(c * self.mops0.norms[n + 1].clone() / self.mops1.norms[n - 1].clone())
    }

    fn need(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.nmax {
            return Err(Error::InvalidParameter(format!("τ_n needs 1 <= n <= {}, got {n}", self.nmax)));
        }
        Ok(())
    }

    /// `Q_n = ΔP0_{n+1}/(n+1)`.
    pub fn q_poly(&self, n: usize) -> Polynomial<F> {
        self.mops0.poly(n + 1).delta().scale(&F::from_rational(&Rational::new(1.into(), (n as i64 + 1).into()), self.precision()))
    }

    /// Coefficients of `Q_n` on `P1_0 … P1_n`.
    pub fn q_expansion(&self, n: usize) -> Result<Vec<F>> {
        self.mops1.expand(&self.q_poly(n))
    }

    /// `τ_n` read off the expansion of `Q_n` in the `P1` basis.
    pub fn tau_brute(&self, n: usize) -> Result<F> {
        self.need(n)?;
        let c = self.q_expansion(n)?;
        Ok(-c[n - 1].clone())
    }

    /// `R_n = Q_n - P1_n + τ_n P1_{n-1}` (ff basis); `τ_0` is irrelevant.
    pub fn coherence_residual(&self, n: usize) -> Result<Polynomial<F>> {
        let mut r = &self.q_poly(n) - self.mops1.poly(n);
        if n >= 1 {
            r = &r + &self.mops1.poly(n - 1).scale(&self.tau(n)?);
        }
        Ok(r)
    }

    /// Reconstruct `(Λ2, Λ3)` in functional convention from the MOPs alone,
    /// using `τ_1`, `τ_2` from the `Q_n` expansions.
    pub fn lambdas_from_mops(&self) -> Result<Reconstruction<F>> {
        self.lambdas_with(false)
    }

    /// Same, with the `-Λ2 (P1_1 + 1)` closing term in place of
    /// `-Λ2 (P1_1 - 1)`; only for negative tests.
    pub fn lambdas_from_mops_plus_one(&self) -> Result<Reconstruction<F>> {
        self.lambdas_with(true)
    }

    fn lambdas_with(&self, plus_one: bool) -> Result<Reconstruction<F>> {
        if self.nmax < 2 {
            return Err(Error::InvalidParameter("reconstruction needs nmax >= 2".into()));
        }
        let (h0, h1) = (&self.mops0.norms, &self.mops1.norms);
        let (tau1, tau2) = (self.tau_brute(1)?, self.tau_brute(2)?);
        if tau1.zero_test() != crate::scalar::ZeroTest::NonZero {
            return Err(Error::Degenerate("τ_1 is not certainly nonzero; deg Λ2 < 2".into()));
        }
        let p0 = |k: usize| self.mops0.poly(k).to_monomial();
        let two = F::from_int(2);
        let three = F::from_int(3);
        let l2 = &p0(2).scale(&(two.clone() * tau1 * h1[0].clone() / h0[2].clone()))
            - &p0(1).scale(&(h1[0].clone() / h0[1].clone()));
        let c = if plus_one { F::one() } else { -F::one() };
        let p11 = &self.mops1.poly(1).to_monomial() + &Polynomial::constant(c, Basis::Monomial);
        let l3 = &(&p0(3).scale(&(three * tau2 * h1[1].clone() / h0[3].clone()))
            - &p0(2).scale(&(two * h1[1].clone() / h0[2].clone())))
            - &(&l2 * &p11);
        Ok(Reconstruction { lambda2: l2.to_monomial(), lambda3: l3.to_monomial() })
    }

    /// Compare a reconstruction with `(-Λ2, Λ3)` coefficient by coefficient.
    pub fn compare_reconstruction(&self, r: &Reconstruction<F>) -> Verdict {
        let prec = self.precision();
        let tol = self.tol_bits();
        let cmp = |got: &Polynomial<F>, want: &Polynomial<Rational>| {
            let want: Polynomial<F> = lift(want, prec);
            let n = got.coeffs().len().max(want.coeffs().len());
            (0..n).fold(Verdict::Pass, |acc, k| acc.and(got.coeff(k).agrees_with(&want.coeff(k), tol)))
        };
        cmp(&r.lambda2, &self.lambda2_functional()).and(cmp(&r.lambda3, &self.lambda3))
    }

    /// `-L1[Δφ_k] - L0[Λ φ_k]` and `L1[φ_k] - L0[Λ3 φ_k]` for `k <= degmax`,
    /// where `Λ` is in functional convention.
    pub fn functional_relation_check(&self, lambda2f: &Polynomial<F>, lambda3: &Polynomial<F>, degmax: usize) -> Result<Vec<RelationRow<F>>> {
        let (l2, l3) = (lambda2f.to_ff(), lambda3.to_ff());
        (0..=degmax)
            .map(|k| {
                let phik = Polynomial::<F>::ff_basis(k);
                let first = -self.l1.apply(&phik.delta())? - self.l0.apply(&(&l2 * &phik))?;
                let second = self.l1.apply(&phik)? - self.l0.apply(&(&l3 * &phik))?;
                Ok(RelationRow { k, first, second })
            })
            .collect()
    }

    /// `Δ* v1_n = τ_{n+1}(n+2) v0_{n+2} - (n+1) v0_{n+1}` applied to `p`:
    /// returns LHS - RHS.
    pub fn dual_identity_residual(&self, n: usize, p: &Polynomial<F>) -> Result<F> {
        if n + 2 > self.nmax + 1 || n + 1 > self.nmax {
            return Err(Error::InvalidParameter(format!("dual identity at n = {n} needs nmax >= {}", n + 1)));
        }
        let (h0, h1) = (&self.mops0.norms, &self.mops1.norms);
        let lhs = -self.l1.apply(&(self.mops1.poly(n) * &p.delta()))? / h1[n].clone();
        let v0 = |k: usize| -> Result<F> { Ok(self.l0.apply(&(self.mops0.poly(k) * p))? / h0[k].clone()) };
        let rhs = self.tau(n + 1)? * F::from_int(n as i64 + 2) * v0(n + 2)? - F::from_int(n as i64 + 1) * v0(n + 1)?;
        Ok(lhs - rhs)
    }

    /// Dual identity applied to `P0_k` for `k <= test_degmax` and to a few
    /// seeded random polynomials of degree up to `test_degmax`.
    pub fn dual_identity_check(&self, n: usize, test_degmax: usize, random: usize) -> Result<Vec<DualRow<F>>> {
        let mut rows = Vec::new();
        let top = test_degmax.min(self.mops0.nmax);
        for k in 0..=top {
            rows.push(DualRow { probe: format!("P0_{k}"), residual: self.dual_identity_residual(n, &self.mops0.poly(k).clone())? });
        }
        let mut rng = StdRng::seed_from_u64(0x5eed ^ (n as u64) << 8);
        for i in 0..random {
            let coeffs: Vec<Rational> = (0..=top).map(|_| Rational::new(rng.gen_range(-9..=9).into(), rng.gen_range(1..=5).into())).collect();
            let p: Polynomial<F> = lift(&Polynomial::new(Basis::FallingFactorial, coeffs), self.precision());
            rows.push(DualRow { probe: format!("random#{i}"), residual: self.dual_identity_residual(n, &p)? });
        }
        Ok(rows)
    }

    /// Catalog identification of `ρ1 = Λ3 ρ0` against the stated companion.
    pub fn identify_family(&self) -> Identification {
        identify(&self.base, self.omega.as_ref().map(|_| "omega"), &self.lambda3, &self.params, self.case.claimed_companion())
    }

    /// Pearson pair satisfied by `ρ1`, read from its ratio.
    pub fn rho1_pearson(&self) -> PearsonPair {
        let RatioForm { z, numer, denom } = self.identify_family().ratio;
        let (phi, psi) = RatioForm { z, numer, denom }.pearson_pair();
        PearsonPair::new(phi, psi)
    }

    /// `ρ1(0..=xmax)`.
    pub fn rho1_table(&self, xmax: usize) -> Vec<Rational> {
        self.base
            .rho_table(xmax)
            .into_iter()
            .enumerate()
            .map(|(x, r)| self.lambda3.eval_int(x as i64) * r)
            .collect()
    }

    /// Residuals of the displayed relation `∇(Λ3' ρ1) + Λ2 ρ1` (with the
    /// displayed `Λ3'`) and of `ρ1`'s own Pearson pair, for `0 <= x <= xmax`.
    pub fn rho1_relations(&self, xmax: usize) -> Rho1Relations {
        let rho1 = self.rho1_table(xmax);
        let displayed = (0..=xmax as i64).map(|x| pointwise_relation(&rho1, &self.displayed_lambda3, &self.lambda2, x)).collect();
        let pair = self.rho1_pearson();
        let own = (0..=xmax as i64).map(|x| pointwise_relation(&rho1, &pair.phi, &pair.psi, x)).collect();
        Rho1Relations { displayed, own, pair }
    }
}

#[derive(Clone, Debug)]
pub struct Reconstruction<F> {
    /// `Λ2` in functional convention (`Δ*L1 = Λ2 L0`).
    pub lambda2: Polynomial<F>,
    pub lambda3: Polynomial<F>,
}

#[derive(Clone, Debug)]
pub struct RelationRow<F> {
    pub k: usize,
    /// `-L1[Δφ_k] - L0[Λ2 φ_k]`.
    pub first: F,
    /// `L1[φ_k] - L0[Λ3 φ_k]`.
    pub second: F,
}

#[derive(Clone, Debug)]
pub struct DualRow<F> {
    pub probe: String,
    pub residual: F,
}

#[derive(Clone, Debug)]
pub struct Rho1Relations {
    pub displayed: Vec<Rational>,
    pub own: Vec<Rational>,
    pub pair: PearsonPair,
}

impl Rho1Relations {
    pub fn displayed_holds(&self) -> bool {
        self.displayed.iter().all(|r| *r == int(0))
    }

    pub fn own_holds(&self) -> bool {
        self.own.iter().all(|r| *r == int(0))
    }
}

/// Zero test for a polynomial residual: every coefficient must pass.
pub fn poly_verdict<F: Field>(p: &Polynomial<F>, tol_bits: i64) -> Verdict {
    p.coeffs().iter().fold(Verdict::Pass, |acc, c| acc.and(c.residual_verdict(tol_bits)))
}
