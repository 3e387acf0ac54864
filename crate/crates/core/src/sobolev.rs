//! Discrete Sobolev inner product `⟨f,g⟩ = L0[fg] + λ L1[Δf Δg]` of a
//! coherent pair, its monic orthogonal polynomials `S_n`, and the connection
//! formulas
//!
//! ```text
//! S_{n+1} - γ_n S_n = P0_{n+1}
//! ΔS_{n+1} - γ_n ΔS_n = (n+1) [P1_n - τ_n P1_{n-1}]
//! ```
//!
//! The system is built on coordinates with respect to the MOPs of `L0`, with
//! `Δ` mapping them to coordinates on the MOPs of `L1`. Both maps come from
//! the recurrence coefficients, which keeps ball radii small in approximate
//! mode. [`sobolev_inner`] evaluates the product on moments directly.

use crate::coherence::CoherentPairCase;
use crate::error::{Error, Result};
use crate::linalg::{leading_pivots, Matrix};
use crate::poly::{Basis, Polynomial};
use crate::scalar::{Field, Rational, Verdict, ZeroTest};

/// `L0[fg] + λ L1[Δf Δg]`.
pub fn sobolev_inner<F: Field>(pair: &CoherentPairCase<F>, lambda: &F, f: &Polynomial<F>, g: &Polynomial<F>) -> Result<F> {
    let a = pair.l0.apply(&(f * g))?;
    if lambda.is_exact_zero() {
        return Ok(a);
    }
    let b = pair.l1.apply(&(&f.delta() * &g.delta()))?;
    Ok(a + lambda.clone() * b)
}

/// Verdict on every entry of a residual vector.
pub fn coords_verdict<F: Field>(v: &[F], tol_bits: i64) -> Verdict {
    v.iter().fold(Verdict::Pass, |a, c| a.and(c.residual_verdict(tol_bits)))
}

fn axpy<F: Field>(y: &mut Vec<F>, a: &F, x: &[F]) {
    if y.len() < x.len() {
        y.resize(x.len(), F::zero());
    }
    for (t, c) in y.iter_mut().zip(x) {
        *t = t.clone() + a.clone() * c.clone();
    }
}

fn unit<F: Field>(n: usize, len: usize) -> Vec<F> {
    let mut e = vec![F::zero(); len.max(n + 1)];
    e[n] = F::one();
    e
}

pub struct SobolevSystem<'a, F: Field> {
    pub pair: &'a CoherentPairCase<F>,
    pub lambda: Rational,
    /// Column `n` holds the coordinates of `ΔP0_n` on `P1_0, P1_1, …`.
    pub delta: Vec<Vec<F>>,
    /// `⟨P0_i, P0_j⟩` for `i, j <= nmax`.
    pub gram: Matrix<F>,
    /// Leading principal minors of `gram`. They equal those of the Gram
    /// matrix on `φ_0, φ_1, …` since the change of basis is unit triangular.
    pub minors: Vec<F>,
    /// Coordinates of `S_n` on `P0_0 … P0_n`.
    pub coords: Vec<Vec<F>>,
    /// Monic `S_0 … S_nmax` in the falling-factorial basis.
    pub s: Vec<Polynomial<F>>,
    /// `⟨S_n, S_n⟩`.
    pub norms: Vec<F>,
    /// `γ_0 … γ_{nmax-1}`.
    pub gamma: Vec<F>,
    pub nmax: usize,
}

/// Gram–Schmidt on `P0_0, P0_1, …`. Stops with `Degenerate` at the first
/// leading minor that is not certainly nonzero.
pub fn build_sobolev<'a, F: Field>(pair: &'a CoherentPairCase<F>, lambda: &Rational, nmax: usize) -> Result<SobolevSystem<'a, F>> {
    if nmax > pair.mops0.nmax || nmax > pair.mops1.nmax + 1 {
        return Err(Error::InvalidParameter(format!(
            "Sobolev degree {nmax} exceeds the MOPs of the pair (degrees {} and {})",
            pair.mops0.nmax, pair.mops1.nmax
        )));
    }
    let (m0, m1) = (&pair.mops0, &pair.mops1);
    let lambda_f = F::from_rational(lambda, pair.precision());

    // P0_j on the P1 basis, j < nmax
    let mut to1: Vec<Vec<F>> = vec![vec![F::one()]];
    for j in 0..nmax.saturating_sub(1) {
        let mut next = m1.coords_times_x(&to1[j])?;
        axpy(&mut next, &-m0.alpha[j].clone(), &to1[j]);
        if j >= 1 {
            axpy(&mut next, &-m0.beta[j].clone(), &to1[j - 1]);
        }
        to1.push(next);
    }
    let mut delta: Vec<Vec<F>> = Vec::with_capacity(nmax + 1);
    for n in 0..=nmax {
        let mut col = vec![F::zero(); n.max(1)];
        if n >= 1 {
            for (j, c) in m0.delta_coords(n)?.iter().enumerate() {
                axpy(&mut col, c, &to1[j]);
            }
        }
        delta.push(col);
    }

    let mut gram: Matrix<F> = vec![vec![F::zero(); nmax + 1]; nmax + 1];
    for i in 0..=nmax {
        for j in i..=nmax {
            let mut v = if i == j { m0.norms[i].clone() } else { F::zero() };
            if !lambda_f.is_exact_zero() {
                let d = m1.pair_coords(&delta[i], &delta[j]);
                v = v + lambda_f.clone() * d;
            }
            gram[i][j] = v.clone();
            gram[j][i] = v;
        }
    }
    let pivots = leading_pivots(gram.clone());
    let mut minors = Vec::with_capacity(pivots.len());
    let mut acc = F::one();
    for p in &pivots {
        acc = acc * p.clone();
        minors.push(acc.clone());
    }
    if let Some(k) = pivots.iter().position(|p| p.zero_test() != ZeroTest::NonZero) {
        return Err(Error::Degenerate(format!("Sobolev Gram minor of order {} is not certainly nonzero", k + 1)));
    }

    let bilinear = |f: &[F], g: &[F]| -> F {
        let mut a = F::zero();
        for (i, fi) in f.iter().enumerate() {
            for (j, gj) in g.iter().enumerate() {
                a = a + fi.clone() * gram[i][j].clone() * gj.clone();
            }
        }
        a
    };
    let mut coords: Vec<Vec<F>> = Vec::with_capacity(nmax + 1);
    let mut norms: Vec<F> = Vec::with_capacity(nmax + 1);
    for n in 0..=nmax {
        let e = unit::<F>(n, n + 1);
        let mut c = e.clone();
        for k in 0..n {
            let t = bilinear(&e, &coords[k]) / norms[k].clone();
            axpy(&mut c, &-t, &coords[k]);
        }
        norms.push(bilinear(&c, &c));
        coords.push(c);
    }
    let gamma: Vec<F> = (0..nmax)
        .map(|n| -(bilinear(&unit(n + 1, n + 2), &coords[n]) / norms[n].clone()))
        .collect();
    let s = coords
        .iter()
        .map(|c| {
            c.iter().enumerate().fold(Polynomial::zero(Basis::FallingFactorial), |a, (j, cj)| &a + &m0.poly(j).scale(cj))
        })
        .collect();
    Ok(SobolevSystem { pair, lambda: lambda.clone(), delta, gram, minors, coords, s, norms, gamma, nmax })
}

/// Residuals of both connection lines at one `n`: line 1 on the `P0`
/// basis, line 2 on the `P1` basis.
#[derive(Clone, Debug)]
pub struct ConnectionResidual<F> {
    pub n: usize,
    pub line1: Vec<F>,
    pub line2: Vec<F>,
    pub verdict: Verdict,
}

impl<'a, F: Field> SobolevSystem<'a, F> {
    /// `⟨f, g⟩` for coordinate vectors on the `P0` basis.
    pub fn inner_coords(&self, f: &[F], g: &[F]) -> F {
        let mut a = F::zero();
        for (i, fi) in f.iter().enumerate() {
            for (j, gj) in g.iter().enumerate() {
                a = a + fi.clone() * self.gram[i][j].clone() * gj.clone();
            }
        }
        a
    }

    /// Coordinates of `Δp` on the `P1` basis.
    pub fn delta_of(&self, c: &[F]) -> Vec<F> {
        let mut out = Vec::new();
        for (j, cj) in c.iter().enumerate() {
            axpy(&mut out, cj, &self.delta[j]);
        }
        out
    }

    /// `⟨S_k, S_n⟩` for `k < n <= nmax` as `(k, n, value)`.
    pub fn orthogonality(&self) -> Result<Vec<(usize, usize, F)>> {
        let mut out = Vec::new();
        for n in 0..=self.nmax {
            for k in 0..n {
                out.push((k, n, self.inner_coords(&self.coords[k], &self.coords[n])));
            }
        }
        Ok(out)
    }

    /// Coordinates of `S_n - P0_n` for every `n`, the `λ = 0` collapse.
    pub fn collapse_residuals(&self) -> Vec<Vec<F>> {
        (0..=self.nmax)
            .map(|n| {
                let mut r = self.coords[n].clone();
                r[n] = r[n].clone() - F::one();
                r
            })
            .collect()
    }

    /// Both connection lines at `n` (`1 <= n`, `n + 1 <= nmax`).
    pub fn connection_check(&self, n: usize) -> Result<ConnectionResidual<F>> {
        if n == 0 || n + 1 > self.nmax || n > self.pair.nmax {
            return Err(Error::InvalidParameter(format!("connection at n = {n} needs S and P1 to degree {}", n + 1)));
        }
        let g = &self.gamma[n];
        let mut line1 = self.coords[n + 1].clone();
        axpy(&mut line1, &-g.clone(), &self.coords[n]);
        line1[n + 1] = line1[n + 1].clone() - F::one();

        let mut line2 = self.delta_of(&self.coords[n + 1]);
        axpy(&mut line2, &-g.clone(), &self.delta_of(&self.coords[n]));
        let k = F::from_int(n as i64 + 1);
        line2[n] = line2[n].clone() - k.clone();
        line2[n - 1] = line2[n - 1].clone() + k * self.pair.tau(n)?;

        let tol = self.pair.tol_bits();
        let verdict = coords_verdict(&line1, tol).and(coords_verdict(&line2, tol));
        Ok(ConnectionResidual { n, line1, line2, verdict })
    }

    /// Coordinates of `S_1 - P0_1`.
    pub fn s1_residual(&self) -> Vec<F> {
        if self.nmax == 0 {
            return Vec::new();
        }
        let mut r = self.coords[1].clone();
        r[1] = r[1].clone() - F::one();
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::{build_case, CaseTag};
    use crate::linalg::solve;
    use crate::scalar::{int, rat, PrecReal, DEFAULT_PRECISION};
    use crate::weights::parse_params;

    fn iia(kv: &[&str], nmax: usize) -> CoherentPairCase<Rational> {
        build_case(CaseTag::IIa, &parse_params(kv).unwrap(), nmax, DEFAULT_PRECISION).unwrap()
    }

    #[test]
    fn inner_product_basics() {
        let c = iia(&["z=1/2", "omega=3/2"], 4);
        let lam = rat(1, 2);
        let one = Polynomial::<Rational>::one(Basis::Monomial);
        assert_eq!(sobolev_inner(&c, &lam, &one, &one).unwrap(), c.l0.moment(0).unwrap());
        let f = Polynomial::new(Basis::Monomial, vec![rat(1, 3), int(-2), int(1)]);
        let g = Polynomial::new(Basis::Monomial, vec![int(2), rat(5, 7)]);
        assert_eq!(sobolev_inner(&c, &lam, &f, &g).unwrap(), sobolev_inner(&c, &lam, &g, &f).unwrap());
        assert_eq!(sobolev_inner(&c, &int(0), &f, &g).unwrap(), c.l0.apply(&(&f * &g)).unwrap());
    }

    fn all_zero(v: &[Rational]) -> bool {
        v.iter().all(|c| *c == int(0))
    }

    #[test]
    fn connection_lines_exact() {
        let c = iia(&["z=1/2", "omega=3/2"], 9);
        for lam in [int(0), rat(1, 2), int(2)] {
            let sys = build_sobolev(&c, &lam, 9).unwrap();
            assert!(all_zero(&sys.s1_residual()));
            assert!(sys.orthogonality().unwrap().iter().all(|(_, _, v)| *v == int(0)));
            assert!(sys.minors.iter().all(|m| *m > int(0)));
            for n in 1..=8 {
                let r = sys.connection_check(n).unwrap();
                assert!(all_zero(&r.line1) && all_zero(&r.line2), "lambda={lam} n={n}");
            }
            if lam == int(0) {
                assert!(sys.collapse_residuals().iter().all(|p| all_zero(p)));
                assert!(sys.gamma.iter().all(|g| *g == int(0)));
            }
        }
    }

    #[test]
    fn moment_route_oracle() {
        // the polynomials from the coordinate route, checked on the moments
        let c = iia(&["z=2", "omega=5/3"], 8);
        let lam = rat(1, 2);
        let sys = build_sobolev(&c, &lam, 8).unwrap();
        for n in 0..=8 {
            for k in 0..n {
                assert_eq!(sobolev_inner(&c, &lam, &sys.s[k], &sys.s[n]).unwrap(), int(0), "k={k} n={n}");
            }
        }
        for n in 1..8 {
            let g = &sys.gamma[n];
            let line1 = &(&sys.s[n + 1] - &sys.s[n].scale(g)) - c.mops0.poly(n + 1);
            assert!(line1.is_zero());
            let lhs = &sys.s[n + 1].delta() - &sys.s[n].delta().scale(g);
            let rhs = &(c.mops1.poly(n) - &c.mops1.poly(n - 1).scale(&c.tau(n).unwrap())).scale(&int(n as i64 + 1));
            assert!((&lhs - rhs).is_zero(), "n={n}");
            let ip = sobolev_inner(&c, &lam, c.mops0.poly(n + 1), &sys.s[n]).unwrap();
            assert_eq!(*g, -(ip / sobolev_inner(&c, &lam, &sys.s[n], &sys.s[n]).unwrap()));
        }
    }

    #[test]
    fn s2_matches_dense_gram_oracle() {
        // dense Gram–Schmidt on {1, x, x²}: solve for the monic S_2
        let c = iia(&["z=1", "omega=2"], 3);
        let lam = rat(1, 2);
        let sys = build_sobolev(&c, &lam, 2).unwrap();
        let m = |k: usize| Polynomial::<Rational>::monomial(k);
        let ip = |i: usize, j: usize| sobolev_inner(&c, &lam, &m(i), &m(j)).unwrap();
        let a = vec![vec![ip(0, 0), ip(0, 1)], vec![ip(1, 0), ip(1, 1)]];
        let b = vec![-ip(0, 2), -ip(1, 2)];
        let x = solve(a, b).unwrap();
        let oracle = Polynomial::new(Basis::Monomial, vec![x[0].clone(), x[1].clone(), int(1)]);
        assert!(sys.s[2].same_as(&oracle));
    }

    #[test]
    fn case_i_connection_approx() {
        let c = build_case::<PrecReal>(CaseTag::I, &parse_params(&["b=1/2", "z=3/4"]).unwrap(), 9, DEFAULT_PRECISION).unwrap();
        let sys = build_sobolev(&c, &rat(1, 2), 9).unwrap();
        for n in 1..=8 {
            assert!(sys.connection_check(n).unwrap().verdict.is_pass(), "n={n}");
        }
    }
}
