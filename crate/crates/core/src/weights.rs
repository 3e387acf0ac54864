//! The nine catalog weights, their Pearson pairs, and parameter validation.
//!
//! Every catalog weight is a hypergeometric term
//!
//! ```text
//! ρ(x) = ∏ (α_i)_x / ∏ (β_j + 1)_x · z^x / x!
//! ```
//!
//! so `ρ(x)/ρ(x-1) = z ∏(x - 1 + α_i) / (x ∏(x + β_j))` and `ρ(0) = 1`.
//! Weights are evaluated through that ratio, one step per point.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Basis, Polynomial};
use crate::scalar::{int, parse_rational, rational_to_string, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FamilyTag {
    Charlier,
    Meixner,
    Kravchuk,
    Hahn,
    GenCharlier,
    GenMeixner,
    GenKravchuk,
    GenHahnI,
    GenHahnII,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 9] = [
        FamilyTag::Charlier,
        FamilyTag::Meixner,
        FamilyTag::Kravchuk,
        FamilyTag::Hahn,
        FamilyTag::GenCharlier,
        FamilyTag::GenMeixner,
        FamilyTag::GenKravchuk,
        FamilyTag::GenHahnI,
        FamilyTag::GenHahnII,
    ];

    /// Name used on the command line and in reports.
    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::Charlier => "charlier",
            FamilyTag::Meixner => "meixner",
            FamilyTag::Kravchuk => "kravchuk",
            FamilyTag::Hahn => "hahn",
            FamilyTag::GenCharlier => "gen-charlier",
            FamilyTag::GenMeixner => "gen-meixner",
            FamilyTag::GenKravchuk => "gen-kravchuk",
            FamilyTag::GenHahnI => "gen-hahn-i",
            FamilyTag::GenHahnII => "gen-hahn-ii",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            FamilyTag::Charlier => "Charlier",
            FamilyTag::Meixner => "Meixner",
            FamilyTag::Kravchuk => "Kravchuk",
            FamilyTag::Hahn => "Hahn",
            FamilyTag::GenCharlier => "generalized Charlier",
            FamilyTag::GenMeixner => "generalized Meixner",
            FamilyTag::GenKravchuk => "generalized Kravchuk",
            FamilyTag::GenHahnI => "generalized Hahn of type I",
            FamilyTag::GenHahnII => "generalized Hahn of type II",
        }
    }

    /// Parameter names the family takes, in canonical order.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            FamilyTag::Charlier => &["z"],
            FamilyTag::Meixner => &["a", "z"],
            FamilyTag::Kravchuk => &["N", "z"],
            FamilyTag::Hahn => &["N", "a", "b"],
            FamilyTag::GenCharlier => &["b", "z"],
            FamilyTag::GenMeixner => &["a", "b", "z"],
            FamilyTag::GenKravchuk => &["N", "a", "z"],
            FamilyTag::GenHahnI => &["a1", "a2", "b", "z"],
            FamilyTag::GenHahnII => &["N", "a1", "a2", "b1", "b2"],
        }
    }

    /// Numerator Pochhammer parameters, as parameter names (`-N` for `N`).
    pub fn numerator_slots(self) -> &'static [&'static str] {
        match self {
            FamilyTag::Charlier | FamilyTag::GenCharlier => &[],
            FamilyTag::Meixner | FamilyTag::GenMeixner => &["a"],
            FamilyTag::Kravchuk => &["N"],
            FamilyTag::Hahn | FamilyTag::GenKravchuk => &["N", "a"],
            FamilyTag::GenHahnI => &["a1", "a2"],
            FamilyTag::GenHahnII => &["N", "a1", "a2"],
        }
    }

    pub fn denominator_slots(self) -> &'static [&'static str] {
        match self {
            FamilyTag::Charlier | FamilyTag::Meixner | FamilyTag::Kravchuk | FamilyTag::GenKravchuk => &[],
            FamilyTag::Hahn | FamilyTag::GenCharlier | FamilyTag::GenMeixner | FamilyTag::GenHahnI => &["b"],
            FamilyTag::GenHahnII => &["b1", "b2"],
        }
    }

    pub fn has_z(self) -> bool {
        self.parameters().contains(&"z")
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        FamilyTag::ALL
            .into_iter()
            .find(|t| t.name() == key)
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

/// Named rational parameters, kept sorted so that output is deterministic.
pub type Params = BTreeMap<String, Rational>;

/// Parse `k=v` assignments (values as `p` or `p/q`).
pub fn parse_params<S: AsRef<str>>(items: &[S]) -> Result<Params> {
    let mut out = Params::new();
    for item in items {
        let item = item.as_ref();
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("`{item}` is not of the form name=value")))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::InvalidParameter(format!("`{item}` has an empty name")));
        }
        if out.insert(k.to_string(), parse_rational(v)?).is_some() {
            return Err(Error::InvalidParameter(format!("parameter `{k}` given twice")));
        }
    }
    Ok(out)
}

pub fn format_params(p: &Params) -> String {
    p.iter().map(|(k, v)| format!("{k}={}", rational_to_string(v))).collect::<Vec<_>>().join(" ")
}

/// A validated catalog weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightFamily {
    tag: FamilyTag,
    params: Params,
    numer: Vec<Rational>,
    denom: Vec<Rational>,
    z: Rational,
}

pub fn make_family(tag: FamilyTag, params: &Params) -> Result<WeightFamily> {
    let fam = tag.name().to_string();
    for k in params.keys() {
        if !tag.parameters().contains(&k.as_str()) {
            return Err(Error::UnexpectedParameter { family: fam, name: k.clone() });
        }
    }
    let get = |name: &str| -> Result<Rational> {
        params
            .get(name)
            .cloned()
            .ok_or_else(|| Error::MissingParameter { family: fam.clone(), name: name.to_string() })
    };
    if tag.parameters().contains(&"N") {
        let n = get("N")?;
        if !n.is_integer() || !n.is_positive() {
            return Err(Error::InvalidParameter(format!(
                "{fam}: N = {} must be a positive integer",
                rational_to_string(&n)
            )));
        }
    }
    let z = if tag.has_z() { get("z")? } else { int(1) };
    if z.is_zero() {
        return Err(Error::InvalidParameter(format!("{fam}: z must be nonzero")));
    }
    let numer = tag
        .numerator_slots()
        .iter()
        .map(|s| get(s).map(|v| if *s == "N" { -v } else { v }))
        .collect::<Result<Vec<_>>>()?;
    let denom = tag.denominator_slots().iter().map(|s| get(s)).collect::<Result<Vec<_>>>()?;
    for (s, b) in tag.denominator_slots().iter().zip(&denom) {
        if b.is_integer() && *b <= int(-1) {
            return Err(Error::InvalidParameter(format!(
                "{fam}: {s} = {} puts a pole in the weight ((b+1)_x vanishes at x = {})",
                rational_to_string(b),
                rational_to_string(&-b)
            )));
        }
    }
    let family = WeightFamily { tag, params: params.clone(), numer, denom, z };
    let pair = pearson_data(&family);
    if pair.psi.degree().unwrap_or(0) < 1 {
        return Err(Error::InvalidParameter(format!(
            "{fam}: psi = {} must have degree at least 1",
            pair.psi
        )));
    }
    Ok(family)
}

impl WeightFamily {
    pub fn tag(&self) -> FamilyTag {
        self.tag
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<&Rational> {
        self.params.get(name)
    }

    /// Parameter value; panics if the family does not take `name`.
    fn p(&self, name: &str) -> Rational {
        self.params[name].clone()
    }

    pub fn z(&self) -> &Rational {
        &self.z
    }

    /// Largest `x` with `ρ(x)` possibly nonzero; `None` for infinite support.
    pub fn support_top(&self) -> Option<u64> {
        self.numer
            .iter()
            .filter(|a| a.is_integer() && !a.is_positive())
            .filter_map(|a| (-a).to_integer().to_u64())
            .min()
    }

    /// `ρ(x) / ρ(x-1)` in factored form.
    pub fn ratio_form(&self) -> RatioForm {
        RatioForm::new(
            self.z.clone(),
            self.numer.iter().map(|a| a - int(1)).collect(),
            self.denom.clone(),
        )
    }

    /// `ρ(x)` for `x >= -1`, with `ρ(-1) = 0`.
    pub fn rho(&self, x: i64) -> Rational {
        if x < 0 {
            return Rational::zero();
        }
        self.rho_table(x as usize).pop().unwrap_or_else(Rational::zero)
    }

    /// `ρ(0), …, ρ(xmax)`.
    pub fn rho_table(&self, xmax: usize) -> Vec<Rational> {
        let mut out = Vec::with_capacity(xmax + 1);
        let mut r = Rational::one();
        out.push(r.clone());
        for x in 1..=xmax {
            if !r.is_zero() {
                r *= self.step_ratio(x as i64);
            }
            out.push(r.clone());
        }
        out
    }

    /// `ρ(x)/ρ(x-1)` at an integer `x >= 1`.
    pub fn step_ratio(&self, x: i64) -> Rational {
        let xq = int(x);
        let mut num = self.z.clone();
        for a in &self.numer {
            num *= &xq - int(1) + a;
        }
        let mut den = xq.clone();
        for b in &self.denom {
            den *= &xq + b;
        }
        num / den
    }

    /// Numerator Pochhammer parameters `α_i` (with `-N` for `N`).
    pub(crate) fn numerator(&self) -> &[Rational] {
        &self.numer
    }

    /// Denominator parameters `β_j` of `(β_j + 1)_x`.
    pub(crate) fn denominator(&self) -> &[Rational] {
        &self.denom
    }
}

impl fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self
            .tag
            .parameters()
            .iter()
            .map(|k| format!("{k}={}", rational_to_string(&self.params[*k])))
            .collect();
        write!(f, "{}({})", self.tag, ps.join(", "))
    }
}

/// Canonical factored form of a weight ratio
/// `ρ(x)/ρ(x-1) = z ∏(x + u_i) / ∏(x + v_j)`.
///
/// The `x` from `x!` is stored explicitly as a zero shift in `denom`; common
/// factors are cancelled and both shift lists are sorted, so two ratios are
/// equal as rational functions exactly when their forms are equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioForm {
    pub z: Rational,
    pub numer: Vec<Rational>,
    pub denom: Vec<Rational>,
}

impl RatioForm {
    /// `z ∏(x + u) / (x ∏(x + v))`.
    pub fn new(z: Rational, numer: Vec<Rational>, mut denom: Vec<Rational>) -> Self {
        denom.push(Rational::zero());
        Self::from_factors(z, numer, denom)
    }

    /// `z ∏(x + u) / ∏(x + v)` with the full denominator given.
    pub fn from_factors(z: Rational, mut numer: Vec<Rational>, mut denom: Vec<Rational>) -> Self {
        let mut i = 0;
        while i < numer.len() {
            if let Some(j) = denom.iter().position(|v| *v == numer[i]) {
                numer.swap_remove(i);
                denom.swap_remove(j);
            } else {
                i += 1;
            }
        }
        numer.sort();
        denom.sort();
        RatioForm { z, numer, denom }
    }

    pub fn eval(&self, x: i64) -> Rational {
        let xq = int(x);
        let num = self.numer.iter().fold(self.z.clone(), |acc, u| acc * (&xq + u));
        let den = self.denom.iter().fold(Rational::one(), |acc, v| acc * (&xq + v));
        num / den
    }

    /// Pearson pair `(φ, ψ)` read off the ratio: `φ(x-1) = ∏(x + u_i)` and
    /// `φ + ψ = ∏(x + v_j) / z`.
    pub fn pearson_pair(&self) -> (Polynomial<Rational>, Polynomial<Rational>) {
        let one = Polynomial::<Rational>::one(Basis::Monomial);
        let phi = self.numer.iter().fold(one.clone(), |acc, u| &acc * &lin(u + int(1)));
        let sum = self.denom.iter().fold(one, |acc, v| &acc * &lin(v.clone()));
        let psi = &sum.scale(&self.z.recip()) - &phi;
        (phi, psi)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Admissibility {
    /// `deg φ != deg ψ + 1`; the condition does not apply.
    NotApplicable,
    Holds,
    Violated { n: u64 },
}

/// Pearson data `∇(φρ) + ψρ = 0` of a weight.
#[derive(Clone, Debug)]
pub struct PearsonPair {
    pub phi: Polynomial<Rational>,
    pub psi: Polynomial<Rational>,
    pub class_s: u32,
    pub admissibility: Admissibility,
}

impl PearsonPair {
    pub fn new(phi: Polynomial<Rational>, psi: Polynomial<Rational>) -> Self {
        let phi = phi.to_monomial();
        let psi = psi.to_monomial();
        let d1 = phi.degree().map_or(-1, |d| d as i64);
        let d2 = psi.degree().map_or(-1, |d| d as i64);
        let class_s = (d1 - 2).max(d2 - 1).max(0) as u32;
        let admissibility = if d1 == d2 + 1 && d1 == class_s as i64 + 2 {
            // ψ_{d2} must avoid n - s for n = 0, 1, 2, …
            let shifted = psi.leading() + int(class_s as i64);
            match shifted.is_integer().then(|| shifted.to_integer().to_u64()).flatten() {
                Some(n) => Admissibility::Violated { n },
                None => Admissibility::Holds,
            }
        } else {
            Admissibility::NotApplicable
        };
        PearsonPair { phi, psi, class_s, admissibility }
    }

    pub fn check_admissible(&self) -> Result<()> {
        match self.admissibility {
            Admissibility::Violated { n } => Err(Error::Inadmissible { n }),
            _ => Ok(()),
        }
    }

    pub fn d1(&self) -> usize {
        self.phi.degree().unwrap_or(0)
    }

    pub fn d2(&self) -> usize {
        self.psi.degree().unwrap_or(0)
    }
}

fn lin(c: Rational) -> Polynomial<Rational> {
    // x + c
    Polynomial::linear(-c, Basis::Monomial)
}

fn poly(coeffs: Vec<Rational>) -> Polynomial<Rational> {
    Polynomial::new(Basis::Monomial, coeffs)
}

/// Catalog Pearson pair of a family, written out family by family.
pub fn pearson_data(f: &WeightFamily) -> PearsonPair {
    let one = Polynomial::<Rational>::one(Basis::Monomial);
    let x = Polynomial::<Rational>::monomial(1);
    let (phi, psi) = match f.tag {
        FamilyTag::Charlier => {
            let z = f.p("z");
            (one, poly(vec![int(-1), z.recip()]))
        }
        FamilyTag::Meixner => {
            let (a, z) = (f.p("a"), f.p("z"));
            let phi = lin(a);
            let psi = &x.scale(&z.recip()) - &phi;
            (phi, psi)
        }
        FamilyTag::Kravchuk => {
            let (n, z) = (f.p("N"), f.p("z"));
            let phi = lin(-n);
            let psi = &x.scale(&z.recip()) - &phi;
            (phi, psi)
        }
        FamilyTag::Hahn => {
            let (n, a, b) = (f.p("N"), f.p("a"), f.p("b"));
            let phi = &lin(-n.clone()) * &lin(a.clone());
            let psi = poly(vec![&a * &n, &n - &a + &b]);
            (phi, psi)
        }
        FamilyTag::GenCharlier => {
            let (b, z) = (f.p("b"), f.p("z"));
            let psi = &(&x * &lin(b)).scale(&z.recip()) - &one;
            (one, psi)
        }
        FamilyTag::GenMeixner => {
            let (a, b, z) = (f.p("a"), f.p("b"), f.p("z"));
            let phi = lin(a);
            let psi = &(&x * &lin(b)).scale(&z.recip()) - &phi;
            (phi, psi)
        }
        FamilyTag::GenKravchuk => {
            let (n, a, z) = (f.p("N"), f.p("a"), f.p("z"));
            let phi = &lin(-n) * &lin(a);
            let psi = &x.scale(&z.recip()) - &phi;
            (phi, psi)
        }
        FamilyTag::GenHahnI => {
            let (a1, a2, b, z) = (f.p("a1"), f.p("a2"), f.p("b"), f.p("z"));
            let phi = &lin(a1) * &lin(a2);
            let psi = &(&x * &lin(b)).scale(&z.recip()) - &phi;
            (phi, psi)
        }
        FamilyTag::GenHahnII => {
            let (n, a1, a2, b1, b2) = (f.p("N"), f.p("a1"), f.p("a2"), f.p("b1"), f.p("b2"));
            let phi = &(&lin(-n.clone()) * &lin(a1.clone())) * &lin(a2.clone());
            let psi = poly(vec![
                &n * &a1 * &a2,
                &n * &a1 + &n * &a2 - &a1 * &a2 + &b1 * &b2,
                &n - &a1 - &a2 + &b1 + &b2,
            ]);
            (phi, psi)
        }
    };
    PearsonPair::new(phi, psi)
}

/// `∇(φρ)(x) + ψ(x)ρ(x)` for an arbitrary pair.
pub fn pearson_residual_with(f: &WeightFamily, pair: &PearsonPair, x: i64) -> Rational {
    let r = f.rho_table(x.max(0) as usize);
    let rho = |t: i64| if t < 0 { Rational::zero() } else { r[t as usize].clone() };
    pair.phi.eval_int(x) * rho(x) - pair.phi.eval_int(x - 1) * rho(x - 1) + pair.psi.eval_int(x) * rho(x)
}

pub fn pearson_residual(f: &WeightFamily, x: i64) -> Rational {
    pearson_residual_with(f, &pearson_data(f), x)
}

/// Residuals for `0 <= x <= xmax`, sharing one weight table.
pub fn pearson_residuals(f: &WeightFamily, pair: &PearsonPair, xmax: usize) -> Vec<Rational> {
    let r = f.rho_table(xmax);
    (0..=xmax as i64)
        .map(|x| {
            let prev = if x == 0 { Rational::zero() } else { r[x as usize - 1].clone() };
            let cur = &r[x as usize];
            pair.phi.eval_int(x) * cur - pair.phi.eval_int(x - 1) * prev + pair.psi.eval_int(x) * cur
        })
        .collect()
}
