//! Re-identification of a Christoffel transform `ρ1 = Λ3 ρ0` of a catalog
//! weight as another catalog weight.
//!
//! The ratio `ρ1(x)/ρ1(x-1)` is cancelled symbolically, with every shift an
//! affine form in the case parameters, then matched slot by slot against each
//! catalog family. Every candidate mapping is checked pointwise at the
//! concrete parameter values before it is reported.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Signed;
use serde::Serialize;

use crate::poly::Polynomial;
use crate::scalar::{int, rational_to_string, Rational};
use crate::weights::{make_family, FamilyTag, Params, RatioForm, WeightFamily};

/// Number of support points compared when verifying a mapping.
pub const VERIFY_POINTS: i64 = 60;

/// `c + Σ k_s · s` over named parameters.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Affine {
    terms: BTreeMap<String, Rational>,
    constant: Rational,
}

impl Affine {
    pub fn sym(name: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(name.to_string(), int(1));
        Affine { terms, constant: int(0) }
    }

    pub fn constant(c: Rational) -> Self {
        Affine { terms: BTreeMap::new(), constant: c }
    }

    pub fn shift(&self, c: i64) -> Self {
        Affine { terms: self.terms.clone(), constant: &self.constant + int(c) }
    }

    pub fn neg(&self) -> Self {
        Affine {
            terms: self.terms.iter().map(|(k, v)| (k.clone(), -v)).collect(),
            constant: -&self.constant,
        }
    }

    /// Same symbolic part, ignoring the constant.
    pub fn same_symbols(&self, other: &Affine) -> bool {
        self.terms == other.terms
    }

    /// `self - other` when the symbolic parts agree.
    pub fn offset_from(&self, other: &Affine) -> Option<Rational> {
        self.same_symbols(other).then(|| &self.constant - &other.constant)
    }

    pub fn eval(&self, params: &Params) -> Option<Rational> {
        let mut v = self.constant.clone();
        for (k, c) in &self.terms {
            v += c * params.get(k)?;
        }
        Some(v)
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |name: &str| if name == "omega" { "ω".to_string() } else { name.to_string() };
        let mut parts: Vec<(bool, String)> = Vec::new();
        for (k, c) in &self.terms {
            let mag = c.abs();
            let body = if mag == int(1) { show(k) } else { format!("{}{}", rational_to_string(&mag), show(k)) };
            parts.push((c.is_negative(), body));
        }
        if self.constant != int(0) || parts.is_empty() {
            let c = (self.constant.is_negative(), rational_to_string(&self.constant.abs()));
            // write `1-N` rather than `-N+1`
            if parts.first().is_some_and(|p| p.0) && !c.0 {
                parts.insert(0, c);
            } else {
                parts.push(c);
            }
        }
        for (i, (neg, body)) in parts.iter().enumerate() {
            match (i, neg) {
                (0, true) => write!(f, "-{body}")?,
                (0, false) => write!(f, "{body}")?,
                (_, true) => write!(f, "-{body}")?,
                (_, false) => write!(f, "+{body}")?,
            }
        }
        Ok(())
    }
}

pub type Mapping = Vec<(String, Affine)>;

pub fn format_mapping(m: &Mapping) -> String {
    m.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
}

/// A claimed companion: a catalog family and a partial parameter mapping.
#[derive(Clone, Debug)]
pub struct ClaimedMapping {
    pub tag: FamilyTag,
    pub mapping: Mapping,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum ClaimVerdict {
    Verified,
    Fails,
    NotApplicable(String),
}

#[derive(Clone, Debug)]
pub struct CompanionMatch {
    pub tag: FamilyTag,
    pub mapping: Mapping,
    pub family: WeightFamily,
}

#[derive(Clone, Debug)]
pub struct Identification {
    /// Numeric `ρ1(x)/ρ1(x-1)` at the concrete parameters.
    pub ratio: RatioForm,
    /// Symbolic numerator shifts after cancellation.
    pub numer: Vec<Affine>,
    /// Symbolic denominator shifts after cancellation (the `x` factor removed).
    pub denom: Vec<Affine>,
    /// Verified matches, best agreement with the claim first.
    pub matches: Vec<CompanionMatch>,
    pub claim: ClaimedMapping,
    pub claim_verdict: ClaimVerdict,
}

impl Identification {
    pub fn best(&self) -> Option<&CompanionMatch> {
        self.matches.first()
    }

    /// Per-parameter offsets of the best match relative to the claim, e.g.
    /// `a: +1`.
    pub fn shift_notes(&self) -> Vec<String> {
        let Some(best) = self.best() else { return Vec::new() };
        if best.tag != self.claim.tag {
            return vec![format!("family differs from claimed {}", self.claim.tag)];
        }
        let mut out = Vec::new();
        for (k, v) in &best.mapping {
            // unstated parameters carry over by name
            let c = match self.claim.mapping.iter().find(|(ck, _)| ck == k) {
                Some((_, c)) => Some(c.clone()),
                None => Some(Affine::sym(k)).filter(|c| v.same_symbols(c)),
            };
            if let Some(c) = c {
                match v.offset_from(&c) {
                    Some(d) if d == int(0) => {}
                    Some(d) => {
                        let sign = if d.is_negative() { "" } else { "+" };
                        out.push(format!("{k}: {sign}{}", rational_to_string(&d)));
                    }
                    None => out.push(format!("{k}: {v} instead of {c}")),
                }
            }
        }
        out
    }
}

fn slot_affine(slot: &str) -> Affine {
    if slot == "N" {
        Affine::sym("N").neg()
    } else {
        Affine::sym(slot)
    }
}

fn cancel(numer: &mut Vec<Affine>, denom: &mut Vec<Affine>) {
    let mut i = 0;
    while i < numer.len() {
        if let Some(j) = denom.iter().position(|d| *d == numer[i]) {
            numer.remove(i);
            denom.remove(j);
        } else {
            i += 1;
        }
    }
    numer.sort();
    denom.sort();
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

/// `ρ1(0..=VERIFY_POINTS)` for `ρ1 = Λ3 ρ0`.
fn transformed_weights(base: &WeightFamily, lambda3: &Polynomial<Rational>) -> Vec<Rational> {
    base.rho_table(VERIFY_POINTS as usize)
        .into_iter()
        .enumerate()
        .map(|(x, r)| lambda3.eval_int(x as i64) * r)
        .collect()
}

fn proportional(a: &[Rational], b: &[Rational]) -> bool {
    let (a0, b0) = (&a[0], &b[0]);
    if *a0 == int(0) || *b0 == int(0) {
        return false;
    }
    a.iter().zip(b).all(|(x, y)| x * b0 == y * a0)
}

fn check_mapping(tag: FamilyTag, mapping: &Mapping, params: &Params, rho1: &[Rational]) -> Option<WeightFamily> {
    let mut values = Params::new();
    for (k, v) in mapping {
        values.insert(k.clone(), v.eval(params)?);
    }
    let fam = make_family(tag, &values).ok()?;
    proportional(rho1, &fam.rho_table(VERIFY_POINTS as usize)).then_some(fam)
}

fn claim_score(tag: FamilyTag, m: &Mapping, claim: &ClaimedMapping) -> usize {
    if tag != claim.tag {
        return 0;
    }
    m.iter()
        .filter(|(k, v)| claim.mapping.iter().any(|(ck, cv)| ck == k && cv.same_symbols(v)))
        .count()
}

/// Identify `ρ1 = q φ0 ρ0`, where `q = x + root` (or `q = 1`) and `φ0` is the
/// catalog `φ` of the base family, so the roots of `Λ3` are the base
/// numerator parameters plus `root`.
pub fn identify(
    base: &WeightFamily,
    q_root: Option<&str>,
    lambda3: &Polynomial<Rational>,
    params: &Params,
    claim: ClaimedMapping,
) -> Identification {
    let tag = base.tag();
    let alphas: Vec<Affine> = tag.numerator_slots().iter().map(|s| slot_affine(s)).collect();
    let betas: Vec<Affine> = tag.denominator_slots().iter().map(|s| slot_affine(s)).collect();
    let mut roots = alphas.clone();
    if let Some(r) = q_root {
        roots.push(Affine::sym(r));
    }
    let mut numer: Vec<Affine> = alphas.iter().map(|a| a.shift(-1)).chain(roots.iter().cloned()).collect();
    let mut denom: Vec<Affine> = std::iter::once(Affine::constant(int(0)))
        .chain(betas.iter().cloned())
        .chain(roots.iter().map(|r| r.shift(-1)))
        .collect();
    cancel(&mut numer, &mut denom);
    let has_x = denom.iter().position(|d| *d == Affine::constant(int(0)));
    let z_sym = if tag.has_z() { Affine::sym("z") } else { Affine::constant(int(1)) };

    let ratio = {
        let ev = |v: &[Affine]| v.iter().filter_map(|a| a.eval(params)).collect::<Vec<_>>();
        let mut d = denom.clone();
        if let Some(i) = has_x {
            d.remove(i);
        }
        let mut full = ev(&d);
        if has_x.is_some() {
            full.push(int(0));
        }
        RatioForm::from_factors(base.z().clone(), ev(&numer), full)
    };

    let rho1 = transformed_weights(base, lambda3);
    let mut matches: Vec<(usize, CompanionMatch)> = Vec::new();
    if let Some(i) = has_x {
        let mut den = denom.clone();
        den.remove(i);
        for cand in FamilyTag::ALL {
            let (ns, ds) = (cand.numerator_slots(), cand.denominator_slots());
            if ns.len() != numer.len() || ds.len() != den.len() {
                continue;
            }
            for pn in permutations(&numer) {
                for pd in permutations(&den) {
                    let mut mapping: Mapping = Vec::new();
                    for name in cand.parameters() {
                        let v = if let Some(j) = ns.iter().position(|s| s == name) {
                            // slot parameter α with (x - 1 + α) = (x + u)
                            let alpha = pn[j].shift(1);
                            if *name == "N" {
                                alpha.neg()
                            } else {
                                alpha
                            }
                        } else if let Some(j) = ds.iter().position(|s| s == name) {
                            pd[j].clone()
                        } else {
                            z_sym.clone()
                        };
                        mapping.push((name.to_string(), v));
                    }
                    if !cand.has_z() && base.z() != &int(1) {
                        continue;
                    }
                    if matches.iter().any(|(_, m)| m.tag == cand && m.mapping == mapping) {
                        continue;
                    }
                    if let Some(family) = check_mapping(cand, &mapping, params, &rho1) {
                        let score = claim_score(cand, &mapping, &claim);
                        matches.push((score, CompanionMatch { tag: cand, mapping, family }));
                    }
                }
            }
        }
    }
    matches.sort_by_key(|m| std::cmp::Reverse(m.0));
    let claim_verdict = check_claim(&claim, params, &rho1);
    Identification {
        ratio,
        numer,
        denom: match has_x {
            Some(i) => {
                let mut d = denom;
                d.remove(i);
                d
            }
            None => denom,
        },
        matches: matches.into_iter().map(|(_, m)| m).collect(),
        claim,
        claim_verdict,
    }
}

fn check_claim(claim: &ClaimedMapping, params: &Params, rho1: &[Rational]) -> ClaimVerdict {
    let names = claim.tag.parameters();
    if let Some((k, _)) = claim.mapping.iter().find(|(k, _)| !names.contains(&k.as_str())) {
        return ClaimVerdict::NotApplicable(format!("{} has no parameter `{k}`", claim.tag));
    }
    let mut full: Mapping = Vec::new();
    for name in names {
        match claim.mapping.iter().find(|(k, _)| k == name) {
            Some((_, v)) => full.push((name.to_string(), v.clone())),
            // unstated parameters carry over by name
            None if params.contains_key(*name) => full.push((name.to_string(), Affine::sym(name))),
            None => return ClaimVerdict::NotApplicable(format!("`{name}` of {} is not determined", claim.tag)),
        }
    }
    let mut values = Params::new();
    for (k, v) in &full {
        match v.eval(params) {
            Some(q) => {
                values.insert(k.clone(), q);
            }
            None => return ClaimVerdict::NotApplicable(format!("`{k}` refers to an unknown parameter")),
        }
    }
    match make_family(claim.tag, &values) {
        Err(e) => ClaimVerdict::NotApplicable(e.to_string()),
        Ok(fam) => {
            if proportional(rho1, &fam.rho_table(VERIFY_POINTS as usize)) {
                ClaimVerdict::Verified
            } else {
                ClaimVerdict::Fails
            }
        }
    }
}
