//! Verification campaigns behind the `dcpair` binary.
//!
//! Exit codes: 0 when every check passed, 1 when any check failed or was
//! inconclusive, 2 on invalid input.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::coherence::{build_case, poly_verdict, CaseTag, CoherentPairCase, DisplayedLambda3};
use crate::error::{Error, Result};
use crate::fixtures::{load_fixtures, parse_fixtures, Fixture, DEFAULT_FIXTURES};
use crate::functionals::{MomentFunctional, MomentStrategy};
use crate::identify::{format_mapping, ClaimVerdict};
use crate::mops::{build_mops, compare_paths, hankel_mops, prop2_check, structure_table, tolerance_bits};
use crate::poly::Polynomial;
use crate::report::{max_residual_string, poly_residual_string, scalar_string, CheckResult, ClassifyRow, Report};
use crate::scalar::{int, parse_rational, rat, rational_to_string, Field, Mode, PrecReal, Rational, Verdict, DEFAULT_PRECISION};
use crate::sobolev::{build_sobolev, coords_verdict};
use crate::weights::{make_family, parse_params, pearson_data, pearson_residuals, FamilyTag, Params};

/// Default worker count when `--workers` is not given.
pub const WORKERS_ENV: &str = "DCPAIR_WORKERS";

/// Degree of the functional relations checked for every coherent pair.
pub const RELATION_DEGREE: usize = 20;
/// Largest `n` for the dual identity and the Sobolev connection.
pub const DUAL_NMAX: usize = 8;
/// Random probes per `n` in the dual identity.
pub const DUAL_RANDOM_PROBES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Pearson,
    Structure,
    Mops,
    Coherence,
    Sobolev,
    ClassifyTable,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pearson => "pearson",
            Command::Structure => "structure",
            Command::Mops => "mops",
            Command::Coherence => "coherence",
            Command::Sobolev => "sobolev",
            Command::ClassifyTable => "classify-table",
        }
    }

    pub fn all() -> [Command; 6] {
        [Command::Pearson, Command::Structure, Command::Mops, Command::Coherence, Command::Sobolev, Command::ClassifyTable]
    }

    fn default_nmax(self) -> usize {
        match self {
            Command::Structure => 10,
            Command::Sobolev => DUAL_NMAX + 1,
            _ => 12,
        }
    }
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Command> {
        Command::all()
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown command `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Approx,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub family: Option<FamilyTag>,
    pub case: Option<CaseTag>,
    pub params: Params,
    pub xmax: usize,
    pub nmax: Option<usize>,
    pub mode: Mode,
    pub lambdas: Vec<Rational>,
    pub fixtures: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            family: None,
            case: None,
            params: Params::new(),
            xmax: 100,
            nmax: None,
            mode: Mode::Exact,
            lambdas: vec![int(0), rat(1, 2), int(2)],
            fixtures: None,
            out: None,
            format: None,
            workers: None,
        }
    }

    pub fn nmax(&self) -> usize {
        self.nmax.unwrap_or(self.command.default_nmax())
    }

    fn format(&self) -> Format {
        self.format.unwrap_or_else(|| match self.out.as_ref().and_then(|p| p.extension()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        })
    }

    /// Settings that determine the results; output location and worker
    /// count are left out so that reports are comparable across machines.
    pub fn to_json(&self) -> serde_json::Value {
        let params: serde_json::Map<String, serde_json::Value> =
            self.params.iter().map(|(k, v)| (k.clone(), json!(rational_to_string(v)))).collect();
        json!({
            "command": self.command.name(),
            "family": self.family.map(|f| f.name()),
            "case": self.case.map(|c| c.name()),
            "params": params,
            "xmax": self.xmax,
            "nmax": self.nmax(),
            "mode": self.mode.to_string(),
            "precision": self.mode.precision(),
            "lambdas": self.lambdas.iter().map(rational_to_string).collect::<Vec<_>>(),
            "fixtures": self.fixtures.as_ref().map(|p| p.display().to_string()),
        })
    }

    fn validate(&self) -> Result<()> {
        match self.command {
            Command::Pearson | Command::Structure | Command::Mops => {
                if self.family.is_none() {
                    return Err(Error::InvalidParameter(format!("`verify {}` needs --family", self.command.name())));
                }
                if self.case.is_some() {
                    return Err(Error::InvalidParameter("--case applies to coherence, sobolev and classify-table".into()));
                }
            }
            Command::Coherence | Command::Sobolev | Command::ClassifyTable => {
                if self.family.is_some() {
                    return Err(Error::InvalidParameter("--family applies to pearson, structure and mops".into()));
                }
                if self.case.is_some() && self.fixtures.is_some() {
                    return Err(Error::InvalidParameter("give either --case or --fixtures, not both".into()));
                }
                if self.case.is_none() && !self.params.is_empty() {
                    return Err(Error::InvalidParameter("--param needs --case".into()));
                }
            }
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("--workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Parameter points for the pair commands: the explicit case, or the
    /// fixture file (the shipped one by default).
    fn points(&self) -> Result<Vec<Fixture>> {
        if let Some(case) = self.case {
            return Ok(vec![Fixture { line: 0, case, params: self.params.clone(), nmax: self.nmax(), mode: self.mode }]);
        }
        let mut f = match &self.fixtures {
            Some(p) => load_fixtures(p)?,
            None => parse_fixtures(DEFAULT_FIXTURES)?,
        };
        if let Some(n) = self.nmax {
            for x in &mut f {
                x.nmax = n;
            }
        }
        Ok(f)
    }
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| dispatch(cfg))
}

fn dispatch(cfg: &RunConfig) -> Result<Report> {
    let command = match cfg.command {
        Command::ClassifyTable => "classify-table".to_string(),
        c => format!("verify {}", c.name()),
    };
    let with_mode = |exact: &dyn Fn() -> Result<Vec<CheckResult>>, approx: &dyn Fn() -> Result<Vec<CheckResult>>| match cfg.mode {
        Mode::Exact => exact(),
        Mode::Approx { .. } => approx(),
    };
    let prec = cfg.mode.precision();
    let results = match cfg.command {
        Command::Pearson => pearson_job(cfg)?,
        Command::Structure => with_mode(&|| structure_job::<Rational>(cfg, prec), &|| structure_job::<PrecReal>(cfg, prec))?,
        Command::Mops => with_mode(&|| mops_job::<Rational>(cfg, prec), &|| mops_job::<PrecReal>(cfg, prec))?,
        Command::Coherence => fan_out(&cfg.points()?, coherence_job)?,
        Command::Sobolev => {
            let top = cfg.nmax.unwrap_or(DUAL_NMAX + 1);
            fan_out(&cfg.points()?, |f| sobolev_job(f, &cfg.lambdas, top))?
        }
        Command::ClassifyTable => {
            let (rows, results) = classify_job(cfg)?;
            let mut r = Report::new(&command, cfg.to_json(), results);
            r.table = Some(rows);
            return Ok(r);
        }
    };
    Ok(Report::new(&command, cfg.to_json(), results))
}

fn fan_out(points: &[Fixture], job: impl Fn(&Fixture) -> Result<Vec<CheckResult>> + Sync + Send) -> Result<Vec<CheckResult>> {
    let parts: Vec<Result<Vec<CheckResult>>> = points.par_iter().map(job).collect();
    let mut out = Vec::new();
    for (p, r) in points.iter().zip(parts) {
        match r {
            Ok(v) => out.extend(v),
            Err(e) if p.line > 0 => return Err(Error::Fixture { line: p.line, msg: e.to_string() }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// A check whose evaluation itself failed becomes a failing row.
fn guarded(check: &str, subject: &str, n: Option<i64>, f: impl FnOnce() -> Result<CheckResult>) -> CheckResult {
    f().unwrap_or_else(|e| CheckResult::new(check, subject, n, Verdict::Fail, String::new()).with_notes(e.to_string()))
}

fn family_of(cfg: &RunConfig) -> Result<crate::weights::WeightFamily> {
    make_family(cfg.family.expect("validated"), &cfg.params)
}

fn pearson_job(cfg: &RunConfig) -> Result<Vec<CheckResult>> {
    let fam = family_of(cfg)?;
    let pair = pearson_data(&fam);
    let subject = fam.to_string();
    let note = format!("phi = {}, psi = {}, s = {}", poly_string(&pair.phi), poly_string(&pair.psi), pair.class_s);
    Ok(pearson_residuals(&fam, &pair, cfg.xmax)
        .into_iter()
        .enumerate()
        .map(|(x, r)| {
            let status = Verdict::from_bool(r == int(0));
            let row = CheckResult::new("pearson", &subject, Some(x as i64), status, rational_to_string(&r));
            if x == 0 {
                row.with_notes(note.clone())
            } else {
                row
            }
        })
        .collect())
}

fn poly_string(p: &Polynomial<Rational>) -> String {
    let m = p.to_monomial();
    if m.is_zero() {
        return "0".into();
    }
    let mut parts = Vec::new();
    for (k, c) in m.coeffs().iter().enumerate().rev() {
        if *c == int(0) {
            continue;
        }
        let c = rational_to_string(c);
        parts.push(match k {
            0 => c,
            1 => format!("{c}*x"),
            _ => format!("{c}*x^{k}"),
        });
    }
    parts.join(" + ").replace("+ -", "- ")
}

fn structure_job<F: Field>(cfg: &RunConfig, precision: u32) -> Result<Vec<CheckResult>> {
    let fam = family_of(cfg)?;
    let pair = pearson_data(&fam);
    pair.check_admissible()?;
    let l = MomentFunctional::<F>::from_family(fam.clone(), precision)?;
    let nmax = cfg.nmax();
    let mops = build_mops(&l, nmax + pair.d1().max(1))?;
    let subject = fam.to_string();
    let s = pair.class_s as usize;
    let top = nmax.min(mops.nmax.saturating_sub(pair.d1().max(1)));
    let mut results: Vec<CheckResult> = Vec::new();
    if top < nmax {
        results.push(
            CheckResult::new("truncation", &subject, None, Verdict::Pass, String::new())
                .with_notes(format!("MOPs end at degree {}; structure checked for n <= {top}", mops.nmax)),
        );
    }
    results.extend(((s + 1)..=top)
        .into_par_iter()
        .map(|n| {
            guarded("structure", &subject, Some(n as i64), || {
                let t = structure_table(&mops, &pair, n)?;
                let residual = t.worst_lower.as_ref().map(scalar_string).unwrap_or_else(|| "0".into());
                Ok(CheckResult::new("structure", &subject, Some(n as i64), t.verdict(), residual).with_notes(format!(
                    "eps[n-s] = {}, closed form {}",
                    scalar_string(&t.eps[n - s]),
                    scalar_string(&t.anchor_closed_form)
                )))
            })
        })
        .collect::<Vec<_>>());
    results.extend((1..=nmax.min(mops.nmax)).into_par_iter().map(|n| {
        guarded("prop2", &subject, Some(n as i64), || {
            let r = prop2_check(&mops, &pair, n)?;
            let residual = max_residual_string(r.values.iter().map(|(_, v)| v));
            let notes = r.boundary.as_ref().map(|(k, v)| format!("k = {k}: {}", scalar_string(v))).unwrap_or_default();
            Ok(CheckResult::new("prop2", &subject, Some(n as i64), r.verdict, residual).with_notes(notes))
        })
    }).collect::<Vec<_>>());
    Ok(results)
}

fn mops_job<F: Field>(cfg: &RunConfig, precision: u32) -> Result<Vec<CheckResult>> {
    let fam = family_of(cfg)?;
    let l = MomentFunctional::<F>::from_family(fam.clone(), precision)?;
    let nmax = cfg.nmax();
    let tol = tolerance_bits(precision);
    let mops = build_mops(&l, nmax)?;
    let subject = fam.to_string();
    let mut results = Vec::new();
    if let Some(t) = &mops.truncation {
        results.push(
            CheckResult::new("truncation", &subject, None, Verdict::Pass, String::new())
                .with_notes(format!("MOPs end at degree {}: {t:?}", mops.nmax)),
        );
    }
    let ortho = mops.orthogonality_residuals()?;
    for n in 0..=mops.nmax {
        let rows: Vec<_> = ortho.iter().filter(|r| r.n == n).collect();
        let status = rows.iter().fold(Verdict::Pass, |a, r| a.and(r.value.residual_verdict(tol)));
        let notes = format!("h_n = {}", scalar_string(&mops.norms[n]));
        results.push(
            CheckResult::new("orthogonality", &subject, Some(n as i64), status, max_residual_string(rows.iter().map(|r| &r.value)))
                .with_notes(notes),
        );
    }
    // The Hankel path loses roughly n² bits on rounded moments, so it is a
    // meaningful cross-check only when the moments are exact.
    if F::is_exact_field() {
        let hankel = hankel_mops(&*l, mops.nmax.saturating_sub(1))?;
        let dual = compare_paths(&mops, &hankel, tol);
        for n in 0..mops.nmax {
            let mut v = dual.alpha[n].and(dual.norms[n]);
            if n >= 1 {
                v = v.and(dual.beta[n - 1]);
            }
            let residual = scalar_string(&(mops.alpha[n].clone() - hankel.alpha[n].clone()));
            results.push(
                CheckResult::new("dual-path", &subject, Some(n as i64), v, residual)
                    .with_notes(format!("alpha_n = {}", scalar_string(&mops.alpha[n]))),
            );
        }
    }
    if l.strategy() == MomentStrategy::DirectSeries {
        let paths = l.moment_paths(nmax)?;
        for (n, (r, d)) in paths.recurrence.iter().zip(&paths.direct).enumerate() {
            results.push(CheckResult::new(
                "moment-paths",
                &subject,
                Some(n as i64),
                r.agrees_with(d, tol),
                scalar_string(&(r.clone() - d.clone())),
            ));
        }
    }
    Ok(results)
}

fn build_point<F: Field>(f: &Fixture, nmax: usize) -> Result<CoherentPairCase<F>> {
    build_case::<F>(f.case, &f.params, nmax, f.mode.precision())
}

fn coherence_job(f: &Fixture) -> Result<Vec<CheckResult>> {
    match f.mode {
        Mode::Exact => coherence_checks(&build_point::<Rational>(f, f.nmax)?),
        Mode::Approx { .. } => coherence_checks(&build_point::<PrecReal>(f, f.nmax)?),
    }
}

/// Every pair-level check: coherence with `τ_n`, the two `τ_n` derivations,
/// the functional relations, the reconstruction, and the dual identity.
pub fn coherence_checks<F: Field>(c: &CoherentPairCase<F>) -> Result<Vec<CheckResult>> {
    let subject = c.subject();
    let tol = c.tol_bits();
    let nmax = c.nmax;
    // fill the moment caches before fanning out
    c.l0.ff_moments(2 * nmax + 8)?;
    c.l1.ff_moments((2 * nmax).max(RELATION_DEGREE + 1))?;

    let mut results = Vec::new();
    let l3_note = match c.lambda3_display {
        DisplayedLambda3::Matches => "displayed Λ3 matches q·φ0".to_string(),
        DisplayedLambda3::Differs => format!(
            "displayed Λ3 = {} differs from q·φ0 = {}; q·φ0 is used",
            poly_string(&c.displayed_lambda3),
            poly_string(&c.lambda3)
        ),
    };
    results.push(CheckResult::new("lambdas", &subject, None, Verdict::Pass, "0".into()).with_notes(format!(
        "Λ2 = {} (as displayed), Λ3 = {}; {l3_note}",
        poly_string(&c.lambda2),
        poly_string(&c.lambda3)
    )));

    results.extend((1..=nmax).into_par_iter().flat_map_iter(|n| {
        let ni = Some(n as i64);
        let coh = guarded("coherence", &subject, ni, || {
            let r = c.coherence_residual(n)?;
            let tau = c.tau(n)?;
            let status = poly_verdict(&r, tol).and(tau.nonzero_verdict());
            Ok(CheckResult::new("coherence", &subject, ni, status, poly_residual_string(&r)).with_tau(scalar_string(&tau)))
        });
        let dual = guarded("tau-dual", &subject, ni, || {
            let (t, b) = (c.tau(n)?, c.tau_brute(n)?);
            Ok(CheckResult::new("tau-dual", &subject, ni, t.agrees_with(&b, tol), scalar_string(&(t.clone() - b.clone())))
                .with_tau(scalar_string(&t)))
        });
        [coh, dual]
    }).collect::<Vec<_>>());

    let prec = c.precision();
    let l2f: Polynomial<F> = c.lambda2_functional().lift(prec);
    let l3: Polynomial<F> = c.lambda3.lift(prec);
    results.push(guarded("relations", &subject, None, || {
        let rows = c.functional_relation_check(&l2f, &l3, RELATION_DEGREE)?;
        let status = rows.iter().fold(Verdict::Pass, |a, r| a.and(r.first.residual_verdict(tol)).and(r.second.residual_verdict(tol)));
        let residual = max_residual_string(rows.iter().flat_map(|r| [&r.first, &r.second]));
        Ok(CheckResult::new("relations", &subject, None, status, residual)
            .with_notes(format!("-L1[Δφ_k] = L0[-Λ2 φ_k] and L1[φ_k] = L0[Λ3 φ_k] for k <= {RELATION_DEGREE}")))
    }));
    results.push(guarded("reconstruction", &subject, None, || {
        let r = c.lambdas_from_mops()?;
        let rows = c.functional_relation_check(&r.lambda2, &r.lambda3, 15)?;
        let rel = rows.iter().fold(Verdict::Pass, |a, r| a.and(r.first.residual_verdict(tol)).and(r.second.residual_verdict(tol)));
        let deg_ok = Verdict::from_bool(r.lambda3.degree().is_none_or(|d| d <= 3));
        let status = c.compare_reconstruction(&r).and(rel).and(deg_ok);
        let residual = max_residual_string(rows.iter().flat_map(|r| [&r.first, &r.second]));
        Ok(CheckResult::new("reconstruction", &subject, None, status, residual).with_notes(format!(
            "from MOPs: -Λ2 matches, deg Λ3 = {}",
            r.lambda3.degree().map_or(-1, |d| d as i64)
        )))
    }));
    let top = DUAL_NMAX.min(nmax.saturating_sub(2));
    results.extend((0..=top).into_par_iter().map(|n| {
        guarded("dual-identity", &subject, Some(n as i64), || {
            let rows = c.dual_identity_check(n, n + 3, DUAL_RANDOM_PROBES)?;
            let status = rows.iter().fold(Verdict::Pass, |a, r| a.and(r.residual.residual_verdict(tol)));
            Ok(CheckResult::new("dual-identity", &subject, Some(n as i64), status, max_residual_string(rows.iter().map(|r| &r.residual)))
                .with_notes(format!("{} probes", rows.len())))
        })
    }).collect::<Vec<_>>());
    Ok(results)
}

fn sobolev_job(f: &Fixture, lambdas: &[Rational], top: usize) -> Result<Vec<CheckResult>> {
    let nmax = top.min(f.nmax).max(2);
    match f.mode {
        Mode::Exact => sobolev_checks(&build_point::<Rational>(f, nmax)?, lambdas, nmax),
        Mode::Approx { .. } => sobolev_checks(&build_point::<PrecReal>(f, nmax)?, lambdas, nmax),
    }
}

pub fn sobolev_checks<F: Field>(c: &CoherentPairCase<F>, lambdas: &[Rational], nmax: usize) -> Result<Vec<CheckResult>> {
    let tol = c.tol_bits();
    let mut results = Vec::new();
    for lam in lambdas {
        let subject = format!("{} λ={}", c.subject(), rational_to_string(lam));
        let sys = match build_sobolev(c, lam, nmax) {
            Ok(s) => s,
            Err(e) => {
                results.push(CheckResult::new("sobolev-gram", &subject, None, Verdict::Fail, String::new()).with_notes(e.to_string()));
                continue;
            }
        };
        let positive = sys.minors.iter().all(|m| m.nonzero_verdict().is_pass() && m.to_f64() > 0.0);
        let gram_note = if positive { "leading minors positive" } else { "leading minors nonzero, not all positive" };
        results.push(CheckResult::new("sobolev-gram", &subject, None, Verdict::Pass, "0".into()).with_notes(gram_note));
        results.push(guarded("sobolev-orthogonality", &subject, None, || {
            let o = sys.orthogonality()?;
            let status = o.iter().fold(Verdict::Pass, |a, (_, _, v)| a.and(v.residual_verdict(tol)));
            let status = sys.norms.iter().fold(status, |a, h| a.and(h.nonzero_verdict()));
            Ok(CheckResult::new("sobolev-orthogonality", &subject, None, status, max_residual_string(o.iter().map(|(_, _, v)| v))))
        }));
        let s1 = sys.s1_residual();
        results.push(CheckResult::new("sobolev-s1", &subject, None, coords_verdict(&s1, tol), max_residual_string(&s1)));
        if *lam == int(0) {
            let col = sys.collapse_residuals();
            let status = col.iter().fold(Verdict::Pass, |a, p| a.and(coords_verdict(p, tol)));
            let status = sys.gamma.iter().fold(status, |a, g| a.and(g.residual_verdict(tol)));
            let worst = max_residual_string(col.iter().flatten());
            results.push(CheckResult::new("sobolev-collapse", &subject, None, status, worst));
        }
        for n in 1..nmax {
            let ni = Some(n as i64);
            results.push(guarded("connection", &subject, ni, || {
                let r = sys.connection_check(n)?;
                let worst = max_residual_string(r.line1.iter().chain(&r.line2));
                Ok(CheckResult::new("connection", &subject, ni, r.verdict, worst)
                    .with_notes(format!("gamma_n = {}", scalar_string(&sys.gamma[n]))))
            }));
        }
    }
    Ok(results)
}

/// One row per case, from the first parameter point of each case.
fn classify_job(cfg: &RunConfig) -> Result<(Vec<ClassifyRow>, Vec<CheckResult>)> {
    let points = cfg.points()?;
    let mut chosen: Vec<Fixture> = Vec::new();
    for c in CaseTag::ALL {
        if let Some(p) = points.iter().find(|p| p.case == c) {
            chosen.push(p.clone());
        }
    }
    let rows: Vec<Result<(ClassifyRow, Vec<CheckResult>)>> = chosen
        .par_iter()
        .map(|f| match f.mode {
            Mode::Exact => classify_case(&build_point::<Rational>(f, 2)?),
            Mode::Approx { .. } => classify_case(&build_point::<PrecReal>(f, 2)?),
        })
        .collect();
    let mut table = Vec::new();
    let mut results = Vec::new();
    for r in rows {
        let (row, res) = r?;
        table.push(row);
        results.extend(res);
    }
    Ok((table, results))
}

/// Points compared when checking pointwise relations of `ρ1`.
const RHO1_POINTS: usize = 40;

fn classify_case<F: Field>(c: &CoherentPairCase<F>) -> Result<(ClassifyRow, Vec<CheckResult>)> {
    let id = c.identify_family();
    let subject = c.subject();
    let claimed = c.case.claimed_companion();
    let claim_verdict = match &id.claim_verdict {
        ClaimVerdict::Verified => "verified".to_string(),
        ClaimVerdict::Fails => "fails".to_string(),
        ClaimVerdict::NotApplicable(why) => format!("not applicable: {why}"),
    };
    let (oracle_tag, oracle_mapping) = match id.best() {
        Some(m) => (m.tag.name().to_string(), format_mapping(&m.mapping)),
        None => ("none".to_string(), String::new()),
    };
    let status = Verdict::from_bool(id.best().is_some());
    let mut shift = id.shift_notes().join("; ");
    if shift.is_empty() && id.best().is_some() {
        shift = "none".into();
    }
    let params = c
        .case
        .parameters()
        .iter()
        .map(|k| format!("{k}={}", rational_to_string(&c.params[*k])))
        .collect::<Vec<_>>()
        .join(" ");
    let row = ClassifyRow {
        case: c.case.name().into(),
        l0: c.case.base_tag().name().into(),
        l1_claimed: claimed.tag.name().into(),
        l1_oracle: oracle_tag.clone(),
        oracle_mapping: oracle_mapping.clone(),
        claimed_mapping: if claimed.mapping.is_empty() { "same parameters".into() } else { format_mapping(&claimed.mapping) },
        claimed_mapping_verdict: claim_verdict.clone(),
        shift: shift.clone(),
        parameters: params,
        status,
    };
    let rel = c.rho1_relations(RHO1_POINTS);
    let mut results = vec![CheckResult::new("classify", &subject, None, status, "0".into()).with_notes(format!(
        "L1 companion {} ({}); stated {} [{}]: {}",
        oracle_tag, oracle_mapping, claimed.tag, row.claimed_mapping, claim_verdict
    ))];
    let own = Verdict::from_bool(rel.own_holds());
    let worst = rel.own.iter().find(|r| **r != int(0)).map(rational_to_string).unwrap_or_else(|| "0".into());
    results.push(CheckResult::new("rho1-pearson", &subject, None, own, worst).with_notes(format!(
        "ρ1 satisfies ∇(φ1 ρ1) + ψ1 ρ1 = 0 with φ1 = {}, ψ1 = {}; displayed relation ∇(Λ3 ρ1) + Λ2 ρ1 = 0 {}",
        poly_string(&rel.pair.phi),
        poly_string(&rel.pair.psi),
        if rel.displayed_holds() { "holds" } else { "does not hold" }
    )));
    Ok((row, results))
}

/// Writes the report and returns the process exit code.
pub fn run_and_report(cfg: &RunConfig) -> i32 {
    let report = match run(cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let text = match cfg.format() {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    let text = match text {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match &cfg.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text) {
                eprintln!("error: cannot write {}: {e}", p.display());
                return 2;
            }
        }
        None => print!("{text}"),
    }
    let s = report.summary;
    eprintln!("{}: {} passed, {} failed, {} inconclusive", report.command, s.passed, s.failed, s.inconclusive);
    if report.all_passed() {
        0
    } else {
        1
    }
}

#[derive(Parser, Debug)]
#[command(name = "dcpair", version, about = "Verify discrete semiclassical functionals and Δ-coherent pairs of the second kind")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Run one family of checks.
    Verify {
        #[arg(value_enum)]
        what: VerifyWhat,
        #[command(flatten)]
        opts: Opts,
    },
    /// Identify the companion functional of every case.
    ClassifyTable {
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VerifyWhat {
    Pearson,
    Structure,
    Mops,
    Coherence,
    Sobolev,
}

#[derive(Args, Debug)]
pub struct Opts {
    /// Catalog family (charlier, meixner, kravchuk, hahn, gen-charlier, ...).
    #[arg(long)]
    pub family: Option<String>,
    /// Coherent-pair case: I, IIa, IIb, III or IV.
    #[arg(long)]
    pub case: Option<String>,
    /// Parameter assignment `name=p/q`; repeatable.
    #[arg(long = "param", value_name = "K=V")]
    pub params: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub xmax: usize,
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    /// Working precision in bits for approximate mode.
    #[arg(long, default_value_t = DEFAULT_PRECISION)]
    pub precision: u32,
    /// Sobolev weight; repeatable (default 0, 1/2, 2).
    #[arg(long = "lambda")]
    pub lambdas: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Fixture file of parameter points (default: the shipped set).
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
}

impl Opts {
    fn into_config(self, command: Command) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(command);
        cfg.family = self.family.as_deref().map(str::parse).transpose()?;
        cfg.case = self.case.as_deref().map(str::parse).transpose()?;
        cfg.params = parse_params(&self.params)?;
        cfg.xmax = self.xmax;
        cfg.nmax = self.nmax;
        cfg.mode = match self.mode {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Approx => Mode::approx(self.precision)?,
        };
        if !self.lambdas.is_empty() {
            cfg.lambdas = self.lambdas.iter().map(|s| parse_rational(s)).collect::<std::result::Result<_, _>>()?;
        }
        cfg.fixtures = self.fixtures;
        cfg.out = self.out;
        cfg.format = self.format;
        cfg.workers = self.workers;
        Ok(cfg)
    }
}

impl Cli {
    pub fn into_config(self) -> Result<RunConfig> {
        match self.cmd {
            Cmd::Verify { what, opts } => opts.into_config(match what {
                VerifyWhat::Pearson => Command::Pearson,
                VerifyWhat::Structure => Command::Structure,
                VerifyWhat::Mops => Command::Mops,
                VerifyWhat::Coherence => Command::Coherence,
                VerifyWhat::Sobolev => Command::Sobolev,
            }),
            Cmd::ClassifyTable { opts } => opts.into_config(Command::ClassifyTable),
        }
    }
}

/// Parse arguments, run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.into_config() {
        Ok(cfg) => run_and_report(&cfg),
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_command_counts_points() {
        let mut cfg = RunConfig::new(Command::Pearson);
        cfg.family = Some(FamilyTag::Charlier);
        cfg.params = parse_params(&["z=2"]).unwrap();
        let r = run(&cfg).unwrap();
        assert_eq!(r.results.len(), 101);
        assert!(r.all_passed());
    }

    #[test]
    fn missing_family_is_invalid() {
        let cfg = RunConfig::new(Command::Pearson);
        assert!(run(&cfg).is_err());
        assert_eq!(run_and_report(&cfg), 2);
    }

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from([
            "dcpair", "verify", "coherence", "--case", "IIa", "--param", "z=1/2", "--param", "omega=3/2", "--nmax", "12", "--mode", "exact",
        ])
        .unwrap();
        let cfg = cli.into_config().unwrap();
        assert_eq!(cfg.command, Command::Coherence);
        assert_eq!(cfg.case, Some(CaseTag::IIa));
        assert_eq!(cfg.params["omega"], rat(3, 2));
        assert_eq!(cfg.nmax(), 12);
    }

    #[test]
    fn approx_needs_64_bits() {
        let cli = Cli::try_parse_from(["dcpair", "verify", "mops", "--family", "charlier", "--param", "z=2", "--mode", "approx", "--precision", "32"]).unwrap();
        assert!(cli.into_config().is_err());
    }
}
