//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;

use dcpair::cli::{run, Command, RunConfig};
use dcpair::coherence::{build_case, CaseTag, CoherentPairCase};
use dcpair::fixtures::{parse_fixtures, Fixture, DEFAULT_FIXTURES};
use dcpair::mops::{build_mops, compare_paths, hankel_mops, prop2_check, structure_table, tolerance_bits, MopSequence};
use dcpair::poly::{falling_factorial, shifted_ff_expand, Polynomial};
use dcpair::report::Report;
use dcpair::scalar::{Mode, Rational, Verdict};
use dcpair::weights::{parse_params, FamilyTag, PearsonPair};

type Outcome = Result<String, String>;

const PREC: u32 = 128;

fn approx() -> Mode {
    Mode::Approx { precision: PREC }
}

fn config(command: Command, family: Option<FamilyTag>, case: Option<CaseTag>, params: &str, mode: Mode) -> RunConfig {
    let mut cfg = RunConfig::new(command);
    cfg.family = family;
    cfg.case = case;
    let items: Vec<&str> = params.split_whitespace().collect();
    cfg.params = parse_params(&items).expect("valid parameters");
    cfg.mode = mode;
    cfg
}

fn run_cfg(cfg: &RunConfig) -> Result<Report, String> {
    run(cfg).map_err(|e| format!("{:?} {:?}: {e}", cfg.family, cfg.case))
}

/// Every row named `check` passes, and its `n` values cover `want`.
fn rows_cover(report: &Report, check: &str, subject: &str, want: impl IntoIterator<Item = i64>) -> Result<usize, String> {
    let rows: Vec<_> = report.results.iter().filter(|r| r.check == check && r.subject.starts_with(subject)).collect();
    if let Some(bad) = rows.iter().find(|r| r.status != Verdict::Pass) {
        return Err(format!("{check} {} n={:?}: {:?} residual {} {}", bad.subject, bad.n, bad.status, bad.residual, bad.notes));
    }
    for n in want {
        if !rows.iter().any(|r| r.n == Some(n)) {
            return Err(format!("{check} {subject}: no row for n = {n}"));
        }
    }
    Ok(rows.len())
}

fn fixtures() -> Vec<Fixture> {
    parse_fixtures(DEFAULT_FIXTURES).expect("shipped fixtures parse")
}

fn case_config(command: Command, f: &Fixture) -> RunConfig {
    let mut cfg = RunConfig::new(command);
    cfg.case = Some(f.case);
    cfg.params = f.params.clone();
    cfg.mode = f.mode;
    cfg
}

fn all_pass(report: &Report) -> Result<(), String> {
    match report.results.iter().find(|r| r.status != Verdict::Pass) {
        Some(r) => Err(format!("{} {} n={:?}: {:?} {}", r.check, r.subject, r.n, r.status, r.notes)),
        None => Ok(()),
    }
}

const PEARSON_POINTS: [(FamilyTag, [&str; 3]); 9] = [
    (FamilyTag::Charlier, ["z=1/2", "z=2", "z=7/3"]),
    (FamilyTag::Meixner, ["a=3/2 z=1/3", "a=1/2 z=1/2", "a=5 z=2/3"]),
    (FamilyTag::Kravchuk, ["N=10 z=1/3", "N=16 z=-1/2", "N=6 z=3"]),
    (FamilyTag::Hahn, ["N=10 a=1/2 b=1/3", "N=16 a=3/2 b=5/2", "N=5 a=2 b=1/2"]),
    (FamilyTag::GenCharlier, ["b=1/2 z=3/4", "b=3/2 z=2", "b=5 z=1/3"]),
    (FamilyTag::GenMeixner, ["a=3/2 b=1/2 z=3/4", "a=1/2 b=1/3 z=1/2", "a=5/2 b=1/3 z=1/3"]),
    (FamilyTag::GenKravchuk, ["N=10 a=1/2 z=1/3", "N=16 a=3/2 z=-1/2", "N=6 a=2 z=2"]),
    (FamilyTag::GenHahnI, ["a1=1/2 a2=1/3 b=3/2 z=1/2", "a1=3/2 a2=5/2 b=1/2 z=1/3", "a1=2 a2=1/3 b=4 z=3/4"]),
    (FamilyTag::GenHahnII, ["N=10 a1=1/2 a2=1/3 b1=3/2 b2=1/4", "N=16 a1=3/2 a2=5/2 b1=1/2 b2=2/3", "N=6 a1=2 a2=1/3 b1=4 b2=1/2"]),
];

fn c1_pearson() -> Outcome {
    let mut rows = 0;
    for (tag, points) in PEARSON_POINTS {
        for p in points {
            let mut cfg = config(Command::Pearson, Some(tag), None, p, Mode::Exact);
            cfg.xmax = 100;
            let r = run_cfg(&cfg)?;
            rows += rows_cover(&r, "pearson", "", 0..=100)?;
        }
    }
    Ok(format!("{rows} residuals exactly zero"))
}

fn c2_falling_factorial() -> Outcome {
    for n in 0..=20usize {
        let expanded = shifted_ff_expand(n);
        let shifted: Polynomial<Rational> = Polynomial::<Rational>::ff_basis(n).shift_back();
        if !expanded.same_as(&shifted) {
            return Err(format!("n = {n}: expansion differs from shift"));
        }
        // pointwise, with integers only
        for x in -5..=(n as i64 + 5) {
            let direct = falling_factorial(x - 1, n);
            let sum: BigInt = (0..=n)
                .map(|k| {
                    let term = falling_factorial(n as i64, k) * falling_factorial(x, n - k);
                    if k % 2 == 1 {
                        -term
                    } else {
                        term
                    }
                })
                .sum();
            if direct != sum {
                return Err(format!("n = {n}, x = {x}: {direct} vs {sum}"));
            }
        }
    }
    Ok("n <= 20 exact, symbolic and pointwise".into())
}

/// Structure and `prop2` rows from the `structure` command.
fn structure_runs() -> Result<Vec<(String, Report)>, String> {
    // a = b + 1 would collapse generalized Meixner to Charlier, so those points are avoided here
    let points: [(FamilyTag, &str, Mode); 8] = [
        (FamilyTag::Charlier, "z=2", Mode::Exact),
        (FamilyTag::Charlier, "z=1/3", Mode::Exact),
        (FamilyTag::Meixner, "a=3/2 z=1/3", Mode::Exact),
        (FamilyTag::Kravchuk, "N=16 z=1/3", Mode::Exact),
        (FamilyTag::GenCharlier, "b=1/2 z=3/4", approx()),
        (FamilyTag::GenMeixner, "a=1/2 b=1/3 z=1/2", approx()),
        (FamilyTag::GenCharlier, "b=3/2 z=2", approx()),
        (FamilyTag::GenMeixner, "a=5/2 b=1/3 z=1/3", approx()),
    ];
    points
        .iter()
        .map(|(tag, p, mode)| {
            let mut cfg = config(Command::Structure, Some(*tag), None, p, *mode);
            cfg.nmax = Some(10);
            Ok((format!("{tag} {p}"), run_cfg(&cfg)?))
        })
        .collect()
}

/// Companions `L1` of exactly computable coherent pairs (class one, rational moments).
fn companions() -> Result<Vec<CoherentPairCase<Rational>>, String> {
    fixtures()
        .iter()
        .filter(|f| f.mode == Mode::Exact)
        .map(|f| build_case::<Rational>(f.case, &f.params, 12, PREC).map_err(|e| e.to_string()))
        .collect()
}

fn companion_structure(c: &CoherentPairCase<Rational>, prop2: bool) -> Result<usize, String> {
    let pair: PearsonPair = c.rho1_pearson();
    let s = pair.class_s as usize;
    let mops: MopSequence<Rational> = build_mops(&c.l1, 10 + pair.d1().max(1)).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for n in (s + 1)..=10 {
        let v = if prop2 {
            prop2_check(&mops, &pair, n).map_err(|e| e.to_string())?.verdict
        } else {
            structure_table(&mops, &pair, n).map_err(|e| e.to_string())?.verdict()
        };
        if v != Verdict::Pass {
            return Err(format!("companion of {}: n = {n} {v:?}", c.subject()));
        }
        checked += 1;
    }
    Ok(checked)
}

fn c3_c4(runs: &[(String, Report)], check: &str, prop2: bool) -> Outcome {
    let mut rows = 0;
    for (name, r) in runs {
        let s1 = name.starts_with("gen-");
        let from = if prop2 { 1 } else if s1 { 2 } else { 1 };
        rows += rows_cover(r, check, "", from..=10).map_err(|e| format!("{name}: {e}"))?;
    }
    let mut comp = 0;
    for c in companions()? {
        comp += companion_structure(&c, prop2)?;
    }
    Ok(format!("{rows} family rows, {comp} exact companion rows"))
}

fn coherence_report() -> Result<Report, String> {
    run_cfg(&RunConfig::new(Command::Coherence))
}

fn per_subject(report: &Report, check: &str, want: std::ops::RangeInclusive<i64>) -> Outcome {
    let subjects: std::collections::BTreeSet<&str> = report.results.iter().map(|r| r.subject.as_str()).collect();
    let mut cases = std::collections::BTreeSet::new();
    let mut rows = 0;
    for s in &subjects {
        rows += rows_cover(report, check, s, want.clone())?;
        cases.insert(s.split_whitespace().nth(1).unwrap_or("").to_string());
    }
    if subjects.len() != 10 || cases.len() != 5 {
        return Err(format!("expected 10 points over 5 cases, got {} over {}", subjects.len(), cases.len()));
    }
    Ok(format!("{rows} rows over 10 points"))
}

fn c5(report: &Report) -> Outcome {
    let tau_present = report.results.iter().filter(|r| r.check == "coherence").all(|r| r.tau.is_some());
    if !tau_present {
        return Err("coherence row without tau".into());
    }
    per_subject(report, "coherence", 1..=12)
}

fn c7(report: &Report) -> Outcome {
    for check in ["relations", "reconstruction", "lambdas"] {
        let n = report.results.iter().filter(|r| r.check == check).count();
        if n != 10 {
            return Err(format!("{check}: {n} rows"));
        }
    }
    all_pass(report)?;
    Ok("k <= 20 relations and reconstruction at 10 points".into())
}

fn c9() -> Outcome {
    let mut rows = 0;
    for f in fixtures().iter().filter(|f| matches!(f.case, CaseTag::I | CaseTag::IIa)) {
        let mut cfg = case_config(Command::Sobolev, f);
        cfg.nmax = Some(9);
        let r = run_cfg(&cfg)?;
        all_pass(&r)?;
        for lam in ["0", "1/2", "2"] {
            let tag = format!("λ={lam}");
            let mine: Vec<_> = r.results.iter().filter(|x| x.subject.ends_with(&tag)).collect();
            for n in 1..=8 {
                if !mine.iter().any(|x| x.check == "connection" && x.n == Some(n)) {
                    return Err(format!("{} {tag}: no connection row for n = {n}", f.case));
                }
            }
            let need: &[&str] = if lam == "0" { &["sobolev-s1", "sobolev-collapse"] } else { &["sobolev-s1"] };
            for c in need {
                if !mine.iter().any(|x| x.check == *c) {
                    return Err(format!("{} {tag}: no {c} row", f.case));
                }
            }
        }
        rows += r.results.len();
    }
    Ok(format!("{rows} rows for Case I and IIa"))
}

fn c10() -> Outcome {
    let mut rows = 0;
    for (tag, p) in [(FamilyTag::GenCharlier, "b=1/2 z=3/4"), (FamilyTag::GenMeixner, "a=3/2 b=1/2 z=3/4")] {
        let mut cfg = config(Command::Mops, Some(tag), None, p, approx());
        cfg.nmax = Some(12);
        rows += rows_cover(&run_cfg(&cfg)?, "moment-paths", "", 0..=12)?;
    }
    let mut dual = 0;
    for (tag, p) in [
        (FamilyTag::Charlier, "z=2"),
        (FamilyTag::Meixner, "a=3/2 z=1/3"),
        (FamilyTag::Kravchuk, "N=16 z=1/3"),
        (FamilyTag::Hahn, "N=16 a=1/2 b=1/3"),
    ] {
        let mut cfg = config(Command::Mops, Some(tag), None, p, Mode::Exact);
        cfg.nmax = Some(13);
        dual += rows_cover(&run_cfg(&cfg)?, "dual-path", "", 0..=12)?;
    }
    for c in companions()? {
        let mops = build_mops(&c.l1, 13).map_err(|e| e.to_string())?;
        let hankel = hankel_mops(&c.l1, 12).map_err(|e| e.to_string())?;
        let v = compare_paths(&mops, &hankel, tolerance_bits(PREC)).verdict();
        if v != Verdict::Pass {
            return Err(format!("companion of {}: {v:?}", c.subject()));
        }
        dual += 1;
    }
    Ok(format!("{rows} moment-path rows, {dual} exact dual-path comparisons"))
}

const TABLE: [(&str, &str, &str); 5] = [
    ("I", "gen-charlier", "gen-charlier"),
    ("IIa", "charlier", "gen-meixner"),
    ("IIb", "kravchuk", "gen-kravchuk"),
    ("III", "meixner", "gen-hahn-i"),
    ("IV", "hahn", "gen-hahn-ii"),
];

fn c11() -> Outcome {
    let r = run_cfg(&RunConfig::new(Command::ClassifyTable))?;
    all_pass(&r)?;
    let rows = r.table.as_ref().ok_or("no table")?;
    if rows.len() != 5 {
        return Err(format!("{} rows", rows.len()));
    }
    let mut other_family = Vec::new();
    for (row, (case, l0, l1)) in rows.iter().zip(TABLE) {
        if row.case != case || row.l0 != l0 || row.l1_claimed != l1 {
            return Err(format!("row {}: {} -> {}", row.case, row.l0, row.l1_claimed));
        }
        if row.oracle_mapping.is_empty() || row.shift.is_empty() || row.status != Verdict::Pass {
            return Err(format!("row {}: no verified oracle mapping", row.case));
        }
        if row.l1_oracle != l1 {
            if !row.shift.contains("family differs") {
                return Err(format!("row {}: oracle found {} without recording it", row.case, row.l1_oracle));
            }
            other_family.push(format!("{} matches {}", row.case, row.l1_oracle));
        }
    }
    let csv = r.to_csv().map_err(|e| e.to_string())?;
    if csv.lines().count() != 6 {
        return Err("csv does not have 5 data rows".into());
    }
    let shifted = rows.iter().filter(|r| r.shift != "none").count();
    let mut d = format!("5 rows match, {shifted} with a recorded shift");
    if !other_family.is_empty() {
        d.push_str(&format!(" (oracle: {})", other_family.join(", ")));
    }
    Ok(d)
}

struct Suite {
    failed: usize,
}

impl Suite {
    /// `shared` is setup time spent on this criterion's behalf before the call.
    fn criterion(&mut self, id: u32, what: &str, limit: Option<Duration>, shared: Duration, f: impl FnOnce() -> Outcome) {
        let t = Instant::now();
        let mut out = f();
        let dt = t.elapsed() + shared;
        if let (Ok(_), Some(l)) = (&out, limit) {
            if dt > l {
                out = Err(format!("took {:.1} s, limit {} s", dt.as_secs_f64(), l.as_secs()));
            }
        }
        match out {
            Ok(d) => println!("criterion {id:>2} PASS  {what}: {d} ({:.2} s)", dt.as_secs_f64()),
            Err(e) => {
                self.failed += 1;
                println!("criterion {id:>2} FAIL  {what}: {e} ({:.2} s)", dt.as_secs_f64());
            }
        }
    }
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn main() -> ExitCode {
    let lim = secs;
    let mut suite = Suite { failed: 0 };

    suite.criterion(1, "Pearson residuals, 9 families x 3 points, x <= 100", lim(10), Duration::ZERO, c1_pearson);
    suite.criterion(2, "falling-factorial shift lemma", lim(1), Duration::ZERO, c2_falling_factorial);

    let t = Instant::now();
    let structure = structure_runs();
    let structure_time = t.elapsed();
    suite.criterion(3, "structure relation band, n <= 10", lim(60), structure_time, || {
        c3_c4(structure.as_ref().map_err(|e| e.clone())?, "structure", false)
    });
    suite.criterion(4, "L[phi Delta phi_k Delta P_n] = 0 for k < n - s, n <= 10", None, structure_time, || {
        c3_c4(structure.as_ref().map_err(|e| e.clone())?, "prop2", true)
    });

    let t = Instant::now();
    let coherence = coherence_report();
    let coherence_time = t.elapsed();
    suite.criterion(5, "coherence residual and tau_n != 0, five cases, n <= 12", lim(120), coherence_time, || {
        c5(coherence.as_ref().map_err(|e| e.clone())?)
    });
    suite.criterion(6, "tau_n equals the brute-force expansion coefficient", None, coherence_time, || {
        per_subject(coherence.as_ref().map_err(|e| e.clone())?, "tau-dual", 1..=12)
    });
    suite.criterion(7, "functional relations and reconstructed lambdas", None, coherence_time, || c7(coherence.as_ref().map_err(|e| e.clone())?));
    suite.criterion(8, "dual identity on P_k, k <= n + 3, n <= 8", None, coherence_time, || {
        per_subject(coherence.as_ref().map_err(|e| e.clone())?, "dual-identity", 0..=8)
    });
    suite.criterion(9, "Sobolev connection, S_1 and the lambda = 0 collapse", lim(60), Duration::ZERO, c9);
    suite.criterion(10, "moment paths and dual-path MOP construction, n <= 12", None, Duration::ZERO, c10);
    suite.criterion(11, "classification table", None, Duration::ZERO, c11);

    if suite.failed == 0 {
        println!("acceptance: all 11 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of 11 criteria fail", suite.failed);
        ExitCode::FAILURE
    }
}
