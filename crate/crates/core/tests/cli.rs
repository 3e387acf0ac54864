use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dcpair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcpair")).args(args).env_remove("DCPAIR_WORKERS").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn pearson_report_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("charlier.json");
    let o = dcpair(&["verify", "pearson", "--family", "charlier", "--param", "z=2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("101 passed, 0 failed, 0 inconclusive"));
    let v = json_file(&out);
    assert_eq!(v["command"], "verify pearson");
    assert_eq!(v["summary"]["passed"], 101);
    assert_eq!(v["config"]["params"]["z"], "2");
    let first = &v["results"][0];
    for key in ["check", "subject", "n", "status", "residual", "notes"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    assert_eq!(first["residual"], "0");
}

#[test]
fn csv_is_inferred_from_extension() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.csv");
    let o = dcpair(&["classify-table", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().unwrap().clone();
    assert_eq!(&header[0], "case");
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    let l0: Vec<&str> = rows.iter().map(|r| &r[1]).collect();
    assert_eq!(l0, ["gen-charlier", "charlier", "kravchuk", "meixner", "hahn"]);
}

#[test]
fn explicit_format_overrides_extension() {
    let o = dcpair(&["verify", "pearson", "--family", "meixner", "--param", "a=3/2", "--param", "z=1/3", "--xmax", "5", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.starts_with("check,subject,n,status,residual"));
}

#[test]
fn case_run_in_approximate_mode() {
    let o = dcpair(&["verify", "coherence", "--case", "I", "--param", "b=1/2", "--param", "z=3/4", "--nmax", "5", "--mode", "approx"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["mode"], "approx@128");
    let taus: Vec<&str> = v["results"].as_array().unwrap().iter().filter_map(|r| r["tau"].as_str()).collect();
    assert!(taus.iter().all(|t| t.contains('±')), "{taus:?}");
}

#[test]
fn input_errors_exit_two() {
    let cases: &[&[&str]] = &[
        &["verify", "pearson", "--family", "laguerre", "--param", "z=1"],
        &["verify", "pearson", "--family", "charlier"],
        &["verify", "pearson", "--family", "charlier", "--param", "z=0"],
        &["verify", "pearson", "--family", "kravchuk", "--param", "N=7/2", "--param", "z=1/3"],
        &["verify", "pearson", "--family", "charlier", "--param", "z=1", "--param", "q=2"],
        &["verify", "mops", "--family", "gen-charlier", "--param", "b=1/2", "--param", "z=3/4"],
        &["verify", "coherence", "--case", "IIa", "--param", "z=1/2"],
        &["verify", "coherence", "--case", "V"],
        &["verify", "mops", "--family", "charlier", "--param", "z=2", "--mode", "approx", "--precision", "32"],
        &["verify", "sobolev", "--case", "IIa", "--param", "z=1/2", "--param", "omega=3/2", "--lambda", "x"],
        &["verify", "bogus"],
        &["verify", "pearson", "--nmax", "-3"],
    ];
    for args in cases {
        let o = dcpair(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn inadmissible_pair_names_the_degree() {
    let o = dcpair(&["verify", "coherence", "--case", "IV", "--param", "N=6", "--param", "a=1/2", "--param", "b=1/2", "--param", "omega=3/5"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("n = 6"), "{}", stderr(&o));
}

#[test]
fn bad_fixture_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("points.txt");
    std::fs::write(&f, "# version 1\ncase=IIa z=1/2 omega=3/2 nmax=4 mode=exact\ncase=IIa z=1/2 nmax=4 mode=exact\n").unwrap();
    let o = dcpair(&["verify", "coherence", "--fixtures", f.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    std::fs::write(&f, "# version 9\ncase=IIa z=1/2 omega=3/2\n").unwrap();
    assert_eq!(code(&dcpair(&["verify", "coherence", "--fixtures", f.to_str().unwrap()])), 2);
}

#[test]
fn fixture_file_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("points.txt");
    std::fs::write(&f, "# version 1\ncase=IIa z=1/2 omega=3/2 nmax=4 mode=exact\ncase=III a=3/2 z=1/3 omega=5/2 nmax=4 mode=exact\n").unwrap();
    let o = dcpair(&["verify", "coherence", "--fixtures", f.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let subjects: std::collections::BTreeSet<&str> =
        v["results"].as_array().unwrap().iter().map(|r| r["subject"].as_str().unwrap()).collect();
    assert_eq!(subjects.len(), 2);
    let max_n = v["results"].as_array().unwrap().iter().filter_map(|r| r["n"].as_i64()).max();
    assert_eq!(max_n, Some(4));
}

#[test]
fn inconclusive_checks_exit_one() {
    // prop2 at n = 10 for this point is not resolved at 128 bits
    let o = dcpair(&[
        "verify", "structure", "--family", "gen-meixner", "--param", "a=2/3", "--param", "b=1/4", "--param", "z=3/4", "--mode", "approx",
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["summary"]["inconclusive"].as_u64().unwrap() >= 1);
    assert_eq!(v["summary"]["failed"], 0);
}

#[test]
fn output_is_deterministic_across_worker_counts() {
    let args = ["verify", "sobolev", "--case", "IIa", "--param", "z=2", "--param", "omega=5/3", "--nmax", "6"];
    let one = Command::new(env!("CARGO_BIN_EXE_dcpair")).args(args).args(["--workers", "1"]).output().unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_dcpair")).args(args).env("DCPAIR_WORKERS", "4").output().unwrap();
    let again = Command::new(env!("CARGO_BIN_EXE_dcpair")).args(args).args(["--workers", "3"]).output().unwrap();
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(one.stdout, again.stdout);
    let v: Value = serde_json::from_slice(&one.stdout).unwrap();
    assert!(v["config"].get("workers").is_none());
}

#[test]
fn help_and_version_exit_zero() {
    let o = dcpair(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("classify-table"));
    let o = dcpair(&["--version"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains(env!("CARGO_PKG_VERSION")));
}
