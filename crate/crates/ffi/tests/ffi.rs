use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command as Process;
use std::ptr;

use dcpair_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = dcpair_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn config(command: &str) -> *mut DcpairConfig {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { dcpair_config_new(c(command).as_ptr(), &mut cfg) }, DcpairStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

fn set(cfg: *mut DcpairConfig, k: &str, v: &str) -> DcpairStatus {
    unsafe { dcpair_config_set_param(cfg, c(k).as_ptr(), c(v).as_ptr()) }
}

fn take_string(p: *mut c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { dcpair_string_free(p) };
    s
}

#[test]
fn pearson_run_through_handles() {
    let cfg = config("pearson");
    unsafe {
        assert_eq!(dcpair_config_set_family(cfg, c("charlier").as_ptr()), DcpairStatus::Ok);
        assert_eq!(set(cfg, "z", "2"), DcpairStatus::Ok);
        assert_eq!(dcpair_config_set_xmax(cfg, 100), DcpairStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(dcpair_run(cfg, &mut r), DcpairStatus::Ok);
        let (mut p, mut f, mut i) = (0u64, 9u64, 9u64);
        assert_eq!(dcpair_report_summary(r, &mut p, &mut f, &mut i), DcpairStatus::Ok);
        assert_eq!((p, f, i), (101, 0, 0));
        assert_eq!(dcpair_report_all_passed(r), 1);
        let mut js = ptr::null_mut();
        assert_eq!(dcpair_report_json(r, &mut js), DcpairStatus::Ok);
        let js = take_string(js);
        assert!(js.contains("\"command\": \"verify pearson\""));
        assert_eq!(js.matches("\"check\": \"pearson\"").count(), 101);
        dcpair_report_free(r);
        dcpair_config_free(cfg);
    }
}

#[test]
fn coherence_case_in_approx_mode() {
    let cfg = config("coherence");
    unsafe {
        assert_eq!(dcpair_config_set_case(cfg, c("I").as_ptr()), DcpairStatus::Ok);
        set(cfg, "b", "1/2");
        set(cfg, "z", "3/4");
        assert_eq!(dcpair_config_set_nmax(cfg, 6), DcpairStatus::Ok);
        assert_eq!(dcpair_config_set_approx(cfg, 128), DcpairStatus::Ok);
        assert_eq!(dcpair_config_set_workers(cfg, 2), DcpairStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(dcpair_run(cfg, &mut r), DcpairStatus::Ok);
        assert_eq!(dcpair_report_all_passed(r), 1);
        dcpair_report_free(r);
        dcpair_config_free(cfg);
    }
}

#[test]
fn classify_table_csv() {
    let cfg = config("classify-table");
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(dcpair_run(cfg, &mut r), DcpairStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(dcpair_report_csv(r, &mut out), DcpairStatus::Ok);
        let csv = take_string(out);
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("case,l0,l1_claimed,l1_oracle"));
        dcpair_report_free(r);
        dcpair_config_free(cfg);
    }
}

#[test]
fn custom_lambdas_replace_defaults() {
    let cfg = config("sobolev");
    unsafe {
        dcpair_config_set_case(cfg, c("IIa").as_ptr());
        set(cfg, "z", "1/2");
        set(cfg, "omega", "3/2");
        dcpair_config_set_nmax(cfg, 4);
        let lams = [c("1"), c("3/2")];
        let ptrs: Vec<*const c_char> = lams.iter().map(|s| s.as_ptr()).collect();
        assert_eq!(dcpair_config_set_lambdas(cfg, ptrs.as_ptr(), ptrs.len()), DcpairStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(dcpair_run(cfg, &mut r), DcpairStatus::Ok);
        let mut js = ptr::null_mut();
        dcpair_report_json(r, &mut js);
        let js = take_string(js);
        assert!(js.contains("λ=3/2"));
        assert!(!js.contains("λ=0"));
        dcpair_report_free(r);
        dcpair_config_free(cfg);
    }
}

#[test]
fn input_errors_map_to_status_codes() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(dcpair_config_new(c("bogus").as_ptr(), &mut cfg), DcpairStatus::InvalidInput);
        assert!(last_error().contains("unknown command"));
        assert!(cfg.is_null());

        let cfg = config("structure");
        assert_eq!(dcpair_config_set_family(cfg, c("laguerre").as_ptr()), DcpairStatus::InvalidInput);
        assert!(last_error().contains("laguerre"));
        assert_eq!(set(cfg, "z", "1/0"), DcpairStatus::InvalidInput);
        assert_eq!(dcpair_config_set_approx(cfg, 32), DcpairStatus::InvalidInput);

        // missing family is rejected at run time
        let mut r = ptr::null_mut();
        assert_eq!(dcpair_run(cfg, &mut r), DcpairStatus::InvalidInput);
        assert!(r.is_null());

        dcpair_config_set_family(cfg, c("gen-charlier").as_ptr());
        set(cfg, "b", "1/2");
        set(cfg, "z", "3/4");
        assert_eq!(dcpair_run(cfg, &mut r), DcpairStatus::InvalidInput);
        assert!(last_error().contains("transcendental"));
        dcpair_config_free(cfg);

        // inadmissible coherent pair: λ2 + (n-1) λ3 vanishes at n = 6
        let cfg = config("coherence");
        dcpair_config_set_case(cfg, c("IV").as_ptr());
        for (k, v) in [("N", "6"), ("a", "1/2"), ("b", "1/2"), ("omega", "3/5")] {
            set(cfg, k, v);
        }
        assert_eq!(dcpair_run(cfg, &mut r), DcpairStatus::InvalidInput);
        assert!(last_error().contains("n = 6"));
        dcpair_config_free(cfg);
    }
}

#[test]
fn null_and_utf8_guards() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(dcpair_config_new(ptr::null(), &mut cfg), DcpairStatus::NullPointer);
        assert_eq!(dcpair_config_new(c("mops").as_ptr(), ptr::null_mut()), DcpairStatus::NullPointer);
        assert_eq!(dcpair_config_set_nmax(ptr::null_mut(), 3), DcpairStatus::NullPointer);
        let bad = [0xffu8, 0xfe, 0];
        let cfg = config("mops");
        assert_eq!(dcpair_config_set_family(cfg, bad.as_ptr() as *const c_char), DcpairStatus::InvalidUtf8);
        let mut r = ptr::null_mut();
        assert_eq!(dcpair_run(ptr::null(), &mut r), DcpairStatus::NullPointer);
        assert_eq!(dcpair_report_all_passed(ptr::null()), -1);
        let mut s = ptr::null_mut();
        assert_eq!(dcpair_report_json(ptr::null(), &mut s), DcpairStatus::NullPointer);
        dcpair_string_free(ptr::null_mut());
        dcpair_config_free(ptr::null_mut());
        dcpair_report_free(ptr::null_mut());
        dcpair_config_free(cfg);
    }
}

#[test]
fn last_error_is_cleared_by_success() {
    let cfg = config("pearson");
    unsafe {
        assert_eq!(dcpair_config_set_family(cfg, c("nope").as_ptr()), DcpairStatus::InvalidInput);
        assert!(!dcpair_last_error().is_null());
        assert_eq!(dcpair_config_set_family(cfg, c("meixner").as_ptr()), DcpairStatus::Ok);
        assert!(dcpair_last_error().is_null());
        dcpair_config_free(cfg);
    }
}

#[test]
fn version_matches_manifest() {
    let v = unsafe { CStr::from_ptr(dcpair_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header() -> (PathBuf, String) {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/dcpair.h");
    let text = std::fs::read_to_string(&p).expect("header generated by the build script");
    (p, text)
}

#[test]
fn header_declares_every_export() {
    let (_, h) = header();
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let names: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .filter_map(|rest| rest.split('(').next())
        .collect();
    assert!(names.len() >= 20, "{names:?}");
    for n in names {
        assert!(h.contains(&format!("{n}(")), "{n} missing from header");
    }
    for t in ["typedef struct DcpairConfig DcpairConfig;", "typedef struct DcpairReport DcpairReport;", "DCPAIR_STATUS_OK = 0"] {
        assert!(h.contains(t), "{t}");
    }
}

#[test]
fn header_compiles_as_c() {
    let (p, _) = header();
    let dir = tempfile_dir();
    let src = dir.join("probe.c");
    std::fs::write(&src, "#include \"dcpair.h\"\nint main(void) { DcpairConfig *c = 0; (void)c; return DCPAIR_STATUS_OK; }\n").unwrap();
    let out = Process::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(p.parent().unwrap())
        .arg(&src)
        .output();
    match out {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(e) => eprintln!("no C compiler available ({e}); header syntax not checked"),
    }
}

fn tempfile_dir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("dcpair-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
