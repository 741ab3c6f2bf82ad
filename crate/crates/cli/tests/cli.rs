use dilation_lab::shifts::{make_sigma_shift, spectrum_csv, spectrum_table, unit_circle};
use dilation_lab::{c64, CMat, Operator, Space};
use dilation_lab_cli::gallery::{ids, run_example};
use dilation_lab_cli::suites::run_suite;
use dilation_lab_cli::tools::{dilate, spectrum, SigmaSpec};
use dilation_lab_cli::{Ctx, Report};
use std::path::Path;
use std::process::{Command, Output};

fn lab(state: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lab"))
        .args(args)
        .env("LAB_STATE_DIR", state)
        .env("LAB_THREADS", "2")
        .output()
        .expect("lab runs")
}

#[test]
fn every_gallery_entry_passes() {
    let ctx = Ctx::default();
    for id in ids() {
        let r = run_example(id, &ctx).unwrap();
        assert!(r.pass, "{}", r.failure_line().unwrap_or_default());
        assert!(!r.assertions.is_empty());
    }
}

#[test]
fn ex6_margin_is_reported() {
    let r = run_example("ex6-case1-p1.5", &Ctx::default()).unwrap();
    let m = r.assertions.iter().find(|a| a.name == "search_margin").unwrap();
    assert!((m.value - (1.428286 - 1.587401)).abs() < 1e-6);
}

#[test]
fn reports_round_trip_through_json() {
    let r = run_example("cinf3-two-complements", &Ctx::default()).unwrap();
    assert_eq!(Report::from_json(&r.to_json().unwrap()).unwrap(), r);
    let r = run_example("ex6-case2-p3", &Ctx::default()).unwrap();
    assert!(r.assertions.iter().any(|a| !a.witness.is_empty()));
    assert_eq!(Report::from_json(&r.to_json().unwrap()).unwrap(), r);
}

#[test]
fn csv_has_the_flat_schema() {
    let r = run_example("l1-mhat-not-subspace", &Ctx::default()).unwrap();
    let csv = r.to_csv().unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("id,assertion,value,tolerance,pass"));
    assert_eq!(lines.count(), r.assertions.len());
}

#[test]
fn suites_are_deterministic() {
    let ctx = Ctx::with_seed(1);
    let a = run_suite("all", &ctx).unwrap();
    let b = run_suite("all", &ctx).unwrap();
    assert!(a.pass, "{}", a.failure_line().unwrap_or_default());
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert!(a.timings.is_empty());
}

#[test]
fn hilbert_characterization_suite() {
    let r = run_suite("hilbert-characterization", &Ctx::with_seed(7)).unwrap();
    assert!(r.pass, "{}", r.failure_line().unwrap_or_default());
    assert!(r.assertions.iter().any(|a| a.name.starts_with("hilbert-side/")));
    assert!(r.assertions.iter().any(|a| a.name == "non-hilbert-witnesses/star_defect" && !a.witness.is_empty()));
}

#[test]
fn injected_fault_fails_with_a_witness() {
    let ctx = Ctx { corrupt: true, ..Ctx::with_seed(3) };
    let r = run_suite("dilation", &ctx).unwrap();
    assert!(!r.pass);
    let first = r.first_failure.clone().unwrap();
    assert!(first.starts_with("min-dilation-identity/"), "{first}");
    let a = r.assertions.iter().find(|a| a.name == first).unwrap();
    assert!(!a.witness.is_empty());
    assert!(a.detail.contains("block 0"));
}

#[test]
fn tolerance_scale_never_loosens_violations() {
    let loose = Ctx { tol_scale: 1e6, ..Ctx::default() };
    let r = run_example("ex6-case1-p1", &loose).unwrap();
    let neg = r.assertions.iter().find(|a| a.name == "margin_at_pair_negative").unwrap();
    assert_eq!(neg.tolerance, 0.0);
    let tight = Ctx { tol_scale: 1e-3, ..Ctx::default() };
    let r = run_example("ex6-case1-p1.5", &tight).unwrap();
    let row = r.assertions.iter().find(|a| a.name == "search_margin").unwrap();
    assert!((row.tolerance - 1e-9).abs() < 1e-24);
    assert!(Ctx { tol_scale: 0.0, ..Ctx::default() }.validate().is_err());
}

#[test]
fn dilate_and_spectrum_tools() {
    let s = Space::lpf(3, 2.0).unwrap();
    let t = Operator::diagonal(s, vec![c64(0.5, 0.0), c64(0.0, 0.3), c64(-0.2, 0.1)]).unwrap();
    let (r, b) = dilate(&t, 6, &Ctx::default()).unwrap();
    assert!(r.pass && b.is_some());
    let l = 0.7;
    let z = c64(0.0, 0.0);
    let bad = Operator::on(Space::lpf(2, 1.5).unwrap(), CMat::from_row_slice(2, 2, &[c64(l, 0.0), c64(-l, 0.0), z, z])).unwrap();
    let (r, b) = dilate(&bad, 6, &Ctx::default()).unwrap();
    assert!(!r.pass && b.is_none());
    assert_eq!(r.first_failure.as_deref(), Some("a_t_triangle"));

    let spec = SigmaSpec { base: Space::lpf(1, 3.0).unwrap(), halfwidth: 20, horizon: None };
    let (r, table) = spectrum(&spec, 8, &Ctx::default()).unwrap();
    assert!(r.pass);
    let b = make_sigma_shift(&spec.base, 20, 1).unwrap();
    let direct = spectrum_csv(&spectrum_table(&b, &unit_circle(8), 19, 1).unwrap()).unwrap();
    assert_eq!(table, direct);
}

#[test]
fn binary_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state");
    let out = dir.path().join("r.json");

    let o = lab(&state, &["report"]);
    assert_eq!(o.status.code(), Some(2), "report before any run");

    let o = lab(&state, &["example", "disk-algebra-Mz", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = Report::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(r.pass && r.id == "disk-algebra-Mz");

    let csv = dir.path().join("r.csv");
    let o = lab(&state, &["report", "--format", "csv", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("id,assertion,value,tolerance,pass\n"));

    let o = lab(&state, &["example", "no-such-id"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown gallery id"));

    let o = lab(&state, &["suite", "dilation", "--seed", "3", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("first failed assertion `min-dilation-identity/"));

    let op = dir.path().join("op.json");
    let t = Operator::diagonal(Space::lpf(2, 3.0).unwrap(), vec![c64(0.4, 0.0), c64(0.0, 0.4)]).unwrap();
    std::fs::write(&op, serde_json::to_string(&t).unwrap()).unwrap();
    let bundle = dir.path().join("bundle.json");
    let o = lab(&state, &["dilate", op.to_str().unwrap(), "--depth", "5", "--bundle", bundle.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(bundle.exists());

    let sigma = dir.path().join("sigma.json");
    std::fs::write(&sigma, r#"{"base":{"kind":"lp","n":1,"p":2},"halfwidth":30}"#).unwrap();
    let table = dir.path().join("spec.csv");
    let o = lab(&state, &["spectrum", sigma.to_str().unwrap(), "--grid", "16", "--out", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.starts_with("lambda_re,lambda_im,residual,horizon\n"));
    assert_eq!(text.lines().count(), 17);
}
