use std::process::Command;

use hitchin::cli::{emit_csv, parse_list, parse_quad, run, Cell, Table, CURVATURE_HEADER, EXIT_OK, EXIT_USAGE};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hitchin"))
}

fn run_capture(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("hitchin").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn lists_parse_and_reject_garbage() {
    assert_eq!(parse_list("1, 2.5,4e1").unwrap().0, vec![1.0, 2.5, 40.0]);
    for bad in ["", "1,,2", "1;2", "1,-2", "a", "1,nan", "1,inf"] {
        assert!(parse_list(bad).is_err(), "{bad}");
    }
    assert_eq!(parse_quad("1,0.5-2i").unwrap().coeffs.len(), 2);
    assert!(parse_quad("i").is_ok());
    for bad in ["", "1,x", "0", "0,0"] {
        assert!(parse_quad(bad).is_err(), "{bad}");
    }
}

#[test]
fn malformed_list_is_a_usage_error() {
    let s = bin().args(["green-scaling", "--t-list", "1,two,4"]).output().unwrap();
    assert_eq!(s.status.code(), Some(EXIT_USAGE));
    assert!(s.stdout.is_empty());
    assert!(String::from_utf8_lossy(&s.stderr).contains("malformed list"));
    let (code, _, _) = run_capture(&["curvature-scan", "--f1", "1,"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn unknown_command_and_bad_parameters_are_usage_errors() {
    assert_eq!(run_capture(&["no-such-command"]).0, EXIT_USAGE);
    assert_eq!(run_capture(&[]).0, EXIT_USAGE);
    assert_eq!(run_capture(&["painleve-solve", "--n", "3"]).0, EXIT_USAGE);
    // two parallel differentials span no plane
    assert_eq!(run_capture(&["curvature-scan", "--f1", "1", "--f2", "2", "--t-list", "8,16", "--n", "150"]).0, EXIT_USAGE);
}

#[test]
fn every_command_has_help() {
    for cmd in [
        "painleve-solve", "fiducial-check", "tangent-build", "mode-spectrum", "decay-rates", "green-scaling", "curvature-scan", "lambda", "selftest",
    ] {
        let (code, out, _) = run_capture(&[cmd, "--help"]);
        assert_eq!(code, EXIT_OK, "{cmd}");
        assert!(out.contains("--out"), "{cmd}");
    }
    let s = bin().arg("--help").output().unwrap();
    assert_eq!(s.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&s.stdout).contains("HITCHIN_THREADS"));
}

#[test]
fn bad_thread_count_is_rejected() {
    let s = bin().env("HITCHIN_THREADS", "zero").args(["decay-rates", "--ell-max", "0"]).output().unwrap();
    assert_eq!(s.status.code(), Some(EXIT_USAGE));
    let s = bin().env("HITCHIN_THREADS", "1").args(["decay-rates", "--ell-max", "0"]).output().unwrap();
    assert_eq!(s.status.code(), Some(EXIT_OK));
}

#[test]
fn output_is_deterministic_and_written_to_file() {
    let args = ["mode-spectrum", "--ell-max", "2", "--n", "80"];
    let (c1, a, _) = run_capture(&args);
    let (c2, b, _) = run_capture(&args);
    assert_eq!((c1, c2), (EXIT_OK, EXIT_OK));
    assert_eq!(a, b);
    assert!(a.starts_with("t,ell,sign,lambda_min\n"));
    assert_eq!(a.lines().count(), 1 + 5);

    let dir = std::env::temp_dir().join(format!("hitchin-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("spectrum.csv");
    let s = bin().args(args).args(["--out", path.to_str().unwrap()]).env("HITCHIN_THREADS", "2").output().unwrap();
    assert_eq!(s.status.code(), Some(EXIT_OK));
    assert!(s.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), a);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let (code, _, err) = run_capture(&["decay-rates", "--ell-max", "0", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(code, 1);
    assert!(err.contains("error"));
}

#[test]
fn curvature_scan_has_seven_columns() {
    let (code, out, _) = run_capture(&["curvature-scan", "--t-list", "8,16", "--n", "200", "--ell-max", "4"]);
    assert_eq!(code, EXIT_OK);
    let mut rd = csv::Reader::from_reader(out.as_bytes());
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, CURVATURE_HEADER);
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r.len(), 7);
        let k: f64 = r[5].parse().unwrap();
        let gram: f64 = r[4].parse().unwrap();
        assert!(k.is_finite() && gram > 0.0);
    }
}

#[test]
fn empty_table_is_header_only() {
    let t = Table::new(&["a", "b"]);
    let mut buf = Vec::new();
    emit_csv(&t, None, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n");
}

#[test]
fn seventeen_significant_digits() {
    let mut t = Table::new(&["x"]);
    t.push(vec![Cell::Num(std::f64::consts::PI)]);
    let mut buf = Vec::new();
    emit_csv(&t, None, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "x\n3.1415926535897931e0\n");
}

proptest! {
    #[test]
    fn csv_numbers_round_trip_bit_exactly(xs in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..20)) {
        let mut t = Table::new(&["v"]);
        for &x in &xs {
            t.push(vec![Cell::Num(x)]);
        }
        let mut buf = Vec::new();
        emit_csv(&t, None, &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        let back: Vec<f64> = rd.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
        prop_assert_eq!(back.len(), xs.len());
        for (a, b) in xs.iter().zip(&back) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn list_parser_round_trips(xs in prop::collection::vec(1e-6f64..1e6, 1..10)) {
        let s = xs.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        prop_assert_eq!(parse_list(&s).unwrap().0, xs);
    }
}
