use std::ffi::{CStr, CString};
use std::ptr;

use nldiff_ffi::*;

const LINEAR: &str = r#"{
    "mode": "solve",
    "problem": {
        "cells": 16, "steps": 8,
        "kernel": {"family": "fractional", "alpha": 0.5},
        "phi": {"law": "linear"},
        "u0": {"preset": "sine"}
    }
}"#;

fn last_error() -> String {
    let p = nld_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn solution(json: &str) -> *mut NldSolution {
    let cfg = CString::new(json).unwrap();
    let mut sol = ptr::null_mut();
    let status = unsafe { nld_solution_from_config(cfg.as_ptr(), &mut sol) };
    assert_eq!(status, NldStatus::Ok, "{}", last_error());
    assert!(!sol.is_null());
    sol
}

#[test]
fn solve_and_copy_rows() {
    let sol = solution(LINEAR);
    unsafe {
        assert_eq!(nld_solution_steps(sol), 8);
        assert_eq!(nld_solution_cells(sol), 16);
        assert_eq!(nld_solution_eps(sol), 0.0);
        let sup = nld_solution_sup(sol);
        assert!((sup - 1.0).abs() < 1e-12);

        let mut row = vec![f64::NAN; 17];
        assert_eq!(nld_solution_copy_u(sol, 0, row.as_mut_ptr(), row.len()), NldStatus::Ok);
        assert_eq!(row[0], 0.0);
        assert!((row[8] - 1.0).abs() < 1e-15);
        assert_eq!(nld_solution_copy_v(sol, 8, row.as_mut_ptr(), row.len()), NldStatus::Ok);
        assert!(row[8] > 0.0 && row[8] < 1.0);

        let mut short = vec![0.0; 16];
        assert_eq!(nld_solution_copy_u(sol, 0, short.as_mut_ptr(), short.len()), NldStatus::BufferTooSmall);
        assert!(last_error().contains("need 17"));
        assert_eq!(nld_solution_copy_u(sol, 9, row.as_mut_ptr(), row.len()), NldStatus::InvalidArgument);
        assert_eq!(nld_solution_copy_u(sol, 0, ptr::null_mut(), 17), NldStatus::NullPointer);

        let mut csv = ptr::null_mut();
        assert_eq!(nld_solution_to_csv(sol, &mut csv), NldStatus::Ok);
        let text = CStr::from_ptr(csv).to_str().unwrap().to_owned();
        nld_string_free(csv);
        assert!(text.starts_with("n,t,i,x,u,v\n"));
        assert_eq!(text.lines().count(), 1 + 9 * 17);
        nld_solution_free(sol);
    }
}

#[test]
fn config_errors_name_the_field() {
    let cfg = CString::new(LINEAR.replace(r#", "alpha": 0.5"#, "")).unwrap();
    let mut sol = ptr::null_mut();
    let status = unsafe { nld_solution_from_config(cfg.as_ptr(), &mut sol) };
    assert_eq!(status, NldStatus::Config);
    assert!(sol.is_null());
    let msg = last_error();
    assert!(msg.contains("problem.kernel") && msg.contains("alpha"), "{msg}");
}

#[test]
fn null_and_bad_utf8_are_rejected() {
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { nld_solution_from_config(ptr::null(), &mut sol) }, NldStatus::NullPointer);
    let bad = [0xffu8, 0xfe, 0];
    let status = unsafe { nld_solution_from_config(bad.as_ptr().cast(), &mut sol) };
    assert_eq!(status, NldStatus::InvalidUtf8);
    let cfg = CString::new(LINEAR).unwrap();
    assert_eq!(unsafe { nld_solution_from_config(cfg.as_ptr(), ptr::null_mut()) }, NldStatus::NullPointer);
    unsafe {
        assert_eq!(nld_solution_steps(ptr::null()), 0);
        assert!(nld_solution_sup(ptr::null()).is_nan());
        nld_solution_free(ptr::null_mut());
        nld_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_parameters_map_to_invalid_argument() {
    let cfg = CString::new(LINEAR.replace("0.5}", "1.5}")).unwrap();
    let mut sol = ptr::null_mut();
    let status = unsafe { nld_solution_from_config(cfg.as_ptr(), &mut sol) };
    assert_eq!(status, NldStatus::InvalidArgument);
    assert!(last_error().contains("alpha"));
}

#[test]
fn kernel_sample_matches_power_differences() {
    let json = CString::new(r#"{"family": "fractional", "alpha": 0.5}"#).unwrap();
    let mut k = vec![0.0; 4];
    let status = unsafe { nld_kernel_sample(json.as_ptr(), 1.0, 4, 0, k.as_mut_ptr(), k.len()) };
    assert_eq!(status, NldStatus::Ok);
    // k = g_{1/2}: average over cell j is (t_j^{1/2} - t_{j-1}^{1/2}) / (tau Gamma(3/2))
    let g = 0.886_226_925_452_758;
    for (j, kj) in k.iter().enumerate() {
        let (a, b) = (j as f64 / 4.0, (j + 1) as f64 / 4.0);
        let want = (b.sqrt() - a.sqrt()) / (0.25 * g);
        assert!((kj - want).abs() <= 1e-13 * want, "{j}: {kj} vs {want}");
    }
    let status = unsafe { nld_kernel_sample(json.as_ptr(), 1.0, 4, 2, k.as_mut_ptr(), k.len()) };
    assert_eq!(status, NldStatus::InvalidArgument);
    let status = unsafe { nld_kernel_sample(json.as_ptr(), 1.0, 8, 1, k.as_mut_ptr(), k.len()) };
    assert_eq!(status, NldStatus::BufferTooSmall);
    let bad = CString::new(r#"{"family": "gaussian"}"#).unwrap();
    let status = unsafe { nld_kernel_sample(bad.as_ptr(), 1.0, 4, 0, k.as_mut_ptr(), k.len()) };
    assert_eq!(status, NldStatus::Config);
}

#[test]
fn local_kernel_is_available() {
    let json = CString::new(r#"{"family": "local"}"#).unwrap();
    let mut l = vec![0.0; 3];
    let status = unsafe { nld_kernel_sample(json.as_ptr(), 1.5, 3, 1, l.as_mut_ptr(), l.len()) };
    assert_eq!(status, NldStatus::Ok);
    assert_eq!(l, vec![1.0; 3]);
}

#[test]
fn mittag_leffler_matches_erfc_identity() {
    let mut v = 0.0;
    assert_eq!(unsafe { nld_mittag_leffler(0.5, -1.0, &mut v) }, NldStatus::Ok);
    assert!((v - 0.427_583_576_155_807).abs() < 1e-12);
    assert_eq!(unsafe { nld_mittag_leffler(0.5, 1.0, &mut v) }, NldStatus::Numerical);
    assert_eq!(unsafe { nld_mittag_leffler(0.5, -1.0, ptr::null_mut()) }, NldStatus::NullPointer);
}

#[test]
fn verify_suite_reports_failed_count() {
    let json = CString::new(
        r#"{
        "mode": "verify_suite",
        "seed": 3,
        "problem": {
            "cells": 16, "steps": 16,
            "kernel": {"family": "fractional", "alpha": 0.5},
            "phi": {"law": "power", "exponent": 3},
            "u0": {"preset": "sine"}
        },
        "suite": {"convexity_trials": 6, "kernel_steps": 1024}
    }"#,
    )
    .unwrap();
    let mut report = ptr::null_mut();
    let mut failed = usize::MAX;
    let status = unsafe { nld_verify_suite(json.as_ptr(), &mut report, &mut failed) };
    assert_eq!(status, NldStatus::Ok, "{}", last_error());
    let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_owned();
    unsafe { nld_string_free(report) };
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let checks = value["checks"].as_array().unwrap();
    let count = checks.iter().filter(|c| c["pass"] == false).count();
    assert_eq!(count, failed);
    assert!(checks.iter().any(|c| c["name"] == "l1_contraction"));
}
