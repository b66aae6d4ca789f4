//! Compiles a small C program against the generated header and, when the
//! static library is present, links and runs it.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "nldiff.h"

int main(void) {
    double v = 0.0;
    if (nld_mittag_leffler(0.5, -1.0, &v) != NLD_STATUS_OK) return 1;
    if (v < 0.4275 || v > 0.4276) return 2;
    if (nld_mittag_leffler(2.0, -1.0, &v) != NLD_STATUS_NUMERICAL) return 3;
    if (nld_last_error() == NULL) return 4;

    const char *cfg = "{\"mode\":\"solve\",\"problem\":{\"cells\":8,\"steps\":4,"
        "\"kernel\":{\"family\":\"fractional\",\"alpha\":0.5},"
        "\"phi\":{\"law\":\"linear\"},\"u0\":{\"preset\":\"sine\"}}}";
    NldSolution *sol = NULL;
    if (nld_solution_from_config(cfg, &sol) != NLD_STATUS_OK) return 5;
    double row[9];
    if (nld_solution_copy_u(sol, nld_solution_steps(sol), row, 9) != NLD_STATUS_OK) return 6;
    if (!(row[4] > 0.0 && row[4] < 1.0)) return 7;
    nld_solution_free(sol);
    printf("ok\n");
    return 0;
}
"#;

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok().map(|_| cc)
}

fn staticlib() -> Option<PathBuf> {
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let target = tmp.parent()?;
    ["debug", "release"]
        .iter()
        .map(|p| target.join(p).join("libnldiff_ffi.a"))
        .find(|p| p.exists())
}

fn include_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(include_dir().join("nldiff.h")).unwrap();
    for name in [
        "typedef struct NldSolution NldSolution;",
        "NLD_STATUS_OK = 0",
        "nld_solution_from_config",
        "nld_solution_copy_u",
        "nld_solution_copy_v",
        "nld_solution_free",
        "nld_verify_suite",
        "nld_kernel_sample",
        "nld_mittag_leffler",
        "nld_last_error",
        "nld_string_free",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn c_program_compiles_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler; skipped");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(include_dir())
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success(), "header does not compile as C99");

    let Some(lib) = staticlib() else {
        eprintln!("static library not built; link step skipped");
        return;
    };
    let exe = dir.path().join("main");
    let status = Command::new(&cc)
        .arg("-I")
        .arg(include_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "link failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}
