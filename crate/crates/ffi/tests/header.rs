use std::path::{Path, PathBuf};
use std::process::Command;

const SMOKE: &str = r#"
#include "cslwalk.h"
#include <stdio.h>

int main(void) {
    CslwalkSetup *setup = NULL;
    CslwalkParams *params = NULL;
    double var_x = 0.0, var_rel = 0.0;
    if (cslwalk_setup_default(&setup) != CSLWALK_STATUS_OK) return 1;
    if (cslwalk_params_from_lambda_alpha(1.0, 1e4, 1e9, &params) != CSLWALK_STATUS_OK) return 2;
    if (cslwalk_variances(setup, params, &var_x, &var_rel) != CSLWALK_STATUS_OK) return 3;
    if (cslwalk_params_new(-1.0, 1.0, 1.0, &params) != CSLWALK_STATUS_PARAMETER_DOMAIN) return 4;
    char msg[128];
    cslwalk_last_error_message(msg, sizeof msg);
    printf("%.15e %.15e %s\n", var_x, var_rel, cslwalk_status_name(CSLWALK_STATUS_PARAMETER_DOMAIN));
    cslwalk_params_free(params);
    cslwalk_setup_free(setup);
    return 0;
}
"#;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn have_cc() -> bool {
    Command::new("cc")
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

/// Directory holding the library artifacts: the parent of `deps/`.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_is_current_and_declares_the_api() {
    let h = std::fs::read_to_string(crate_dir().join("include/cslwalk.h")).unwrap();
    for sym in [
        "CSLWALK_H",
        "CSLWALK_STATUS_NULL_POINTER",
        "typedef struct CslwalkParams CslwalkParams;",
        "cslwalk_sample_trials",
        "cslwalk_last_error_message",
    ] {
        assert!(h.contains(sym), "header lacks {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    if !have_cc() {
        eprintln!("no C compiler; skipped");
        return;
    }
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(crate_dir().join("include/cslwalk.h"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn c_program_links_against_static_library() {
    if !have_cc() {
        eprintln!("no C compiler; skipped");
        return;
    }
    let lib = artifact_dir().join("libcslwalk_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let bin = dir.path().join("smoke");
    std::fs::write(&src, SMOKE).unwrap();
    let cc = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(crate_dir().join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(
        cc.status.success(),
        "{}",
        String::from_utf8_lossy(&cc.stderr)
    );
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let line = String::from_utf8(run.stdout).unwrap();
    let f: Vec<&str> = line.split_whitespace().collect();
    let var_x: f64 = f[0].parse().unwrap();
    assert!((var_x / 6.081832751678783e-17 - 1.0).abs() < 1e-12);
    assert_eq!(f[2], "parameter-domain");
}
