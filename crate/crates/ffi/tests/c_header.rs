//! Compile and run a small C program against the generated header and the
//! built shared library. Skips quietly when no C compiler is available.

use std::path::{Path, PathBuf};
use std::process::Command;

fn have_cc() -> bool {
    Command::new("cc")
        .arg("--version")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn target_dir() -> PathBuf {
    if let Ok(dir) = std::env::var("CARGO_TARGET_DIR") {
        return PathBuf::from(dir);
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../target")
}

const C_SOURCE: &str = r#"
#include <stdio.h>
#include "fourmode.h"

int main(void) {
    FmParams *p = fm_params_new(0.2, 0.3, 0.13, -0.08, 0.15, 0.65, 0.1, -0.2, 0.05, 0.12);
    if (!p) return 1;
    double gamma = 0.0, sigma = 0.0, entropy = 0.0;
    if (fm_purity(p, &gamma, &sigma, &entropy) != FM_STATUS_OK) return 2;
    if (!(gamma > 0.0 && gamma < 1.0)) return 3;
    double cov[16];
    if (fm_covariance(p, 1.5, cov) != FM_STATUS_OK) return 4;
    double re = 0.0, im = 0.0;
    if (fm_amplitude(p, 1, 1, 1, 0, &re, &im) != FM_STATUS_OK) return 5;
    if (fm_amplitude(p, 1, 1, 5, 0, &re, &im) != FM_STATUS_INVALID_ARGUMENT) return 6;
    fm_params_free(p);
    printf("gamma = %.12f\n", gamma);
    return 0;
}
"#;

#[test]
fn c_program_compiles_links_and_runs() {
    if !have_cc() {
        eprintln!("skipping: cc not found");
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(
        include.join("fourmode.h").exists(),
        "generated header missing"
    );
    let lib_dir = target_dir().join("debug");
    let so = lib_dir.join("libfourmode_ffi.so");
    if !so.exists() {
        eprintln!("skipping link test: {} not built", so.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, C_SOURCE).unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lfourmode_ffi")
        .arg("-lm")
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "cc failed");
    let out = Command::new(&exe)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "smoke test exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("gamma = 0."), "{text}");
}
