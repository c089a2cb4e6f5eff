//! Compiles and runs a C program against the generated header and the
//! static library. Skipped when no C compiler is on PATH.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "fuzzreg.h"

int main(void) {
    double c = 0.0;
    if (fzr_c_factor(1.0, 1.639, &c) != FZR_OK || fabs(c - 0.5000224774) > 1e-8) return 1;
    if (fzr_c_factor(0.0, 1.0, &c) != FZR_ERR_INVALID_PARAMETER) return 2;
    char msg[128];
    if (fzr_last_error(msg, sizeof msg) == 0) return 3;

    double m[4] = {0.2, 0.4, 0.6, 0.8}, s[4] = {10, 20, 30, 40}, x[4] = {1, 1, 1, 1};
    FzrDataset *data = NULL;
    if (fzr_dataset_new(m, s, 4, x, 1, 0.0, 1.0, &data) != FZR_OK) return 4;
    size_t n = 0, k = 0;
    if (fzr_dataset_shape(data, &n, &k) != FZR_OK || n != 4 || k != 1) return 5;
    FzrModel *model = NULL;
    if (fzr_model_new(FZR_FAMILY_BETA, FZR_LINK_DEFAULT, 0.0, 1.0, 1, &model) != FZR_OK) return 6;
    fzr_model_free(model);
    fzr_dataset_free(data);
    printf("ok %s\n", fzr_version());
    return 0;
}
"#;

#[test]
fn header_compiles_and_links() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libfuzzreg_ffi.a");
    if !lib.exists() {
        eprintln!("static library not built at {}; skipping", lib.display());
        return;
    }
    let dir = tempfile_dir();
    let src = dir.join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = dir.join("smoke");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fuzzreg-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
