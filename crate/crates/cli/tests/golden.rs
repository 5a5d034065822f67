//! Golden reports. Each case runs three times (pool sizes 1, 4 and 1 again)
//! and must produce identical bytes, which must also match the checked-in
//! file. `UPDATE_GOLDEN=1` rewrites the files.

use std::path::PathBuf;
use std::process::Command;

#[path = "support/cases.rs"]
mod cases;

use cases::CASES;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn run(args: &[&str], threads: &str) -> (Vec<u8>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_modlab"))
        .args(args)
        .current_dir(root())
        .env("MODLAB_THREADS", threads)
        .output()
        .expect("spawn modlab");
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    (out.stdout, out.stderr)
}


#[test]
fn golden_reports_are_reproducible() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut failures = Vec::new();
    for (name, args) in CASES {
        let a = run(args, "1");
        let b = run(args, "4");
        let c = run(args, "1");
        assert_eq!(a, b, "{name}: pool size changed the output");
        assert_eq!(a, c, "{name}: rerun changed the output");
        let path = golden_dir().join(name);
        let side = golden_dir().join(format!("{name}.fit.json"));
        if update {
            std::fs::write(&path, &a.0).unwrap();
            if !a.1.is_empty() {
                std::fs::write(&side, &a.1).unwrap();
            }
            continue;
        }
        let want = std::fs::read(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
        if want != a.0 {
            failures.push(name.to_string());
        }
        if !a.1.is_empty() && std::fs::read(&side).ok().as_deref() != Some(&a.1[..]) {
            failures.push(format!("{name}.fit.json"));
        }
    }
    assert!(failures.is_empty(), "golden mismatch: {failures:?}");
}
