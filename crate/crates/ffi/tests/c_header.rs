use std::path::{Path, PathBuf};
use std::process::Command;

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_declares_api() {
    let text = std::fs::read_to_string(header_dir().join("recoil_fidelity.h")).unwrap();
    for name in [
        "typedef struct RfProtocol RfProtocol;",
        "rf_protocol_from_json",
        "rf_protocol_free",
        "rf_fidelity",
        "rf_mc_protocol",
        "rf_table1",
        "rf_last_error_message",
        "RF_STATUS_NON_CONVERGENCE",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
}

/// Compiles and runs the C smoke program against the static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| manifest.join("../../target"));
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    let lib = target.join(profile).join("librecoil_fidelity_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("rf_smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(header_dir())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.trim_end().ends_with("8.6"), "{stdout}");
}
