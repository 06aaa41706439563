use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use qfid_ffi::*;

fn last_error() -> Option<String> {
    let p = qfid_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn state(dim: usize, re: &[f64], im: Option<&[f64]>) -> (QfidStatus, *mut QfidState) {
    let mut out = ptr::null_mut();
    let im = im.map_or(ptr::null(), <[f64]>::as_ptr);
    let status = unsafe { qfid_state_new(dim, re.as_ptr(), im, &mut out) };
    (status, out)
}

#[test]
fn fidelity_of_zero_and_plus() {
    let (s1, rho) = state(2, &[1.0, 0.0, 0.0, 0.0], None);
    let (s2, sigma) = state(2, &[0.5, 0.5, 0.5, 0.5], None);
    assert_eq!((s1, s2), (QfidStatus::Ok, QfidStatus::Ok));
    let (mut f, mut a, mut d) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(qfid_fidelity(rho, sigma, &mut f), QfidStatus::Ok);
        assert_eq!(qfid_bures_angle(rho, sigma, &mut a), QfidStatus::Ok);
        assert_eq!(qfid_trace_distance(rho, sigma, &mut d), QfidStatus::Ok);
        let mut b = QfidBounds::default();
        assert_eq!(qfid_check_bounds(rho, sigma, &mut b), QfidStatus::Ok);
        assert!(b.lower_bound_ok && b.upper_bound_ok);
        assert_eq!(b.fidelity, f);
        qfid_state_free(rho);
        qfid_state_free(sigma);
    }
    assert!((f - 0.5f64.sqrt()).abs() < 1e-12);
    assert!((a - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    assert!((d - 0.5f64.sqrt()).abs() < 1e-12);
    assert!(last_error().is_none());
}

#[test]
fn complex_entries_round_trip() {
    // |ψ⟩ = (|0⟩ + i|1⟩)/√2
    let re = [0.5, 0.0, 0.0, 0.5];
    let im = [0.0, -0.5, 0.5, 0.0];
    let (s, rho) = state(2, &re, Some(&im));
    assert_eq!(s, QfidStatus::Ok);
    let (mut re_out, mut im_out) = ([0.0; 4], [0.0; 4]);
    unsafe {
        assert_eq!(qfid_state_dim(rho), 2);
        assert_eq!(
            qfid_state_entries(rho, re_out.as_mut_ptr(), im_out.as_mut_ptr()),
            QfidStatus::Ok
        );
        qfid_state_free(rho);
    }
    assert_eq!(re_out, re);
    assert_eq!(im_out, im);
}

#[test]
fn errors_carry_status_and_message() {
    let (s, out) = state(2, &[1.5, 0.0, 0.0, -0.5], None);
    assert_eq!(s, QfidStatus::InvalidState);
    assert!(out.is_null());
    assert!(last_error().unwrap().contains("positive semidefinite"));

    let (s, _) = state(2, &[0.5, 0.0, 0.0, 0.25], None);
    assert_eq!(s, QfidStatus::InvalidState);
    assert!(last_error().unwrap().contains("trace"));

    let (s, _) = state(0, &[], None);
    assert_eq!(s, QfidStatus::InvalidArgument);

    let mut f = 0.0;
    let a = unsafe {
        let mut a = ptr::null_mut();
        assert_eq!(qfid_state_random(2, 1, 1, &mut a), QfidStatus::Ok);
        a
    };
    let b = unsafe {
        let mut b = ptr::null_mut();
        assert_eq!(qfid_state_random(3, 2, 1, &mut b), QfidStatus::Ok);
        b
    };
    unsafe {
        assert_eq!(qfid_fidelity(a, b, &mut f), QfidStatus::DimensionMismatch);
        assert_eq!(qfid_fidelity(a, ptr::null(), &mut f), QfidStatus::NullPointer);
        assert_eq!(qfid_fidelity(a, a, ptr::null_mut()), QfidStatus::NullPointer);
        assert_eq!(qfid_state_dim(ptr::null()), 0);
        qfid_state_free(a);
        qfid_state_free(b);
        qfid_state_free(ptr::null_mut());
    }
    // A later success clears the message.
    let (s, rho) = state(1, &[1.0], None);
    assert_eq!(s, QfidStatus::Ok);
    assert!(last_error().is_none());
    unsafe { qfid_state_free(rho) };
}

#[test]
fn channels_from_registry_and_kraus() {
    let (_, plus) = state(2, &[0.5, 0.5, 0.5, 0.5], None);
    unsafe {
        let name = CString::new("dephasing(1)").unwrap();
        let mut named = ptr::null_mut();
        assert_eq!(qfid_channel_named(name.as_ptr(), 2, &mut named), QfidStatus::Ok);
        let mut fe = 0.0;
        assert_eq!(qfid_entanglement_fidelity(plus, named, &mut fe), QfidStatus::Ok);
        assert!((fe - 0.5).abs() < 1e-12, "{fe}");

        // Same channel from explicit Kraus operators |0⟩⟨0|, |1⟩⟨1|.
        let ops = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let mut kraus = ptr::null_mut();
        assert_eq!(
            qfid_channel_new(2, 2, ops.as_ptr(), ptr::null(), &mut kraus),
            QfidStatus::Ok
        );
        let mut out = ptr::null_mut();
        assert_eq!(qfid_channel_apply(kraus, plus, &mut out), QfidStatus::Ok);
        let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
        assert_eq!(
            qfid_state_entries(out, re.as_mut_ptr(), im.as_mut_ptr()),
            QfidStatus::Ok
        );
        assert_eq!(re, [0.5, 0.0, 0.0, 0.5]);

        let bad = [1.0, 0.0, 0.0, 0.0];
        let mut nope = ptr::null_mut();
        assert_eq!(
            qfid_channel_new(2, 1, bad.as_ptr(), ptr::null(), &mut nope),
            QfidStatus::InvalidChannel
        );
        let warp = CString::new("warp(0.1)").unwrap();
        assert_eq!(
            qfid_channel_named(warp.as_ptr(), 2, &mut nope),
            QfidStatus::InvalidArgument
        );
        assert!(nope.is_null());

        qfid_state_free(out);
        qfid_channel_free(kraus);
        qfid_channel_free(named);
        qfid_state_free(plus);
    }
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(qfid_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_is_current() {
    let header = std::fs::read_to_string(crate_dir().join("include/qfid.h")).unwrap();
    for name in [
        "qfid_state_new",
        "qfid_state_random",
        "qfid_fidelity",
        "qfid_check_bounds",
        "qfid_channel_named",
        "qfid_entanglement_fidelity",
        "qfid_last_error_message",
        "typedef struct QfidState QfidState;",
        "QFID_STATUS_INVALID_STATE = 3",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// The static library sits two levels above the test binary
/// (`target/<profile>/deps/abi-*`).
fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libqfid_ffi.a");
    lib.exists().then_some(lib)
}

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|c| {
        Command::new(c)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
    })
}

#[test]
fn c_program_compiles_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler on PATH; skipping");
        return;
    };
    let src = crate_dir().join("tests/c/smoke.c");
    let include = crate_dir().join("include");
    let Some(lib) = static_lib() else {
        // Without the archive, at least check the header parses as C.
        let status = Command::new(cc)
            .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
            .arg(&include)
            .arg(&src)
            .status()
            .unwrap();
        assert!(status.success());
        return;
    };
    let dir = tempdir();
    let exe = dir.join("smoke");
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}

fn tempdir() -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("qfid-ffi-c");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
