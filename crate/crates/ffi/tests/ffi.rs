use std::ffi::{CStr, CString};
use std::ptr;

use ordiso_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let n = unsafe { ordiso_last_error(buf.as_mut_ptr(), buf.len()) };
    if n == 0 {
        return String::new();
    }
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn sample(y: &[f64], z: &[f64]) -> *mut OrdisoSample {
    let mut s = ptr::null_mut();
    let st =
        unsafe { ordiso_sample_new(ptr::null(), y.as_ptr(), z.as_ptr(), ptr::null(), ptr::null(), y.len(), &mut s) };
    assert_eq!(st, OrdisoStatus::Ok, "{}", last_error());
    s
}

fn copy(fit: *const OrdisoFit, f: unsafe extern "C" fn(*const OrdisoFit, *mut f64, usize) -> OrdisoStatus) -> Vec<f64> {
    let n = unsafe { ordiso_fit_len(fit) };
    let mut v = vec![0.0; n];
    assert_eq!(unsafe { f(fit, v.as_mut_ptr(), n) }, OrdisoStatus::Ok);
    v
}

#[test]
fn every_method_solves_the_crossing_pair() {
    let s = sample(&[1.0, 0.0], &[0.0, 1.0]);
    let cfg = ordiso_config_default();
    for method in [OrdisoMethod::Dual, OrdisoMethod::GeneralizedPava, OrdisoMethod::Dykstra] {
        let mut fit = ptr::null_mut();
        let st = unsafe { ordiso_solve(s, method, &cfg, &mut fit) };
        assert_eq!(st, OrdisoStatus::Ok, "{method:?}: {}", last_error());
        assert!(unsafe { ordiso_fit_converged(fit) }, "{method:?}");
        let obj = unsafe { ordiso_fit_objective(fit) };
        assert!((obj - 2.0 / 3.0).abs() <= 1e-8, "{method:?} objective {obj}");
        let a = copy(fit, ordiso_fit_copy_a);
        let b = copy(fit, ordiso_fit_copy_b);
        let lambda = copy(fit, ordiso_fit_copy_lambda);
        for (got, want) in a.iter().zip([1.0 / 3.0, 1.0 / 3.0]) {
            assert!((got - want).abs() <= 1e-8, "{method:?} a {a:?}");
        }
        for (got, want) in b.iter().zip([1.0 / 3.0, 1.0]) {
            assert!((got - want).abs() <= 1e-8, "{method:?} b {b:?}");
        }
        for (got, want) in lambda.iter().zip([2.0 / 3.0, 0.0]) {
            assert!((got - want).abs() <= 1e-6, "{method:?} lambda {lambda:?}");
        }
        let mut passed = false;
        assert_eq!(unsafe { ordiso_fit_check(fit, 1e-6, &mut passed) }, OrdisoStatus::Ok);
        assert!(passed);
        unsafe { ordiso_fit_free(fit) };
    }
    unsafe { ordiso_sample_free(s) };
}

#[test]
fn null_config_uses_defaults() {
    let s = sample(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0]);
    let mut fit = ptr::null_mut();
    assert_eq!(unsafe { ordiso_solve(s, OrdisoMethod::Dual, ptr::null(), &mut fit) }, OrdisoStatus::Ok);
    assert_eq!(unsafe { ordiso_fit_iterations(fit) }, 0);
    assert_eq!(copy(fit, ordiso_fit_copy_a), vec![0.0, 1.0, 2.0]);
    assert_eq!(copy(fit, ordiso_fit_copy_lambda), vec![0.0; 3]);
    unsafe {
        ordiso_fit_free(fit);
        ordiso_sample_free(s);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let y = [1.0, f64::NAN];
    let z = [0.0, 1.0];
    let mut s = ptr::null_mut();
    let st = unsafe { ordiso_sample_new(ptr::null(), y.as_ptr(), z.as_ptr(), ptr::null(), ptr::null(), 2, &mut s) };
    assert_eq!(st, OrdisoStatus::Domain);
    assert!(s.is_null());
    assert!(!last_error().is_empty());

    let w = [1.0, -1.0];
    let st = unsafe { ordiso_sample_new(ptr::null(), z.as_ptr(), z.as_ptr(), w.as_ptr(), ptr::null(), 2, &mut s) };
    assert_eq!(st, OrdisoStatus::Domain);

    let st = unsafe { ordiso_sample_new(ptr::null(), ptr::null(), z.as_ptr(), ptr::null(), ptr::null(), 2, &mut s) };
    assert_eq!(st, OrdisoStatus::NullPointer);
    assert!(last_error().contains("y"));

    let mut fit = ptr::null_mut();
    assert_eq!(
        unsafe { ordiso_solve(ptr::null(), OrdisoMethod::Dual, ptr::null(), &mut fit) },
        OrdisoStatus::NullPointer
    );

    let s = sample(&[1.0, 0.0], &[0.0, 1.0]);
    let mut cfg = ordiso_config_default();
    cfg.feas_tol = -1.0;
    assert_eq!(unsafe { ordiso_solve(s, OrdisoMethod::Dual, &cfg, &mut fit) }, OrdisoStatus::Domain);
    assert!(fit.is_null());

    assert_eq!(unsafe { ordiso_solve(s, OrdisoMethod::Dual, ptr::null(), &mut fit) }, OrdisoStatus::Ok);
    assert_eq!(last_error(), "");
    let mut short = [0.0; 1];
    assert_eq!(unsafe { ordiso_fit_copy_a(fit, short.as_mut_ptr(), 1) }, OrdisoStatus::BufferTooSmall);
    unsafe {
        ordiso_fit_free(fit);
        ordiso_sample_free(s);
    }
}

#[test]
fn csv_in_json_out() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    std::fs::write(&input, "x,y,z\n1,1,0\n2,0,1\n").unwrap();
    let input = CString::new(input.to_str().unwrap()).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ordiso_sample_from_csv(input.as_ptr(), &mut s) }, OrdisoStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { ordiso_sample_len(s) }, 2);
    let mut fit = ptr::null_mut();
    assert_eq!(unsafe { ordiso_solve(s, OrdisoMethod::Dual, ptr::null(), &mut fit) }, OrdisoStatus::Ok);
    let out = dir.path().join("fit.json");
    let out_c = CString::new(out.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ordiso_fit_write(fit, out_c.as_ptr(), OrdisoFormat::Json) }, OrdisoStatus::Ok);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"fit-result-v1\""));
    unsafe {
        ordiso_fit_free(fit);
        ordiso_sample_free(s);
    }

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x,y,z\n1,1,0\n2,oops,1\n").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ordiso_sample_from_csv(bad.as_ptr(), &mut s) }, OrdisoStatus::Parse);
    assert!(last_error().contains('3'), "{}", last_error());
}

#[test]
fn isotonic_fit_pools_violators() {
    let data = [3.0, 1.0, 2.0];
    let w = [1.0, 2.0, 1.0];
    let mut out = [0.0; 3];
    assert_eq!(unsafe { ordiso_isotonic_fit(data.as_ptr(), w.as_ptr(), 3, out.as_mut_ptr()) }, OrdisoStatus::Ok);
    for (got, want) in out.iter().zip([5.0 / 3.0, 5.0 / 3.0, 2.0]) {
        assert!((got - want).abs() <= 1e-12, "{out:?}");
    }
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        ordiso_sample_free(ptr::null_mut());
        ordiso_fit_free(ptr::null_mut());
        assert_eq!(ordiso_sample_len(ptr::null()), 0);
        assert!(ordiso_fit_objective(ptr::null()).is_nan());
        assert!(!ordiso_fit_converged(ptr::null()));
    }
    let v = unsafe { CStr::from_ptr(ordiso_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/ordiso.h")).unwrap();
    for name in [
        "typedef struct OrdisoSample OrdisoSample;",
        "typedef struct OrdisoFit OrdisoFit;",
        "ORDISO_STATUS_OK = 0",
        "ordiso_sample_new",
        "ordiso_solve",
        "ordiso_fit_copy_lambda",
        "ordiso_fit_check",
        "ordiso_isotonic_fit",
        "ordiso_last_error",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    use std::path::PathBuf;
    use std::process::Command;

    // cargo test only builds the rlib, so build the static library in a
    // target directory of its own; the outer cargo holds the main one
    let exe = std::env::current_exe().unwrap();
    let target = exe.parent().unwrap().parent().unwrap().parent().unwrap().join("c-smoke");
    let built = Command::new(env!("CARGO"))
        .args(["build", "--quiet", "--lib", "-p", "ordiso-ffi", "--target-dir"])
        .arg(&target)
        .status()
        .unwrap();
    assert!(built.success());
    let lib = target.join("debug").join("libordiso_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("a C compiler named cc");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "smoke exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
