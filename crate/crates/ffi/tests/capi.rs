use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use vlaser_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { vl_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn sr() -> *mut VlParams {
    let name = CString::new("Sr88").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { vl_params_preset(name.as_ptr(), &mut p) }, VlStatus::Ok);
    assert!(!p.is_null());
    p
}

fn set(p: *mut VlParams, k: &str, v: &str) -> VlStatus {
    let (k, v) = (CString::new(k).unwrap(), CString::new(v).unwrap());
    unsafe { vl_params_set(p, k.as_ptr(), v.as_ptr()) }
}

#[test]
fn params_round_trip_with_units() {
    let p = sr();
    assert_eq!(set(p, "delta2", "4266 Gamma2"), VlStatus::Ok);
    let mut x = 0.0;
    let k = CString::new("delta2").unwrap();
    assert_eq!(unsafe { vl_params_get(p, k.as_ptr(), &mut x) }, VlStatus::Ok);
    assert!((x - 1.0).abs() < 1e-12);

    assert_eq!(set(p, "delta2", "5"), VlStatus::InvalidArgument);
    assert!(last_error().contains("needs"));
    assert_eq!(set(p, "n_atoms", "1 Gamma2"), VlStatus::InvalidArgument);
    assert_eq!(set(p, "nonsense", "1 Gamma2"), VlStatus::InvalidArgument);
    assert_eq!(set(p, "delta2", "1 furlong"), VlStatus::Config);
    assert_eq!(set(p, "gamma2", "-1 Gamma2"), VlStatus::InvalidArgument);
    // failed updates leave the handle unchanged
    assert_eq!(unsafe { vl_params_get(p, k.as_ptr(), &mut x) }, VlStatus::Ok);
    assert!((x - 1.0).abs() < 1e-12);
    unsafe { vl_params_free(p) };
}

#[test]
fn null_and_unknown_inputs() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { vl_params_preset(ptr::null(), &mut p) }, VlStatus::NullPointer);
    let bad = CString::new("Rb87").unwrap();
    assert_eq!(
        unsafe { vl_params_preset(bad.as_ptr(), &mut p) },
        VlStatus::InvalidArgument
    );
    assert!(last_error().contains("Rb87"));
    let mut x = 0.0;
    assert_eq!(
        unsafe { vl_steady_inversion(ptr::null(), &mut x) },
        VlStatus::NullPointer
    );
    assert_eq!(unsafe { vl_spectrum_len(ptr::null()) }, 0);
    unsafe {
        vl_params_free(ptr::null_mut());
        vl_spectrum_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(vl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn physics_through_the_abi() {
    let p = sr();
    let mut inv = 0.0;
    assert_eq!(unsafe { vl_steady_inversion(p, &mut inv) }, VlStatus::Ok);
    assert!(inv > 0.5);

    assert_eq!(set(p, "n_atoms", "50000"), VlStatus::Ok);
    assert_eq!(set(p, "nu", "10 Gamma2"), VlStatus::Ok);
    let (mut n, mut s22) = (0.0, 0.0);
    assert_eq!(unsafe { vl_laser_steady(p, &mut n, &mut s22) }, VlStatus::Ok);
    assert!(n > 100.0);

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { vl_laser_spectrum(p, &mut s) }, VlStatus::Ok);
    let len = unsafe { vl_spectrum_len(s) };
    assert!(len > 100);
    let (mut w, mut v) = (vec![0.0; len], vec![0.0; len]);
    assert_eq!(
        unsafe { vl_spectrum_data(s, w.as_mut_ptr(), v.as_mut_ptr(), len) },
        VlStatus::Ok
    );
    let (mut fwhm, mut peak) = (0.0, 0.0);
    assert_eq!(unsafe { vl_spectrum_peak(s, &mut fwhm, &mut peak) }, VlStatus::Ok);
    assert!(fwhm > 0.0 && fwhm < 1.0);
    assert!(v.iter().cloned().fold(0.0, f64::max) <= 1.0 + 1e-9);
    unsafe { vl_spectrum_free(s) };

    let mut d = 0.0;
    assert_eq!(unsafe { vl_doppler_broadening(0.0, 1e15, 1e-25, &mut d) }, VlStatus::Ok);
    assert_eq!(d, 0.0);
    assert_eq!(
        unsafe { vl_doppler_broadening(1.0, -1.0, 1.0, &mut d) },
        VlStatus::InvalidArgument
    );
    unsafe { vl_params_free(p) };
}

#[test]
fn limit_cycles_have_their_own_status() {
    let p = sr();
    assert_eq!(set(p, "n_atoms", "60000"), VlStatus::Ok);
    assert_eq!(set(p, "nu", "1 Gamma2"), VlStatus::Ok);
    let (mut n, mut s22) = (0.0, 0.0);
    assert_eq!(unsafe { vl_laser_steady(p, &mut n, &mut s22) }, VlStatus::LimitCycle);
    unsafe { vl_params_free(p) };
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/vlaser.h")).unwrap();
    for f in [
        "vl_params_preset",
        "vl_params_set",
        "vl_laser_spectrum",
        "vl_spectrum_data",
        "vl_run_config",
        "typedef struct VlParams VlParams",
        "VL_STATUS_LIMIT_CYCLE = 4",
    ] {
        assert!(h.contains(f), "{f}");
    }
}

const C_SMOKE: &str = r#"
#include <stdio.h>
#include "vlaser.h"
int main(void) {
    VlParams *p = NULL;
    if (vl_params_preset("Sr88", &p) != VL_STATUS_OK) return 1;
    double inv = 0.0;
    if (vl_steady_inversion(p, &inv) != VL_STATUS_OK) return 2;
    if (vl_params_set(p, "delta2", "5") != VL_STATUS_INVALID_ARGUMENT) return 3;
    char msg[128];
    if (vl_last_error(msg, sizeof msg) == 0) return 4;
    vl_params_free(p);
    printf("%.6f\n", inv);
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_static_library() {
    // target/<profile>/deps/<this test> -> target/<profile>
    let profile_dir: PathBuf = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .into();
    let lib = profile_dir.join("libvlaser_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler at {}", lib.display());
        return;
    }
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("c_smoke");
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("smoke.c");
    std::fs::write(&src, C_SMOKE).unwrap();
    let exe = dir.join("smoke");
    let out = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let inv: f64 = String::from_utf8_lossy(&run.stdout).trim().parse().unwrap();
    assert!(inv > 0.5);
}
