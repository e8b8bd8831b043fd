use std::ffi::{CStr, CString};
use std::ptr;

use recoil_fidelity_ffi::*;

const CONFIG: &str = r#"{
    "emitters": {"a": {"species": "171Yb+@369", "modes": [{"frequency_khz": 1000, "nbar": "doppler"}]}},
    "protocol": {"frequency_unit": "Hz_linear"},
    "windows": {"w": 2.0}
}"#;

fn protocol(json: &str) -> *mut RfProtocol {
    let c = CString::new(json).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { rf_protocol_from_json(c.as_ptr(), &mut p) }, RfStatus::Ok);
    assert!(!p.is_null());
    p
}

fn last_error() -> String {
    let m = rf_last_error_message();
    assert!(!m.is_null());
    unsafe { CStr::from_ptr(m) }.to_string_lossy().into_owned()
}

#[test]
fn fidelity_and_mc_agree() {
    let p = protocol(CONFIG);
    let mut q = RfBellResult::default();
    let mut m = RfMcResult::default();
    unsafe {
        assert_eq!(rf_fidelity(p, RfChannel::Opposite1001, &mut q), RfStatus::Ok);
        assert_eq!(rf_mc_protocol(p, RfChannel::Opposite1001, 200_000, 9, &mut m), RfStatus::Ok);
        rf_protocol_free(p);
    }
    assert!(q.fidelity < 1.0 && q.fidelity > 0.999);
    assert!((q.population_down_up + q.population_up_down - 1.0).abs() < 1e-12);
    assert!((m.fidelity - q.fidelity).abs() < 5.0 * m.fidelity_error);
}

#[test]
fn bad_config_sets_message() {
    let c = CString::new(r#"{"emitters": {}}"#).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { rf_protocol_from_json(c.as_ptr(), &mut p) }, RfStatus::Config);
    assert!(p.is_null());
    assert!(last_error().contains("configuration"));
    rf_clear_error();
    assert!(rf_last_error_message().is_null());
}

#[test]
fn null_arguments() {
    let mut out = RfBellResult::default();
    assert_eq!(unsafe { rf_fidelity(ptr::null(), RfChannel::Same0011, &mut out) }, RfStatus::NullPointer);
    assert_eq!(unsafe { rf_protocol_from_json(ptr::null(), ptr::null_mut()) }, RfStatus::NullPointer);
    unsafe { rf_protocol_free(ptr::null_mut()) };
    let p = protocol(CONFIG);
    assert_eq!(unsafe { rf_mc_protocol(p, RfChannel::Same0011, 0, 1, &mut RfMcResult::default()) }, RfStatus::InvalidArgument);
    unsafe { rf_protocol_free(p) };
}

#[test]
fn scalar_functions() {
    assert!((rf_window_variance_factor(2.0) - 0.373929).abs() < 1e-6);
    let mut y = 0.0;
    assert_eq!(unsafe { rf_detection_yield(f64::INFINITY, 16.2, 8.1, &mut y) }, RfStatus::Ok);
    assert!((y - (1.0 - (-2.0f64).exp())).abs() < 1e-12);
    assert_eq!(unsafe { rf_detection_yield(1.0, 2.0, 8.1, &mut y) }, RfStatus::InvalidArgument);
    let mut ell = 0.0;
    assert_eq!(unsafe { rf_solve_timebin_length(1e-3, &mut ell) }, RfStatus::Ok);
    assert!(((-ell).exp() - 0.5 * ell * ell * 1e-3).abs() < 1e-12);
    assert_eq!(unsafe { rf_solve_timebin_length(-1.0, &mut ell) }, RfStatus::NonConvergence);
    let v = unsafe { CStr::from_ptr(rf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn table_buffer() {
    let n = rf_table1_len();
    assert_eq!(n, 12);
    let mut rows = vec![RfTableRow::default(); n];
    let mut written = 0;
    assert_eq!(unsafe { rf_table1(2.0, RfKappa::Table, rows.as_mut_ptr(), 3, &mut written) }, RfStatus::BufferTooSmall);
    assert_eq!(written, 12);
    assert_eq!(unsafe { rf_table1(2.0, RfKappa::Table, rows.as_mut_ptr(), n, &mut written) }, RfStatus::Ok);
    let mut printed = vec![RfTableRow::default(); n];
    assert_eq!(unsafe { rf_table1(2.0, RfKappa::PrintedEq37, printed.as_mut_ptr(), n, &mut written) }, RfStatus::Ok);
    for (a, b) in rows.iter().zip(&printed) {
        assert!((b.random_error / a.random_error - 4.0).abs() < 1e-12);
    }
    assert_eq!(format!("{:.1}", rows[9].recoil_frequency_khz), "8.6");
}
