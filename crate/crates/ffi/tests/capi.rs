use std::ffi::{CStr, CString};
use std::ptr;

use amalgam_ffi::*;

fn last_error() -> String {
    let p = amalgam_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Fixture {
    m: *mut AmalgamMeasure,
    f: *mut AmalgamFunction,
}

impl Fixture {
    fn new(measure: &str, function: &str) -> Self {
        let (ms, fs) = (CString::new(measure).unwrap(), CString::new(function).unwrap());
        let mut m = ptr::null_mut();
        let mut f = ptr::null_mut();
        unsafe {
            assert_eq!(amalgam_measure_parse(ms.as_ptr(), &mut m), AmalgamStatus::Ok);
            assert_eq!(amalgam_function_parse(fs.as_ptr(), &mut f), AmalgamStatus::Ok);
        }
        Self { m, f }
    }
}

impl Drop for Fixture {
    fn drop(&mut self) {
        unsafe {
            amalgam_function_free(self.f);
            amalgam_measure_free(self.m);
        }
    }
}

#[test]
fn lebesgue_queries() {
    let mut m = ptr::null_mut();
    let mut v = 0.0;
    unsafe {
        assert_eq!(amalgam_measure_lebesgue(&mut m), AmalgamStatus::Ok);
        assert_eq!(amalgam_measure_mass(m, -1.0, 2.5, &mut v), AmalgamStatus::Ok);
        assert!((v - 3.5).abs() < 1e-12);
        assert_eq!(amalgam_measure_cdf(m, 0.75, &mut v), AmalgamStatus::Ok);
        assert!((v - 0.75).abs() < 1e-12);
        assert_eq!(amalgam_measure_inv_cdf(m, -2.0, &mut v), AmalgamStatus::Ok);
        assert!((v + 2.0).abs() < 1e-12);
        assert_eq!(amalgam_measure_growth_constant(m, &mut v), AmalgamStatus::Ok);
        assert!((v - 1.0).abs() < 1e-9);
        amalgam_measure_free(m);
    }
}

#[test]
fn power_measure_mass_matches_closed_form() {
    let mut m = ptr::null_mut();
    let mut v = 0.0;
    unsafe {
        assert_eq!(amalgam_measure_power(0.5, &mut m), AmalgamStatus::Ok);
        assert_eq!(amalgam_measure_mass(m, 0.0, 4.0, &mut v), AmalgamStatus::Ok);
        // ∫_0^4 x^{-1/2} dx
        assert!((v - 4.0).abs() < 1e-9, "{v}");
        amalgam_measure_free(m);
    }
}

#[test]
fn invalid_measure_reports_status_and_message() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(amalgam_measure_power(1.5, &mut m), AmalgamStatus::InvalidMeasure);
    }
    assert!(m.is_null());
    assert!(last_error().contains("invalid measure"));
}

#[test]
fn null_arguments_are_rejected() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(amalgam_measure_cdf(ptr::null(), 0.0, &mut v), AmalgamStatus::NullPointer);
        assert_eq!(amalgam_measure_parse(ptr::null(), ptr::null_mut()), AmalgamStatus::NullPointer);
        let mut m = ptr::null_mut();
        assert_eq!(amalgam_measure_lebesgue(&mut m), AmalgamStatus::Ok);
        assert_eq!(amalgam_measure_mass(m, 0.0, 1.0, ptr::null_mut()), AmalgamStatus::NullPointer);
        amalgam_measure_free(m);
        amalgam_measure_free(ptr::null_mut());
        amalgam_function_free(ptr::null_mut());
        amalgam_kernel_free(ptr::null_mut());
        amalgam_string_free(ptr::null_mut());
    }
}

#[test]
fn indicator_norms() {
    let fx = Fixture::new("lebesgue", "indicator:0:4");
    let mut v = 0.0;
    unsafe {
        assert_eq!(amalgam_function_eval(fx.f, 1.0, &mut v), AmalgamStatus::Ok);
        assert_eq!(v, 1.0);
        assert_eq!(amalgam_lq_norm(fx.m, fx.f, 2.0, &mut v), AmalgamStatus::Ok);
        assert!((v - 2.0).abs() < 1e-9);
        assert_eq!(amalgam_weak_norm(fx.m, fx.f, 2.0, &mut v), AmalgamStatus::Ok);
        assert!((v - 2.0).abs() < 1e-6);
        assert_eq!(amalgam_lq_norm(fx.m, fx.f, f64::INFINITY, &mut v), AmalgamStatus::Ok);
        assert_eq!(v, 1.0);
    }
}

#[test]
fn amalgam_norm_of_indicator_is_at_least_its_lq_norm() {
    let fx = Fixture::new("lebesgue", "indicator:0:1");
    let (mut a, mut l) = (0.0, 0.0);
    unsafe {
        assert_eq!(amalgam_amalgam_norm(fx.m, fx.f, 1.0, 4.0, 2.0, 0.0, &mut a), AmalgamStatus::Ok);
        assert_eq!(amalgam_lq_norm(fx.m, fx.f, 2.0, &mut l), AmalgamStatus::Ok);
    }
    assert!(a.is_finite() && a >= 0.999 * l, "{a} vs {l}");
}

#[test]
fn trivial_amalgam_space_is_rejected() {
    let fx = Fixture::new("lebesgue", "indicator:0:1");
    let mut v = 0.0;
    unsafe {
        assert_eq!(amalgam_amalgam_norm(fx.m, fx.f, 3.0, 4.0, 2.0, 0.0, &mut v), AmalgamStatus::TrivialSpace);
        assert_eq!(amalgam_lq_norm(fx.m, fx.f, 0.5, &mut v), AmalgamStatus::InvalidArgument);
    }
}

#[test]
fn maximal_of_indicator_away_from_support() {
    let fx = Fixture::new("lebesgue", "indicator:0:1");
    let mut v = 0.0;
    unsafe {
        assert_eq!(amalgam_maximal(fx.m, fx.f, 1.0, f64::INFINITY, 2.0, &mut v), AmalgamStatus::Ok);
    }
    // best interval is [0, 2]
    assert!((v - 0.5).abs() < 1e-3, "{v}");
}

#[test]
fn riesz_potential_at_centre() {
    let fx = Fixture::new("lebesgue", "indicator:-1:1");
    let mut k = ptr::null_mut();
    let mut v = 0.0;
    unsafe {
        assert_eq!(amalgam_kernel_riesz(0.5, &mut k), AmalgamStatus::Ok);
        assert_eq!(amalgam_potential(fx.m, fx.f, k, 0.0, 1e-10, &mut v), AmalgamStatus::Ok);
        amalgam_kernel_free(k);
    }
    // 2 ∫_0^1 y^{-1/2} dy
    assert!((v - 4.0).abs() < 1e-7, "{v}");
}

#[test]
fn kernel_parse_rejects_bad_gamma() {
    let s = CString::new("riesz:1.5").unwrap();
    let mut k = ptr::null_mut();
    let st = unsafe { amalgam_kernel_parse(s.as_ptr(), &mut k) };
    assert_ne!(st, AmalgamStatus::Ok);
    assert!(k.is_null());
}

#[test]
fn table_function_interpolates() {
    let xs = [0.0, 1.0, 2.0];
    let ys = [0.0, 2.0, 0.0];
    let mut f = ptr::null_mut();
    let mut v = 0.0;
    unsafe {
        assert_eq!(amalgam_function_table(xs.as_ptr(), ys.as_ptr(), xs.len(), &mut f), AmalgamStatus::Ok);
        assert_eq!(amalgam_function_eval(f, 0.5, &mut v), AmalgamStatus::Ok);
        assert!((v - 1.0).abs() < 1e-12);
        amalgam_function_free(f);
    }
}

#[test]
fn verify_scenario_round_trip() {
    let scn = CString::new(r#"{"name":"ffi","target":"norm_properties","measure":{"kind":"lebesgue"},"exponents":{"q":1,"p":4,"alpha":2}}"#).unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { amalgam_verify_json(scn.as_ptr(), -1, 0.0, &mut out) };
    assert_eq!(st, AmalgamStatus::Ok, "{}", last_error());
    let json = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { amalgam_string_free(out) };
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["verdict"], "pass");
}

#[test]
fn verify_rejects_hypothesis_violation() {
    let scn = CString::new(
        r#"{"name":"bad","target":"cor23","measure":{"kind":"lebesgue"},"exponents":{"q":1,"p":4,"alpha":2,"beta":4}}"#,
    )
    .unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { amalgam_verify_json(scn.as_ptr(), -1, 0.0, &mut out) };
    assert_eq!(st, AmalgamStatus::Hypothesis);
    assert!(out.is_null());
}

#[test]
fn status_names_and_version() {
    let name = unsafe { CStr::from_ptr(amalgam_status_name(AmalgamStatus::Hypothesis)) };
    assert_eq!(name.to_str().unwrap(), "hypothesis violated");
    let v = unsafe { CStr::from_ptr(amalgam_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
