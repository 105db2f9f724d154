use std::ffi::{c_char, CStr, CString};
use std::ptr;

use sabf_ffi::*;

const SMALL: &str = r#"
kind = "capacity"
[layout]
nodes = 4
placement = "fekete"
rotation_jitter_deg = 0.0
[sweep]
values = [0.0, 10.0, 20.0]
"#;

fn last_error() -> String {
    let mut needed = 0;
    unsafe {
        assert_eq!(sabf_last_error(ptr::null_mut(), 0, &mut needed), SabfStatus::BufferTooSmall);
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(sabf_last_error(buf.as_mut_ptr(), buf.len(), &mut needed), SabfStatus::Ok);
        CStr::from_ptr(buf.as_ptr()).to_str().unwrap().to_owned()
    }
}

fn parse(text: &str) -> (SabfStatus, *mut SabfConfig) {
    let text = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    let s = unsafe { sabf_config_parse(text.as_ptr(), &mut cfg) };
    (s, cfg)
}

#[test]
fn bad_config_reports_status_and_message() {
    let (s, cfg) = parse("kind = \"capacity\"\nbogus = 1\n");
    assert_eq!(s, SabfStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("bogus"), "{}", last_error());

    let (s, cfg) = parse("[layout]\nnodes = 0\n");
    assert_eq!(s, SabfStatus::Config);
    assert!(cfg.is_null());
}

#[test]
fn null_arguments_are_rejected() {
    let mut cfg = ptr::null_mut();
    unsafe {
        assert_eq!(sabf_config_parse(ptr::null(), &mut cfg), SabfStatus::NullPointer);
        assert_eq!(sabf_run(ptr::null(), &mut ptr::null_mut()), SabfStatus::NullPointer);
        assert_eq!(sabf_config_set_seed(ptr::null_mut(), 1), SabfStatus::NullPointer);
        assert_eq!(sabf_report_rows(ptr::null()), 0);
        sabf_config_free(ptr::null_mut());
        sabf_report_free(ptr::null_mut());
    }
    assert!(last_error().contains("null"));
}

#[test]
fn fekete_points_use_query_then_fill() {
    let mut needed = 0;
    unsafe {
        assert_eq!(sabf_fekete_points(4, ptr::null_mut(), 0, &mut needed), SabfStatus::BufferTooSmall);
        assert_eq!(needed, 4);
        let mut pts = [0.0; 4];
        assert_eq!(sabf_fekete_points(4, pts.as_mut_ptr(), 4, &mut needed), SabfStatus::Ok);
        let inner = 5f64.sqrt().recip();
        let want = [-1.0, -inner, inner, 1.0];
        assert!(pts.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12), "{pts:?}");
        assert_eq!(sabf_fekete_points(1, pts.as_mut_ptr(), 4, &mut needed), SabfStatus::InvalidArgument);
    }
}

#[test]
fn status_messages_are_static_strings() {
    for s in [SabfStatus::Ok, SabfStatus::Infeasible, SabfStatus::Panic] {
        let m = unsafe { CStr::from_ptr(sabf_status_message(s)) };
        assert!(!m.to_bytes().is_empty());
    }
}

#[test]
fn run_matches_the_library() {
    let (s, cfg) = parse(SMALL);
    assert_eq!(s, SabfStatus::Ok);
    unsafe {
        assert_eq!(sabf_config_set_trials(cfg, 0), SabfStatus::Config);
        let mut report = ptr::null_mut();
        assert_eq!(sabf_run(cfg, &mut report), SabfStatus::Ok);
        assert_eq!(sabf_report_rows(report), 3);

        let mut needed = 0;
        let mut sweep = [0.0; 3];
        assert_eq!(sabf_report_sweep(report, sweep.as_mut_ptr(), 3, &mut needed), SabfStatus::Ok);
        assert_eq!(sweep, [0.0, 10.0, 20.0]);

        let name = CString::new("capacity_bits").unwrap();
        let mut cap = [0.0; 3];
        assert_eq!(sabf_report_means(report, name.as_ptr(), cap.as_mut_ptr(), 3, &mut needed), SabfStatus::Ok);
        let direct = sabf::harness::run_experiment(&sabf::harness::load_config(SMALL).unwrap()).unwrap();
        assert_eq!(cap.to_vec(), direct.means("capacity_bits").unwrap());

        let missing = CString::new("nope").unwrap();
        assert_eq!(sabf_report_means(report, missing.as_ptr(), cap.as_mut_ptr(), 3, &mut needed), SabfStatus::NotFound);

        let mut row = SabfRowStatus::SolverFail;
        assert_eq!(sabf_report_row_status(report, 0, &mut row), SabfStatus::Ok);
        assert_eq!(row, SabfRowStatus::Ok);
        assert_eq!(sabf_report_row_status(report, 3, &mut row), SabfStatus::InvalidArgument);

        assert_eq!(sabf_report_csv(report, ptr::null_mut(), 0, &mut needed), SabfStatus::BufferTooSmall);
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(sabf_report_csv(report, buf.as_mut_ptr(), needed, &mut needed), SabfStatus::Ok);
        let csv = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert_eq!(csv, direct.report_csv().unwrap());

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(sabf_report_write(report, path.as_ptr()), SabfStatus::Ok);
        assert!(dir.path().join("capacity.meta.json").exists());

        let mut hash = [0 as c_char; 65];
        assert_eq!(sabf_config_hash(cfg, hash.as_mut_ptr(), 65, &mut needed), SabfStatus::Ok);
        assert_eq!(CStr::from_ptr(hash.as_ptr()).to_str().unwrap(), sabf::harness::load_config(SMALL).unwrap().hash());

        let mut delta = [0.0; 4];
        assert_eq!(sabf_deploy(cfg, 4, delta.as_mut_ptr(), 4, &mut needed), SabfStatus::Ok);
        assert_eq!(delta[0], -1.0);

        sabf_report_free(report);
        sabf_config_free(cfg);
    }
}
