use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use monomed_ffi::*;

const MEANS: [f64; 10] = [25.5, 23.9, 27.7, 33.4, 40.5, 57.9, 74.4, 73.4, 73.5, 76.2];
const SDS: [f64; 10] = [2.6, 4.0, 3.3, 2.3, 10.5, 9.9, 14.6, 7.6, 4.5, 7.9];
const SIZES: [u32; 10] = [6; 10];

fn last_error() -> String {
    let p = monomed_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn reference_data() -> *mut MonomedData {
    let mut data = ptr::null_mut();
    let status = unsafe {
        monomed_data_from_summaries(SIZES.as_ptr(), MEANS.as_ptr(), SDS.as_ptr(), 10, &mut data)
    };
    assert_eq!(status, MonomedStatus::Ok);
    data
}

#[test]
fn fit_round_trip() {
    let weights = [6.0; 9];
    for method in [
        MonomedFitMethod::Sdmmsa,
        MonomedFitMethod::Pava,
        MonomedFitMethod::Oracle,
    ] {
        let mut fit = ptr::null_mut();
        let status =
            unsafe { monomed_fit_new(method, MEANS[1..].as_ptr(), weights.as_ptr(), 9, &mut fit) };
        assert_eq!(status, MonomedStatus::Ok);
        assert_eq!(unsafe { monomed_fit_len(fit) }, 9);

        let mut values = [0.0; 9];
        assert_eq!(
            unsafe { monomed_fit_values(fit, values.as_mut_ptr(), 9) },
            MonomedStatus::Ok
        );
        let pooled = (74.4 + 73.4 + 73.5) / 3.0;
        for (i, expected) in [23.9, 27.7, 33.4, 40.5, 57.9, pooled, pooled, pooled, 76.2]
            .iter()
            .enumerate()
        {
            assert!((values[i] - expected).abs() < 1e-10);
        }

        let mut ids = [0usize; 9];
        assert_eq!(
            unsafe { monomed_fit_block_ids(fit, ids.as_mut_ptr(), 9) },
            MonomedStatus::Ok
        );
        assert_eq!(ids, [1, 2, 3, 4, 5, 6, 6, 6, 7]);

        let mut short = [0.0; 3];
        assert_eq!(
            unsafe { monomed_fit_values(fit, short.as_mut_ptr(), 3) },
            MonomedStatus::InvalidArgument
        );
        unsafe { monomed_fit_free(fit) };
    }
}

#[test]
fn fit_errors_map_to_status_codes() {
    let mut fit = ptr::null_mut();
    let means = [1.0, 2.0];
    let bad_weights = [1.0, -1.0];
    let status = unsafe {
        monomed_fit_new(
            MonomedFitMethod::Sdmmsa,
            means.as_ptr(),
            bad_weights.as_ptr(),
            2,
            &mut fit,
        )
    };
    assert_ne!(status, MonomedStatus::Ok);
    assert!(fit.is_null());
    assert!(!last_error().is_empty());

    let status = unsafe {
        monomed_fit_new(
            MonomedFitMethod::Sdmmsa,
            ptr::null(),
            means.as_ptr(),
            2,
            &mut fit,
        )
    };
    assert_eq!(status, MonomedStatus::NullPointer);
    assert!(last_error().contains("means"));

    let many = vec![0.0; 30];
    let w = vec![1.0; 30];
    let status = unsafe {
        monomed_fit_new(
            MonomedFitMethod::Oracle,
            many.as_ptr(),
            w.as_ptr(),
            30,
            &mut fit,
        )
    };
    assert_eq!(status, MonomedStatus::Capacity);

    unsafe {
        monomed_fit_free(ptr::null_mut());
        assert_eq!(monomed_fit_len(ptr::null()), 0);
    }
}

#[test]
fn pooled_statistics_and_quantile() {
    let data = reference_data();
    let (mut s, mut nu) = (0.0, 0u32);
    assert_eq!(
        unsafe { monomed_data_pooled(data, &mut s, &mut nu) },
        MonomedStatus::Ok
    );
    assert_eq!(nu, 50);
    assert!((s - 7.751).abs() < 1e-3);
    unsafe { monomed_data_free(data) };

    let mut t = 0.0;
    assert_eq!(
        unsafe { monomed_t_quantile(0.05, 50, &mut t) },
        MonomedStatus::Ok
    );
    assert!((t - 1.676).abs() < 1e-3);
    assert_eq!(
        unsafe { monomed_t_quantile(1.5, 50, &mut t) },
        MonomedStatus::InvalidArgument
    );
}

#[test]
fn calibrate_and_identify_med() {
    let data = reference_data();
    let mut cv = ptr::null_mut();
    let status =
        unsafe { monomed_calibrate(0.05, 6.5, SIZES.as_ptr(), 10, 50, 20_000, 7, &mut cv) };
    assert_eq!(status, MonomedStatus::Ok);
    assert_eq!(unsafe { monomed_cutoffs_len(cv) }, 9);

    let mut c = [0.0; 9];
    let mut se = [0.0; 9];
    assert_eq!(
        unsafe { monomed_cutoffs_get(cv, c.as_mut_ptr(), se.as_mut_ptr(), 9) },
        MonomedStatus::Ok
    );
    assert!((c[0] - 0.9677).abs() < 5e-4);
    assert_eq!(se[0], 0.0);

    let mut med = usize::MAX;
    let mut stats = [0.0; 9];
    let status = unsafe { monomed_step_up_med(data, cv, 6.5, &mut med, stats.as_mut_ptr(), 9) };
    assert_eq!(status, MonomedStatus::Ok);
    assert_eq!(med, 4);
    for (got, want) in stats.iter().zip([-1.045, -0.555, 0.181, 1.097]) {
        assert!((got - want).abs() < 5e-3, "{got} vs {want}");
    }

    let mut hb = usize::MAX;
    let status = unsafe { monomed_hsu_berger_med(data, 6.5, 0.05, &mut hb, ptr::null_mut(), 0) };
    assert_eq!(status, MonomedStatus::Ok);
    assert_eq!(hb, 4);

    // A very large margin leaves no effective dose.
    let status = unsafe { monomed_step_up_med(data, cv, 1000.0, &mut med, ptr::null_mut(), 0) };
    assert_eq!(status, MonomedStatus::Ok);
    assert_eq!(med, 0);

    unsafe {
        monomed_cutoffs_free(cv);
        monomed_data_free(data);
    }
}

#[test]
fn json_round_trip_and_design_mismatch() {
    let sizes = [5u32, 5, 5, 5];
    let mut cv = ptr::null_mut();
    let status = unsafe { monomed_calibrate(0.05, 0.0, sizes.as_ptr(), 4, 16, 2_000, 3, &mut cv) };
    assert_eq!(status, MonomedStatus::Ok);

    let mut text = ptr::null_mut();
    assert_eq!(
        unsafe { monomed_cutoffs_to_json(cv, &mut text) },
        MonomedStatus::Ok
    );
    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { monomed_cutoffs_from_json(text, &mut back) },
        MonomedStatus::Ok
    );
    let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
    unsafe {
        monomed_cutoffs_get(cv, a.as_mut_ptr(), ptr::null_mut(), 3);
        monomed_cutoffs_get(back, b.as_mut_ptr(), ptr::null_mut(), 3);
    }
    assert_eq!(a, b);

    let data = reference_data();
    let mut med = 0;
    let status = unsafe { monomed_step_up_med(data, back, 0.0, &mut med, ptr::null_mut(), 0) };
    assert_eq!(status, MonomedStatus::DesignMismatch);
    assert!(last_error().contains("design"));

    let garbage = CString::new("{not json").unwrap();
    let mut none = ptr::null_mut();
    assert_ne!(
        unsafe { monomed_cutoffs_from_json(garbage.as_ptr(), &mut none) },
        MonomedStatus::Ok
    );
    assert!(none.is_null());

    unsafe {
        monomed_string_free(text);
        monomed_cutoffs_free(cv);
        monomed_cutoffs_free(back);
        monomed_data_free(data);
    }
}

#[test]
fn calibration_failure_is_reported() {
    let sizes = [3u32, 3, 3];
    let mut cv = ptr::null_mut();
    let status = unsafe { monomed_calibrate(0.9, 0.0, sizes.as_ptr(), 3, 6, 2_000, 1, &mut cv) };
    assert_eq!(status, MonomedStatus::InvalidArgument);
    assert!(cv.is_null());
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/monomed.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build.rs");
    for symbol in [
        "monomed_fit_new",
        "monomed_calibrate",
        "monomed_step_up_med",
        "monomed_hsu_berger_med",
        "monomed_cutoffs_from_json",
        "MONOMED_STATUS_DESIGN_MISMATCH",
    ] {
        assert!(text.contains(symbol), "{symbol} missing from header");
    }

    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler available; skipped syntax check");
        return;
    };
    assert!(status.success());
}
