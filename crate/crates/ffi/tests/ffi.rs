use std::ffi::{CStr, CString};
use std::ptr;

use qcycle_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = qc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn new_params() -> *mut QcParams {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { qc_params_new(&mut p) }, QcStatus::Ok);
    p
}

#[test]
fn params_set_and_get() {
    let p = new_params();
    unsafe {
        assert_eq!(
            qc_params_set(p, c("mu").as_ptr(), c("0.9").as_ptr()),
            QcStatus::Ok
        );
        let mut v = 0.0;
        assert_eq!(qc_params_get(p, c("mu").as_ptr(), &mut v), QcStatus::Ok);
        assert_eq!(v, 0.9);
        assert_eq!(qc_params_get(p, c("tau_a").as_ptr(), &mut v), QcStatus::Ok);
        assert!(v.is_nan());
        assert_eq!(
            qc_params_set(p, c("tau_a").as_ptr(), c("0.25").as_ptr()),
            QcStatus::Ok
        );
        assert_eq!(qc_params_get(p, c("tau_a").as_ptr(), &mut v), QcStatus::Ok);
        assert_eq!(v, 0.25);
        assert_eq!(
            qc_params_set(p, c("tau_a").as_ptr(), c("none").as_ptr()),
            QcStatus::Ok
        );
        assert_eq!(qc_params_get(p, c("tau_a").as_ptr(), &mut v), QcStatus::Ok);
        assert!(v.is_nan());

        assert_eq!(
            qc_params_set(p, c("mu").as_ptr(), c("abc").as_ptr()),
            QcStatus::InvalidParameter
        );
        assert!(last_error().contains("mu"));
        assert_eq!(
            qc_params_set(p, c("tau1").as_ptr(), c("-2").as_ptr()),
            QcStatus::InvalidParameter
        );
        assert_eq!(qc_params_get(p, c("tau1").as_ptr(), &mut v), QcStatus::Ok);
        assert_eq!(v, 1.5);
        assert_eq!(
            qc_params_get(p, c("nope").as_ptr(), &mut v),
            QcStatus::InvalidArgument
        );
        assert_eq!(
            qc_params_set(ptr::null_mut(), c("mu").as_ptr(), c("1").as_ptr()),
            QcStatus::NullPointer
        );
        assert_eq!(
            qc_params_set(p, ptr::null(), c("1").as_ptr()),
            QcStatus::NullPointer
        );
        qc_params_free(p);
        qc_params_free(ptr::null_mut());
    }
}

#[test]
fn cycle_matrix_is_unitary_and_fixes_ground_state() {
    let p = new_params();
    unsafe {
        let mut cycle = ptr::null_mut();
        assert_eq!(qc_cycle_new(p, 3, &mut cycle), QcStatus::Ok);
        let dim = qc_cycle_dim(cycle);
        assert_eq!(dim, 4 * 3 * 4);
        assert!(qc_cycle_path_deviation(cycle) < 1e-10);
        let mut re = vec![0.0; dim * dim];
        let mut im = vec![0.0; dim * dim];
        assert_eq!(
            qc_cycle_matrix(cycle, re.as_mut_ptr(), im.as_mut_ptr(), dim),
            QcStatus::BufferTooSmall
        );
        assert_eq!(
            qc_cycle_matrix(cycle, re.as_mut_ptr(), im.as_mut_ptr(), dim * dim),
            QcStatus::Ok
        );
        let g = qc_cycle_index(cycle, 0, 0, 0);
        assert_eq!(g, 0);
        assert_eq!(qc_cycle_index(cycle, 9, 0, 0), usize::MAX);
        assert_eq!(qc_cycle_index(cycle, 0, 3, 0), usize::MAX);
        // column g of S is |0,g,0⟩
        for i in 0..dim {
            let want = if i == g { 1.0 } else { 0.0 };
            assert!((re[g * dim + i] - want).abs() < 1e-12 && im[g * dim + i].abs() < 1e-12);
        }
        qc_cycle_free(cycle);
        qc_params_free(p);
    }
}

#[test]
fn simulation_runs_and_rejects_finite_pulses() {
    let p = new_params();
    unsafe {
        let mut sim = ptr::null_mut();
        assert_eq!(qc_simulation_new(p, 4, &mut sim), QcStatus::Ok);
        let width = qc_record_width();
        let names: Vec<String> = (0..width)
            .map(|i| {
                CStr::from_ptr(qc_record_column(i))
                    .to_str()
                    .unwrap()
                    .to_owned()
            })
            .collect();
        assert!(qc_record_column(width).is_null());
        let quanta = names.iter().position(|n| n == "quanta").unwrap();
        let norm = names.iter().position(|n| n == "norm").unwrap();
        let cycles = 20;
        let mut out = vec![0.0; (cycles + 1) * width];
        let status = qc_simulation_run(
            sim,
            c("1,e,1").as_ptr(),
            cycles,
            out.as_mut_ptr(),
            out.len(),
        );
        assert_eq!(status, QcStatus::Ok);
        for row in out.chunks(width) {
            assert!((row[quanta] - 3.0).abs() < 1e-9 && (row[norm] - 1.0).abs() < 1e-9);
        }
        assert_eq!(
            qc_simulation_run(
                sim,
                c("1,x,1").as_ptr(),
                cycles,
                out.as_mut_ptr(),
                out.len()
            ),
            QcStatus::InvalidArgument
        );
        assert_eq!(
            qc_simulation_run(sim, c("1,e,1").as_ptr(), cycles, out.as_mut_ptr(), 3),
            QcStatus::BufferTooSmall
        );
        qc_simulation_free(sim);

        assert_eq!(
            qc_params_set(p, c("pulse_mode").as_ptr(), c("finite").as_ptr()),
            QcStatus::Ok
        );
        let mut sim = ptr::null_mut();
        assert_eq!(
            qc_simulation_new(p, 4, &mut sim),
            QcStatus::RequiresStrongLimit
        );
        assert!(sim.is_null());
        assert!(last_error().contains("strong-limit"));
        qc_params_free(p);
    }
}

#[test]
fn transfer_eigenvalues_are_opposite() {
    let p = new_params();
    unsafe {
        let (mut plus, mut minus) = (0.0, 0.0);
        assert_eq!(
            qc_transfer_eigenvalues(p, 2, &mut plus, &mut minus),
            QcStatus::Ok
        );
        assert_eq!(plus, -minus);
        assert!(plus.abs() > 0.0 && plus.abs() <= 1.0);
        qc_params_free(p);
    }
}

#[test]
fn header_declares_the_interface() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qcycle.h")).unwrap();
    for name in [
        "qc_params_new",
        "qc_params_set",
        "qc_cycle_matrix",
        "qc_simulation_run",
        "qc_last_error",
        "QC_STATUS_OK",
        "typedef struct QcParams QcParams",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
    assert!(!CStr::from_bytes_until_nul(
        unsafe { CStr::from_ptr(qc_version()) }.to_bytes_with_nul()
    )
    .unwrap()
    .is_empty());
}
