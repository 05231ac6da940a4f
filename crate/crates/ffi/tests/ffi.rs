use std::ffi::{CStr, CString};
use std::ptr;

use echo_isac_ffi::*;

fn last_error() -> String {
    let p = eis_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn bounds_round_trip() {
    let cfg = eis_config_new();
    unsafe {
        assert_eq!(eis_config_set_snr_db(cfg, 10.0), EisStatus::Ok);
        assert_eq!(eis_config_set_beta(cfg, 0.2), EisStatus::Ok);
        let mut mcrb = 0.0;
        assert_eq!(eis_mcrb_tau(cfg, &mut mcrb), EisStatus::Ok);
        let mut crb = 0.0;
        assert_eq!(eis_crb_sensing_only(cfg, &mut crb), EisStatus::Ok);
        assert!(mcrb > 0.0 && mcrb <= crb);
        let mut c = EisCoupling::default();
        assert_eq!(eis_coupling(cfg, &mut c), EisStatus::Ok);
        assert_eq!(c.mcrb_tau, mcrb);
        assert!(c.sinr_eff < c.symbol_snr);
        let mut f = EisFisher::default();
        assert_eq!(eis_fisher_coefficients(cfg, &mut f), EisStatus::Ok);
        assert!((f.ratio_ba - eis_ratio_ba(0.1, 4)).abs() < 1e-15);
        eis_config_free(cfg);
    }
}

#[test]
fn tradeoff_functions() {
    let ba = eis_ratio_ba(0.5, 2);
    let grid = [0.0, 0.5, 1.0];
    let mut s = [0.0; 3];
    let mut c = [0.0; 3];
    unsafe {
        assert_eq!(eis_pareto(ba, grid.as_ptr(), 3, s.as_mut_ptr(), c.as_mut_ptr()), EisStatus::Ok);
        assert_eq!(s[0], 1.0);
        assert!((s[2] - ba).abs() < 1e-15);
        assert_eq!(c, grid);
        let mut beta = 0.0;
        assert_eq!(eis_optimal_beta(ba, 0.9, &mut beta), EisStatus::Ok);
        assert!(beta > 0.0 && beta < 1.0);
        assert_eq!(eis_optimal_beta(ba, 1e-9, &mut beta), EisStatus::InvalidArg);
        assert!(last_error().contains("sensing floor"));
    }
}

#[test]
fn phase_constraint_is_a_config_error() {
    let cfg = eis_config_new();
    unsafe {
        assert_eq!(eis_config_set_cpm(cfg, 0.2, 8, 4, 0, 0), EisStatus::Ok);
        assert_eq!(eis_config_validate(cfg), EisStatus::Config);
        assert!(last_error().contains("h(L-1)"));
        let mut out = 0.0;
        assert_eq!(eis_mcrb_tau(cfg, &mut out), EisStatus::Config);
        eis_config_free(cfg);
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        let mut out = 0.0;
        assert_eq!(eis_mcrb_tau(ptr::null(), &mut out), EisStatus::Null);
        assert!(last_error().contains("cfg"));
        let cfg = eis_config_new();
        assert_eq!(eis_mcrb_tau(cfg, ptr::null_mut()), EisStatus::Null);
        eis_config_free(cfg);
        eis_config_free(ptr::null_mut());
        eis_signal_free(ptr::null_mut());
        eis_glrt_free(ptr::null_mut());
    }
}

#[test]
fn signal_estimate_and_sync() {
    let cfg = eis_config_new();
    unsafe {
        eis_config_set_snr_db(cfg, 20.0);
        let mut sig = ptr::null_mut();
        assert_eq!(eis_signal_synthesize(cfg, 3, &mut sig), EisStatus::Ok);
        let mut truth = EisTruth::default();
        assert_eq!(eis_signal_truth(sig, &mut truth), EisStatus::Ok);
        assert_eq!(truth.num_samples, 4000);
        let mut re = vec![0.0; truth.num_samples];
        let mut im = vec![0.0; truth.num_samples];
        let mut n = 0;
        assert_eq!(eis_signal_samples(sig, re.as_mut_ptr(), im.as_mut_ptr(), re.len(), &mut n), EisStatus::Ok);
        assert_eq!(n, truth.num_samples);
        assert!(re.iter().zip(&im).any(|(a, b)| a * a + b * b > 0.0));

        let mut est = EisEstimate::default();
        assert_eq!(eis_estimate(sig, cfg, EisWindow::KnownFrame, &mut est), EisStatus::Ok);
        assert!((est.f_hat_hz - truth.beat_freq_hz).abs() < 5e4);
        eis_signal_free(sig);

        let mut g = ptr::null_mut();
        assert_eq!(eis_glrt_new(cfg, 0.0, &mut g), EisStatus::Ok);
        let mut eta = 0.0;
        assert_eq!(eis_glrt_threshold(g, 1e-2, &mut eta), EisStatus::Ok);
        let (mut pd, mut pfa) = (0.0, 0.0);
        assert_eq!(eis_glrt_pd_pfa(g, eta, &mut pd, &mut pfa), EisStatus::Ok);
        assert!((pfa - 1e-2).abs() < 1e-4);
        assert!(pd > 0.99);
        assert_eq!(eis_glrt_threshold(g, 2.0, &mut eta), EisStatus::Config);
        eis_glrt_free(g);
        eis_config_free(cfg);
    }
}

#[test]
fn chain_runs_end_to_end() {
    let cfg = eis_config_new();
    unsafe {
        eis_config_set_snr_db(cfg, 20.0);
        eis_config_set_cpm(cfg, 0.1, 4, 8, 0, 24);
        let mut r = EisChainResult::default();
        assert_eq!(eis_chain_run(cfg, 1e-3, 7, &mut r), EisStatus::Ok);
        assert!(r.detected);
        assert_eq!(r.data_len, 24);
        assert!(r.start_hat.abs_diff(r.start_true) <= 2);
        assert_eq!(r.symbol_errors_viterbi, 0);
        eis_config_free(cfg);
    }
}

#[test]
fn config_file_loading() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.ini");
    std::fs::write(&good, "[system]\nbeta = 0.5\n[cpm]\nL = 8\n").unwrap();
    let bad = dir.path().join("bad.ini");
    std::fs::write(&bad, "[system]\nwat = 1\n").unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        let p = CString::new(good.to_str().unwrap()).unwrap();
        assert_eq!(eis_config_load(p.as_ptr(), &mut cfg), EisStatus::Ok);
        assert_eq!(eis_config_validate(cfg), EisStatus::Ok);
        eis_config_free(cfg);
        let p = CString::new(bad.to_str().unwrap()).unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(eis_config_load(p.as_ptr(), &mut cfg), EisStatus::Config);
        assert!(cfg.is_null());
        assert!(last_error().contains(":2"), "{}", last_error());
        let p = CString::new(dir.path().join("missing.ini").to_str().unwrap()).unwrap();
        assert_eq!(eis_config_load(p.as_ptr(), &mut cfg), EisStatus::Io);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/echo_isac.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() > 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("EIS_STATUS_PANIC = 6"));
    assert!(CStr::from_bytes_until_nul(unsafe { std::slice::from_raw_parts(eis_version().cast(), 16) })
        .map(|c| !c.to_bytes().is_empty())
        .unwrap_or(false));
}
