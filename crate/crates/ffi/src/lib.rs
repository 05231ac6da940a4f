//! C interface to `echo-isac`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` /
//! `*_synthesize` and released by the matching `*_free`. Every fallible call
//! returns an [`EisStatus`]; on failure the message is available from
//! [`eis_last_error`] on the same thread until the next failing call.
//! Panics are caught and reported as `EIS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use echo_isac::bounds::{
    crb_sensing_only, effective_rate, fisher_coefficients, mcrb_tau, optimal_beta, pareto_frontier, ratio_ba,
};
use echo_isac::chain::{run_chain, ChainOptions};
use echo_isac::demod::CpmTrellis;
use echo_isac::estimation::{estimate_beat_frequency, EstimationWindow, SearchOptions};
use echo_isac::harness::{load_config, sim::draw_signal};
use echo_isac::signal::{BeatSignal, CpmConfig, CpmParams, SystemConfig};
use echo_isac::sync::{build_model, pd_pfa, solve_threshold, GlrtModel};
use echo_isac::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EisStatus {
    Ok = 0,
    /// A required pointer was null.
    Null = 1,
    Config = 2,
    InvalidArg = 3,
    Numeric = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EisWindow {
    Preamble = 0,
    KnownFrame = 1,
    Blind = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> EisStatus {
    match e.kind() {
        "config" => EisStatus::Config,
        "invalid-argument" => EisStatus::InvalidArg,
        "numeric" => EisStatus::Numeric,
        _ => EisStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EisStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EisStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            EisStatus::Null
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            EisStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn eis_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eis_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// System and modulation parameters.
pub struct EisConfig {
    system: SystemConfig,
    cpm: CpmParams,
}

impl EisConfig {
    fn resolve(&self) -> Result<CpmConfig, Error> {
        self.system.validate()?;
        CpmConfig::from_params(&self.system, &self.cpm)
    }
}

/// New configuration with default parameters.
#[no_mangle]
pub extern "C" fn eis_config_new() -> *mut EisConfig {
    Box::into_raw(Box::new(EisConfig { system: SystemConfig::default(), cpm: CpmParams::default() }))
}

/// Load a configuration file; `*out` receives a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eis_config_load(path: *const c_char, out: *mut *mut EisConfig) -> EisStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        if path.is_null() {
            return Err(Fail::Null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|e| Error::Config(e.to_string()))?;
        let rc = load_config(Path::new(path))?;
        *out = Box::into_raw(Box::new(EisConfig { system: rc.system, cpm: rc.cpm }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn eis_config_free(cfg: *mut EisConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn eis_config_set_snr_db(cfg: *mut EisConfig, snr_db: f64) -> EisStatus {
    guard(|| {
        as_mut(cfg, "cfg")?.system.set_snr_sample_db(snr_db);
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn eis_config_set_beta(cfg: *mut EisConfig, beta: f64) -> EisStatus {
    guard(|| {
        as_mut(cfg, "cfg")?.system.comm_fraction = beta;
        Ok(())
    })
}

/// Set the CPM format. `samples_per_symbol` and `data_len` of 0 mean automatic.
///
/// # Safety
/// `cfg` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn eis_config_set_cpm(
    cfg: *mut EisConfig,
    mod_index: f64,
    alphabet_size: usize,
    preamble_len: usize,
    samples_per_symbol: usize,
    data_len: usize,
) -> EisStatus {
    guard(|| {
        let c = as_mut(cfg, "cfg")?;
        c.cpm.mod_index = mod_index;
        c.cpm.alphabet_size = alphabet_size;
        c.cpm.preamble_len = preamble_len;
        c.cpm.samples_per_symbol = (samples_per_symbol > 0).then_some(samples_per_symbol);
        c.cpm.data_len = (data_len > 0).then_some(data_len);
        Ok(())
    })
}

/// Check the configuration, including the phase-wrapping constraint.
///
/// # Safety
/// `cfg` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn eis_config_validate(cfg: *const EisConfig) -> EisStatus {
    guard(|| {
        as_ref(cfg, "cfg")?.resolve()?;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eis_mcrb_tau(cfg: *const EisConfig, out: *mut f64) -> EisStatus {
    guard(|| {
        let c = as_ref(cfg, "cfg")?;
        let out = as_mut(out, "out")?;
        *out = mcrb_tau(&c.system, &c.resolve()?)?;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eis_crb_sensing_only(cfg: *const EisConfig, out: *mut f64) -> EisStatus {
    guard(|| {
        let c = as_ref(cfg, "cfg")?;
        let out = as_mut(out, "out")?;
        c.system.validate()?;
        *out = crb_sensing_only(&c.system)?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EisCoupling {
    pub mcrb_tau: f64,
    pub freq_var: f64,
    pub symbol_snr: f64,
    pub xi: f64,
    pub sinr_eff: f64,
    pub eta: f64,
    pub eta_eff: f64,
    pub rate_bps: f64,
}

/// Coupling chain with the frequency error at its bound.
///
/// # Safety
/// `cfg` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eis_coupling(cfg: *const EisConfig, out: *mut EisCoupling) -> EisStatus {
    guard(|| {
        let c = as_ref(cfg, "cfg")?;
        let out = as_mut(out, "out")?;
        let r = effective_rate(&c.system, &c.resolve()?)?;
        *out = EisCoupling {
            mcrb_tau: r.mcrb_tau,
            freq_var: r.freq_var,
            symbol_snr: r.symbol_snr,
            xi: r.xi,
            sinr_eff: r.sinr_eff,
            eta: r.eta,
            eta_eff: r.eta_eff,
            rate_bps: r.rate_bps,
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EisFisher {
    pub a: f64,
    pub b: f64,
    pub ratio_ab: f64,
    pub ratio_ba: f64,
}

/// # Safety
/// `cfg` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eis_fisher_coefficients(cfg: *const EisConfig, out: *mut EisFisher) -> EisStatus {
    guard(|| {
        let c = as_ref(cfg, "cfg")?;
        let out = as_mut(out, "out")?;
        let f = fisher_coefficients(&c.system, &c.resolve()?)?;
        *out = EisFisher { a: f.a, b: f.b, ratio_ab: f.ratio_ab, ratio_ba: f.ratio_ba };
        Ok(())
    })
}

/// `b / a` for modulation index `h` and alphabet size `alphabet_size`.
#[no_mangle]
pub extern "C" fn eis_ratio_ba(h: f64, alphabet_size: usize) -> f64 {
    ratio_ba(h, alphabet_size)
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eis_optimal_beta(ratio_ba: f64, s_min: f64, out: *mut f64) -> EisStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = optimal_beta(ratio_ba, s_min)?;
        Ok(())
    })
}

/// Frontier samples: `s_out[i] = S(beta[i])`, `c_out[i] = beta[i]`.
///
/// # Safety
/// `beta`, `s_out` and `c_out` must each hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn eis_pareto(
    ratio_ba: f64,
    beta: *const f64,
    n: usize,
    s_out: *mut f64,
    c_out: *mut f64,
) -> EisStatus {
    guard(|| {
        if beta.is_null() || s_out.is_null() || c_out.is_null() {
            return Err(Fail::Null("beta/s_out/c_out"));
        }
        let grid = std::slice::from_raw_parts(beta, n);
        let front = pareto_frontier(ratio_ba, grid)?;
        let s = std::slice::from_raw_parts_mut(s_out, n);
        let c = std::slice::from_raw_parts_mut(c_out, n);
        for (i, p) in front.iter().enumerate() {
            s[i] = p.s_norm;
            c[i] = p.c_norm;
        }
        Ok(())
    })
}

/// A synthesized observation together with its ground truth.
pub struct EisSignal {
    signal: BeatSignal,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EisTruth {
    pub amplitude: f64,
    pub tau_s: f64,
    pub beat_freq_hz: f64,
    pub theta_rad: f64,
    pub start_index: usize,
    pub num_samples: usize,
}

/// Random frame and observation from `seed`.
///
/// # Safety
/// `cfg` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eis_signal_synthesize(cfg: *const EisConfig, seed: u64, out: *mut *mut EisSignal) -> EisStatus {
    guard(|| {
        let c = as_ref(cfg, "cfg")?;
        let out = as_mut(out, "out")?;
        let signal = draw_signal(&c.system, &c.resolve()?, seed)?;
        *out = Box::into_raw(Box::new(EisSignal { signal }));
        Ok(())
    })
}

/// # Safety
/// `sig` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn eis_signal_free(sig: *mut EisSignal) {
    if !sig.is_null() {
        drop(Box::from_raw(sig));
    }
}

/// # Safety
/// `sig` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eis_signal_truth(sig: *const EisSignal, out: *mut EisTruth) -> EisStatus {
    guard(|| {
        let s = &as_ref(sig, "sig")?.signal;
        let out = as_mut(out, "out")?;
        *out = EisTruth {
            amplitude: s.truth.amplitude,
            tau_s: s.truth.tau_s,
            beat_freq_hz: s.truth.beat_freq_hz,
            theta_rad: s.truth.theta_rad,
            start_index: s.truth.start_index,
            num_samples: s.len(),
        };
        Ok(())
    })
}

/// Copy up to `cap` samples into `re` / `im`; `*written` receives the count.
///
/// # Safety
/// `re` and `im` must hold `cap` elements; `sig` and `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eis_signal_samples(
    sig: *const EisSignal,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
    written: *mut usize,
) -> EisStatus {
    guard(|| {
        let s = &as_ref(sig, "sig")?.signal;
        let written = as_mut(written, "written")?;
        if re.is_null() || im.is_null() {
            return Err(Fail::Null("re/im"));
        }
        let n = cap.min(s.len());
        let re = std::slice::from_raw_parts_mut(re, n);
        let im = std::slice::from_raw_parts_mut(im, n);
        for (i, x) in s.samples.iter().take(n).enumerate() {
            re[i] = x.re;
            im[i] = x.im;
        }
        *written = n;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EisEstimate {
    pub f_hat_hz: f64,
    pub range_hat_m: f64,
    pub theta_hat_rad: f64,
    pub tau_hat_s: f64,
}

/// Beat-frequency estimate at the configured frame start.
///
/// # Safety
/// `sig` and `cfg` must be valid handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eis_estimate(
    sig: *const EisSignal,
    cfg: *const EisConfig,
    window: EisWindow,
    out: *mut EisEstimate,
) -> EisStatus {
    guard(|| {
        let s = &as_ref(sig, "sig")?.signal;
        let c = as_ref(cfg, "cfg")?;
        let out = as_mut(out, "out")?;
        let w = match window {
            EisWindow::Preamble => EstimationWindow::Preamble,
            EisWindow::KnownFrame => EstimationWindow::KnownFrame,
            EisWindow::Blind => EstimationWindow::Blind,
        };
        let e = estimate_beat_frequency(s, &c.resolve()?, &SearchOptions::default().with_window(w))?;
        *out = EisEstimate {
            f_hat_hz: e.f_hat_hz,
            range_hat_m: e.range_hat_m,
            theta_hat_rad: e.theta_hat_rad,
            tau_hat_s: e.tau_hat(s.chirp_rate),
        };
        Ok(())
    })
}

/// Distribution model of the synchronization statistic.
pub struct EisGlrt {
    model: GlrtModel,
}

/// Model at residual frequency offset `eps_f_hz`.
///
/// # Safety
/// `cfg` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eis_glrt_new(cfg: *const EisConfig, eps_f_hz: f64, out: *mut *mut EisGlrt) -> EisStatus {
    guard(|| {
        let c = as_ref(cfg, "cfg")?;
        let out = as_mut(out, "out")?;
        let model = build_model(&c.system, &c.resolve()?, eps_f_hz)?;
        *out = Box::into_raw(Box::new(EisGlrt { model }));
        Ok(())
    })
}

/// # Safety
/// `g` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn eis_glrt_free(g: *mut EisGlrt) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Detection and false-alarm probabilities at threshold `eta`.
///
/// # Safety
/// `g` must be a valid handle; `pd` and `pfa` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn eis_glrt_pd_pfa(g: *const EisGlrt, eta: f64, pd: *mut f64, pfa: *mut f64) -> EisStatus {
    guard(|| {
        let m = &as_ref(g, "g")?.model;
        let pd = as_mut(pd, "pd")?;
        let pfa = as_mut(pfa, "pfa")?;
        let d = pd_pfa(m, m, eta)?;
        *pd = d.pd;
        *pfa = d.pfa;
        Ok(())
    })
}

/// Threshold giving per-offset false-alarm probability `pfa`.
///
/// # Safety
/// `g` must be a valid handle and `eta` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eis_glrt_threshold(g: *const EisGlrt, pfa: f64, eta: *mut f64) -> EisStatus {
    guard(|| {
        let m = &as_ref(g, "g")?.model;
        let eta = as_mut(eta, "eta")?;
        *eta = solve_threshold(m, pfa)?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EisChainResult {
    pub beat_freq_true_hz: f64,
    pub beat_freq_hat_hz: f64,
    pub lambda_max: f64,
    pub detected: bool,
    pub start_true: usize,
    pub start_hat: usize,
    pub symbol_errors_viterbi: usize,
    pub symbol_errors_correlator: usize,
    pub data_len: usize,
}

/// One end-to-end trial: synthesis, estimation, synchronization, detection.
///
/// # Safety
/// `cfg` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eis_chain_run(cfg: *const EisConfig, pfa: f64, seed: u64, out: *mut EisChainResult) -> EisStatus {
    guard(|| {
        let c = as_ref(cfg, "cfg")?;
        let out = as_mut(out, "out")?;
        let cpm = c.resolve()?;
        let trellis = CpmTrellis::new(&cpm)?;
        let eta = solve_threshold(&build_model(&c.system, &cpm, 0.0)?, pfa)?;
        let t = run_chain(&c.system, &cpm, &trellis, eta, seed, &ChainOptions::default())?;
        *out = EisChainResult {
            beat_freq_true_hz: t.beat_freq_true_hz,
            beat_freq_hat_hz: t.fine.f_hat_hz,
            lambda_max: t.sync.lambda_max,
            detected: t.sync.detected,
            start_true: t.start_true,
            start_hat: t.start_hat,
            symbol_errors_viterbi: t.viterbi.symbol_errors.unwrap_or(0),
            symbol_errors_correlator: t.correlator.symbol_errors.unwrap_or(0),
            data_len: cpm.data_len,
        };
        Ok(())
    })
}
