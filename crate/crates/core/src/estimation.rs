//! Maximum-likelihood beat-frequency estimation and frequency compensation.
//!
//! The estimator removes the known modulation phase over its window and
//! maximizes the periodogram `|sum d[n] exp(-j(2 pi f n Ts + gamma[n]))|^2`:
//! zero-padded FFT peak, three-point quadratic interpolation on the log
//! magnitude, then golden-section search on the exact metric within one bin.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::{frame_phase_samples, BeatSignal, CpmConfig, SPEED_OF_LIGHT};

/// Which samples feed the estimator and what phase is removed from them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimationWindow {
    /// Known preamble only (data-aided).
    #[default]
    Preamble,
    /// Whole frame with the true symbols removed. Needs ground truth, so it
    /// only serves as a reference for bound comparisons.
    KnownFrame,
    /// Entire observation, no phase removal. Coarse: the modulation spreads
    /// the tone. Used for acquisition before the frame start is known.
    Blind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// FFT length; `None` uses the next power of two above 4x the window.
    pub fft_len: Option<usize>,
    pub refine: bool,
    pub window: EstimationWindow,
    /// Frame start in samples; `None` uses the configured `m_0`.
    pub start_index: Option<usize>,
    /// Coarse peak search band in Hz, `[lo, hi)`. `None` is `[0, fs/2)`.
    pub band_hz: Option<(f64, f64)>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { fft_len: None, refine: true, window: EstimationWindow::Preamble, start_index: None, band_hz: None }
    }
}

impl SearchOptions {
    pub fn with_window(mut self, window: EstimationWindow) -> Self {
        self.window = window;
        self
    }

    pub fn at(mut self, start_index: usize) -> Self {
        self.start_index = Some(start_index);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqEstimate {
    pub f_hat_hz: f64,
    /// `c f_hat / (2 kappa)`
    pub range_hat_m: f64,
    pub theta_hat_rad: f64,
    pub peak_metric: f64,
    pub grid_resolution_hz: f64,
    pub coarse_freq_hz: f64,
    pub coarse_metric: f64,
}

impl FreqEstimate {
    /// Delay estimate `f_hat / (2 kappa)`.
    pub fn tau_hat(&self, chirp_rate: f64) -> f64 {
        self.f_hat_hz / (2.0 * chirp_rate)
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

/// Samples with the known phase removed, plus the absolute index of the first one.
fn reference(signal: &BeatSignal, cfg: &CpmConfig, opts: &SearchOptions) -> Result<(Vec<Complex64>, usize)> {
    let n = signal.len();
    let m0 = opts.start_index.unwrap_or(cfg.start_index);
    let (start, phase): (usize, Vec<f64>) = match opts.window {
        EstimationWindow::Blind => (0, vec![0.0; n]),
        EstimationWindow::Preamble => (m0, cfg.preamble_phase()),
        EstimationWindow::KnownFrame => (m0, frame_phase_samples(cfg, &signal.truth.frame).0),
    };
    let end = start + phase.len();
    if end > n {
        return Err(Error::SignalTooShort { needed: end, available: n });
    }
    let r = signal.samples[start..end]
        .iter()
        .zip(&phase)
        .map(|(d, g)| d * Complex64::from_polar(1.0, -g))
        .collect();
    Ok((r, start))
}

/// `sum r[k] exp(-j 2 pi f k Ts)` via a renormalized phasor recurrence.
fn correlate(r: &[Complex64], f: f64, ts: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -2.0 * PI * f * ts);
    let mut p = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, x) in r.iter().enumerate() {
        acc += x * p;
        p *= step;
        if k % 64 == 63 {
            p = Complex64::from_polar(1.0, -2.0 * PI * f * ts * (k + 1) as f64);
        }
    }
    acc
}

fn golden_max(lo: f64, hi: f64, iters: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd { (c, fc) } else { (d, fd) }
}

pub fn estimate_beat_frequency(
    signal: &BeatSignal,
    cfg: &CpmConfig,
    opts: &SearchOptions,
) -> Result<FreqEstimate> {
    let (r, start) = reference(signal, cfg, opts)?;
    let window = r.len();
    if window == 0 {
        return Err(Error::SignalTooShort { needed: 1, available: 0 });
    }
    let fft_len = opts.fft_len.unwrap_or_else(|| (4 * window).next_power_of_two());
    if fft_len < window {
        return Err(Error::FftTooShort { fft_len, window });
    }
    let ts = signal.sample_period_s;
    let fs = 1.0 / ts;
    let bin = fs / fft_len as f64;

    let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
    buf[..window].copy_from_slice(&r);
    plan(fft_len).process(&mut buf);
    let power: Vec<f64> = buf.iter().map(|x| x.norm_sqr()).collect();

    let (lo, hi) = opts.band_hz.unwrap_or((0.0, fs / 2.0));
    let freq_of = |k: usize| if k < fft_len / 2 { k as f64 * bin } else { (k as f64 - fft_len as f64) * bin };
    let mut best: Option<usize> = None;
    for (k, &p) in power.iter().enumerate() {
        let f = freq_of(k);
        if f >= lo && f < hi && best.is_none_or(|b| p > power[b]) {
            best = Some(k);
        }
    }
    let k = best.ok_or_else(|| Error::Config(format!("search band [{lo}, {hi}) Hz holds no FFT bin")))?;
    let coarse_f = freq_of(k);
    let coarse_metric = power[k];

    let metric = |f: f64| correlate(&r, f, ts).norm_sqr();
    let mut f_hat = coarse_f;
    let mut best_metric = coarse_metric;
    if opts.refine {
        let ln = |i: usize| power[i].max(f64::MIN_POSITIVE).ln();
        let (a, b, c) = (ln((k + fft_len - 1) % fft_len), ln(k), ln((k + 1) % fft_len));
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            let delta = (0.5 * (a - c) / den).clamp(-0.5, 0.5);
            let fq = coarse_f + delta * bin;
            let mq = metric(fq);
            if mq > best_metric {
                f_hat = fq;
                best_metric = mq;
            }
        }
        let (fg, mg) = golden_max(coarse_f - bin, coarse_f + bin, 50, metric);
        if mg > best_metric {
            f_hat = fg;
            best_metric = mg;
        }
    }

    let s = correlate(&r, f_hat, ts);
    let theta = (s.arg() - 2.0 * PI * f_hat * start as f64 * ts).rem_euclid(2.0 * PI);
    Ok(FreqEstimate {
        f_hat_hz: f_hat,
        range_hat_m: SPEED_OF_LIGHT * f_hat / (2.0 * signal.chirp_rate),
        theta_hat_rad: theta,
        peak_metric: best_metric,
        grid_resolution_hz: bin,
        coarse_freq_hz: coarse_f,
        coarse_metric,
    })
}

/// Remove the estimated tone: `d[n] exp(-j(2 pi f_hat n Ts + theta_hat))`.
pub fn compensate(signal: &BeatSignal, est: &FreqEstimate) -> BeatSignal {
    signal.compensated(est.f_hat_hz, est.theta_hat_rad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize_beat, CpmParams, Frame, SystemConfig};
    use rand::SeedableRng;

    fn make(sys: &SystemConfig, h: f64, seed: u64) -> (CpmConfig, BeatSignal) {
        let p = CpmParams { mod_index: h, ..Default::default() };
        let cfg = CpmConfig::from_params(sys, &p).unwrap();
        let frame = Frame::random(&cfg, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let s = synthesize_beat(sys, &cfg, &frame, seed).unwrap();
        (cfg, s)
    }

    fn quiet() -> SystemConfig {
        let mut sys = SystemConfig::default();
        sys.noise_var = 1e-300;
        sys.range_m = 37.3;
        sys
    }

    #[test]
    fn noiseless_estimate_is_exact() {
        let sys = quiet();
        let (cfg, s) = make(&sys, 0.1, 1);
        for window in [EstimationWindow::Preamble, EstimationWindow::KnownFrame] {
            let e = estimate_beat_frequency(&s, &cfg, &SearchOptions::default().with_window(window)).unwrap();
            assert!((e.f_hat_hz - s.truth.beat_freq_hz).abs() < e.grid_resolution_hz / 100.0, "{window:?}");
            let dtheta = (e.theta_hat_rad - s.truth.theta_rad + PI).rem_euclid(2.0 * PI) - PI;
            assert!(dtheta.abs() < 1e-3);
            assert!((e.range_hat_m - 37.3).abs() < 1.0);
        }
    }

    #[test]
    fn zero_range_gives_zero_frequency() {
        let mut sys = quiet();
        sys.range_m = 0.0;
        let (cfg, s) = make(&sys, 0.1, 2);
        let e = estimate_beat_frequency(&s, &cfg, &SearchOptions::default().with_window(EstimationWindow::KnownFrame)).unwrap();
        assert!(e.f_hat_hz.abs() < e.grid_resolution_hz / 100.0);
        assert!(e.range_hat_m.abs() < 0.05);
    }

    #[test]
    fn compensation_flattens_the_tone() {
        let sys = quiet();
        let (cfg, s) = make(&sys, 0.0, 3);
        let e = estimate_beat_frequency(&s, &cfg, &SearchOptions::default()).unwrap();
        let c = compensate(&s, &e);
        for d in &c.samples {
            assert!((d - Complex64::new(1.0, 0.0)).norm() < 1e-3);
        }
        let resid = c.compensation.unwrap().residual_freq_hz;
        assert!((resid - (s.truth.beat_freq_hz - e.f_hat_hz)).abs() < 1e-9);
    }

    #[test]
    fn refinement_never_lowers_the_metric() {
        let mut sys = SystemConfig::default().with_snr_sample_db(0.0);
        sys.range_m = 23.0;
        for seed in 0..20 {
            let (cfg, s) = make(&sys, 0.1, seed);
            let e = estimate_beat_frequency(&s, &cfg, &SearchOptions::default()).unwrap();
            assert!(e.peak_metric >= e.coarse_metric * (1.0 - 1e-12));
        }
    }

    #[test]
    fn rejects_short_fft_and_short_signal() {
        let sys = quiet();
        let (cfg, s) = make(&sys, 0.1, 4);
        let opts = SearchOptions { fft_len: Some(8), ..Default::default() };
        assert!(matches!(estimate_beat_frequency(&s, &cfg, &opts), Err(Error::FftTooShort { .. })));
        let opts = SearchOptions::default().at(s.len() - 3);
        assert!(matches!(estimate_beat_frequency(&s, &cfg, &opts), Err(Error::SignalTooShort { .. })));
    }

    #[test]
    fn blind_estimate_lands_near_the_tone() {
        let mut sys = SystemConfig::default().with_snr_sample_db(0.0);
        sys.range_m = 60.0;
        let (cfg, s) = make(&sys, 0.1, 5);
        let e = estimate_beat_frequency(&s, &cfg, &SearchOptions::default().with_window(EstimationWindow::Blind)).unwrap();
        assert!((e.f_hat_hz - s.truth.beat_freq_hz).abs() < 2e6);
    }
}
