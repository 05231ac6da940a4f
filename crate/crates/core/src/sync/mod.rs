//! Frame synchronization.
//!
//! Two matched filters run at every candidate offset `m`: one against the
//! known preamble phase (`C_p`) and one against a bare tone (`C_0`). The GLRT
//! statistic `Lambda = |C_p|^2 - |C_0|^2` is a Hermitian quadratic form in
//! jointly Gaussian variables, so its exact distribution follows from the
//! characteristic function by Gil-Pelaez inversion.

mod gil_pelaez;
mod hermite;
mod model;
pub mod quadrature;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use gil_pelaez::{cdf_lambda, pd_cfo_approx, pd_cfo_average, pd_pfa, solve_threshold, Detection};
pub use hermite::{gauss_hermite, gaussian_expectation};
pub use model::{build_model, build_model_from_phase, GlrtModel, Hypothesis, QuadForm};

use crate::error::{Error, Result};
use crate::signal::{BeatSignal, CpmConfig};

/// Dirichlet kernel `sum_{n<L} exp(j 2 pi eps n Ts)`.
pub fn coherence_factor(eps_f: f64, preamble_samples: usize, sample_period_s: f64) -> Complex64 {
    let l = preamble_samples as f64;
    let x = PI * eps_f * sample_period_s;
    let phase = Complex64::from_polar(1.0, x * (l - 1.0));
    let s = x.sin();
    let mag = if s.abs() < 1e-9 {
        // near a multiple of pi: L'Hopital on sin(Lx)/sin(x)
        l * (l * x).cos() / x.cos()
    } else {
        (l * x).sin() / s
    };
    phase * mag
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub c0: Complex64,
    pub cp: Complex64,
}

pub fn glrt_statistic(c: &Correlation) -> f64 {
    c.cp.norm_sqr() - c.c0.norm_sqr()
}

/// Matched-filter outputs at offset `m`.
pub fn correlate(signal: &BeatSignal, f_hat: f64, cfg: &CpmConfig, m: usize) -> Result<Correlation> {
    let gp = cfg.preamble_phase();
    let len = gp.len();
    if m + len > signal.len() {
        return Err(Error::WindowOverrun { offset: m, len, available: signal.len() });
    }
    let w = -2.0 * PI * f_hat * signal.sample_period_s;
    let mut c0 = Complex64::new(0.0, 0.0);
    let mut cp = Complex64::new(0.0, 0.0);
    for (n, g) in gp.iter().enumerate() {
        let x = signal.samples[m + n] * Complex64::from_polar(1.0, w * n as f64);
        c0 += x;
        cp += x * Complex64::from_polar(1.0, -g);
    }
    Ok(Correlation { c0, cp })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncResult {
    pub m_hat: usize,
    pub lambda_max: f64,
    pub detected: bool,
}

/// `Lambda[m]` for every admissible offset `m = 0 ..= N - L_p N_sps`.
pub fn glrt_scan(signal: &BeatSignal, f_hat: f64, cfg: &CpmConfig) -> Result<Vec<f64>> {
    let gp = cfg.preamble_phase();
    let len = gp.len();
    let n = signal.len();
    if len > n {
        return Err(Error::SignalTooShort { needed: len, available: n });
    }
    // Removing the tone with absolute time only rotates each C[m] by a
    // common phase, which the magnitudes ignore.
    let w = -2.0 * PI * f_hat * signal.sample_period_s;
    let r: Vec<Complex64> = signal
        .samples
        .iter()
        .enumerate()
        .map(|(k, d)| d * Complex64::from_polar(1.0, w * k as f64))
        .collect();
    let tmpl: Vec<Complex64> = gp.iter().map(|g| Complex64::from_polar(1.0, -g)).collect();
    let mut out = Vec::with_capacity(n - len + 1);
    for m in 0..=n - len {
        let win = &r[m..m + len];
        let c0: Complex64 = win.iter().sum();
        let cp: Complex64 = win.iter().zip(&tmpl).map(|(x, t)| x * t).sum();
        out.push(cp.norm_sqr() - c0.norm_sqr());
    }
    Ok(out)
}

/// Exhaustive offset search; the earliest offset wins ties.
///
/// Values within a relative `1e-9` of the running maximum count as ties: a
/// constant-frequency preamble makes `Lambda[m_0]` and `Lambda[m_0 + 1]`
/// equal in exact arithmetic.
pub fn synchronize(signal: &BeatSignal, f_hat: f64, cfg: &CpmConfig, eta: f64) -> Result<SyncResult> {
    let scan = glrt_scan(signal, f_hat, cfg)?;
    let (mut m_hat, mut best) = (0, f64::NEG_INFINITY);
    for (m, &v) in scan.iter().enumerate() {
        if m == 0 || v > best + 1e-9 * best.abs() {
            best = v;
            m_hat = m;
        }
    }
    Ok(SyncResult { m_hat, lambda_max: best, detected: best > eta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize_beat, CpmParams, Frame, SystemConfig};
    use rand::{Rng, SeedableRng};

    #[test]
    fn coherence_factor_matches_direct_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let ts = 5e-9;
        for _ in 0..100 {
            let eps = rng.gen_range(-5e7..5e7);
            let l = rng.gen_range(1..200);
            let direct: Complex64 = (0..l)
                .map(|n| Complex64::from_polar(1.0, 2.0 * PI * eps * n as f64 * ts))
                .sum();
            assert!((coherence_factor(eps, l, ts) - direct).norm() < 1e-10 * l as f64);
        }
        assert_eq!(coherence_factor(0.0, 44, ts), Complex64::new(44.0, 0.0));
        assert!(coherence_factor(1.0 / (44.0 * ts), 44, ts).norm() < 1e-9);
        // at eps = 1/Ts the kernel wraps back to L
        assert!((coherence_factor(1.0 / ts, 44, ts).norm() - 44.0).abs() < 1e-6);
    }

    fn noiseless(h: f64) -> (SystemConfig, CpmConfig, BeatSignal) {
        let mut sys = SystemConfig::default();
        sys.noise_var = 1e-300;
        let p = CpmParams { mod_index: h, ..Default::default() };
        let cfg = CpmConfig::from_params(&sys, &p).unwrap();
        let frame = Frame::random(&cfg, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0));
        let s = synthesize_beat(&sys, &cfg, &frame, 1).unwrap();
        (sys, cfg, s)
    }

    #[test]
    fn aligned_noiseless_correlation() {
        let (_, cfg, s) = noiseless(0.1);
        let c = correlate(&s, s.truth.beat_freq_hz, &cfg, cfg.start_index).unwrap();
        let psi = Complex64::from_polar(1.0, s.truth.psi_rad);
        let l = cfg.preamble_samples() as f64;
        let gamma: Complex64 = cfg.preamble_phase().iter().map(|g| Complex64::from_polar(1.0, *g)).sum();
        assert!((c.cp - psi * l).norm() < 1e-9);
        assert!((c.c0 - psi * gamma).norm() < 1e-9);
        assert!(glrt_statistic(&c) > 0.0);
        let r = synchronize(&s, s.truth.beat_freq_hz, &cfg, 0.0).unwrap();
        assert_eq!(r.m_hat, cfg.start_index);
        assert!(r.detected);
    }

    #[test]
    fn unmodulated_preamble_gives_equal_outputs() {
        let (_, cfg, s) = noiseless(0.0);
        let c = correlate(&s, 0.0, &cfg, 17).unwrap();
        assert!((c.c0 - c.cp).norm() < 1e-12);
        assert_eq!(glrt_statistic(&Correlation { c0: c.cp, cp: c.cp }), 0.0);
    }

    #[test]
    fn overrun_is_reported() {
        let (_, cfg, s) = noiseless(0.1);
        assert!(matches!(correlate(&s, 0.0, &cfg, s.len() - 1), Err(Error::WindowOverrun { .. })));
    }
}
