use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::cpm::frame_phase_samples;
use super::{CpmConfig, Frame, SystemConfig};
use crate::error::Result;

/// Ground truth carried alongside a synthesized observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub amplitude: f64,
    pub tau_s: f64,
    pub beat_freq_hz: f64,
    pub theta_rad: f64,
    /// Carrier phase at the first modulated sample, `theta + 2 pi f_tau m_0 T_s`.
    pub psi_rad: f64,
    pub frame: Frame,
    pub start_offset_s: f64,
    pub start_index: usize,
    pub clutter_phases: Vec<f64>,
}

/// Frequency/phase correction already applied to the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compensation {
    pub freq_hz: f64,
    pub phase_rad: f64,
    /// `f_tau - freq_hz`, the frequency left in the samples.
    pub residual_freq_hz: f64,
}

/// Dechirped observation `d[n]`, n = 0 .. N-1.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatSignal {
    pub samples: Vec<Complex64>,
    pub truth: Truth,
    pub noise_var: f64,
    pub sample_period_s: f64,
    pub chirp_rate: f64,
    pub compensation: Option<Compensation>,
}

impl BeatSignal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Multiply by `exp(-j(2 pi f n T_s + theta))`. Corrections compose additively.
    pub fn compensated(&self, freq_hz: f64, phase_rad: f64) -> BeatSignal {
        let w = -2.0 * PI * freq_hz * self.sample_period_s;
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(n, &d)| d * Complex64::from_polar(1.0, w * n as f64 - phase_rad))
            .collect();
        let (f0, p0) = self
            .compensation
            .map(|c| (c.freq_hz, c.phase_rad))
            .unwrap_or((0.0, 0.0));
        let freq = f0 + freq_hz;
        BeatSignal {
            samples,
            truth: self.truth.clone(),
            noise_var: self.noise_var,
            sample_period_s: self.sample_period_s,
            chirp_rate: self.chirp_rate,
            compensation: Some(Compensation {
                freq_hz: freq,
                phase_rad: p0 + phase_rad,
                residual_freq_hz: self.truth.beat_freq_hz - freq,
            }),
        }
    }
}

/// Draw one observation. The stream order from the seed is: theta (unless
/// pinned), one phase per clutter tone, then interleaved noise (re, im).
pub fn synthesize_beat(
    sys: &SystemConfig,
    cfg: &CpmConfig,
    frame: &Frame,
    seed: u64,
) -> Result<BeatSignal> {
    sys.validate()?;
    let n = sys.num_samples();
    cfg.validate(n)?;
    frame.validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let ts = sys.sample_period();
    let f_tau = sys.beat_frequency();
    let theta = if sys.pin_theta {
        sys.deterministic_theta().rem_euclid(2.0 * PI)
    } else {
        rng.gen::<f64>() * 2.0 * PI
    };
    let clutter_phases: Vec<f64> = sys
        .clutter
        .iter()
        .map(|_| rng.gen::<f64>() * 2.0 * PI)
        .collect();

    let (frame_phase, end_phase) = frame_phase_samples(cfg, frame);
    let m0 = cfg.start_index;
    let gamma = |k: usize| -> f64 {
        if k < m0 {
            0.0
        } else {
            frame_phase.get(k - m0).copied().unwrap_or(end_phase)
        }
    };

    let w = 2.0 * PI * f_tau * ts;
    let noise_std = (sys.noise_var / 2.0).sqrt();
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let mut d = Complex64::from_polar(sys.amplitude, w * k as f64 + theta + gamma(k));
        for (c, ph) in sys.clutter.iter().zip(&clutter_phases) {
            let wc = 2.0 * PI * (c.beat_freq_hz + c.doppler_hz) * ts;
            d += Complex64::from_polar(c.amplitude, wc * k as f64 + ph);
        }
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        samples.push(d + Complex64::new(re, im) * noise_std);
    }

    Ok(BeatSignal {
        samples,
        truth: Truth {
            amplitude: sys.amplitude,
            tau_s: sys.delay(),
            beat_freq_hz: f_tau,
            theta_rad: theta,
            psi_rad: (theta + w * m0 as f64).rem_euclid(2.0 * PI),
            frame: frame.clone(),
            start_offset_s: cfg.start_offset_s(),
            start_index: m0,
            clutter_phases,
        },
        noise_var: sys.noise_var,
        sample_period_s: ts,
        chirp_rate: sys.chirp_rate(),
        compensation: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{cpm_phase, CpmParams};
    use approx::assert_relative_eq;

    fn noiseless() -> (SystemConfig, CpmConfig, Frame) {
        let mut sys = SystemConfig::default();
        sys.noise_var = 1e-300;
        let cfg = CpmConfig::from_params(&sys, &CpmParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let frame = Frame::random(&cfg, &mut rng);
        (sys, cfg, frame)
    }

    #[test]
    fn unmodulated_is_a_pure_tone() {
        let (sys, _, _) = noiseless();
        let p = CpmParams { mod_index: 0.0, ..Default::default() };
        let cfg = CpmConfig::from_params(&sys, &p).unwrap();
        let frame = Frame::random(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
        let s = synthesize_beat(&sys, &cfg, &frame, 3).unwrap();
        let step = 2.0 * PI * sys.beat_frequency() * sys.sample_period();
        for k in 1..s.len() {
            assert_relative_eq!(s.samples[k].norm(), 1.0, epsilon = 1e-9);
            let dphi = (s.samples[k] * s.samples[k - 1].conj()).arg();
            assert_relative_eq!(dphi, step, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_delay_leaves_only_modulation() {
        let (mut sys, cfg, frame) = noiseless();
        sys.range_m = 0.0;
        sys.pin_theta = true;
        let s = synthesize_beat(&sys, &cfg, &frame, 3).unwrap();
        for k in (0..s.len()).step_by(7) {
            let t = k as f64 * sys.sample_period();
            let expected = Complex64::from_polar(1.0, cpm_phase(&cfg, &frame, t));
            assert!((s.samples[k] - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn energy_is_exact_without_noise() {
        let (sys, cfg, frame) = noiseless();
        let s = synthesize_beat(&sys, &cfg, &frame, 8).unwrap();
        let e: f64 = s.samples.iter().map(|d| d.norm_sqr()).sum();
        assert_relative_eq!(e, s.len() as f64, max_relative = 1e-12);
    }

    #[test]
    fn noise_power_and_circularity() {
        let mut sys = SystemConfig::default();
        sys.amplitude = 1e-150;
        sys.noise_var = 2.5;
        sys.obs_window_s = 5e-4; // 1e5 samples
        let cfg = CpmConfig::from_params(&sys, &CpmParams::default()).unwrap();
        let frame = Frame::random(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
        let s = synthesize_beat(&sys, &cfg, &frame, 11).unwrap();
        let n = s.len() as f64;
        let p: f64 = s.samples.iter().map(|d| d.norm_sqr()).sum::<f64>() / n;
        let m2: Complex64 = s.samples.iter().map(|d| d * d).sum::<Complex64>() / n;
        assert!((p / 2.5 - 1.0).abs() < 0.02);
        assert!(m2.norm() / 2.5 < 0.02);
    }

    #[test]
    fn same_seed_same_samples() {
        let (mut sys, cfg, frame) = noiseless();
        sys.noise_var = 0.3;
        let a = synthesize_beat(&sys, &cfg, &frame, 42).unwrap();
        let b = synthesize_beat(&sys, &cfg, &frame, 42).unwrap();
        let c = synthesize_beat(&sys, &cfg, &frame, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn truth_is_consistent() {
        let (sys, cfg, frame) = noiseless();
        let s = synthesize_beat(&sys, &cfg, &frame, 1).unwrap();
        assert_relative_eq!(s.truth.beat_freq_hz, 2.0 * sys.chirp_rate() * s.truth.tau_s);
        assert_eq!(s.truth.start_index, 200);
        assert_eq!(s.len(), 4000);
    }

    #[test]
    fn compensation_round_trip() {
        let (mut sys, cfg, frame) = noiseless();
        sys.noise_var = 0.1;
        let s = synthesize_beat(&sys, &cfg, &frame, 2).unwrap();
        let back = s.compensated(1.234e5, 0.7).compensated(-1.234e5, -0.7);
        for (a, b) in s.samples.iter().zip(&back.samples) {
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
        let c = back.compensation.unwrap();
        assert!(c.freq_hz.abs() < 1e-9 && c.phase_rad.abs() < 1e-12);
    }
}
