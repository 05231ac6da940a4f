//! Signal generation for the echo-side ISAC link.
//!
//! The radar transmits an LFM chirp; after dechirping, the echo from the
//! reconfigurable surface is a tone at the beat frequency `f_tau = 2 kappa tau`
//! multiplied by the continuous-phase modulation impressed by the surface:
//!
//! ```text
//! d[n] = mu_s * exp(j(2 pi f_tau n Ts + theta_tau + gamma(n Ts))) + clutter[n] + z[n]
//! ```
//!
//! [`SystemConfig`] holds the radar-side physical parameters, [`CpmConfig`]
//! the modulation format and frame layout, and [`synthesize_beat`] produces
//! the sampled observation together with its ground truth.

mod cpm;
mod export;
mod geometry;
mod synth;

pub use cpm::{
    cpm_instantaneous_freq, cpm_phase, frame_phase_samples, CpmConfig, CpmParams, Frame, ModIndex,
    PreamblePattern, PulseShape,
};
pub use export::{read_binary, write_binary, write_csv, write_sidecar};
pub use geometry::{check_aperture_approximations, ris_received_power, ApertureReport, RisGeometry};
pub use synth::{synthesize_beat, BeatSignal, Compensation, Truth};

pub(crate) use cpm::max_alphabet;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Convert decibels to a linear power ratio.
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// An unmodulated scatterer: appears in the beat signal as a tone at
/// `beat_freq_hz + doppler_hz` with a random phase per realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clutter {
    pub amplitude: f64,
    pub beat_freq_hz: f64,
    pub doppler_hz: f64,
}

/// Radar and waveform parameters.
///
/// The bandwidth split is controlled by `comm_fraction` (beta): the chirp
/// sweeps `B_s = (1 - beta) B_T` over the observation window, so the chirp
/// rate is `kappa = B_s / T_0`. `pri_s` only enters the data-rate formula.
///
/// Noise is specified per sample (`noise_var` = sigma_z^2); the per-sample SNR
/// is `amplitude^2 / noise_var` and the observation SNR used by the range
/// bound is that value times the number of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub carrier_freq_hz: f64,
    pub total_bandwidth_hz: f64,
    pub obs_window_s: f64,
    pub pri_s: f64,
    pub sample_rate_hz: f64,
    pub comm_fraction: f64,
    pub range_m: f64,
    /// |mu_s|. Use [`SystemConfig::amplitude_from_range_equation`] to derive
    /// it from the link budget instead.
    pub amplitude: f64,
    pub noise_var: f64,
    pub tx_power_w: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub ris_rows: usize,
    pub ris_cols: usize,
    pub clutter: Vec<Clutter>,
    /// Pin theta_tau to `4 pi kappa tau^2 - 4 pi f_c tau` instead of drawing it.
    pub pin_theta: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            carrier_freq_hz: 77e9,
            total_bandwidth_hz: 100e6,
            obs_window_s: 20e-6,
            pri_s: 20e-6,
            sample_rate_hz: 200e6,
            comm_fraction: 0.2,
            range_m: 10.0,
            amplitude: 1.0,
            noise_var: 0.1,
            tx_power_w: 1.0,
            tx_gain: 1.0,
            rx_gain: 1.0,
            ris_rows: 16,
            ris_cols: 16,
            clutter: Vec::new(),
            pin_theta: false,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("total_bandwidth_hz", self.total_bandwidth_hz),
            ("obs_window_s", self.obs_window_s),
            ("pri_s", self.pri_s),
            ("sample_rate_hz", self.sample_rate_hz),
            ("amplitude", self.amplitude),
            ("noise_var", self.noise_var),
            ("tx_power_w", self.tx_power_w),
            ("tx_gain", self.tx_gain),
            ("rx_gain", self.rx_gain),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite (got {v})")));
            }
        }
        if !(self.range_m >= 0.0 && self.range_m.is_finite()) {
            return Err(Error::Config(format!("range_m must be >= 0 (got {})", self.range_m)));
        }
        if !(0.0..=1.0).contains(&self.comm_fraction) {
            return Err(Error::Config(format!(
                "beta (comm_fraction) must lie in [0, 1] (got {})",
                self.comm_fraction
            )));
        }
        if self.sample_rate_hz < 2.0 * self.total_bandwidth_hz * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "sample rate {} Hz is below twice the total bandwidth ({} Hz)",
                self.sample_rate_hz,
                2.0 * self.total_bandwidth_hz
            )));
        }
        if self.ris_rows == 0 || self.ris_cols == 0 {
            return Err(Error::Config("surface must have at least one element per axis".into()));
        }
        if self.num_samples() == 0 {
            return Err(Error::Config("observation window holds no samples".into()));
        }
        Ok(())
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    /// N = floor(T_0 / T_s). A non-integer ratio is rounded down with a warning.
    pub fn num_samples(&self) -> usize {
        let exact = self.obs_window_s * self.sample_rate_hz;
        let n = (exact + 1e-9).floor();
        if (exact - n).abs() > 1e-6 {
            log::warn!("T0/Ts = {exact} is not an integer; using N = {n}");
        }
        n as usize
    }

    pub fn sensing_bandwidth(&self) -> f64 {
        (1.0 - self.comm_fraction) * self.total_bandwidth_hz
    }

    pub fn comm_bandwidth(&self) -> f64 {
        self.comm_fraction * self.total_bandwidth_hz
    }

    /// kappa = B_s / T_0.
    pub fn chirp_rate(&self) -> f64 {
        self.sensing_bandwidth() / self.obs_window_s
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    /// One-way delay tau = R_s / c.
    pub fn delay(&self) -> f64 {
        self.range_m / SPEED_OF_LIGHT
    }

    pub fn beat_frequency(&self) -> f64 {
        2.0 * self.chirp_rate() * self.delay()
    }

    /// Residual video phase plus carrier phase, `4 pi kappa tau^2 - 4 pi f_c tau`.
    pub fn deterministic_theta(&self) -> f64 {
        let tau = self.delay();
        4.0 * std::f64::consts::PI * (self.chirp_rate() * tau * tau - self.carrier_freq_hz * tau)
    }

    pub fn num_elements(&self) -> usize {
        self.ris_rows * self.ris_cols
    }

    /// Per-sample SNR `|mu_s|^2 / sigma_z^2`.
    pub fn snr_sample(&self) -> f64 {
        self.amplitude * self.amplitude / self.noise_var
    }

    /// Observation SNR `|mu_s|^2 T_0 / N_0 = snr_sample * N` (with N_0 = sigma_z^2 T_s).
    pub fn snr_obs(&self) -> f64 {
        self.snr_sample() * self.obs_window_s / self.sample_period()
    }

    /// Set the noise variance so that the per-sample SNR equals `db`.
    pub fn set_snr_sample_db(&mut self, db: f64) {
        self.noise_var = self.amplitude * self.amplitude / db_to_lin(db);
    }

    pub fn with_snr_sample_db(mut self, db: f64) -> Self {
        self.set_snr_sample_db(db);
        self
    }

    pub fn with_comm_fraction(mut self, beta: f64) -> Self {
        self.comm_fraction = beta;
        self
    }

    /// Replace `amplitude` by `sqrt(rho_s)` from the RIS radar equation,
    /// keeping the per-sample SNR unchanged.
    pub fn amplitude_from_range_equation(&mut self) -> Result<()> {
        let snr = self.snr_sample();
        self.amplitude = ris_received_power(self)?.sqrt();
        self.noise_var = self.amplitude * self.amplitude / snr;
        Ok(())
    }
}
