//! Data recovery from the frequency-compensated beat signal.
//!
//! Both detectors work on per-symbol correlations against the `L` base
//! waveforms and a phase-state trellis: the Viterbi detector finds the
//! maximum-likelihood path, the correlator bank decides symbol by symbol with
//! decision feedback over a short look-ahead.

mod correlator;
mod rate;
mod trellis;
mod viterbi;


use num_complex::Complex64;

pub use correlator::correlator_sequence;
pub use rate::{bit_errors, gray_code, measure_rate, q_function, ser_theory, RateMeasurement};
pub use trellis::CpmTrellis;
pub use viterbi::{path_metric, viterbi_sequence};

use crate::error::{Error, Result};
use crate::signal::{BeatSignal, CpmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    Viterbi,
    /// Decision-feedback bank deciding one symbol from `span` symbols of look-ahead.
    Correlator { span: usize },
}

impl Detector {
    pub const DEFAULT_CORRELATOR: Detector = Detector::Correlator { span: 1 };
    pub const MAX_SPAN: usize = 8;
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemodResult {
    pub symbols: Vec<i32>,
    /// Filled when the signal carries ground truth of matching length.
    pub symbol_errors: Option<usize>,
    pub ser: Option<f64>,
    pub path_metric: f64,
    /// Constant phase removed before detection.
    pub phase_offset_rad: f64,
}

/// Residual carrier phase from the last `ceil(L_p / 2)` preamble symbols.
pub fn preamble_phase_offset(samples: &[Complex64], cfg: &CpmConfig, m: usize) -> Result<f64> {
    let gp = cfg.preamble_phase();
    let tail = cfg.preamble_len().div_ceil(2) * cfg.samples_per_symbol;
    let from = gp.len() - tail;
    if m + gp.len() > samples.len() {
        return Err(Error::WindowOverrun { offset: m, len: gp.len(), available: samples.len() });
    }
    let acc: Complex64 = (from..gp.len())
        .map(|n| samples[m + n] * Complex64::from_polar(1.0, -gp[n]))
        .sum();
    Ok(acc.arg())
}

/// Per-data-symbol correlations with the phase offset removed.
pub fn data_correlations(
    samples: &[Complex64],
    cfg: &CpmConfig,
    trellis: &CpmTrellis,
    m: usize,
) -> Result<(Vec<Vec<Complex64>>, f64)> {
    let len = cfg.frame_samples();
    if m + len > samples.len() {
        return Err(Error::WindowOverrun { offset: m, len, available: samples.len() });
    }
    let phi = preamble_phase_offset(samples, cfg, m)?;
    let rot = Complex64::from_polar(1.0, -phi);
    let nsps = cfg.samples_per_symbol;
    let first = m + cfg.preamble_samples();
    let z = (0..cfg.data_len)
        .map(|i| {
            let s = first + i * nsps;
            trellis
                .symbol_correlations(&samples[s..s + nsps])
                .into_iter()
                .map(|c| c * rot)
                .collect()
        })
        .collect();
    Ok((z, phi))
}

/// Detect the data symbols of a frame starting at sample `m`.
pub fn demodulate(
    signal: &BeatSignal,
    cfg: &CpmConfig,
    trellis: &CpmTrellis,
    m: usize,
    detector: Detector,
) -> Result<DemodResult> {
    let (z, phi) = data_correlations(&signal.samples, cfg, trellis, m)?;
    let start = trellis.state_after(&cfg.preamble);
    let (path, metric) = match detector {
        Detector::Viterbi => viterbi_sequence(trellis, &z, start),
        Detector::Correlator { span } => {
            if span == 0 || span > Detector::MAX_SPAN {
                return Err(Error::Config(format!(
                    "correlator span must be in 1..={} (got {span})",
                    Detector::MAX_SPAN
                )));
            }
            correlator_sequence(trellis, &z, start, span)
        }
    };
    let symbols: Vec<i32> = path.iter().map(|&j| trellis.alphabet[j]).collect();
    let truth = &signal.truth.frame.data;
    let symbol_errors = (truth.len() == symbols.len())
        .then(|| symbols.iter().zip(truth).filter(|(a, b)| a != b).count());
    let ser = symbol_errors.map(|e| if symbols.is_empty() { 0.0 } else { e as f64 / symbols.len() as f64 });
    Ok(DemodResult { symbols, symbol_errors, ser, path_metric: metric, phase_offset_rad: phi })
}

pub fn viterbi_demod(signal: &BeatSignal, cfg: &CpmConfig, trellis: &CpmTrellis, m: usize) -> Result<DemodResult> {
    demodulate(signal, cfg, trellis, m, Detector::Viterbi)
}

pub fn correlator_demod(signal: &BeatSignal, cfg: &CpmConfig, trellis: &CpmTrellis, m: usize) -> Result<DemodResult> {
    demodulate(signal, cfg, trellis, m, Detector::DEFAULT_CORRELATOR)
}
