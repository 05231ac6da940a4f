//! Per-point Monte Carlo kernels shared by the experiments and the tests.

use rand_distr::{Distribution, Normal};

use super::montecarlo::{mean_ci, run_seeded, Estimate};
use crate::chain::{receive, ChainOptions};
use crate::demod::{demodulate, CpmTrellis, Detector};
use crate::error::{Error, Result};
use crate::estimation::{estimate_beat_frequency, EstimationWindow, SearchOptions};
use crate::rng::{sub_seed, trial_rng};
use crate::signal::{synthesize_beat, BeatSignal, CpmConfig, Frame, SystemConfig};
use crate::sync::{correlate, glrt_statistic};

/// Random frame plus observation, both derived from `seed`.
pub fn draw_signal(sys: &SystemConfig, cfg: &CpmConfig, seed: u64) -> Result<BeatSignal> {
    let mut rng = trial_rng(seed, 0);
    let frame = Frame::random(cfg, &mut rng);
    synthesize_beat(sys, cfg, &frame, sub_seed(seed, 1))
}

fn normal(var: f64) -> Result<Normal<f64>> {
    if !(var >= 0.0 && var.is_finite()) {
        return Err(Error::Config(format!("frequency error variance must be finite and >= 0 (got {var})")));
    }
    Normal::new(0.0, var.sqrt()).map_err(|e| Error::Config(e.to_string()))
}

fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

/// Delay errors `tau_hat - tau` of the estimator at the true frame start.
pub fn delay_errors(
    sys: &SystemConfig,
    cfg: &CpmConfig,
    window: EstimationWindow,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let opts = SearchOptions::default().with_window(window).at(cfg.start_index);
    let kappa = sys.chirp_rate();
    collect(run_seeded(n, seed, |_, s| {
        let sig = draw_signal(sys, cfg, s)?;
        let est = estimate_beat_frequency(&sig, cfg, &opts)?;
        Ok(est.tau_hat(kappa) - sig.truth.tau_s)
    }))
}

/// Mean squared delay error in s^2 with its interval.
pub fn delay_mse(sys: &SystemConfig, cfg: &CpmConfig, window: EstimationWindow, n: usize, seed: u64) -> Result<Estimate> {
    let sq: Vec<f64> = delay_errors(sys, cfg, window, n, seed)?.iter().map(|e| e * e).collect();
    Ok(mean_ci(&sq))
}

/// GLRT statistics from synthesized observations: `h1` at the true frame
/// start, `h0` at offset 0 where the echo is an unmodulated tone. The tone
/// is removed at `f_tau + eps` with `eps ~ N(0, freq_var)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlrtSamples {
    pub h1: Vec<f64>,
    pub h0: Vec<f64>,
}

pub fn glrt_samples(sys: &SystemConfig, cfg: &CpmConfig, freq_var: f64, n: usize, seed: u64) -> Result<GlrtSamples> {
    if cfg.start_index < cfg.preamble_samples() {
        return Err(Error::Config(format!(
            "frame start {} leaves no unmodulated window of {} samples",
            cfg.start_index,
            cfg.preamble_samples()
        )));
    }
    let eps = normal(freq_var)?;
    let pairs = collect(run_seeded(n, seed, |_, s| {
        let sig = draw_signal(sys, cfg, s)?;
        let f = sig.truth.beat_freq_hz + eps.sample(&mut trial_rng(s, 2));
        let h1 = glrt_statistic(&correlate(&sig, f, cfg, cfg.start_index)?);
        let h0 = glrt_statistic(&correlate(&sig, f, cfg, 0)?);
        Ok((h1, h0))
    }))?;
    let (h1, h0) = pairs.into_iter().unzip();
    Ok(GlrtSamples { h1, h0 })
}

/// Fraction of samples above `eta`, with its interval.
pub fn exceedance(samples: &[f64], eta: f64) -> Estimate {
    let hits: Vec<f64> = samples.iter().map(|&x| f64::from(u8::from(x > eta))).collect();
    mean_ci(&hits)
}

/// Per-frame symbol error rates of both detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerPoint {
    pub viterbi: Estimate,
    pub correlator: Estimate,
}

/// Symbol error rates with perfect timing. The tone is removed at
/// `f_tau + eps`, `eps ~ N(0, freq_var)`; the residual phase is estimated
/// from the preamble tail.
pub fn ser_point(
    sys: &SystemConfig,
    cfg: &CpmConfig,
    trellis: &CpmTrellis,
    correlator: Detector,
    freq_var: f64,
    n_frames: usize,
    seed: u64,
) -> Result<SerPoint> {
    let eps = normal(freq_var)?;
    let pairs = collect(run_seeded(n_frames, seed, |_, s| {
        let sig = draw_signal(sys, cfg, s)?;
        let comp = sig.compensated(sig.truth.beat_freq_hz + eps.sample(&mut trial_rng(s, 2)), 0.0);
        let v = demodulate(&comp, cfg, trellis, cfg.start_index, Detector::Viterbi)?;
        let c = demodulate(&comp, cfg, trellis, cfg.start_index, correlator)?;
        Ok((v.ser.unwrap_or(f64::NAN), c.ser.unwrap_or(f64::NAN)))
    }))?;
    let (v, c): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(SerPoint { viterbi: mean_ci(&v), correlator: mean_ci(&c) })
}

/// Summary of repeated end-to-end receptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainPoint {
    pub ser_viterbi: Estimate,
    pub ser_correlator: Estimate,
    /// Empirical `Var(f_hat - f_tau)` of the preamble-aided estimate in Hz^2.
    pub freq_var: f64,
    pub timing_rmse: f64,
    pub detect_rate: Estimate,
}

pub fn chain_point(
    sys: &SystemConfig,
    cfg: &CpmConfig,
    trellis: &CpmTrellis,
    eta: f64,
    opts: &ChainOptions,
    n: usize,
    seed: u64,
) -> Result<ChainPoint> {
    let traces = collect(run_seeded(n, seed, |_, s| {
        let sig = draw_signal(sys, cfg, s)?;
        receive(&sig, cfg, trellis, eta, opts)
    }))?;
    let pick = |f: &dyn Fn(&crate::chain::ChainTrace) -> f64| traces.iter().map(f).collect::<Vec<f64>>();
    let resid = pick(&|t| t.residual_freq_hz);
    let mean_resid = resid.iter().sum::<f64>() / n as f64;
    let freq_var = resid.iter().map(|r| (r - mean_resid).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
    let dm = pick(&|t| (t.start_hat as f64 - t.start_true as f64).powi(2));
    Ok(ChainPoint {
        ser_viterbi: mean_ci(&pick(&|t| t.viterbi.ser.unwrap_or(f64::NAN))),
        ser_correlator: mean_ci(&pick(&|t| t.correlator.ser.unwrap_or(f64::NAN))),
        freq_var,
        timing_rmse: (dm.iter().sum::<f64>() / n as f64).sqrt(),
        detect_rate: mean_ci(&pick(&|t| f64::from(u8::from(t.sync.detected)))),
    })
}

/// End-to-end spectral efficiency against the coupling-law prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingCheck {
    pub chain: ChainPoint,
    pub xi: f64,
    pub rho_sym: f64,
    pub rho_eff: f64,
    /// `log2 L (1 - SER)` of the full receiver (Viterbi).
    pub eta_measured: Estimate,
    /// `log2 L (1 - SER)` of an offset-free receiver at `rho_eff`.
    pub eta_predicted: Estimate,
    /// `min(log2 L, log2(1 + rho_eff))`
    pub eta_capacity: f64,
}

pub fn coupling_check(
    sys: &SystemConfig,
    cfg: &CpmConfig,
    trellis: &CpmTrellis,
    eta: f64,
    n: usize,
    seed: u64,
) -> Result<CouplingCheck> {
    let chain = chain_point(sys, cfg, trellis, eta, &ChainOptions::default(), n, sub_seed(seed, 0))?;
    let xi = crate::bounds::coupling_xi_from_freq_var(sys, cfg, chain.freq_var);
    let rho_sym = crate::bounds::symbol_snr(sys, cfg);
    let rho_eff = rho_sym / (1.0 + xi);
    let mut degraded = sys.clone();
    degraded.noise_var = sys.noise_var * (1.0 + xi);
    let ideal = ser_point(&degraded, cfg, trellis, Detector::DEFAULT_CORRELATOR, 0.0, n, sub_seed(seed, 1))?;
    let bits = cfg.bits_per_symbol();
    let to_eta = |e: Estimate| Estimate { mean: bits * (1.0 - e.mean), ci95: bits * e.ci95, n: e.n };
    Ok(CouplingCheck {
        chain,
        xi,
        rho_sym,
        rho_eff,
        eta_measured: to_eta(chain.ser_viterbi),
        eta_predicted: to_eta(ideal.viterbi),
        eta_capacity: (1.0 + rho_eff).log2().min(bits),
    })
}
