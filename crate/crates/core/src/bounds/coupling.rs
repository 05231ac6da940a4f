use std::f64::consts::PI;

use super::mcrb_tau;
use crate::error::Result;
use crate::signal::{CpmConfig, SystemConfig};

/// Residual beat-frequency variance in Hz^2, `4 kappa^2 MCRB(tau)` (efficient estimator).
pub fn freq_error_variance(sys: &SystemConfig, cfg: &CpmConfig) -> Result<f64> {
    let k = sys.chirp_rate();
    Ok(4.0 * k * k * mcrb_tau(sys, cfg)?)
}

/// Mean accumulated phase variance over the data symbols,
/// `(2 pi T_c)^2 sigma_eps^2 (L_d - 1)(2 L_d - 1) / 6 + sigma_theta^2`.
pub fn phase_variance(cfg: &CpmConfig, freq_var: f64, phase_offset_var: f64) -> f64 {
    let ld = cfg.data_len as f64;
    let w = 2.0 * PI * cfg.symbol_period();
    w * w * freq_var * (ld - 1.0) * (2.0 * ld - 1.0) / 6.0 + phase_offset_var
}

/// Large-L_d form of [`phase_variance`], `(2 pi T_c sigma_eps L_d)^2 / 3`.
pub fn phase_variance_approx(cfg: &CpmConfig, freq_var: f64) -> f64 {
    let x = 2.0 * PI * cfg.symbol_period() * cfg.data_len as f64;
    x * x * freq_var / 3.0
}

/// SNR per symbol seen by the demodulator, `N_sps |mu_s|^2 / sigma_z^2`.
///
/// Phase drift is coherent over a symbol while noise averages down by
/// `N_sps`, so the coupling is evaluated against the symbol SNR.
pub fn symbol_snr(sys: &SystemConfig, cfg: &CpmConfig) -> f64 {
    cfg.samples_per_symbol as f64 * sys.snr_sample()
}

/// xi = rho (2 pi T_c L_d)^2 sigma_eps^2 / 3.
pub fn coupling_xi_from_freq_var(sys: &SystemConfig, cfg: &CpmConfig, freq_var: f64) -> f64 {
    symbol_snr(sys, cfg) * phase_variance_approx(cfg, freq_var)
}

/// xi = (16 pi^2 kappa^2 T_c^2 L_d^2 rho / 3) MCRB(tau).
pub fn coupling_xi(sys: &SystemConfig, cfg: &CpmConfig) -> Result<f64> {
    Ok(coupling_xi_from_freq_var(sys, cfg, freq_error_variance(sys, cfg)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingReport {
    pub mcrb_tau: f64,
    pub freq_var: f64,
    pub phase_var: f64,
    pub symbol_snr: f64,
    pub xi: f64,
    pub sinr_eff: f64,
    /// log2(1 + sinr_eff)
    pub eta: f64,
    /// min(log2 L, eta)
    pub eta_eff: f64,
    pub rate_bps: f64,
}

/// Coupling chain for a given residual frequency variance.
pub fn coupling_report(
    sys: &SystemConfig,
    cfg: &CpmConfig,
    mcrb: f64,
    freq_var: f64,
) -> CouplingReport {
    let rho = symbol_snr(sys, cfg);
    let xi = coupling_xi_from_freq_var(sys, cfg, freq_var);
    let sinr_eff = rho / (1.0 + xi);
    let eta = (1.0 + sinr_eff).log2();
    let eta_eff = eta.min(cfg.bits_per_symbol());
    CouplingReport {
        mcrb_tau: mcrb,
        freq_var,
        phase_var: phase_variance_approx(cfg, freq_var),
        symbol_snr: rho,
        xi,
        sinr_eff,
        eta,
        eta_eff,
        rate_bps: cfg.data_len as f64 / sys.pri_s * eta_eff,
    }
}

/// Effective SINR, spectral efficiency and data rate with the frequency error
/// at its bound.
pub fn effective_rate(sys: &SystemConfig, cfg: &CpmConfig) -> Result<CouplingReport> {
    let mcrb = mcrb_tau(sys, cfg)?;
    let k = sys.chirp_rate();
    Ok(coupling_report(sys, cfg, mcrb, 4.0 * k * k * mcrb))
}
