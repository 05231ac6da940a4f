use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::trial_rng;
use crate::signal::{CpmConfig, PulseShape, SystemConfig};

fn require_rect(cfg: &CpmConfig) -> Result<()> {
    if cfg.pulse != PulseShape::CpfskRect {
        return Err(Error::UnsupportedPulse);
    }
    Ok(())
}

fn require_snr(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::NonPositiveSnr(rho));
    }
    Ok(())
}

/// Modified CRB on the delay tau in s^2, averaged over uniform data symbols.
///
/// `MCRB = 3 T_0 T_c / (2 pi^2 rho (16 kappa^2 T_0^3 T_c + 3 h^2 sigma_b^2 N_s))`
/// with rho the observation SNR.
pub fn mcrb_tau(sys: &SystemConfig, cfg: &CpmConfig) -> Result<f64> {
    require_rect(cfg)?;
    let rho = sys.snr_obs();
    require_snr(rho)?;
    let t0 = sys.obs_window_s;
    let tc = cfg.symbol_period();
    let kappa = sys.chirp_rate();
    let h = cfg.h();
    let ns = cfg.num_symbols() as f64;
    let den = 2.0 * PI * PI * rho
        * (16.0 * kappa * kappa * t0.powi(3) * tc + 3.0 * h * h * cfg.symbol_variance() * ns);
    Ok(3.0 * t0 * tc / den)
}

/// CRB for an unmodulated tone, `3 / (32 pi^2 rho kappa^2 T_0^2)`.
pub fn crb_sensing_only(sys: &SystemConfig) -> Result<f64> {
    let rho = sys.snr_obs();
    require_snr(rho)?;
    let kappa = sys.chirp_rate();
    Ok(3.0 / (32.0 * PI * PI * rho * kappa * kappa * sys.obs_window_s.powi(2)))
}

/// Fisher information on tau split into sensing, cross and modulation sums.
///
/// The total is `scale * (i_s + i_sc + i_c)`; with symbol averaging the cross
/// term vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherBreakdown {
    pub i_s: f64,
    pub i_sc: f64,
    pub i_c: f64,
    /// `2 |mu_s|^2 / sigma_z^2`
    pub scale: f64,
    pub total: f64,
}

impl FisherBreakdown {
    pub fn bound(&self) -> f64 {
        1.0 / self.total
    }
}

/// Integral approximations of the three sums.
pub fn fisher_closed_form(sys: &SystemConfig, cfg: &CpmConfig) -> Result<FisherBreakdown> {
    require_rect(cfg)?;
    let ts = sys.sample_period();
    let kappa = sys.chirp_rate();
    let h = cfg.h();
    let i_s = 16.0 * PI * PI * kappa * kappa * sys.obs_window_s.powi(3) / (3.0 * ts);
    let i_c = PI * PI * h * h * cfg.symbol_variance() * cfg.num_symbols() as f64
        / (ts * cfg.symbol_period());
    let scale = 2.0 * sys.snr_sample();
    Ok(FisherBreakdown { i_s, i_sc: 0.0, i_c, scale, total: scale * (i_s + i_c) })
}

/// Per-sample evaluation of the conditional Fisher information
/// `scale * sum_n (4 pi kappa t_n - gamma'(t_n))^2`, averaged over `draws`
/// random data sequences.
pub fn fisher_oracle(
    sys: &SystemConfig,
    cfg: &CpmConfig,
    draws: usize,
    seed: u64,
) -> Result<FisherBreakdown> {
    if draws == 0 {
        return Err(Error::Config("fisher_oracle needs at least one draw".into()));
    }
    sys.validate()?;
    let n = sys.num_samples();
    cfg.validate(n)?;
    let ts = sys.sample_period();
    let sensing: Vec<f64> = (0..n)
        .map(|k| 4.0 * PI * sys.chirp_rate() * k as f64 * ts)
        .collect();
    let i_s: f64 = sensing.iter().map(|x| x * x).sum();
    let nsps = cfg.samples_per_symbol;
    let tc = cfg.symbol_period();
    let pulse: Vec<f64> = (0..nsps)
        .map(|k| 2.0 * PI * cfg.h() * cfg.pulse.freq(k as f64 / nsps as f64) / tc)
        .collect();

    let (sc, c) = (0..draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = trial_rng(seed, d as u64);
            let data = cfg.random_data(&mut rng);
            let mut sc = 0.0;
            let mut c = 0.0;
            for (i, b) in cfg.preamble.iter().chain(&data).enumerate() {
                let base = cfg.start_index + i * nsps;
                for (k, p) in pulse.iter().enumerate() {
                    let g = *b as f64 * p;
                    sc -= 2.0 * sensing[base + k] * g;
                    c += g * g;
                }
            }
            (sc, c)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let i_sc = sc / draws as f64;
    let i_c = c / draws as f64;
    let scale = 2.0 * sys.snr_sample();
    Ok(FisherBreakdown { i_s, i_sc, i_c, scale, total: scale * (i_s + i_sc + i_c) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::CpmParams;
    use approx::assert_relative_eq;

    fn setup(beta: f64, snr_db: f64) -> (SystemConfig, CpmConfig) {
        let sys = SystemConfig::default().with_comm_fraction(beta).with_snr_sample_db(snr_db);
        let cfg = CpmConfig::from_params(&sys, &CpmParams::default()).unwrap();
        (sys, cfg)
    }

    #[test]
    fn sensing_only_limit() {
        let (sys, mut cfg) = setup(0.2, 10.0);
        cfg.mod_index = crate::signal::ModIndex::new(0, 1).unwrap();
        assert_relative_eq!(
            mcrb_tau(&sys, &cfg).unwrap(),
            crb_sensing_only(&sys).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn chirp_rate_law() {
        let (sys, mut cfg) = setup(0.2, 10.0);
        cfg.mod_index = crate::signal::ModIndex::new(0, 1).unwrap();
        let a = mcrb_tau(&sys, &cfg).unwrap();
        let mut fast = sys.clone();
        fast.total_bandwidth_hz *= 2.0;
        let b = mcrb_tau(&fast, &cfg).unwrap();
        assert_relative_eq!(a / b, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_matches_bound() {
        let (sys, cfg) = setup(0.5, 3.0);
        let f = fisher_closed_form(&sys, &cfg).unwrap();
        assert_relative_eq!(f.bound(), mcrb_tau(&sys, &cfg).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn mcrb_decreases_with_snr_and_symbols() {
        let (sys, cfg) = setup(0.2, 0.0);
        let base = mcrb_tau(&sys, &cfg).unwrap();
        let hi = mcrb_tau(&sys.clone().with_snr_sample_db(1.0), &cfg).unwrap();
        assert!(hi < base);
        let mut short = cfg.clone();
        short.data_len -= 10;
        assert!(mcrb_tau(&sys, &short).unwrap() > base);
        let mut bigger_h = cfg.clone();
        bigger_h.mod_index = crate::signal::ModIndex::new(1, 5).unwrap();
        assert!(mcrb_tau(&sys, &bigger_h).unwrap() < base);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (mut sys, mut cfg) = setup(0.2, 10.0);
        cfg.pulse = PulseShape::RaisedCosine;
        assert!(matches!(mcrb_tau(&sys, &cfg), Err(Error::UnsupportedPulse)));
        cfg.pulse = PulseShape::CpfskRect;
        sys.amplitude = 0.0;
        assert!(matches!(mcrb_tau(&sys, &cfg), Err(Error::NonPositiveSnr(_))));
    }

    #[test]
    fn riemann_sum_of_sensing_term() {
        let (sys, cfg) = setup(0.2, 10.0);
        let o = fisher_oracle(&sys, &cfg, 1, 0).unwrap();
        let c = fisher_closed_form(&sys, &cfg).unwrap();
        let tol = 3.0 * sys.sample_period() / sys.obs_window_s;
        assert!(((o.i_s - c.i_s) / c.i_s).abs() < tol);
    }
}
