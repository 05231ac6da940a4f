use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::{CpmConfig, ModIndex, SystemConfig};

/// Bandwidth-normalized Fisher coefficients: sensing `a`, modulation `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherCoefficients {
    pub a: f64,
    pub b: f64,
    /// a / b = 16 / (3 h^2 sigma_b^2)
    pub ratio_ab: f64,
    pub ratio_ba: f64,
    /// Carson's rule, (1 + h) / T_c.
    pub comm_bandwidth_carson_hz: f64,
    /// 1 / T_c
    pub comm_bandwidth_compact_hz: f64,
}

pub fn fisher_coefficients_raw(rho: f64, h: f64, symbol_var: f64) -> Result<FisherCoefficients> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::NonPositiveSnr(rho));
    }
    let a = 32.0 * PI * PI * rho / 3.0;
    let b = 2.0 * PI * PI * rho * h * h * symbol_var;
    Ok(FisherCoefficients {
        a,
        b,
        ratio_ab: a / b,
        ratio_ba: b / a,
        comm_bandwidth_carson_hz: f64::NAN,
        comm_bandwidth_compact_hz: f64::NAN,
    })
}

/// Coefficients at the observation SNR of `sys`.
pub fn fisher_coefficients(sys: &SystemConfig, cfg: &CpmConfig) -> Result<FisherCoefficients> {
    let mut c = fisher_coefficients_raw(sys.snr_obs(), cfg.h(), cfg.symbol_variance())?;
    let tc = cfg.symbol_period();
    c.comm_bandwidth_carson_hz = (1.0 + cfg.h()) / tc;
    c.comm_bandwidth_compact_hz = 1.0 / tc;
    Ok(c)
}

/// b / a for uniform L-ary symbols.
pub fn ratio_ba(h: f64, alphabet_size: usize) -> f64 {
    let l = alphabet_size as f64;
    h * h * (l * l - 1.0) / 16.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    pub beta: f64,
    pub s_norm: f64,
    pub c_norm: f64,
}

/// Normalized sensing figure of merit `(1 - beta)^2 + (b/a) beta^2`.
pub fn s_norm(ratio_ba: f64, beta: f64) -> f64 {
    (1.0 - beta).powi(2) + ratio_ba * beta * beta
}

pub fn pareto_frontier(ratio_ba: f64, grid: &[f64]) -> Result<Vec<TradeoffPoint>> {
    if !(ratio_ba > 0.0 && ratio_ba.is_finite()) {
        return Err(Error::Config(format!("b/a must be positive (got {ratio_ba})")));
    }
    if let Some(b) = grid.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(Error::Config(format!("beta {b} outside [0, 1]")));
    }
    Ok(grid
        .iter()
        .map(|&beta| TradeoffPoint { beta, s_norm: s_norm(ratio_ba, beta), c_norm: beta })
        .collect())
}

/// dS/dC along the frontier, `-2 + 2 (1 + b/a) C`.
pub fn frontier_slope(ratio_ba: f64, c_norm: f64) -> f64 {
    -2.0 + 2.0 * (1.0 + ratio_ba) * c_norm
}

/// Largest beta with `S(beta) >= s_min`, for `s_min` in `[b/a, 1]`.
///
/// The sensing figure is a parabola opening upward, so the feasible set is
/// `beta <= beta_-` or `beta >= beta_+`. For `s_min > b/a` the upper branch
/// starts beyond 1 and the answer is `beta_-`; at `s_min = b/a` it is 1.
pub fn optimal_beta(ratio_ba: f64, s_min: f64) -> Result<f64> {
    if !(ratio_ba > 0.0 && ratio_ba.is_finite()) {
        return Err(Error::Config(format!("b/a must be positive (got {ratio_ba})")));
    }
    if !(s_min >= ratio_ba && s_min <= 1.0) {
        return Err(Error::Infeasible(format!(
            "sensing floor {s_min} must lie in [b/a, 1] = [{ratio_ba}, 1]"
        )));
    }
    let r1 = 1.0 + ratio_ba;
    let disc = 1.0 - r1 * (1.0 - s_min);
    if disc < 0.0 {
        return Err(Error::Infeasible(format!(
            "no allocation reaches sensing floor {s_min} (discriminant {disc})"
        )));
    }
    let root = disc.sqrt();
    if s_norm(ratio_ba, 1.0) >= s_min {
        return Ok(1.0);
    }
    Ok((1.0 - root) / r1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseCheck {
    pub pass: bool,
    /// floor(1/h) + 1
    pub l_max: usize,
}

/// Phase-wrapping constraint `h (L - 1) <= 1`, inclusive.
pub fn validate_phase_constraint(h: ModIndex, alphabet_size: usize) -> PhaseCheck {
    let l_max = crate::signal::max_alphabet(h);
    PhaseCheck { pass: alphabet_size <= l_max, l_max }
}
