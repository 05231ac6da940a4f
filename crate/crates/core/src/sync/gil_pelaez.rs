use std::f64::consts::PI;

use super::hermite::gaussian_expectation;
use super::model::{build_model, GlrtModel, Hypothesis, QuadForm};
use super::quadrature::integrate;
use crate::error::{Error, Result};
use crate::signal::{CpmConfig, SystemConfig};

const INTEGRAL_TOL: f64 = 1e-9;
const TAIL_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 400_000;

/// Upper integration limit (normalized time) beyond which the discarded
/// tail is below `TAIL_TOL` in probability, from
/// `|phi(t)| <= exp(-s x / (1 + x)) / (1 + x)` with `x = lambda^2 t^2`.
fn truncation_point(q: &QuadForm) -> f64 {
    let lam = q.lambda_normalized();
    let s = q.noncentrality();
    let bound = |x: f64| (-s * x / (1.0 + x)).exp() / (2.0 * x * PI);
    let mut x = 1e-4;
    while bound(x) > TAIL_TOL {
        x *= 1.5;
    }
    x.sqrt() / lam
}

/// `P(Lambda <= eta)` by Gil-Pelaez inversion:
/// `F(eta) = 1/2 - (1/pi) int_0^inf Im[exp(-j t eta) phi(t)] / t dt`.
pub fn cdf_lambda(q: &QuadForm, eta: f64) -> Result<f64> {
    let e = eta / q.sigma2;
    let mean = q.expected() / q.sigma2;
    let std = q.variance().sqrt() / q.sigma2;
    let t_max = truncation_point(q);
    let omega = e.abs() + mean.abs() + 3.0 * std + 1.0;
    let initial = ((t_max * omega / PI).ceil() as usize + 8).min(50_000);
    let integrand = |t: f64| {
        if t < 1e-300 {
            return mean - e;
        }
        let z = q.cf_normalized(t) * num_complex::Complex64::from_polar(1.0, -t * e);
        z.im / t
    };
    let r = integrate(integrand, 0.0, t_max, initial, INTEGRAL_TOL, MAX_PANELS);
    if !r.converged || !r.value.is_finite() {
        return Err(Error::Quadrature(format!(
            "eta = {eta}: error estimate {:.3e} after {} panels",
            r.error, r.panels
        )));
    }
    Ok((0.5 - r.value / PI).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub pd: f64,
    pub pfa: f64,
}

/// Per-offset detection and false-alarm probabilities at threshold `eta`.
pub fn pd_pfa(h1: &GlrtModel, h0: &GlrtModel, eta: f64) -> Result<Detection> {
    let pd = 1.0 - cdf_lambda(&h1.under(Hypothesis::H1)?, eta)?;
    let pfa = 1.0 - cdf_lambda(&h0.under(Hypothesis::H0)?, eta)?;
    Ok(Detection { pd, pfa })
}

/// Threshold with per-offset false-alarm probability `pfa_target`.
pub fn solve_threshold(h0: &GlrtModel, pfa_target: f64) -> Result<f64> {
    if !(pfa_target > 0.0 && pfa_target < 1.0) {
        return Err(Error::Config(format!("target Pfa must lie in (0, 1) (got {pfa_target})")));
    }
    let q = h0.under(Hypothesis::H0)?;
    let pfa = |eta: f64| cdf_lambda(&q, eta).map(|f| 1.0 - f);
    let mut lo = -q.sigma2;
    let mut hi = q.sigma2;
    let mut grow = 0;
    while pfa(lo)? < pfa_target {
        lo *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::Bracket(pfa_target));
        }
    }
    while pfa(hi)? > pfa_target {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::Bracket(pfa_target));
        }
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let p = pfa(mid)?;
        if (p - pfa_target).abs() < 1e-4 * pfa_target {
            break;
        }
        if p > pfa_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Small-offset approximation `P_d(0) (1 - (pi L eps Ts)^2 / 3)`.
pub fn pd_cfo_approx(pd0: f64, eps_f: f64, preamble_samples: usize, sample_period_s: f64) -> f64 {
    let x = PI * preamble_samples as f64 * eps_f * sample_period_s;
    (pd0 * (1.0 - x * x / 3.0)).clamp(0.0, 1.0)
}

/// Detection probability averaged over a Gaussian residual offset
/// `eps_f ~ N(0, freq_var)` at a fixed threshold.
pub fn pd_cfo_average(
    sys: &SystemConfig,
    cfg: &CpmConfig,
    freq_var: f64,
    eta: f64,
    nodes: usize,
) -> Result<f64> {
    let mut err = None;
    let pd = gaussian_expectation(freq_var, nodes, |eps| {
        let r = build_model(sys, cfg, eps)
            .and_then(|m| m.under(Hypothesis::H1))
            .and_then(|q| cdf_lambda(&q, eta));
        match r {
            Ok(f) => 1.0 - f,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(pd.clamp(0.0, 1.0)),
    }
}
