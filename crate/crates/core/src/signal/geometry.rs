use std::f64::consts::PI;

use super::{CpmConfig, SystemConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// Received echo power from the surface, `P_t G_t G_r lambda^2 M^2 / ((4 pi)^3 R^4)`.
pub fn ris_received_power(sys: &SystemConfig) -> Result<f64> {
    if !(sys.range_m > 0.0) {
        return Err(Error::Config("range must be positive to evaluate the radar equation".into()));
    }
    let lambda = sys.wavelength();
    let m = sys.num_elements() as f64;
    Ok(sys.tx_power_w * sys.tx_gain * sys.rx_gain * lambda * lambda * m * m
        / ((4.0 * PI).powi(3) * sys.range_m.powi(4)))
}

/// Planar surface layout used for the aperture-delay check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisGeometry {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    /// Elevation angle in radians.
    pub elevation_rad: f64,
    /// Azimuth angle in radians.
    pub azimuth_rad: f64,
}

impl RisGeometry {
    /// Quarter-wavelength grid with the surface dimensions of `sys`, at broadside-normal incidence.
    pub fn quarter_wave(sys: &SystemConfig) -> Self {
        Self {
            rows: sys.ris_rows,
            cols: sys.ris_cols,
            spacing_m: sys.wavelength() / 4.0,
            elevation_rad: 0.0,
            azimuth_rad: 0.0,
        }
    }

    /// Largest differential delay across the aperture.
    pub fn max_differential_delay(&self) -> f64 {
        let base = self.spacing_m * self.elevation_rad.cos() / SPEED_OF_LIGHT;
        let dx = (base * self.azimuth_rad.cos()).abs();
        let dy = (base * self.azimuth_rad.sin()).abs();
        self.cols.saturating_sub(1) as f64 * dx + self.rows.saturating_sub(1) as f64 * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApertureReport {
    pub delta_t_s: f64,
    /// 2 Delta_T B; beam squint is negligible when small.
    pub ratio_bandwidth: f64,
    /// Delta_T / T_c; the modulation is frozen across the aperture when small.
    pub ratio_symbol: f64,
    pub pass_bandwidth: bool,
    pub pass_symbol: bool,
}

impl ApertureReport {
    pub const THRESHOLD: f64 = 0.1;

    pub fn passes(&self) -> bool {
        self.pass_bandwidth && self.pass_symbol
    }
}

/// Advisory check of the narrowband and frozen-modulation assumptions.
pub fn check_aperture_approximations(
    sys: &SystemConfig,
    cfg: &CpmConfig,
    geom: &RisGeometry,
) -> ApertureReport {
    let dt = geom.max_differential_delay();
    let ratio_bandwidth = 2.0 * dt * sys.total_bandwidth_hz;
    let ratio_symbol = dt / cfg.symbol_period();
    ApertureReport {
        delta_t_s: dt,
        ratio_bandwidth,
        ratio_symbol,
        pass_bandwidth: ratio_bandwidth < ApertureReport::THRESHOLD,
        pass_symbol: ratio_symbol < ApertureReport::THRESHOLD,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::CpmParams;
    use approx::assert_relative_eq;

    #[test]
    fn power_scaling_laws() {
        let sys = SystemConfig::default();
        let p = ris_received_power(&sys).unwrap();
        let mut big = sys.clone();
        big.ris_rows *= 2;
        assert_relative_eq!(ris_received_power(&big).unwrap(), 4.0 * p, max_relative = 1e-12);
        let mut far = sys.clone();
        far.range_m *= 2.0;
        assert_relative_eq!(ris_received_power(&far).unwrap(), p / 16.0, max_relative = 1e-12);
        far.range_m = 0.0;
        assert!(ris_received_power(&far).is_err());
    }

    #[test]
    fn power_hand_evaluation() {
        let sys = SystemConfig::default();
        let lambda = 299_792_458.0 / 77e9;
        let expected = lambda * lambda * 256.0 * 256.0 / (1984.401707539_f64 * 1e4);
        assert_relative_eq!(ris_received_power(&sys).unwrap(), expected, max_relative = 1e-9);
    }

    #[test]
    fn aperture_delay_at_normal_incidence() {
        let sys = SystemConfig::default();
        let cfg = CpmConfig::from_params(&sys, &CpmParams::default()).unwrap();
        let geom = RisGeometry::quarter_wave(&sys);
        let r = check_aperture_approximations(&sys, &cfg, &geom);
        assert_relative_eq!(r.delta_t_s, 15.0 / (4.0 * 77e9), max_relative = 1e-12);
        assert!((r.delta_t_s - 48.7e-12).abs() < 0.1e-12);
        assert!(r.passes());
    }

    #[test]
    fn broadside_has_no_spread() {
        let sys = SystemConfig::default();
        let mut geom = RisGeometry::quarter_wave(&sys);
        geom.elevation_rad = std::f64::consts::FRAC_PI_2;
        assert!(geom.max_differential_delay() < 1e-25);
    }

    #[test]
    fn delay_grows_with_columns() {
        let sys = SystemConfig::default();
        let mut geom = RisGeometry::quarter_wave(&sys);
        geom.azimuth_rad = 0.4;
        geom.elevation_rad = 0.3;
        let mut last = 0.0;
        for cols in 1..40 {
            geom.cols = cols;
            let d = geom.max_differential_delay();
            assert!(d >= last);
            last = d;
        }
    }
}
