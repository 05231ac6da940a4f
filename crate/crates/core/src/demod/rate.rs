use statrs::function::erf::erfc;

use crate::signal::{CpmConfig, SystemConfig};

/// Gaussian tail `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Symbol error approximation `(L - 1) Q(sqrt(rho log2 L))`.
pub fn ser_theory(rho: f64, alphabet_size: usize) -> f64 {
    let l = alphabet_size as f64;
    ((l - 1.0) * q_function((rho * l.log2()).sqrt())).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateMeasurement {
    /// `log2(L) (1 - P_s)`
    pub bits_per_symbol: f64,
    /// `(L_d / T_pri) log2(L) (1 - P_s)`
    pub rate_bps: f64,
}

pub fn measure_rate(ser: f64, sys: &SystemConfig, cfg: &CpmConfig) -> RateMeasurement {
    let bits = cfg.bits_per_symbol() * (1.0 - ser.clamp(0.0, 1.0));
    RateMeasurement { bits_per_symbol: bits, rate_bps: cfg.data_len as f64 / sys.pri_s * bits }
}

/// Gray label of the alphabet index `j` (symbols sorted ascending).
pub fn gray_code(j: usize) -> usize {
    j ^ (j >> 1)
}

/// Differing bits between the Gray labels of two alphabet indices.
pub fn bit_errors(a: usize, b: usize) -> u32 {
    (gray_code(a) ^ gray_code(b)).count_ones()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{CpmParams, SystemConfig};
    use approx::assert_relative_eq;

    #[test]
    fn rate_arithmetic() {
        let sys = SystemConfig::default();
        let p = CpmParams { alphabet_size: 8, data_len: Some(100), ..Default::default() };
        let cfg = CpmConfig::from_params(&sys, &p).unwrap();
        let r = measure_rate(0.0, &sys, &cfg);
        assert_relative_eq!(r.rate_bps, 15e6, max_relative = 1e-12);
        assert_eq!(measure_rate(1.0, &sys, &cfg).rate_bps, 0.0);
        assert!(measure_rate(-0.5, &sys, &cfg).bits_per_symbol <= 3.0);
    }

    #[test]
    fn q_function_values() {
        assert_relative_eq!(q_function(0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(q_function(1.0), 0.158_655_253_931_457, max_relative = 1e-10);
        assert_relative_eq!(ser_theory(10.0, 4), 3.0 * q_function(20f64.sqrt()), max_relative = 1e-12);
    }

    #[test]
    fn gray_neighbors_differ_by_one_bit() {
        for j in 0..7 {
            assert_eq!(bit_errors(j, j + 1), 1);
        }
    }
}
