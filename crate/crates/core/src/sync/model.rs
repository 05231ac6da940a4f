use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::coherence_factor;
use crate::error::{Error, Result};
use crate::signal::{CpmConfig, SystemConfig};

const J: Complex64 = Complex64::new(0.0, 1.0);

/// `Lambda = |x_p|^2 - |x_0|^2` for `x = [x_p, x_0] ~ CN(mean, R)` with
/// `R = sigma2 [[1, nu_c], [conj(nu_c), 1]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadForm {
    pub mean: [Complex64; 2],
    pub sigma2: f64,
    pub nu_c: Complex64,
}

impl QuadForm {
    pub fn new(mean: [Complex64; 2], sigma2: f64, nu_c: Complex64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::DegenerateModel(format!("noise variance {sigma2} must be positive")));
        }
        if 1.0 - nu_c.norm_sqr() < 1e-12 {
            return Err(Error::DegenerateModel(format!(
                "|nu_c| = {} leaves the statistic without a noise-free direction to integrate",
                nu_c.norm()
            )));
        }
        Ok(Self { mean, sigma2, nu_c })
    }

    fn normalized_mean(&self) -> [Complex64; 2] {
        let s = self.sigma2.sqrt();
        [self.mean[0] / s, self.mean[1] / s]
    }

    /// Characteristic function `E[exp(j t Lambda)]`.
    pub fn cf(&self, t: f64) -> Complex64 {
        self.cf_normalized(t * self.sigma2)
    }

    /// CF of `Lambda / sigma2`.
    pub(crate) fn cf_normalized(&self, t: f64) -> Complex64 {
        let [m0, m1] = self.normalized_mean();
        let c = self.nu_c;
        let det = 1.0 + t * t * (1.0 - c.norm_sqr());
        // (I - j t R Q)^{-1} * det, with R Q = [[1, -c], [c*, -1]]
        let a = Complex64::new(1.0, t);
        let b = -J * t * c;
        let cc = J * t * c.conj();
        let d = Complex64::new(1.0, -t);
        let y0 = (a * m0 + b * m1) / det;
        let y1 = (cc * m0 + d * m1) / det;
        let q = m0.conj() * y0 - m1.conj() * y1;
        (J * t * q).exp() / det
    }

    pub fn det(&self, t: f64) -> f64 {
        let s = self.sigma2 * t;
        1.0 + s * s * (1.0 - self.nu_c.norm_sqr())
    }

    pub fn expected(&self) -> f64 {
        self.mean[0].norm_sqr() - self.mean[1].norm_sqr()
    }

    pub fn variance(&self) -> f64 {
        let [m0, m1] = self.normalized_mean();
        let c = self.nu_c;
        // Q R Q = [[1, -c], [-c*, 1]]
        let qrq = m0.norm_sqr() + m1.norm_sqr() - 2.0 * (m0.conj() * c * m1).re;
        self.sigma2 * self.sigma2 * (2.0 * (1.0 - c.norm_sqr()) + 2.0 * qrq)
    }

    /// Eigenvalue magnitude of the whitened form, in units of sigma2.
    pub(crate) fn lambda_normalized(&self) -> f64 {
        (1.0 - self.nu_c.norm_sqr()).sqrt()
    }

    /// Noncentrality `mean^H R^{-1} mean`.
    pub fn noncentrality(&self) -> f64 {
        let [m0, m1] = self.normalized_mean();
        let c = self.nu_c;
        let num = m0.norm_sqr() + m1.norm_sqr() - 2.0 * (m0.conj() * c * m1).re;
        num / (1.0 - c.norm_sqr())
    }

    /// The statistic with the two branches exchanged; distributed as `-Lambda`.
    pub fn swapped(&self) -> Self {
        Self { mean: [self.mean[1], self.mean[0]], sigma2: self.sigma2, nu_c: self.nu_c.conj() }
    }

    /// One draw of Lambda.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let s = (self.sigma2 / 2.0).sqrt();
        let mut cn = || Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * s;
        let b = cn();
        let w = cn();
        let a = self.nu_c * b + self.lambda_normalized() * w;
        (self.mean[0] + a).norm_sqr() - (self.mean[1] + b).norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// Unmodulated tone at the tested offset.
    H0,
    /// Preamble aligned with the tested offset.
    H1,
}

/// Joint Gaussian model of the two matched-filter outputs `[C_p, C_0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlrtModel {
    pub amplitude: f64,
    /// L_p N_sps sigma_z^2
    pub sigma2: f64,
    pub preamble_samples: usize,
    /// Preamble DC content `sum exp(j gamma_p[n])`.
    pub gamma_p: Complex64,
    /// `conj(Gamma_p) / (L_p N_sps)`
    pub nu_c: Complex64,
    pub eps_f: f64,
    pub mean_h1: [Complex64; 2],
    pub mean_h0: [Complex64; 2],
}

impl GlrtModel {
    pub fn covariance(&self) -> [[Complex64; 2]; 2] {
        let s = Complex64::new(self.sigma2, 0.0);
        [[s, s * self.nu_c], [s * self.nu_c.conj(), s]]
    }

    pub fn under(&self, h: Hypothesis) -> Result<QuadForm> {
        let mean = match h {
            Hypothesis::H0 => self.mean_h0,
            Hypothesis::H1 => self.mean_h1,
        };
        QuadForm::new(mean, self.sigma2, self.nu_c)
    }
}

/// Model from an explicit preamble phase sequence.
pub fn build_model_from_phase(
    amplitude: f64,
    noise_var: f64,
    preamble_phase: &[f64],
    sample_period_s: f64,
    eps_f: f64,
) -> Result<GlrtModel> {
    let l = preamble_phase.len();
    if l == 0 {
        return Err(Error::Config("preamble phase is empty".into()));
    }
    if !(noise_var > 0.0) {
        return Err(Error::NonPositiveSnr(amplitude * amplitude / noise_var));
    }
    let w = 2.0 * PI * eps_f * sample_period_s;
    let mut gamma_p = Complex64::new(0.0, 0.0);
    let mut tilde = Complex64::new(0.0, 0.0);
    let mut tilde_h0 = Complex64::new(0.0, 0.0);
    for (n, g) in preamble_phase.iter().enumerate() {
        let r = w * n as f64;
        gamma_p += Complex64::from_polar(1.0, *g);
        tilde += Complex64::from_polar(1.0, g + r);
        tilde_h0 += Complex64::from_polar(1.0, r - g);
    }
    let chi = coherence_factor(eps_f, l, sample_period_s);
    let a = Complex64::new(amplitude, 0.0);
    Ok(GlrtModel {
        amplitude,
        sigma2: l as f64 * noise_var,
        preamble_samples: l,
        gamma_p,
        nu_c: gamma_p.conj() / l as f64,
        eps_f,
        mean_h1: [a * chi, a * tilde],
        mean_h0: [a * tilde_h0, a * chi],
    })
}

/// Model at residual frequency offset `eps_f` for the configured preamble.
pub fn build_model(sys: &SystemConfig, cfg: &CpmConfig, eps_f: f64) -> Result<GlrtModel> {
    build_model_from_phase(sys.amplitude, sys.noise_var, &cfg.preamble_phase(), sys.sample_period(), eps_f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::CpmParams;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn model(eps: f64) -> GlrtModel {
        let sys = SystemConfig::default().with_snr_sample_db(-3.0);
        let cfg = CpmConfig::from_params(&sys, &CpmParams::default()).unwrap();
        build_model(&sys, &cfg, eps).unwrap()
    }

    #[test]
    fn zero_offset_means() {
        let m = model(0.0);
        let l = m.preamble_samples as f64;
        assert_relative_eq!(m.mean_h1[0].re, l, max_relative = 1e-12);
        assert!((m.mean_h1[1] - m.gamma_p).norm() < 1e-12);
        assert!((m.mean_h0[0] - m.gamma_p.conj()).norm() < 1e-12);
        assert!(m.nu_c.norm() <= 1.0);
    }

    #[test]
    fn modulated_dc_content_matches_direct_sum() {
        let sys = SystemConfig::default();
        let cfg = CpmConfig::from_params(&sys, &CpmParams::default()).unwrap();
        let eps = 3.1e5;
        let m = build_model(&sys, &cfg, eps).unwrap();
        let ts = sys.sample_period();
        let direct: Complex64 = cfg
            .preamble_phase()
            .iter()
            .enumerate()
            .map(|(n, g)| Complex64::from_polar(1.0, g + 2.0 * PI * eps * n as f64 * ts))
            .sum();
        assert!((m.mean_h1[1] / sys.amplitude - direct).norm() < 1e-12);
    }

    #[test]
    fn coherent_mean_shrinks_with_offset() {
        let m0 = model(0.0);
        let null = 1.0 / (m0.preamble_samples as f64 * 5e-9);
        let mut last = f64::INFINITY;
        for k in 0..50 {
            let m = model(null * k as f64 / 50.0);
            let v = m.mean_h1[0].norm();
            assert!(v <= last + 1e-12);
            last = v;
        }
    }

    #[test]
    fn cf_identities() {
        let q = model(1e5).under(Hypothesis::H1).unwrap();
        assert_eq!(q.cf(0.0), Complex64::new(1.0, 0.0));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let t = rng.gen_range(-1.0..1.0) / q.sigma2 * 5.0;
            assert!((q.cf(-t) - q.cf(t).conj()).norm() < 1e-14);
            let lam = q.lambda_normalized();
            let x = (lam * t * q.sigma2).powi(2);
            let expected = (-q.noncentrality() * x / (1.0 + x)).exp() / (1.0 + x);
            assert_relative_eq!(q.cf(t).norm(), expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn central_cf_is_laplace() {
        let q = QuadForm::new([Complex64::new(0.0, 0.0); 2], 2.0, Complex64::new(0.0, 0.0)).unwrap();
        for t in [0.1, 0.7, 3.0] {
            let e = 1.0 / (1.0 + (2.0 * t) * (2.0 * t));
            assert!((q.cf(t) - Complex64::new(e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn degenerate_correlation_is_rejected() {
        let r = QuadForm::new([Complex64::new(1.0, 0.0); 2], 1.0, Complex64::new(0.0, 1.0));
        assert!(matches!(r, Err(Error::DegenerateModel(_))));
    }

    #[test]
    fn moments_match_samples() {
        let q = model(2e5).under(Hypothesis::H1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| q.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let se = (q.variance() / n as f64).sqrt();
        assert!((mean - q.expected()).abs() < 5.0 * se);
        assert!((var / q.variance() - 1.0).abs() < 0.03);
    }
}
