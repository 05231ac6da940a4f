use std::f64::consts::PI;
use std::fmt;

use rand::Rng;

use super::SystemConfig;
use crate::error::{Error, Result};

/// Rational modulation index h = num / den in lowest terms.
///
/// The trellis demodulator needs a finite phase-state set, which exists only
/// for rational h.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModIndex {
    num: u32,
    den: u32,
}

impl ModIndex {
    pub const MAX_DEN: u32 = 64;

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 {
            return Err(Error::Config("modulation index denominator is zero".into()));
        }
        let g = gcd(num.max(1), den);
        let (num, den) = if num == 0 { (0, 1) } else { (num / g, den / g) };
        if den > Self::MAX_DEN {
            return Err(Error::Config(format!(
                "modulation index {num}/{den} has denominator above {}",
                Self::MAX_DEN
            )));
        }
        Ok(Self { num, den })
    }

    /// Best rational approximation with denominator <= 64; rejects values that
    /// are not within 1e-9 of such a fraction.
    pub fn from_f64(h: f64) -> Result<Self> {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("modulation index must be >= 0 (got {h})")));
        }
        for den in 1..=Self::MAX_DEN {
            let num = (h * den as f64).round();
            if (num / den as f64 - h).abs() <= 1e-9 {
                return Self::new(num as u32, den);
            }
        }
        Err(Error::Config(format!(
            "modulation index {h} is not a ratio K/P with P <= {}",
            Self::MAX_DEN
        )))
    }

    pub fn num(&self) -> u32 {
        self.num
    }

    pub fn den(&self) -> u32 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for ModIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Full-response phase pulse, parametrized on normalized time `u = t / T_c`.
///
/// Any variant must satisfy `g(u) = 0` for `u <= 0`, `g(u) = 1/2` for `u >= 1`
/// and have its frequency pulse supported on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PulseShape {
    /// Rectangular frequency pulse (CP-FSK): `g(u) = u / 2`.
    #[default]
    CpfskRect,
    /// Raised-cosine frequency pulse of one symbol (1RC).
    RaisedCosine,
}

impl PulseShape {
    /// Phase pulse g(u).
    pub fn phase(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 0.5;
        }
        match self {
            PulseShape::CpfskRect => 0.5 * u,
            PulseShape::RaisedCosine => 0.5 * (u - (2.0 * PI * u).sin() / (2.0 * PI)),
        }
    }

    /// Frequency pulse scaled by the symbol period, `T_c * g'(u)`.
    pub fn freq(&self, u: f64) -> f64 {
        if !(0.0..1.0).contains(&u) {
            return 0.0;
        }
        match self {
            PulseShape::CpfskRect => 0.5,
            PulseShape::RaisedCosine => 0.5 * (1.0 - (2.0 * PI * u).cos()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PulseShape::CpfskRect => "cpfsk_rect",
            PulseShape::RaisedCosine => "raised_cosine",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cpfsk_rect" | "cpfsk" | "rect" => Ok(PulseShape::CpfskRect),
            "raised_cosine" | "rc" | "1rc" => Ok(PulseShape::RaisedCosine),
            other => Err(Error::Config(format!(
                "unknown pulse shape '{other}' (expected cpfsk_rect or raised_cosine)"
            ))),
        }
    }
}

/// How the known preamble is generated when not given explicitly.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum PreamblePattern {
    /// Every symbol is +(L-1): a linear phase ramp, which keeps the preamble
    /// DC content |Gamma_p| small.
    #[default]
    Ramp,
    /// +(L-1), -(L-1), ...
    Alternating,
    Explicit(Vec<i32>),
}

impl PreamblePattern {
    pub fn symbols(&self, len: usize, alphabet_size: usize) -> Vec<i32> {
        let top = alphabet_size as i32 - 1;
        match self {
            PreamblePattern::Ramp => vec![top; len],
            PreamblePattern::Alternating => (0..len)
                .map(|i| if i % 2 == 0 { top } else { -top })
                .collect(),
            PreamblePattern::Explicit(v) => v.clone(),
        }
    }
}

/// User-level modulation settings, resolved against a [`SystemConfig`] by
/// [`CpmConfig::from_params`].
#[derive(Debug, Clone, PartialEq)]
pub struct CpmParams {
    pub mod_index: f64,
    pub alphabet_size: usize,
    pub preamble_len: usize,
    /// `None` derives N_sps from Carson's rule, `B_c = (1 + h) / T_c`.
    pub samples_per_symbol: Option<usize>,
    /// `None` fills the observation window after the preamble.
    pub data_len: Option<usize>,
    /// tau_c, the modulation start relative to the first receiver sample.
    pub start_offset_s: f64,
    pub preamble: PreamblePattern,
    pub pulse: PulseShape,
}

impl Default for CpmParams {
    fn default() -> Self {
        Self {
            mod_index: 0.1,
            alphabet_size: 4,
            preamble_len: 4,
            samples_per_symbol: None,
            data_len: None,
            start_offset_s: 1e-6,
            preamble: PreamblePattern::Ramp,
            pulse: PulseShape::CpfskRect,
        }
    }
}

/// Resolved modulation format and frame layout on the sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CpmConfig {
    pub mod_index: ModIndex,
    pub alphabet_size: usize,
    pub samples_per_symbol: usize,
    pub sample_period_s: f64,
    pub pulse: PulseShape,
    pub preamble: Vec<i32>,
    pub data_len: usize,
    /// m_0: first modulated sample. tau_c is quantized to `m_0 * T_s`.
    pub start_index: usize,
}

impl CpmConfig {
    pub fn from_params(sys: &SystemConfig, p: &CpmParams) -> Result<Self> {
        let mod_index = ModIndex::from_f64(p.mod_index)?;
        let ts = sys.sample_period();
        let samples_per_symbol = match p.samples_per_symbol {
            Some(n) => n,
            None => {
                let bc = sys.comm_bandwidth();
                if bc <= 0.0 {
                    return Err(Error::Config(
                        "samples_per_symbol must be given when beta = 0 (no communication bandwidth)"
                            .into(),
                    ));
                }
                let tc = (1.0 + mod_index.value()) / bc;
                ((tc / ts).round() as usize).max(1)
            }
        };
        if samples_per_symbol == 0 {
            return Err(Error::Config("samples_per_symbol must be >= 1".into()));
        }
        if !(p.start_offset_s >= 0.0 && p.start_offset_s.is_finite()) {
            return Err(Error::Config(format!(
                "start_offset_s must be >= 0 (got {})",
                p.start_offset_s
            )));
        }
        let start_index = (p.start_offset_s / ts).round() as usize;
        let n = sys.num_samples();
        let data_len = match p.data_len {
            Some(d) => d,
            None => {
                let symbols = n.saturating_sub(start_index) / samples_per_symbol;
                if symbols <= p.preamble_len {
                    return Err(Error::Config(format!(
                        "observation window fits {symbols} symbols, not enough for a {}-symbol preamble plus data",
                        p.preamble_len
                    )));
                }
                symbols - p.preamble_len
            }
        };
        let cfg = Self {
            mod_index,
            alphabet_size: p.alphabet_size,
            samples_per_symbol,
            sample_period_s: ts,
            pulse: p.pulse,
            preamble: p.preamble.symbols(p.preamble_len, p.alphabet_size),
            data_len,
            start_index,
        };
        cfg.validate(n)?;
        Ok(cfg)
    }

    /// Check the format invariants; `num_samples` is the observation length N.
    pub fn validate(&self, num_samples: usize) -> Result<()> {
        if self.alphabet_size < 2 {
            return Err(Error::Config("alphabet size L must be >= 2".into()));
        }
        let h = self.mod_index;
        if (h.num() as u64) * (self.alphabet_size as u64 - 1) > h.den() as u64 {
            return Err(Error::PhaseConstraint {
                value: h.value() * (self.alphabet_size - 1) as f64,
                l_max: max_alphabet(h),
            });
        }
        if self.samples_per_symbol == 0 {
            return Err(Error::Config("samples_per_symbol must be >= 1".into()));
        }
        if self.preamble.is_empty() {
            return Err(Error::Config("preamble must hold at least one symbol".into()));
        }
        if let Some(bad) = self.preamble.iter().find(|b| !self.is_symbol(**b)) {
            return Err(Error::Config(format!(
                "preamble symbol {bad} is not in the {}-ary alphabet",
                self.alphabet_size
            )));
        }
        let end = self.start_index + self.frame_samples();
        if end > num_samples {
            return Err(Error::Config(format!(
                "frame ends at sample {end} but the window has only {num_samples} samples"
            )));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.mod_index.value()
    }

    pub fn symbol_period(&self) -> f64 {
        self.samples_per_symbol as f64 * self.sample_period_s
    }

    pub fn start_offset_s(&self) -> f64 {
        self.start_index as f64 * self.sample_period_s
    }

    /// {-(L-1), -(L-3), ..., L-1}
    pub fn alphabet(&self) -> Vec<i32> {
        let l = self.alphabet_size as i32;
        (0..l).map(|i| 2 * i - (l - 1)).collect()
    }

    pub fn is_symbol(&self, b: i32) -> bool {
        let l = self.alphabet_size as i32;
        b.abs() < l && (b + l - 1) % 2 == 0
    }

    /// sigma_b^2 = (L^2 - 1) / 3 for uniform symbols.
    pub fn symbol_variance(&self) -> f64 {
        let l = self.alphabet_size as f64;
        (l * l - 1.0) / 3.0
    }

    pub fn preamble_len(&self) -> usize {
        self.preamble.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.preamble.len() + self.data_len
    }

    /// Preamble length on the sample grid, `L_p * N_sps`.
    pub fn preamble_samples(&self) -> usize {
        self.preamble.len() * self.samples_per_symbol
    }

    pub fn frame_samples(&self) -> usize {
        self.num_symbols() * self.samples_per_symbol
    }

    pub fn bits_per_symbol(&self) -> f64 {
        (self.alphabet_size as f64).log2()
    }

    /// Known preamble phase gamma_p[n], n = 0 .. L_p*N_sps - 1.
    pub fn preamble_phase(&self) -> Vec<f64> {
        symbol_phase_samples(self, &self.preamble, 0.0).0
    }

    /// Accumulated phase at the end of the preamble, `pi h sum(b_p)`.
    pub fn preamble_end_phase(&self) -> f64 {
        PI * self.h() * self.preamble.iter().map(|&b| b as f64).sum::<f64>()
    }

    /// Sequence of random data symbols, uniform over the alphabet.
    pub fn random_data<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i32> {
        let l = self.alphabet_size as i32;
        (0..self.data_len)
            .map(|_| 2 * rng.gen_range(0..l) - (l - 1))
            .collect()
    }
}

/// Largest alphabet that satisfies h(L-1) <= 1: `floor(1/h) + 1`.
pub(crate) fn max_alphabet(h: ModIndex) -> usize {
    if h.num() == 0 {
        return usize::MAX;
    }
    (h.den() / h.num()) as usize + 1
}

/// Known preamble followed by data symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub preamble: Vec<i32>,
    pub data: Vec<i32>,
}

impl Frame {
    pub fn new(cfg: &CpmConfig, data: Vec<i32>) -> Result<Self> {
        let f = Self {
            preamble: cfg.preamble.clone(),
            data,
        };
        f.validate(cfg)?;
        Ok(f)
    }

    pub fn random<R: Rng + ?Sized>(cfg: &CpmConfig, rng: &mut R) -> Self {
        Self {
            preamble: cfg.preamble.clone(),
            data: cfg.random_data(rng),
        }
    }

    pub fn validate(&self, cfg: &CpmConfig) -> Result<()> {
        if self.preamble.len() != cfg.preamble_len() {
            return Err(Error::LengthMismatch {
                expected: cfg.preamble_len(),
                got: self.preamble.len(),
            });
        }
        if self.data.len() != cfg.data_len {
            return Err(Error::LengthMismatch {
                expected: cfg.data_len,
                got: self.data.len(),
            });
        }
        if let Some(bad) = self.symbols().find(|b| !cfg.is_symbol(*b)) {
            return Err(Error::Config(format!("symbol {bad} is not in the alphabet")));
        }
        Ok(())
    }

    pub fn symbols(&self) -> impl Iterator<Item = i32> + '_ {
        self.preamble.iter().chain(self.data.iter()).copied()
    }
}

/// gamma(t) = 2 pi h sum_i b_i g(t - i T_c - tau_c), with tau_c = m_0 T_s.
pub fn cpm_phase(cfg: &CpmConfig, frame: &Frame, t: f64) -> f64 {
    let tc = cfg.symbol_period();
    let rel = (t - cfg.start_offset_s()) / tc;
    if rel <= 0.0 {
        return 0.0;
    }
    let current = rel.floor() as usize;
    let mut acc = 0.0;
    for (i, b) in frame.symbols().enumerate() {
        if i < current {
            acc += b as f64 * 0.5;
        } else if i == current {
            acc += b as f64 * cfg.pulse.phase(rel - i as f64);
        } else {
            break;
        }
    }
    2.0 * PI * cfg.h() * acc
}

/// d gamma / dt in rad/s.
pub fn cpm_instantaneous_freq(cfg: &CpmConfig, frame: &Frame, t: f64) -> f64 {
    let tc = cfg.symbol_period();
    let rel = (t - cfg.start_offset_s()) / tc;
    if rel < 0.0 {
        return 0.0;
    }
    let i = rel.floor() as usize;
    match frame.symbols().nth(i) {
        Some(b) => 2.0 * PI * cfg.h() * b as f64 * cfg.pulse.freq(rel - i as f64) / tc,
        None => 0.0,
    }
}

/// Modulation phase at every sample of the frame (relative to m_0), plus the
/// terminal phase after the last symbol.
pub fn frame_phase_samples(cfg: &CpmConfig, frame: &Frame) -> (Vec<f64>, f64) {
    let symbols: Vec<i32> = frame.symbols().collect();
    symbol_phase_samples(cfg, &symbols, 0.0)
}

pub(crate) fn symbol_phase_samples(cfg: &CpmConfig, symbols: &[i32], start: f64) -> (Vec<f64>, f64) {
    let nsps = cfg.samples_per_symbol;
    let two_pi_h = 2.0 * PI * cfg.h();
    let shape: Vec<f64> = (0..nsps)
        .map(|k| cfg.pulse.phase(k as f64 / nsps as f64))
        .collect();
    let mut out = Vec::with_capacity(symbols.len() * nsps);
    let mut base = start;
    for &b in symbols {
        let bf = b as f64;
        out.extend(shape.iter().map(|g| base + two_pi_h * bf * g));
        base += PI * cfg.h() * bf;
    }
    (out, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(h: f64, l: usize) -> CpmConfig {
        CpmConfig {
            mod_index: ModIndex::from_f64(h).unwrap(),
            alphabet_size: l,
            samples_per_symbol: 16,
            sample_period_s: 1e-9,
            pulse: PulseShape::CpfskRect,
            preamble: vec![1],
            data_len: 0,
            start_index: 10,
        }
    }

    #[test]
    fn mod_index_reduces_and_rejects() {
        let h = ModIndex::from_f64(0.1).unwrap();
        assert_eq!((h.num(), h.den()), (1, 10));
        assert_eq!(ModIndex::new(2, 4).unwrap(), ModIndex::new(1, 2).unwrap());
        assert!(ModIndex::from_f64(std::f64::consts::FRAC_1_PI).is_err());
    }

    #[test]
    fn single_symbol_full_pulse_gives_quarter_turn() {
        let c = cfg(0.5, 2);
        let f = Frame { preamble: vec![1], data: vec![] };
        let t = c.start_offset_s() + c.symbol_period();
        assert_relative_eq!(cpm_phase(&c, &f, t), PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_index_is_flat() {
        let mut c = cfg(0.5, 2);
        c.mod_index = ModIndex::new(0, 1).unwrap();
        let f = Frame { preamble: vec![1], data: vec![-1, 1] };
        for k in 0..50 {
            assert_eq!(cpm_phase(&c, &f, k as f64 * 3e-9), 0.0);
        }
    }

    #[test]
    fn antisymmetric_pair_cancels() {
        let mut c = cfg(0.25, 2);
        c.preamble = vec![1];
        c.data_len = 1;
        let f = Frame { preamble: vec![1], data: vec![-1] };
        let t = c.start_offset_s() + 2.0 * c.symbol_period();
        assert!(cpm_phase(&c, &f, t).abs() < 1e-12);
    }

    #[test]
    fn before_start_is_zero() {
        let c = cfg(0.1, 4);
        let f = Frame { preamble: vec![3], data: vec![] };
        assert_eq!(cpm_phase(&c, &f, 0.0), 0.0);
        assert_eq!(cpm_instantaneous_freq(&c, &f, 1e-9), 0.0);
    }

    #[test]
    fn instantaneous_frequency_formula() {
        let mut c = cfg(0.1, 4);
        c.preamble = vec![3];
        let f = Frame { preamble: vec![3], data: vec![] };
        let t = c.start_offset_s() + 0.3 * c.symbol_period();
        let expected = 2.0 * PI * 0.1 * 3.0 / (2.0 * c.symbol_period());
        assert_relative_eq!(cpm_instantaneous_freq(&c, &f, t), expected, max_relative = 1e-12);
    }

    #[test]
    fn alphabet_is_symmetric() {
        let c = cfg(0.1, 4);
        assert_eq!(c.alphabet(), vec![-3, -1, 1, 3]);
        assert_relative_eq!(c.symbol_variance(), 5.0);
        assert!(c.is_symbol(-3) && !c.is_symbol(0) && !c.is_symbol(5));
        let c8 = cfg(0.1, 8);
        let mean_sq: f64 =
            c8.alphabet().iter().map(|&b| (b * b) as f64).sum::<f64>() / 8.0;
        assert_relative_eq!(mean_sq, c8.symbol_variance());
    }

    #[test]
    fn sample_phases_match_continuous_phase() {
        let mut c = cfg(0.1, 4);
        c.preamble = vec![3, 3];
        c.data_len = 3;
        let f = Frame { preamble: vec![3, 3], data: vec![-1, 1, -3] };
        let (ph, end) = frame_phase_samples(&c, &f);
        for (k, p) in ph.iter().enumerate() {
            let t = (c.start_index + k) as f64 * c.sample_period_s;
            assert_relative_eq!(*p, cpm_phase(&c, &f, t), epsilon = 1e-12);
        }
        let t_end = c.start_offset_s() + 5.0 * c.symbol_period();
        assert_relative_eq!(end, cpm_phase(&c, &f, t_end), epsilon = 1e-12);
    }

    #[test]
    fn from_params_rejects_phase_wrapping() {
        let sys = SystemConfig::default();
        let p = CpmParams { mod_index: 0.2, alphabet_size: 8, ..Default::default() };
        match CpmConfig::from_params(&sys, &p) {
            Err(Error::PhaseConstraint { l_max, .. }) => assert_eq!(l_max, 6),
            other => panic!("expected phase constraint error, got {other:?}"),
        }
    }

    #[test]
    fn from_params_derives_carson_symbol_length() {
        let sys = SystemConfig::default().with_comm_fraction(0.2);
        let c = CpmConfig::from_params(&sys, &CpmParams::default()).unwrap();
        // (1 + 0.1) / 20 MHz = 55 ns = 11 samples at 200 MHz
        assert_eq!(c.samples_per_symbol, 11);
        assert_eq!(c.start_index, 200);
        assert_eq!(c.data_len, (4000 - 200) / 11 - 4);
    }
}
