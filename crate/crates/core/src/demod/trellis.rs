use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{CpmConfig, ModIndex};

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

/// Phase-state trellis of full-response CPM with rational index `h = K/P`.
///
/// State `s` is the accumulated phase `2 pi s / S`. Symbol `b` moves the
/// state by `K b S / (2P)`. `S = 2P / gcd(2P, K b)` over the alphabet, which
/// is `2P` for odd `K` with an even alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct CpmTrellis {
    pub num_states: usize,
    pub alphabet: Vec<i32>,
    /// `next[s][j]`: state after symbol `alphabet[j]` from state `s`.
    pub next: Vec<Vec<usize>>,
    /// Unit-modulus phasor of each state.
    pub state_phasor: Vec<Complex64>,
    /// Branch waveform from state 0 for `alphabet[j]`; other states rotate it.
    pub base: Vec<Vec<Complex64>>,
    pub samples_per_symbol: usize,
}

impl CpmTrellis {
    pub fn new(cfg: &CpmConfig) -> Result<Self> {
        let h = cfg.mod_index;
        if h.den() > ModIndex::MAX_DEN {
            return Err(Error::Config(format!("denominator of h = {h} exceeds {}", ModIndex::MAX_DEN)));
        }
        let alphabet = cfg.alphabet();
        let (k, p) = (h.num() as i64, h.den() as i64);
        let d = alphabet.iter().fold(2 * p, |g, &b| gcd(g, k * b as i64));
        let d = if d == 0 { 2 * p } else { d };
        let s = (2 * p / d) as usize;
        let step = |b: i32| ((k * b as i64 * s as i64) / (2 * p)).rem_euclid(s as i64) as usize;
        let next = (0..s)
            .map(|st| alphabet.iter().map(|&b| (st + step(b)) % s).collect())
            .collect();
        let state_phasor = (0..s)
            .map(|st| Complex64::from_polar(1.0, 2.0 * PI * st as f64 / s as f64))
            .collect();
        let nsps = cfg.samples_per_symbol;
        let base = alphabet
            .iter()
            .map(|&b| {
                (0..nsps)
                    .map(|i| {
                        let g = cfg.pulse.phase(i as f64 / nsps as f64);
                        Complex64::from_polar(1.0, 2.0 * PI * h.value() * b as f64 * g)
                    })
                    .collect()
            })
            .collect();
        Ok(Self { num_states: s, alphabet, next, state_phasor, base, samples_per_symbol: nsps })
    }

    /// State reached after the symbols `syms` starting from state 0.
    pub fn state_after(&self, syms: &[i32]) -> usize {
        syms.iter().fold(0, |s, b| self.next[s][self.index_of(*b)])
    }

    pub fn index_of(&self, b: i32) -> usize {
        self.alphabet.iter().position(|&a| a == b).expect("symbol outside the alphabet")
    }

    /// Branch waveform from state `s` for alphabet index `j`.
    pub fn branch(&self, s: usize, j: usize) -> Vec<Complex64> {
        self.base[j].iter().map(|x| x * self.state_phasor[s]).collect()
    }

    /// Correlate `r` (one symbol long) against each base waveform.
    pub fn symbol_correlations(&self, r: &[Complex64]) -> Vec<Complex64> {
        self.base
            .iter()
            .map(|w| r.iter().zip(w).map(|(x, y)| x * y.conj()).sum())
            .collect()
    }

    /// Branch metric `Re(conj(e^{j theta_s}) z)`.
    pub fn branch_metric(&self, s: usize, z: Complex64) -> f64 {
        (z * self.state_phasor[s].conj()).re
    }
}
