//! Deterministic parallel trial execution and Monte Carlo summaries.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::rng::{trial_rng, trial_seed};

/// Run `n` trials in parallel. Trial `i` receives its own generator derived
/// from `(master, i)`; results come back in trial order, so any reduction
/// over them is independent of the thread count.
pub fn run_trials<T, F>(n: usize, master: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(master, i as u64);
            f(i, &mut rng)
        })
        .collect()
}

/// Like [`run_trials`] but hands each trial a raw seed instead of a generator.
pub fn run_seeded<T, F>(n: usize, master: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| f(i, trial_seed(master, i as u64)))
        .collect()
}

/// 95% normal-approximation confidence half-width multiplier.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Half-width of the 95% interval.
    pub ci95: f64,
    pub n: usize,
}

/// Sample mean with a normal-approximation interval.
pub fn mean_ci(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate { mean: f64::NAN, ci95: f64::NAN, n };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Estimate { mean, ci95: f64::NAN, n };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Estimate { mean, ci95: Z95 * (var / n as f64).sqrt(), n }
}

/// Proportion `k / n` with a normal-approximation interval.
pub fn proportion_ci(k: usize, n: usize) -> Estimate {
    if n == 0 {
        return Estimate { mean: f64::NAN, ci95: f64::NAN, n };
    }
    let p = k as f64 / n as f64;
    Estimate { mean: p, ci95: Z95 * (p * (1.0 - p) / n as f64).sqrt(), n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let work = |_: usize, r: &mut ChaCha8Rng| r.gen::<u64>();
        let a = run_trials(500, 7, work);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| run_trials(500, 7, work));
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool1.install(|| run_trials(500, 7, work));
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn summaries() {
        let e = mean_ci(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.ci95 - Z95 * (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
        let p = proportion_ci(25, 100);
        assert!((p.ci95 - Z95 * (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-12);
    }
}
