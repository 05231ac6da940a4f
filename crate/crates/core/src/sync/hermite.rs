//! Gauss-Hermite rule for averaging over a Gaussian frequency error.

use std::f64::consts::PI;

/// Nodes and weights for `int exp(-x^2) f(x) dx`, by Newton iteration on the
/// orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "rule needs at least one node");
    let pim4 = PI.powf(-0.25);
    let mut nodes = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0].0,
            3 => 1.91 * z - 0.91 * nodes[1].0,
            _ => 2.0 * z - nodes[i - 2].0,
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let w = 2.0 / (pp * pp);
        nodes[i] = (z, w);
        nodes[n - 1 - i] = (-z, w);
    }
    nodes.reverse();
    nodes
}

/// E[f(X)] for X ~ N(0, var), using an `n`-point rule.
pub fn gaussian_expectation(var: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    if var <= 0.0 {
        return f(0.0);
    }
    let s = (2.0 * var).sqrt();
    gauss_hermite(n)
        .into_iter()
        .map(|(x, w)| w * f(s * x))
        .sum::<f64>()
        / PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_and_moments() {
        for n in [1, 2, 5, 16, 40] {
            let r = gauss_hermite(n);
            let w: f64 = r.iter().map(|p| p.1).sum();
            assert!((w - PI.sqrt()).abs() < 1e-12, "n={n}");
        }
        let var = 2.5;
        let m4 = gaussian_expectation(var, 10, |x| x.powi(4));
        assert!((m4 - 3.0 * var * var).abs() < 1e-10);
        let c = gaussian_expectation(0.3, 20, |x| x.cos());
        assert!((c - (-0.15f64).exp()).abs() < 1e-13);
    }
}
