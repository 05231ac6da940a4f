use num_complex::Complex64;

use super::trellis::CpmTrellis;

/// Maximum-likelihood sequence over per-symbol correlations `z[i][j]`
/// (symbol `i`, alphabet index `j`), starting from `start_state`.
///
/// Returns the alphabet indices and the path metric. Equal metrics resolve
/// toward the smaller symbol.
pub fn viterbi_sequence(trellis: &CpmTrellis, z: &[Vec<Complex64>], start_state: usize) -> (Vec<usize>, f64) {
    let s = trellis.num_states;
    let l = trellis.alphabet.len();
    let mut metric = vec![f64::NEG_INFINITY; s];
    metric[start_state] = 0.0;
    let mut back: Vec<Vec<(u16, u8)>> = Vec::with_capacity(z.len());
    let mut next_metric = vec![f64::NEG_INFINITY; s];
    for zi in z {
        next_metric.iter_mut().for_each(|m| *m = f64::NEG_INFINITY);
        let mut bp = vec![(0u16, 0u8); s];
        for j in 0..l {
            for st in 0..s {
                if metric[st] == f64::NEG_INFINITY {
                    continue;
                }
                let cand = metric[st] + trellis.branch_metric(st, zi[j]);
                let ns = trellis.next[st][j];
                if cand > next_metric[ns] {
                    next_metric[ns] = cand;
                    bp[ns] = (st as u16, j as u8);
                }
            }
        }
        std::mem::swap(&mut metric, &mut next_metric);
        back.push(bp);
    }
    let mut best = 0;
    for st in 1..s {
        if metric[st] > metric[best] {
            best = st;
        }
    }
    let total = metric[best];
    let mut out = vec![0usize; z.len()];
    let mut st = best;
    for (i, bp) in back.iter().enumerate().rev() {
        let (prev, j) = bp[st];
        out[i] = j as usize;
        st = prev as usize;
    }
    (out, total)
}

/// Metric of a given symbol path, for checking optimality.
pub fn path_metric(trellis: &CpmTrellis, z: &[Vec<Complex64>], start_state: usize, path: &[usize]) -> f64 {
    let mut st = start_state;
    let mut m = 0.0;
    for (zi, &j) in z.iter().zip(path) {
        m += trellis.branch_metric(st, zi[j]);
        st = trellis.next[st][j];
    }
    m
}
