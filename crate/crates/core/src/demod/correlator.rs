use num_complex::Complex64;

use super::trellis::CpmTrellis;

/// Decision-feedback correlator bank.
///
/// At symbol `i` every hypothesis over the next `span` symbols is scored from
/// the phase state implied by earlier decisions; the first symbol of the best
/// hypothesis is decided and the state advanced. `span = 1` is the plain
/// symbol-by-symbol bank.
pub fn correlator_sequence(
    trellis: &CpmTrellis,
    z: &[Vec<Complex64>],
    start_state: usize,
    span: usize,
) -> (Vec<usize>, f64) {
    let l = trellis.alphabet.len();
    let span = span.max(1);
    let mut st = start_state;
    let mut out = Vec::with_capacity(z.len());
    let mut total = 0.0;
    for i in 0..z.len() {
        let depth = span.min(z.len() - i);
        let count = l.pow(depth as u32);
        let mut best = (f64::NEG_INFINITY, 0usize);
        for h in 0..count {
            let mut code = h;
            let mut s = st;
            let mut m = 0.0;
            let mut first = 0;
            // most significant digit is the symbol decided now, so ties
            // favor the smaller symbol
            let mut digits = [0usize; 8];
            for d in (0..depth).rev() {
                digits[d] = code % l;
                code /= l;
            }
            for d in 0..depth {
                let j = digits[d];
                if d == 0 {
                    first = j;
                }
                m += trellis.branch_metric(s, z[i + d][j]);
                s = trellis.next[s][j];
            }
            if m > best.0 {
                best = (m, first);
            }
        }
        let j = best.1;
        total += trellis.branch_metric(st, z[i][j]);
        st = trellis.next[st][j];
        out.push(j);
    }
    (out, total)
}
