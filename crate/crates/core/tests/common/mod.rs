//! Oracles shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use nnms::tanner::ParityCheckMatrix;

/// Every codeword of a small code, as bit masks over the columns.
pub fn codewords(h: &ParityCheckMatrix) -> Vec<u32> {
    let n = h.n_vars();
    assert!(n <= 20, "exhaustive enumeration needs a small code");
    let mut rows = vec![0u32; h.n_checks()];
    for (r, c) in h.entries() {
        rows[r] |= 1 << c;
    }
    (0..1u32 << n)
        .filter(|&c| rows.iter().all(|&r| (r & c).count_ones() % 2 == 0))
        .collect()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Exact bitwise MAP posterior LLRs by enumerating `codewords`. A codeword
/// `c` has log-likelihood `-sum_i c_i L_i` up to a constant.
pub fn map_llrs(codewords: &[u32], llrs: &[f64]) -> Vec<f64> {
    let score: Vec<f64> = codewords
        .iter()
        .map(|&c| {
            -(0..llrs.len())
                .filter(|&i| c >> i & 1 == 1)
                .map(|i| llrs[i])
                .sum::<f64>()
        })
        .collect();
    (0..llrs.len())
        .map(|i| {
            let (mut zero, mut one) = (Vec::new(), Vec::new());
            for (&c, &s) in codewords.iter().zip(&score) {
                if c >> i & 1 == 0 {
                    zero.push(s);
                } else {
                    one.push(s);
                }
            }
            log_sum_exp(&zero) - log_sum_exp(&one)
        })
        .collect()
}
