//! Deterministic code constructions: two-dimensional Euclidean-geometry
//! cyclic LDPC codes, depth-one progressive-edge-growth regular codes, and
//! cycle-free codes for exhaustive-decoding oracles.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tanner::{Code, ParityCheckMatrix};

/// Primitive polynomials for GF(2^(2s)), s = 2..=5, including the leading term.
const PRIMITIVE: [(u32, u32); 4] = [(2, 0x13), (3, 0x43), (4, 0x11d), (5, 0x409)];

/// Type-I EG-LDPC code on EG(2, 2^s), built from the lines that miss the
/// origin. `n = 4^s - 1`; every row and column has weight `2^s`.
///
/// `s = 5` is the (1023, 781) code.
pub fn euclidean_geometry(s: u32) -> Result<ParityCheckMatrix> {
    let poly = PRIMITIVE
        .iter()
        .find(|(ss, _)| *ss == s)
        .map(|(_, p)| *p)
        .ok_or_else(|| {
            Error::InvalidArgument(format!("EG construction supports s in 2..=5, got {s}"))
        })?;
    let m = 2 * s;
    let n = (1usize << m) - 1;

    // exp/log tables of GF(2^m) with primitive element alpha = x
    let mut exp = vec![0u32; n];
    let mut log = vec![usize::MAX; n + 1];
    let mut x = 1u32;
    for (i, slot) in exp.iter_mut().enumerate() {
        *slot = x;
        log[x as usize] = i;
        x <<= 1;
        if x & (1 << m) != 0 {
            x ^= poly;
        }
    }

    // GF(2^s) sits inside GF(2^m) as {0} u {alpha^(k (2^s + 1))}
    let step = (1usize << s) + 1;
    let subfield: Vec<u32> = std::iter::once(0)
        .chain((0..(1usize << s) - 1).map(|k| exp[k * step]))
        .collect();

    // line {1 + beta * alpha : beta in GF(2^s)}; alpha^{-1} is not in the
    // subfield so no point is zero
    let alpha = exp[1];
    let gf_mul = |a: u32, b: u32| -> u32 {
        if a == 0 || b == 0 {
            0
        } else {
            exp[(log[a as usize] + log[b as usize]) % n]
        }
    };
    let mut line: Vec<usize> = subfield
        .iter()
        .map(|&beta| log[(1 ^ gf_mul(beta, alpha)) as usize])
        .collect();
    line.sort_unstable();

    let entries = (0..n).flat_map(|row| line.iter().map(move |&p| (row, (p + row) % n)));
    ParityCheckMatrix::from_entries(n, n, entries)
}

/// Regular `(dv, dc)` code of length `n` grown column by column, each new
/// edge going to the least-loaded check that closes no 4-cycle. Deterministic
/// in `seed`.
pub fn regular_peg(n: usize, dv: usize, dc: usize, seed: u64) -> Result<ParityCheckMatrix> {
    if dv == 0 || dc < 2 || !(n * dv).is_multiple_of(dc) {
        return Err(Error::InvalidArgument(format!(
            "cannot build a regular ({dv},{dc}) code of length {n}"
        )));
    }
    let m = n * dv / dc;
    if dv > m {
        return Err(Error::InvalidArgument(
            "column weight exceeds check count".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..64 {
        if let Some(h) = try_regular(n, m, dv, dc, &mut rng) {
            return Ok(h);
        }
    }
    Err(Error::InvalidArgument(format!(
        "failed to grow a regular ({dv},{dc}) code of length {n}"
    )))
}

fn try_regular(
    n: usize,
    m: usize,
    dv: usize,
    dc: usize,
    rng: &mut ChaCha8Rng,
) -> Option<ParityCheckMatrix> {
    let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut entries = Vec::with_capacity(n * dv);
    for col in 0..n {
        let mut chosen: Vec<usize> = Vec::with_capacity(dv);
        for _ in 0..dv {
            let open = |r: usize, chosen: &[usize]| row_cols[r].len() < dc && !chosen.contains(&r);
            let cycle_free = |r: usize, chosen: &[usize]| {
                chosen
                    .iter()
                    .all(|&c| row_cols[c].iter().all(|u| !row_cols[r].contains(u)))
            };
            let mut cands: Vec<usize> = (0..m)
                .filter(|&r| open(r, &chosen) && cycle_free(r, &chosen))
                .collect();
            if cands.is_empty() {
                cands = (0..m).filter(|&r| open(r, &chosen)).collect();
            }
            let min_deg = cands.iter().map(|&r| row_cols[r].len()).min()?;
            cands.retain(|&r| row_cols[r].len() == min_deg);
            let r = *cands.choose(rng)?;
            chosen.push(r);
        }
        for r in chosen {
            row_cols[r].push(col);
            entries.push((r, col));
        }
    }
    if row_cols.iter().any(|c| c.len() != dc) {
        return None;
    }
    ParityCheckMatrix::from_entries(m, n, entries).ok()
}

/// Cycle-free code on `n` variables whose checks have degree `check_degree`
/// (the last check may be smaller, but at least 2). Each new check shares
/// exactly one variable with the existing tree.
pub fn tree_code(n: usize, check_degree: usize, seed: u64) -> Result<ParityCheckMatrix> {
    if check_degree < 2 || n < check_degree {
        return Err(Error::InvalidArgument(format!(
            "tree code needs n >= check degree >= 2, got n={n}, degree={check_degree}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    let mut next_var = check_degree;
    entries.extend((0..check_degree).map(|v| (0, v)));
    let mut row = 1;
    while next_var < n {
        let fresh = (check_degree - 1).min(n - next_var);
        let anchor = rng.gen_range(0..next_var);
        entries.push((row, anchor));
        entries.extend((next_var..next_var + fresh).map(|v| (row, v)));
        next_var += fresh;
        row += 1;
    }
    ParityCheckMatrix::from_entries(row, n, entries)
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 6] = ["eg1023", "eg255", "eg63", "eg15", "reg96", "reg1008"];

/// Built-in codes: `eg1023` (1023,781) EG-LDPC, smaller EG codes, the
/// (96,48) and (1008,504) class regular (3,6) codes.
pub fn builtin(name: &str) -> Result<Code> {
    let h = match name {
        "eg1023" => euclidean_geometry(5)?,
        "eg255" => euclidean_geometry(4)?,
        "eg63" => euclidean_geometry(3)?,
        "eg15" => euclidean_geometry(2)?,
        "reg96" => regular_peg(96, 3, 6, 96)?,
        "reg1008" => regular_peg(1008, 3, 6, 1008)?,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown built-in code {other:?}; expected one of {BUILTIN_NAMES:?}"
            )))
        }
    };
    Code::new(name, h, None)
}
