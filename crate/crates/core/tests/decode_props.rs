#![allow(clippy::needless_range_loop)]

mod common;

use nnms::channel::{all_zero_frame, stream_rng, SnrPoint};
use nnms::codes;
use nnms::decode::{
    decode, run_iteration, softplus_inv, variable_update, DecodeConfig, DecodeScratch,
    DecoderWeights, LayerWeights, SchemeKind, WeightScheme,
};
use nnms::tanner::{Code, TannerGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixed(kind: SchemeKind, t: usize, g: &TannerGraph) -> DecoderWeights {
    DecoderWeights::initial(WeightScheme::new(kind, t).unwrap(), g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The total-minus-self variable update equals the direct exclusion sum.
    #[test]
    fn variable_update_is_the_exclusion_sum(seed in any::<u64>()) {
        let code = codes::builtin("eg63").unwrap();
        let g = &code.graph;
        let (n, e) = (g.n_vars(), g.n_edges());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let llrs: Vec<f64> = (0..n).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let prev: Vec<f64> = (0..e).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let alpha: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let beta: Vec<f64> = (0..e).map(|_| rng.gen_range(0.1..2.0)).collect();
        let gamma = vec![1.0; e];
        let w = LayerWeights::Full { alpha: &alpha, beta: &beta, gamma: &gamma };
        let mut v2c = vec![0.0; e];
        variable_update(g, &llrs, &prev, &w, f64::INFINITY, &mut v2c);
        for ed in 0..e {
            let i = g.edge_var(ed);
            let direct = alpha[i] * llrs[i]
                + g.var_edges(i).iter().map(|&x| x as usize).filter(|&x| x != ed).map(|x| beta[x] * prev[x]).sum::<f64>();
            prop_assert!((v2c[ed] - direct).abs() < 1e-9, "edge {ed}: {} vs {direct}", v2c[ed]);
        }
    }

    /// Min-sum decisions and iteration counts do not change when every LLR
    /// is scaled by the same positive factor, with saturation disabled.
    #[test]
    fn min_sum_is_scale_invariant(seed in any::<u64>(), lambda in 0.1f64..10.0) {
        let code = codes::builtin("reg96").unwrap();
        let g = &code.graph;
        let snr = SnrPoint::new(2.5, &code.params).unwrap();
        let cfg = DecodeConfig { clip: f64::INFINITY, early_exit: true };
        let mut scratch = DecodeScratch::new(g);
        let mut llrs = vec![0.0; g.n_vars()];
        all_zero_frame(snr.sigma2, &mut stream_rng(seed, 1, 0), &mut llrs);
        let scaled: Vec<f64> = llrs.iter().map(|x| lambda * x).collect();
        for kind in [SchemeKind::Ms, SchemeKind::Nms(0.8), SchemeKind::Unnms] {
            let w = fixed(kind, 20, g);
            let a = decode(g, &llrs, &w, &cfg, &mut scratch).unwrap();
            let b = decode(g, &scaled, &w, &cfg, &mut scratch).unwrap();
            prop_assert_eq!(&a.hard, &b.hard);
            prop_assert_eq!(a.iterations_used, b.iterations_used);
        }
    }
}

#[test]
fn saturation_is_what_breaks_exact_scale_invariance() {
    // With the clip scaled along with the input the two runs coincide
    // whenever the factor is a power of two (exact in floating point).
    let code = codes::builtin("reg96").unwrap();
    let g = &code.graph;
    let snr = SnrPoint::new(2.0, &code.params).unwrap();
    let w = fixed(SchemeKind::Ms, 20, g);
    let mut scratch = DecodeScratch::new(g);
    let mut llrs = vec![0.0; g.n_vars()];
    for f in 0..200 {
        all_zero_frame(snr.sigma2, &mut stream_rng(9, 2, f), &mut llrs);
        let scaled: Vec<f64> = llrs.iter().map(|x| 8.0 * x).collect();
        let a = decode(g, &llrs, &w, &DecodeConfig::default(), &mut scratch).unwrap();
        let cfg8 = DecodeConfig {
            clip: 800.0,
            early_exit: true,
        };
        let b = decode(g, &scaled, &w, &cfg8, &mut scratch).unwrap();
        assert_eq!(a.hard, b.hard);
        assert_eq!(a.iterations_used, b.iterations_used);
        for (x, y) in a.soft.iter().zip(&b.soft) {
            assert_eq!(8.0 * x, *y);
        }
    }
}

/// NMS with factor 1, MS, and every weighted scheme at all-ones weights
/// pass identical messages at every iteration.
fn assert_identity_reduction(code: &Code, frames: u64, db: f64) {
    let g = &code.graph;
    let t = 8;
    let schemes = [
        fixed(SchemeKind::Ms, t, g),
        fixed(SchemeKind::Nms(1.0), t, g),
        fixed(SchemeKind::Unnms, t, g),
        fixed(SchemeKind::Snnms, t, g),
        fixed(SchemeKind::Annms, t, g),
    ];
    for w in &schemes[2..] {
        assert!(w.effective().iter().all(|&x| x == 1.0));
    }
    let snr = SnrPoint::new(db, &code.params).unwrap();
    let mut llrs = vec![0.0; g.n_vars()];
    let mut scratches: Vec<_> = schemes.iter().map(|_| DecodeScratch::new(g)).collect();
    for f in 0..frames {
        all_zero_frame(snr.sigma2, &mut stream_rng(3, 7, f), &mut llrs);
        for s in &mut scratches {
            *s = DecodeScratch::new(g);
        }
        for l in 0..t {
            for (w, s) in schemes.iter().zip(&mut scratches) {
                run_iteration(g, &llrs, w, l, 100.0, s, None);
            }
            for s in &scratches[1..] {
                assert_eq!(s.v2c(), scratches[0].v2c(), "frame {f} layer {l}");
                assert_eq!(s.c2v(), scratches[0].c2v(), "frame {f} layer {l}");
            }
        }
        let reference = decode(
            g,
            &llrs,
            &schemes[0],
            &DecodeConfig::default(),
            &mut DecodeScratch::new(g),
        )
        .unwrap();
        for w in &schemes[1..] {
            let r = decode(
                g,
                &llrs,
                w,
                &DecodeConfig::default(),
                &mut DecodeScratch::new(g),
            )
            .unwrap();
            assert_eq!(r.soft, reference.soft);
            assert_eq!(r.hard, reference.hard);
            assert_eq!(r.iterations_used, reference.iterations_used);
        }
    }
}

#[test]
fn all_ones_weights_reduce_to_min_sum() {
    assert_identity_reduction(&codes::builtin("reg96").unwrap(), 200, 2.0);
    assert_identity_reduction(&codes::builtin("eg255").unwrap(), 50, 3.0);
}

#[test]
fn weighted_schemes_start_at_softplus_inverse_of_one() {
    let w = fixed(SchemeKind::Snnms, 4, &codes::builtin("eg15").unwrap().graph);
    assert!(w.raw().iter().all(|&x| x == softplus_inv(1.0)));
}

#[test]
fn bp_on_a_tree_is_bitwise_map() {
    let h = codes::tree_code(16, 3, 11).unwrap();
    let code = Code::new("tree16", h.clone(), None).unwrap();
    let g = &code.graph;
    let words = common::codewords(&h);
    assert_eq!(words.len(), 1 << code.params.k);
    let w = fixed(SchemeKind::Bp, 2 * g.n_vars(), g);
    let cfg = DecodeConfig {
        clip: 100.0,
        early_exit: false,
    };
    let mut scratch = DecodeScratch::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut llrs = vec![0.0; g.n_vars()];
    for _ in 0..200 {
        let sigma2 = rng.gen_range(0.5..2.0);
        all_zero_frame(sigma2, &mut rng, &mut llrs);
        let map = common::map_llrs(&words, &llrs);
        let r = decode(g, &llrs, &w, &cfg, &mut scratch).unwrap();
        for i in 0..llrs.len() {
            assert!(
                (r.soft[i] - map[i]).abs() < 1e-6,
                "bit {i}: bp {} map {}",
                r.soft[i],
                map[i]
            );
            assert_eq!(r.hard[i], u8::from(map[i] < 0.0));
        }
    }
}

#[test]
fn min_sum_on_a_tree_matches_max_log_map() {
    // On a cycle-free graph min-sum computes the max-log approximation of
    // the MAP marginals exactly.
    let h = codes::tree_code(12, 4, 2).unwrap();
    let code = Code::new("tree12", h.clone(), None).unwrap();
    let g = &code.graph;
    let words = common::codewords(&h);
    let w = fixed(SchemeKind::Ms, 2 * g.n_vars(), g);
    let cfg = DecodeConfig {
        clip: 100.0,
        early_exit: false,
    };
    let mut scratch = DecodeScratch::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut llrs = vec![0.0; g.n_vars()];
    for _ in 0..100 {
        all_zero_frame(1.0, &mut rng, &mut llrs);
        let r = decode(g, &llrs, &w, &cfg, &mut scratch).unwrap();
        for i in 0..llrs.len() {
            let best = |bit: u32| {
                words
                    .iter()
                    .filter(|&&c| c >> i & 1 == bit)
                    .map(|&c| {
                        -(0..llrs.len())
                            .filter(|&j| c >> j & 1 == 1)
                            .map(|j| llrs[j])
                            .sum::<f64>()
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let maxlog = best(0) - best(1);
            assert!(
                (r.soft[i] - maxlog).abs() < 1e-9,
                "bit {i}: ms {} max-log {maxlog}",
                r.soft[i]
            );
        }
    }
}
