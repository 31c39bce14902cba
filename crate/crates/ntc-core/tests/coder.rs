//! Entropy-coder verification: lossless roundtrips (including far
//! out-of-range values), codelength against the entropy oracle, bypass
//! cost, and the adaptive-vs-static comparison on shifted data.

mod common;

use common::{gauss, rng};
use ntc_core::codec::QuantizedCode;
use ntc_core::coder::{
    decode_code, encode_code, AdaptationMode, Context, RangeDecoder, RangeEncoder,
};
use ntc_core::density::DiscretePmf;
use proptest::prelude::*;
use rand::Rng;

fn gaussian_pmf(sigma: f64, center: i32, halfwidth: i32) -> DiscretePmf {
    let probs: Vec<f64> = (-halfwidth..=halfwidth)
        .map(|n| (-((n as f64) * (n as f64)) / (2.0 * sigma * sigma)).exp())
        .collect();
    DiscretePmf::new(center - halfwidth, probs).unwrap()
}

/// Draw one symbol from a PMF via inverse CDF.
fn draw(pmf: &DiscretePmf, r: &mut impl Rng) -> i32 {
    let u: f64 = r.random();
    let mut acc = 0.0;
    for n in pmf.q_min()..=pmf.q_max() {
        acc += pmf.prob(n);
        if u < acc {
            return n;
        }
    }
    pmf.q_max()
}

#[test]
fn static_cost_is_close_to_binary_entropy() {
    // coding bits with known probability p must cost about H(p) each
    let mut r = rng(1);
    for &p in &[0.1f64, 0.25, 0.5] {
        let n = 100_000;
        let ctx = Context::from_prob(p);
        let mut enc = RangeEncoder::new();
        let mut ones = 0usize;
        for _ in 0..n {
            let bit = r.random::<f64>() < p;
            ones += bit as usize;
            enc.encode_bit(&ctx, bit);
        }
        let payload = enc.finish();
        // entropy of the realized sequence
        let q = ones as f64 / n as f64;
        let h = -q * q.log2() - (1.0 - q) * (1.0 - q).log2();
        let bits_per_symbol = payload.len() as f64 * 8.0 / n as f64;
        assert!(
            (bits_per_symbol - h).abs() / h < 0.01,
            "p = {p}: {bits_per_symbol:.4} bits vs entropy {h:.4}"
        );
    }
}

#[test]
fn bypass_costs_one_bit() {
    let mut r = rng(2);
    let n = 100_000;
    let mut enc = RangeEncoder::new();
    for _ in 0..n {
        enc.encode_bypass(r.random::<bool>());
    }
    let payload = enc.finish();
    let per_bit = payload.len() as f64 * 8.0 / n as f64;
    assert!((per_bit - 1.0).abs() < 0.01, "bypass costs {per_bit} bits");
}

#[test]
fn roundtrip_over_many_random_tensors_with_outliers() {
    let mut r = rng(3);
    let pmfs = [
        gaussian_pmf(1.5, 0, 4),
        gaussian_pmf(0.7, -2, 3),
        gaussian_pmf(3.0, 1, 6),
    ];
    for case in 0..2_000 {
        let (h, w) = (1 + case % 4, 1 + (case / 4) % 5);
        let data: Vec<i32> = (0..3 * h * w)
            .map(|k| {
                let c = k / (h * w);
                if r.random::<f64>() < 0.05 {
                    // out-of-range excursions, occasionally extreme
                    let sign = if r.random::<bool>() { 1 } else { -1 };
                    sign * r.random_range(5..50_000)
                } else {
                    draw(&pmfs[c], &mut r)
                }
            })
            .collect();
        let q = QuantizedCode::from_vec(3, h, w, data).unwrap();
        let payload = encode_code(&q, &pmfs, AdaptationMode::Adaptive).unwrap();
        let back = decode_code(&payload, &pmfs, 3, h, w, AdaptationMode::Adaptive).unwrap();
        assert_eq!(q, back, "case {case}");
    }
}

#[test]
fn payload_tracks_entropy_codelength_on_model_distributed_data() {
    let mut r = rng(4);
    for (sigma, halfwidth) in [(0.6, 3), (1.5, 5), (4.0, 10)] {
        let pmf = gaussian_pmf(sigma, 0, halfwidth);
        let n = 200_000usize;
        let (h, w) = (400, 500);
        let data: Vec<i32> = (0..n).map(|_| draw(&pmf, &mut r)).collect();
        let ideal: f64 = data.iter().map(|&v| -pmf.prob(v).log2()).sum();
        let q = QuantizedCode::from_vec(1, h, w, data).unwrap();
        let payload = encode_code(&q, std::slice::from_ref(&pmf), AdaptationMode::Adaptive).unwrap();
        let limit = ideal * 1.02 + 32.0 * 8.0;
        assert!(
            (payload.len() as f64) * 8.0 <= limit,
            "sigma {sigma}: payload {} bits vs entropy codelength {ideal:.0}",
            payload.len() * 8
        );
    }
}

#[test]
fn static_seeding_achieves_the_model_codelength() {
    let mut r = rng(5);
    let pmf = gaussian_pmf(2.0, -1, 8);
    let n = 200_000usize;
    let data: Vec<i32> = (0..n).map(|_| draw(&pmf, &mut r)).collect();
    let ideal: f64 = data.iter().map(|&v| -pmf.prob(v).log2()).sum();
    let q = QuantizedCode::from_vec(1, 400, 500, data).unwrap();
    let payload = encode_code(&q, std::slice::from_ref(&pmf), AdaptationMode::Static).unwrap();
    assert!(
        (payload.len() as f64) * 8.0 <= ideal * 1.02 + 32.0 * 8.0,
        "static payload {} bits vs {ideal:.0}",
        payload.len() * 8
    );
}

#[test]
fn adaptive_beats_static_on_shifted_data() {
    // model says N(0, 2); data actually comes from N(1, 1.2)
    let seed_pmf = gaussian_pmf(2.0, 0, 8);
    let mut wins = 0;
    let trials = 100;
    for trial in 0..trials {
        let mut r = rng(1000 + trial);
        let n = 30_000usize;
        let data: Vec<i32> = (0..n)
            .map(|_| (1.0 + 1.2 * gauss(&mut r)).round() as i32)
            .collect();
        let q = QuantizedCode::from_vec(1, 150, 200, data).unwrap();
        let adaptive =
            encode_code(&q, std::slice::from_ref(&seed_pmf), AdaptationMode::Adaptive).unwrap();
        let fixed =
            encode_code(&q, std::slice::from_ref(&seed_pmf), AdaptationMode::Static).unwrap();
        if adaptive.len() < fixed.len() {
            wins += 1;
        }
    }
    assert!(wins >= 90, "adaptive won only {wins}/{trials} trials");
}

#[test]
fn decoder_rejects_truncated_and_garbage_payloads() {
    let pmf = gaussian_pmf(1.0, 0, 4);
    let mut r = rng(6);
    let data: Vec<i32> = (0..64).map(|_| draw(&pmf, &mut r)).collect();
    let q = QuantizedCode::from_vec(1, 8, 8, data).unwrap();
    let payload = encode_code(&q, std::slice::from_ref(&pmf), AdaptationMode::Adaptive).unwrap();
    assert!(decode_code(&payload[..2], std::slice::from_ref(&pmf), 1, 8, 8, AdaptationMode::Adaptive).is_err());
    // decoding a longer tensor than was encoded must fail, not hang
    assert!(decode_code(&payload, std::slice::from_ref(&pmf), 1, 64, 64, AdaptationMode::Adaptive).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Lossless roundtrip for arbitrary PMF shapes and arbitrary values.
    #[test]
    fn roundtrip_is_lossless(
        weights in proptest::collection::vec(1u32..1000, 1..12),
        q_min in -20i32..20,
        values in proptest::collection::vec(-1000i32..1000, 1..80),
    ) {
        let pmf = DiscretePmf::new(q_min, weights.iter().map(|&w| w as f64).collect()).unwrap();
        let n = values.len();
        let q = QuantizedCode::from_vec(1, 1, n, values).unwrap();
        let payload = encode_code(&q, std::slice::from_ref(&pmf), AdaptationMode::Adaptive).unwrap();
        let back = decode_code(&payload, std::slice::from_ref(&pmf), 1, 1, n, AdaptationMode::Adaptive).unwrap();
        prop_assert_eq!(q, back);
    }

    /// The coder core is symmetric for any probability and bit sequence.
    #[test]
    fn bit_level_roundtrip(p in 0.001f64..0.999, bits in proptest::collection::vec(any::<bool>(), 0..400)) {
        let mut enc_ctx = Context::from_prob(p);
        let mut enc = RangeEncoder::new();
        for &b in &bits {
            enc.encode_bit(&enc_ctx, b);
            enc_ctx.update(b);
        }
        let payload = enc.finish();
        let mut dec_ctx = Context::from_prob(p);
        let mut dec = RangeDecoder::new(&payload).unwrap();
        for &b in &bits {
            prop_assert_eq!(dec.decode_bit(&dec_ctx).unwrap(), b);
            dec_ctx.update(b);
        }
    }
}
