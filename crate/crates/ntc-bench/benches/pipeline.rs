//! Benchmarks for the transform, coder and codec hot paths.

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use ntc_core::codec::{compress, decompress, ModelContainer, ModelRegistry, QuantizedCode, TrainedModel};
use ntc_core::coder::{encode_code, AdaptationMode, Context, RangeEncoder};
use ntc_core::density::{DiscretePmf, FitObjective, MarginalDensity};
use ntc_core::imageio::RawImage;
use ntc_core::layers::{gdn_forward, GdnParams};
use ntc_core::tensor::Tensor;
use ntc_core::trainer::{relaxed_loss, relaxed_loss_backward, NoiseSource};
use ntc_core::transforms::{
    analysis_forward_eff, effective_transform, init_params, synthesis_forward_eff,
    ArchitectureSpec, ColorMode,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn test_image(seed: u64, size: usize) -> Tensor {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tensor::zeros(1, size, size);
    let mut v = 0.5;
    for x in t.data_mut() {
        v = 0.95 * v + 0.05 * r.random_range(0.0..1.0);
        *x = v;
    }
    t
}

fn fixture_registry() -> (ModelRegistry, RawImage) {
    let spec = ArchitectureSpec::with_channels(8, ColorMode::Grayscale);
    let (phi, theta) = init_params(&spec, 1).unwrap();
    let densities: Vec<MarginalDensity> = (0..8)
        .map(|c| {
            let mut d = MarginalDensity::uniform(-6.0, 6.0, c).unwrap();
            let shaped: Vec<f64> = (0..d.samples().len())
                .map(|k| {
                    let t = -6.0 + k as f64 * 0.1;
                    (-t * t / 4.5).exp()
                })
                .collect();
            d = MarginalDensity::from_parts(-60, shaped, c).unwrap();
            d.fit_step(&[], 0.0, FitObjective::Likelihood);
            d
        })
        .collect();
    let model = TrainedModel::from_parts(0, 100.0, phi, theta, densities).unwrap();
    let mut container = ModelContainer::new(spec);
    container.push_model(model).unwrap();
    let mut registry = ModelRegistry::new();
    registry.push(container);
    let img =
        RawImage::from_tensor_8bit(&test_image(9, 176).map(|v| v * 255.0)).unwrap();
    (registry, img)
}

fn bench_transforms(c: &mut Criterion) {
    let spec = ArchitectureSpec::with_channels(8, ColorMode::Grayscale);
    let (phi, theta) = init_params(&spec, 2).unwrap();
    let eff_a = effective_transform(&spec, &phi).unwrap();
    let eff_s = effective_transform(&spec, &theta).unwrap();
    let x = test_image(3, 64);
    let mut group = c.benchmark_group("transforms");
    group.throughput(Throughput::Elements((64 * 64) as u64));
    group.bench_function("analysis_forward_64", |b| {
        b.iter(|| analysis_forward_eff(black_box(&x), &eff_a).unwrap())
    });
    let (y, _) = analysis_forward_eff(&x, &eff_a).unwrap();
    group.bench_function("synthesis_forward_64", |b| {
        b.iter(|| synthesis_forward_eff(black_box(&y), &eff_s).unwrap())
    });
    group.finish();
}

fn bench_training_step(c: &mut Criterion) {
    let spec = ArchitectureSpec::with_channels(8, ColorMode::Grayscale);
    let (phi, theta) = init_params(&spec, 4).unwrap();
    let densities: Vec<MarginalDensity> = (0..8)
        .map(|ch| MarginalDensity::uniform(-6.0, 6.0, ch).unwrap())
        .collect();
    let batch: Vec<Tensor> = (0..8).map(|k| test_image(10 + k, 64)).collect();
    let mut noise = NoiseSource::new(5);
    let noise_tensors: Vec<Tensor> = (0..8).map(|_| noise.tensor(8, 4, 4)).collect();
    let mut group = c.benchmark_group("training");
    group.sample_size(20);
    group.bench_function("loss_and_gradients_batch8_64px", |b| {
        b.iter(|| {
            let eval = relaxed_loss(
                &spec,
                &phi,
                &theta,
                &densities,
                black_box(100.0),
                &batch,
                &noise_tensors,
            )
            .unwrap();
            relaxed_loss_backward(&spec, &phi, &theta, &densities, &eval).unwrap()
        })
    });
    group.finish();
}

fn bench_gdn(c: &mut Criterion) {
    let channels = 32;
    let w = test_image(6, 32);
    let w = Tensor::from_fn(channels, 32, 32, |ch, y, x| {
        w.get(0, y, x) * (1.0 + ch as f64 * 0.01)
    });
    let beta = vec![0.5; channels];
    let packed = vec![0.05; GdnParams::packed_len(channels)];
    let params = GdnParams::from_packed(beta, packed).unwrap();
    let mut group = c.benchmark_group("layers");
    group.throughput(Throughput::Elements((channels * 32 * 32) as u64));
    group.bench_function("gdn_forward_32ch_32px", |b| {
        b.iter(|| gdn_forward(black_box(&w), &params).unwrap())
    });
    group.finish();
}

fn bench_coder(c: &mut Criterion) {
    let mut group = c.benchmark_group("coder");
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let bits: Vec<bool> = (0..100_000).map(|_| r.random::<f64>() < 0.2).collect();
    group.throughput(Throughput::Elements(bits.len() as u64));
    group.bench_function("encode_bits_p02", |b| {
        b.iter(|| {
            let mut ctx = Context::from_prob(0.2);
            let mut enc = RangeEncoder::new();
            for &bit in &bits {
                enc.encode_bit(&ctx, bit);
                ctx.update(bit);
            }
            black_box(enc.finish())
        })
    });

    let probs: Vec<f64> = (-6..=6)
        .map(|n| (-(n as f64) * (n as f64) / 6.0_f64).exp())
        .collect();
    let pmf = DiscretePmf::new(-6, probs).unwrap();
    let symbols: Vec<i32> = (0..50_000)
        .map(|_| {
            let u: f64 = r.random();
            let mut acc = 0.0;
            for n in pmf.q_min()..=pmf.q_max() {
                acc += pmf.prob(n);
                if u < acc {
                    return n;
                }
            }
            0
        })
        .collect();
    let q = QuantizedCode::from_vec(1, 200, 250, symbols).unwrap();
    group.throughput(Throughput::Elements(50_000));
    group.bench_function("encode_code_50k_symbols", |b| {
        b.iter(|| encode_code(black_box(&q), std::slice::from_ref(&pmf), AdaptationMode::Adaptive).unwrap())
    });
    group.finish();
}

fn bench_codec(c: &mut Criterion) {
    let (registry, img) = fixture_registry();
    let file = compress(&img, 0, &registry).unwrap();
    let mut group = c.benchmark_group("codec");
    group.sample_size(20);
    group.throughput(Throughput::Elements((img.width * img.height) as u64));
    group.bench_function("compress_176", |b| {
        b.iter(|| compress(black_box(&img), 0, &registry).unwrap())
    });
    group.bench_function("decompress_176", |b| {
        b.iter(|| decompress(black_box(&file), &registry).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_transforms,
    bench_training_step,
    bench_gdn,
    bench_coder,
    bench_codec
);
criterion_main!(benches);
