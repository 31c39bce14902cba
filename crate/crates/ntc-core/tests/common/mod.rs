//! Shared test machinery: independent oracles (naive convolution, finite
//! differences, a clean-room MS-SSIM), deterministic synthetic images, and
//! statistical helpers. Everything here is deliberately written the
//! straightforward way, independent of the library's optimized paths.

#![allow(dead_code)]

use ntc_core::codec::{ModelContainer, ModelRegistry, TrainedModel};
use ntc_core::density::{FitObjective, MarginalDensity};
use ntc_core::imageio::RawImage;
use ntc_core::layers::{ConvKernel, PaddingMode};
use ntc_core::tensor::Tensor;
use ntc_core::transforms::{init_params, ArchitectureSpec, ColorMode};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_tensor(r: &mut ChaCha8Rng, c: usize, h: usize, w: usize, scale: f64) -> Tensor {
    let mut t = Tensor::zeros(c, h, w);
    for v in t.data_mut() {
        *v = r.random_range(-scale..scale);
    }
    t
}

pub fn rand_kernel(
    r: &mut ChaCha8Rng,
    out_c: usize,
    in_c: usize,
    kh: usize,
    kw: usize,
) -> ConvKernel {
    let weights = (0..out_c * in_c * kh * kw)
        .map(|_| r.random_range(-1.0..1.0))
        .collect();
    let bias = (0..out_c).map(|_| r.random_range(-0.5..0.5)).collect();
    ConvKernel::new(out_c, in_c, kh, kw, weights, bias).unwrap()
}

/// Standard normal via Box-Muller.
pub fn gauss(r: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = r.random::<f64>().max(1e-300);
    let u2: f64 = r.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// ||a - b|| / max(||a||, ||b||), the relative error between two gradient
/// vectors.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let denom = na.max(nb);
    if denom == 0.0 {
        diff
    } else {
        diff / denom
    }
}

pub const FD_STEP: f64 = 1e-4;

/// Central finite difference of a scalar function along one coordinate.
pub fn central_diff(mut f: impl FnMut(f64) -> f64, x: f64) -> f64 {
    (f(x + FD_STEP) - f(x - FD_STEP)) / (2.0 * FD_STEP)
}

fn mirror(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Quadruple-loop convolution oracle, written directly from the definition:
/// out(i, m, n) = sum_j sum_{a,b in [-r, r]} h_ij(a, b) u_j(m - a, n - b) + c_i
/// with border reads resolved by the padding mode.
pub fn naive_conv2d(input: &Tensor, kernel: &ConvKernel, padding: PaddingMode) -> Tensor {
    let (in_c, h, w) = input.shape();
    let (kh, kw) = (kernel.kernel_height(), kernel.kernel_width());
    let (rh, rw) = ((kh / 2) as isize, (kw / 2) as isize);
    let mut out = Tensor::zeros(kernel.out_channels(), h, w);
    for i in 0..kernel.out_channels() {
        for m in 0..h as isize {
            for n in 0..w as isize {
                let mut acc = kernel.bias()[i];
                for j in 0..in_c {
                    for a in -rh..=rh {
                        for b in -rw..=rw {
                            let tap = kernel.weights()[((i * in_c + j) * kh
                                + (a + rh) as usize)
                                * kw
                                + (b + rw) as usize];
                            let (sy, sx) = (m - a, n - b);
                            let v = match padding {
                                PaddingMode::Mirror => {
                                    input.get(j, mirror(sy, h), mirror(sx, w))
                                }
                                PaddingMode::Zero => {
                                    if sy < 0 || sy >= h as isize || sx < 0 || sx >= w as isize {
                                        0.0
                                    } else {
                                        input.get(j, sy as usize, sx as usize)
                                    }
                                }
                            };
                            acc += tap * v;
                        }
                    }
                }
                out.set(i, m as usize, n as usize, acc);
            }
        }
    }
    out
}

/// Deterministic smooth grayscale test image: oriented waves plus Gaussian
/// blobs, values in (0, 1).
pub fn synth_tensor(seed: u64, size: usize) -> Tensor {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
    let mut next = move || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 33) as f64 / (1u64 << 31) as f64
    };
    let waves: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                next() * 0.12 + 0.008,
                next() * std::f64::consts::PI,
                next() * std::f64::consts::TAU,
                next() * 0.25 + 0.04,
            )
        })
        .collect();
    let blobs: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                next() * size as f64,
                next() * size as f64,
                next() * 28.0 + 9.0,
                (next() - 0.5) * 0.7,
            )
        })
        .collect();
    Tensor::from_fn(1, size, size, |_, y, x| {
        let (xf, yf) = (x as f64, y as f64);
        let mut v = 0.5;
        for &(f, ang, ph, amp) in &waves {
            v += amp
                * ((xf * ang.cos() + yf * ang.sin()) * f * std::f64::consts::TAU + ph).sin()
                * 0.35;
        }
        for &(cx, cy, r, amp) in &blobs {
            let d2 = (xf - cx) * (xf - cx) + (yf - cy) * (yf - cy);
            v += amp * (-d2 / (2.0 * r * r)).exp();
        }
        v.clamp(0.02, 0.98)
    })
}

/// The same synthetic content quantized to an 8-bit grayscale image.
pub fn synth_image(seed: u64, size: usize) -> RawImage {
    let t = synth_tensor(seed, size).map(|v| v * 255.0);
    RawImage::from_tensor_8bit(&t).unwrap()
}

/// Fit a channel density to draws from N(mu, sigma^2) + U(-1/2, 1/2) using
/// step sizes 10/k, which makes the fitted spline the uniform average of
/// the per-chunk interpolation histograms (the initial uniform retains a
/// weight of one part in the number of chunks).
pub fn fit_gaussian_density(sigma: f64, mu: f64, total: usize, seed: u64) -> MarginalDensity {
    fit_gaussian_density_chunked(sigma, mu, total, 10_000, seed)
}

pub fn fit_gaussian_density_chunked(
    sigma: f64,
    mu: f64,
    total: usize,
    chunk: usize,
    seed: u64,
) -> MarginalDensity {
    let lo = mu - 4.0 * sigma - 1.5;
    let hi = mu + 4.0 * sigma + 1.5;
    let mut d = MarginalDensity::uniform(lo, hi, 0).unwrap();
    let mut r = rng(seed);
    let mut buf = vec![0.0; chunk];
    for k in 1..=(total / chunk) {
        for v in buf.iter_mut() {
            *v = mu + sigma * gauss(&mut r) + r.random::<f64>() - 0.5;
        }
        d.fit_step(&buf, 10.0 / k as f64, FitObjective::Likelihood);
    }
    d
}

/// Deterministic untrained fixture model: seeded transforms plus
/// hand-shaped Gaussian densities over [-6, 6]. Decoding does not care
/// whether the model was trained, so this is enough to exercise the codec.
pub fn fixture_container(seed: u64) -> ModelContainer {
    let spec = ArchitectureSpec::shrunken(3, ColorMode::Grayscale);
    let (phi, theta) = init_params(&spec, seed).unwrap();
    let densities: Vec<MarginalDensity> = (0..3)
        .map(|c| {
            let sigma = 1.0 + 0.4 * c as f64;
            let shaped: Vec<f64> = (0..121)
                .map(|k| {
                    let t = -6.0 + k as f64 * 0.1;
                    (-t * t / (2.0 * sigma * sigma)).exp()
                })
                .collect();
            let mut d = MarginalDensity::from_parts(-60, shaped, c).unwrap();
            d.fit_step(&[], 0.0, FitObjective::Likelihood); // renormalize only
            d
        })
        .collect();
    let model = TrainedModel::from_parts(0, 256.0, phi, theta, densities).unwrap();
    let mut container = ModelContainer::new(spec);
    container.push_model(model).unwrap();
    container
}

pub fn fixture_registry(seed: u64) -> ModelRegistry {
    let mut reg = ModelRegistry::new();
    reg.push(fixture_container(seed));
    reg
}

/// Standard normal CDF (Abramowitz & Stegun 7.1.26 erf approximation,
/// absolute error < 1.5e-7).
pub fn normal_cdf(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.3275911 * z.abs());
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = 1.0 - poly * (-z * z).exp();
    let erf = if z < 0.0 { -erf } else { erf };
    0.5 * (1.0 + erf)
}

/// One-sample Kolmogorov-Smirnov p-value against U(-1/2, 1/2), using the
/// asymptotic Kolmogorov distribution.
pub fn ks_uniform_pvalue(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let cdf = (x + 0.5).clamp(0.0, 1.0);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((cdf - lo).abs()).max((hi - cdf).abs());
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
    }
    p.clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// Clean-room MS-SSIM reference: direct nested loops, no shared code with the
// library implementation. Follows the same written description: 11x11
// Gaussian window (sigma 1.5), valid region, 2x2 mean downsampling,
// contrast-structure on all scales, luminance on the last, canonical
// exponents renormalized over the used scales.
// ---------------------------------------------------------------------------

pub fn reference_ms_ssim(a: &RawImage, b: &RawImage, scales: usize) -> f64 {
    assert_eq!(a.width, b.width);
    assert_eq!(a.height, b.height);
    let to_luma = |img: &RawImage| -> Vec<Vec<f64>> {
        let mut p = vec![vec![0.0; img.width]; img.height];
        for y in 0..img.height {
            for x in 0..img.width {
                p[y][x] = if img.channels == 1 {
                    img.sample(0, y, x) as f64
                } else {
                    0.299 * img.sample(0, y, x) as f64
                        + 0.587 * img.sample(1, y, x) as f64
                        + 0.114 * img.sample(2, y, x) as f64
                };
            }
        }
        p
    };
    let mut pa = to_luma(a);
    let mut pb = to_luma(b);

    let weights = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
    let wsum: f64 = weights[..scales].iter().sum();
    let c1 = (0.01 * 255.0_f64).powi(2);
    let c2 = (0.03 * 255.0_f64).powi(2);

    let mut window = [[0.0; 11]; 11];
    let mut wn = 0.0;
    for (i, row) in window.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            let (dy, dx) = (i as f64 - 5.0, j as f64 - 5.0);
            *w = (-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5)).exp();
            wn += *w;
        }
    }
    for row in window.iter_mut() {
        for w in row.iter_mut() {
            *w /= wn;
        }
    }

    let mut score = 1.0;
    for scale in 0..scales {
        let h = pa.len();
        let w = pa[0].len();
        let mut lum_sum = 0.0;
        let mut cs_sum = 0.0;
        let mut count = 0usize;
        for oy in 0..h - 10 {
            for ox in 0..w - 10 {
                let (mut ma, mut mb) = (0.0, 0.0);
                let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let va = pa[oy + i][ox + j];
                        let vb = pb[oy + i][ox + j];
                        let wt = window[i][j];
                        ma += wt * va;
                        mb += wt * vb;
                        saa += wt * va * va;
                        sbb += wt * vb * vb;
                        sab += wt * va * vb;
                    }
                }
                let va = saa - ma * ma;
                let vb = sbb - mb * mb;
                let cov = sab - ma * mb;
                lum_sum += (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
                cs_sum += (2.0 * cov + c2) / (va + vb + c2);
                count += 1;
            }
        }
        let lum = lum_sum / count as f64;
        let cs = cs_sum / count as f64;
        let e = weights[scale] / wsum;
        score *= cs.max(0.0).powf(e);
        if scale == scales - 1 {
            score *= lum.max(0.0).powf(e);
        } else {
            let (nh, nw) = (h / 2, w / 2);
            let mut na = vec![vec![0.0; nw]; nh];
            let mut nb = vec![vec![0.0; nw]; nh];
            for y in 0..nh {
                for x in 0..nw {
                    na[y][x] = 0.25
                        * (pa[2 * y][2 * x]
                            + pa[2 * y][2 * x + 1]
                            + pa[2 * y + 1][2 * x]
                            + pa[2 * y + 1][2 * x + 1]);
                    nb[y][x] = 0.25
                        * (pb[2 * y][2 * x]
                            + pb[2 * y][2 * x + 1]
                            + pb[2 * y + 1][2 * x]
                            + pb[2 * y + 1][2 * x + 1]);
                }
            }
            pa = na;
            pb = nb;
        }
    }
    score
}
