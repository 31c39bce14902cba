//! Objective quality metrics: PSNR (gray, luma or chroma planes) and
//! multi-scale SSIM on the luma plane.
//!
//! Color images are converted with the JPEG RGB -> Y'CbCr matrix before
//! measuring. MS-SSIM follows the standard 5-scale construction: an 11x11
//! Gaussian window (sigma 1.5), contrast-structure terms on every scale,
//! the luminance term on the coarsest, combined with the canonical
//! exponents (0.0448, 0.2856, 0.3001, 0.2363, 0.1333). Statistics are
//! computed where the window fully fits, and scales are linked by 2x2 mean
//! downsampling, so two implementations of this description agree exactly.

use crate::error::{NtcError, Result};
use crate::imageio::RawImage;

/// Plane selector for PSNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsnrPlane {
    /// The single plane of a grayscale image.
    Gray,
    /// Y' of an RGB image (or the gray plane itself).
    Luma,
    /// Mean of the Cb and Cr MSEs.
    Chroma,
}

/// MS-SSIM exponents per scale.
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const DYNAMIC_RANGE: f64 = 255.0;
const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;

struct Plane {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl Plane {
    fn from_fn(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> Plane {
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                data.push(f(x, y));
            }
        }
        Plane { w, h, data }
    }
}

/// JPEG conversion: Y in [0,255], Cb/Cr centered on 128.
fn ycbcr(img: &RawImage) -> (Plane, Plane, Plane) {
    let f = |c: usize, x: usize, y: usize| img.sample(c, y, x) as f64;
    let yp = Plane::from_fn(img.width, img.height, |x, y| {
        0.299 * f(0, x, y) + 0.587 * f(1, x, y) + 0.114 * f(2, x, y)
    });
    let cb = Plane::from_fn(img.width, img.height, |x, y| {
        -0.168736 * f(0, x, y) - 0.331264 * f(1, x, y) + 0.5 * f(2, x, y) + 128.0
    });
    let cr = Plane::from_fn(img.width, img.height, |x, y| {
        0.5 * f(0, x, y) - 0.418688 * f(1, x, y) - 0.081312 * f(2, x, y) + 128.0
    });
    (yp, cb, cr)
}

fn luma_plane(img: &RawImage) -> Plane {
    if img.channels == 1 {
        Plane::from_fn(img.width, img.height, |x, y| img.sample(0, y, x) as f64)
    } else {
        ycbcr(img).0
    }
}

fn plane_mse(a: &Plane, b: &Plane) -> f64 {
    let n = a.data.len() as f64;
    a.data
        .iter()
        .zip(b.data.iter())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        / n
}

fn check_dims(reference: &RawImage, test: &RawImage) -> Result<()> {
    if reference.width != test.width
        || reference.height != test.height
        || reference.channels != test.channels
    {
        return Err(NtcError::Parameter(format!(
            "image dims differ: {}x{}x{} vs {}x{}x{}",
            reference.width,
            reference.height,
            reference.channels,
            test.width,
            test.height,
            test.channels
        )));
    }
    Ok(())
}

/// Peak signal-to-noise ratio, 10 log10(255^2 / MSE), in dB. Identical
/// planes give +infinity (reports serialize that as null).
pub fn psnr(reference: &RawImage, test: &RawImage, plane: PsnrPlane) -> Result<f64> {
    check_dims(reference, test)?;
    let mse = match plane {
        PsnrPlane::Gray | PsnrPlane::Luma if reference.channels == 1 => {
            let a = luma_plane(reference);
            let b = luma_plane(test);
            plane_mse(&a, &b)
        }
        PsnrPlane::Gray => {
            return Err(NtcError::Parameter(
                "gray plane requested for a color image".into(),
            ))
        }
        PsnrPlane::Luma => {
            let a = ycbcr(reference).0;
            let b = ycbcr(test).0;
            plane_mse(&a, &b)
        }
        PsnrPlane::Chroma => {
            if reference.channels != 3 {
                return Err(NtcError::Parameter(
                    "chroma plane requested for a grayscale image".into(),
                ));
            }
            let (_, cb_a, cr_a) = ycbcr(reference);
            let (_, cb_b, cr_b) = ycbcr(test);
            0.5 * (plane_mse(&cb_a, &cb_b) + plane_mse(&cr_a, &cr_b))
        }
    };
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (DYNAMIC_RANGE * DYNAMIC_RANGE / mse).log10())
}

fn gaussian_window() -> [f64; WINDOW] {
    let mut w = [0.0; WINDOW];
    let c = (WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (k, v) in w.iter_mut().enumerate() {
        let d = k as f64 - c;
        *v = (-d * d / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Separable Gaussian filtering, valid region only.
fn filter_valid(p: &Plane, win: &[f64; WINDOW]) -> Plane {
    let out_w = p.w - (WINDOW - 1);
    let out_h = p.h - (WINDOW - 1);
    // horizontal pass
    let mut hpass = vec![0.0; out_w * p.h];
    for y in 0..p.h {
        for x in 0..out_w {
            let mut acc = 0.0;
            for (k, &wk) in win.iter().enumerate() {
                acc += wk * p.data[y * p.w + x + k];
            }
            hpass[y * out_w + x] = acc;
        }
    }
    // vertical pass
    let mut data = vec![0.0; out_w * out_h];
    for y in 0..out_h {
        for x in 0..out_w {
            let mut acc = 0.0;
            for (k, &wk) in win.iter().enumerate() {
                acc += wk * hpass[(y + k) * out_w + x];
            }
            data[y * out_w + x] = acc;
        }
    }
    Plane {
        w: out_w,
        h: out_h,
        data,
    }
}

/// 2x2 non-overlapping mean downsampling (odd trailing row/column dropped).
fn downsample2(p: &Plane) -> Plane {
    let w = p.w / 2;
    let h = p.h / 2;
    Plane::from_fn(w, h, |x, y| {
        0.25 * (p.data[2 * y * p.w + 2 * x]
            + p.data[2 * y * p.w + 2 * x + 1]
            + p.data[(2 * y + 1) * p.w + 2 * x]
            + p.data[(2 * y + 1) * p.w + 2 * x + 1])
    })
}

fn product_plane(a: &Plane, b: &Plane) -> Plane {
    Plane {
        w: a.w,
        h: a.h,
        data: a
            .data
            .iter()
            .zip(b.data.iter())
            .map(|(x, y)| x * y)
            .collect(),
    }
}

/// Mean luminance and contrast-structure terms of one scale.
fn scale_terms(a: &Plane, b: &Plane, win: &[f64; WINDOW]) -> (f64, f64) {
    let c1 = (K1 * DYNAMIC_RANGE) * (K1 * DYNAMIC_RANGE);
    let c2 = (K2 * DYNAMIC_RANGE) * (K2 * DYNAMIC_RANGE);
    let mu_a = filter_valid(a, win);
    let mu_b = filter_valid(b, win);
    let aa = filter_valid(&product_plane(a, a), win);
    let bb = filter_valid(&product_plane(b, b), win);
    let ab = filter_valid(&product_plane(a, b), win);
    let n = mu_a.data.len();
    let mut lum = 0.0;
    let mut cs = 0.0;
    for k in 0..n {
        let (ma, mb) = (mu_a.data[k], mu_b.data[k]);
        let va = aa.data[k] - ma * ma;
        let vb = bb.data[k] - mb * mb;
        let cov = ab.data[k] - ma * mb;
        lum += (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        cs += (2.0 * cov + c2) / (va + vb + c2);
    }
    (lum / n as f64, cs / n as f64)
}

/// MS-SSIM on luma over the standard 5 dyadic scales. Requires dims of at
/// least 176 so the 11-tap window fits on the coarsest scale.
pub fn ms_ssim(reference: &RawImage, test: &RawImage) -> Result<f64> {
    ms_ssim_with_scales(reference, test, 5)
}

/// MS-SSIM over 1..=5 scales with the exponents renormalized to the used
/// prefix; an escape hatch for images smaller than 176x176.
pub fn ms_ssim_with_scales(reference: &RawImage, test: &RawImage, scales: usize) -> Result<f64> {
    check_dims(reference, test)?;
    if scales == 0 || scales > 5 {
        return Err(NtcError::Config(format!(
            "MS-SSIM supports 1 to 5 scales, got {scales}"
        )));
    }
    let min_dim = reference.width.min(reference.height);
    let needed = WINDOW << (scales - 1);
    if min_dim < needed {
        return Err(NtcError::Parameter(format!(
            "image {}x{} too small for {scales}-scale MS-SSIM (needs >= {needed}); \
             configure fewer scales",
            reference.width, reference.height
        )));
    }
    let win = gaussian_window();
    let weight_sum: f64 = MS_SSIM_WEIGHTS[..scales].iter().sum();
    let mut a = luma_plane(reference);
    let mut b = luma_plane(test);
    let mut score = 1.0;
    for scale in 0..scales {
        let (lum, cs) = scale_terms(&a, &b, &win);
        let exponent = MS_SSIM_WEIGHTS[scale] / weight_sum;
        score *= cs.max(0.0).powf(exponent);
        if scale == scales - 1 {
            score *= lum.max(0.0).powf(exponent);
        } else {
            a = downsample2(&a);
            b = downsample2(&b);
        }
    }
    Ok(score)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> RawImage {
        let mut data = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                data[y * w + x] = f(x, y);
            }
        }
        RawImage::new(w, h, 1, data).unwrap()
    }

    #[test]
    fn identical_images_have_infinite_psnr() {
        let img = gray(8, 8, |x, y| (x * 8 + y) as u8);
        assert_eq!(psnr(&img, &img, PsnrPlane::Gray).unwrap(), f64::INFINITY);
    }

    #[test]
    fn unit_mse_is_48_13_db() {
        let a = gray(16, 16, |_, _| 100);
        let b = gray(16, 16, |_, _| 101);
        let got = psnr(&a, &b, PsnrPlane::Gray).unwrap();
        assert!((got - 10.0 * 65025.0_f64.log10()).abs() < 1e-9);
        assert!((got - 48.1308).abs() < 1e-3);
    }

    #[test]
    fn full_swing_error_is_zero_db() {
        let a = gray(8, 8, |x, y| if (x + y) % 2 == 0 { 0 } else { 255 });
        let b = gray(8, 8, |x, y| if (x + y) % 2 == 0 { 255 } else { 0 });
        assert!(psnr(&a, &b, PsnrPlane::Gray).unwrap().abs() < 1e-12);
    }

    #[test]
    fn chroma_needs_color() {
        let a = gray(8, 8, |_, _| 7);
        assert!(psnr(&a, &a, PsnrPlane::Chroma).is_err());
    }

    #[test]
    fn luma_matches_jpeg_coefficients() {
        let mut data = vec![0u8; 3];
        data.copy_from_slice(&[255, 0, 0]);
        let a = RawImage::new(1, 1, 3, data).unwrap();
        let b = RawImage::new(1, 1, 3, vec![0, 0, 0]).unwrap();
        // luma difference is 0.299*255
        let expected_mse = (0.299_f64 * 255.0).powi(2);
        let got = psnr(&a, &b, PsnrPlane::Luma).unwrap();
        assert!((got - 10.0 * (65025.0 / expected_mse).log10()).abs() < 1e-9);
    }

    #[test]
    fn ms_ssim_identical_is_one() {
        let img = gray(176, 176, |x, y| ((x * 3 + y * 5) % 251) as u8);
        let s = ms_ssim(&img, &img).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ms_ssim_is_symmetric() {
        let a = gray(176, 176, |x, y| ((x * x + y) % 256) as u8);
        let b = gray(176, 176, |x, y| ((x * 2 + y * y) % 256) as u8);
        let s1 = ms_ssim(&a, &b).unwrap();
        let s2 = ms_ssim(&b, &a).unwrap();
        assert!((s1 - s2).abs() < 1e-12);
        assert!(s1 > 0.0 && s1 < 1.0);
    }

    #[test]
    fn ms_ssim_rejects_small_images() {
        let img = gray(64, 64, |_, _| 1);
        assert!(ms_ssim(&img, &img).is_err());
        // but fewer scales work
        let s = ms_ssim_with_scales(&img, &img, 3).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }
}
