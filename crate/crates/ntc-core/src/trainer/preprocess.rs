//! Dataset ingestion: saturation rejection, pixel dequantization noise,
//! randomized area-averaging downsample and crop to training patches.

use crate::error::{NtcError, Result};
use crate::imageio::RawImage;
use crate::tensor::Tensor;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    /// Side length of the square training patches; must be a multiple of 16.
    pub patch_size: usize,
    /// Upper bound on the resampling factor (downsample to at most this
    /// fraction of the original size).
    pub max_resample: f64,
    /// Reject images with more than this fraction of samples at 0 or 255.
    pub saturation_threshold: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            patch_size: 64,
            max_resample: 0.75,
            saturation_threshold: 0.10,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 || !self.patch_size.is_multiple_of(16) {
            return Err(NtcError::Config(format!(
                "patch_size must be a positive multiple of 16, got {}",
                self.patch_size
            )));
        }
        if !(self.max_resample > 0.0 && self.max_resample <= 1.0) {
            return Err(NtcError::Config("max_resample must be in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.saturation_threshold) {
            return Err(NtcError::Config("saturation_threshold must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// An input image that produced no patch, with the reason.
#[derive(Debug, Clone)]
pub struct SkippedImage {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct PatchSet {
    /// Patches normalized to [0, 1] (plus sub-quantization noise).
    pub patches: Vec<Tensor>,
    pub skipped: Vec<SkippedImage>,
}

/// Turn raw images into training patches: reject over-saturated images, add
/// uniform dequantization noise in 8-bit units, downsample by a random
/// factor of at most `max_resample` (area averaging), crop at a random
/// position, normalize to [0, 1]. Deterministic under the seed; one patch
/// per surviving image.
pub fn preprocess_dataset(
    images: &[RawImage],
    config: &PreprocessConfig,
    seed: u64,
) -> Result<PatchSet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut patches = Vec::new();
    let mut skipped = Vec::new();
    let patch = config.patch_size;

    for (index, img) in images.iter().enumerate() {
        if img.saturation_fraction() > config.saturation_threshold {
            skipped.push(SkippedImage {
                index,
                reason: format!(
                    "saturated ({:.1}% of samples at 0 or 255)",
                    img.saturation_fraction() * 100.0
                ),
            });
            continue;
        }
        let f_low = (patch as f64 / img.width as f64).max(patch as f64 / img.height as f64);
        if f_low > config.max_resample {
            skipped.push(SkippedImage {
                index,
                reason: format!(
                    "too small ({}x{} cannot give a {patch}px patch at resampling <= {})",
                    img.width, img.height, config.max_resample
                ),
            });
            continue;
        }
        let factor = rng.random_range(f_low..=config.max_resample);

        // dequantization noise in 8-bit units, before resampling
        let mut planes: Vec<Vec<f64>> = (0..img.channels)
            .map(|c| {
                let mut p = Vec::with_capacity(img.width * img.height);
                for y in 0..img.height {
                    for x in 0..img.width {
                        p.push(img.sample(c, y, x) as f64);
                    }
                }
                p
            })
            .collect();
        for p in &mut planes {
            for v in p.iter_mut() {
                *v += rng.random::<f64>() - 0.5;
            }
        }

        let new_w = (img.width as f64 * factor).floor() as usize;
        let new_h = (img.height as f64 * factor).floor() as usize;
        let resampled: Vec<Vec<f64>> = planes
            .iter()
            .map(|p| area_downsample(p, img.width, img.height, new_w, new_h))
            .collect();

        let left = rng.random_range(0..=new_w - patch);
        let top = rng.random_range(0..=new_h - patch);
        let tensor = Tensor::from_fn(img.channels, patch, patch, |c, y, x| {
            resampled[c][(top + y) * new_w + (left + x)] / 255.0
        });
        patches.push(tensor);
    }
    Ok(PatchSet { patches, skipped })
}

/// Area-averaging resample of one plane to a strictly smaller size: each
/// output pixel is the mean of the source rectangle it covers, fractional
/// edges weighted by overlap.
fn area_downsample(src: &[f64], w: usize, h: usize, new_w: usize, new_h: usize) -> Vec<f64> {
    assert!(new_w <= w && new_h <= h && new_w > 0 && new_h > 0);
    let sx = w as f64 / new_w as f64;
    let sy = h as f64 / new_h as f64;
    let mut out = vec![0.0; new_w * new_h];
    for oy in 0..new_h {
        let y0 = oy as f64 * sy;
        let y1 = (oy + 1) as f64 * sy;
        let iy0 = y0.floor() as usize;
        let iy1 = (y1.ceil() as usize).min(h);
        for ox in 0..new_w {
            let x0 = ox as f64 * sx;
            let x1 = (ox + 1) as f64 * sx;
            let ix0 = x0.floor() as usize;
            let ix1 = (x1.ceil() as usize).min(w);
            let mut acc = 0.0;
            for iy in iy0..iy1 {
                let wy = (y1.min((iy + 1) as f64) - y0.max(iy as f64)).max(0.0);
                for ix in ix0..ix1 {
                    let wx = (x1.min((ix + 1) as f64) - x0.max(ix as f64)).max(0.0);
                    acc += wy * wx * src[iy * w + ix];
                }
            }
            out[oy * new_w + ox] = acc / ((y1 - y0) * (x1 - x0));
        }
    }
    out
}
