//! 8-bit image loading/saving (PNG and binary PGM/PPM) and conversion to
//! and from tensors.

use crate::error::{NtcError, Result};
use crate::tensor::Tensor;
use std::path::Path;

/// 8-bit image, interleaved row-major samples, 1 (gray) or 3 (RGB) channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl RawImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<RawImage> {
        if channels != 1 && channels != 3 {
            return Err(NtcError::Parameter(format!(
                "images must have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(NtcError::Parameter(format!(
                "image data length {} does not match {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        Ok(RawImage {
            width,
            height,
            channels,
            data,
        })
    }

    #[inline]
    pub fn sample(&self, c: usize, y: usize, x: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Fraction of samples at 0 or 255.
    pub fn saturation_fraction(&self) -> f64 {
        let saturated = self.data.iter().filter(|&&v| v == 0 || v == 255).count();
        saturated as f64 / self.data.len() as f64
    }

    /// Planar tensor with values in 0..=255.
    pub fn to_tensor_8bit(&self) -> Tensor {
        Tensor::from_fn(self.channels, self.height, self.width, |c, y, x| {
            self.sample(c, y, x) as f64
        })
    }

    /// Clamp to [0, 255], round to nearest (ties away from zero), pack.
    pub fn from_tensor_8bit(t: &Tensor) -> Result<RawImage> {
        let (c, h, w) = t.shape();
        let mut data = vec![0u8; c * h * w];
        for ch in 0..c {
            for y in 0..h {
                for x in 0..w {
                    data[(y * w + x) * c + ch] = t.get(ch, y, x).clamp(0.0, 255.0).round() as u8;
                }
            }
        }
        RawImage::new(w, h, c, data)
    }
}

pub fn load_image(path: &Path) -> Result<RawImage> {
    let img = image::open(path)?;
    let raw = match img.color().has_color() {
        true => {
            let rgb = img.to_rgb8();
            RawImage::new(
                rgb.width() as usize,
                rgb.height() as usize,
                3,
                rgb.into_raw(),
            )?
        }
        false => {
            let gray = img.to_luma8();
            RawImage::new(
                gray.width() as usize,
                gray.height() as usize,
                1,
                gray.into_raw(),
            )?
        }
    };
    Ok(raw)
}

pub fn save_image(path: &Path, img: &RawImage) -> Result<()> {
    let color = match img.channels {
        1 => image::ColorType::L8,
        3 => image::ColorType::Rgb8,
        _ => unreachable!(),
    };
    image::save_buffer(
        path,
        &img.data,
        img.width as u32,
        img.height as u32,
        color,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_roundtrip() {
        let img = RawImage::new(3, 2, 1, vec![0, 128, 255, 10, 20, 30]).unwrap();
        let t = img.to_tensor_8bit();
        assert_eq!(t.get(0, 0, 1), 128.0);
        let back = RawImage::from_tensor_8bit(&t).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn from_tensor_clamps() {
        let t = Tensor::from_vec(1, 1, 3, vec![-5.0, 260.0, 99.6]).unwrap();
        let img = RawImage::from_tensor_8bit(&t).unwrap();
        assert_eq!(img.data, vec![0, 255, 100]);
    }

    #[test]
    fn saturation_fraction_counts_extremes() {
        let img = RawImage::new(2, 2, 1, vec![0, 255, 128, 64]).unwrap();
        assert!((img.saturation_fraction() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn png_and_pnm_file_roundtrip() {
        let dir = std::env::temp_dir();
        let img = RawImage::new(
            5,
            4,
            3,
            (0..60).map(|k| (k * 4) as u8).collect(),
        )
        .unwrap();
        for name in ["ntc_io_test.png", "ntc_io_test.ppm"] {
            let path = dir.join(name);
            save_image(&path, &img).unwrap();
            let back = load_image(&path).unwrap();
            assert_eq!(img, back, "roundtrip through {name}");
            let _ = std::fs::remove_file(&path);
        }
        let gray = RawImage::new(4, 4, 1, (0..16).map(|k| (k * 16) as u8).collect()).unwrap();
        let path = dir.join("ntc_io_test.pgm");
        save_image(&path, &gray).unwrap();
        assert_eq!(load_image(&path).unwrap(), gray);
        let _ = std::fs::remove_file(&path);
    }
}
