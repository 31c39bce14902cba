//! The end-user pipeline: pad, analyze, quantize, entropy-code with a
//! bypass header; and the inverse. Also the rate-distortion report over a
//! set of images.
//!
//! Compressed file layout ("NTCB", see docs/bitstream.md): 4 magic bytes,
//! then a bit-packed header (width 16 bits, height 16 bits, color flag
//! 1 bit, lambda index 16 bits, zero padding to the byte boundary), then
//! the arithmetic-coded payload. Header fields never touch the arithmetic
//! coder.

mod container;

pub use container::{ModelContainer, ModelRegistry, TrainedModel, CONTAINER_MAGIC};

use crate::coder::{decode_code, encode_code, AdaptationMode, BitReader, BitWriter};
use crate::error::{NtcError, Result};
use crate::imageio::RawImage;
use crate::metrics::{ms_ssim_with_scales, psnr, PsnrPlane};
use crate::tensor::Tensor;
use crate::transforms::{
    analysis_forward_eff, effective_transform, synthesis_forward_eff, ColorMode,
};
use serde::Serialize;

pub const FILE_MAGIC: &[u8; 4] = b"NTCB";
/// Input dims are padded to a multiple of this before the analysis
/// transform (the product of the stage sampling factors).
pub const PAD_MULTIPLE: usize = 16;

/// Integer code-space tensor with the same channel/spatial layout as the
/// continuous code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedCode {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<i32>,
}

impl QuantizedCode {
    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<i32>) -> Result<QuantizedCode> {
        if data.len() != channels * height * width {
            return Err(NtcError::Parameter(format!(
                "code data length {} does not match {}x{}x{}",
                data.len(),
                channels,
                height,
                width
            )));
        }
        Ok(QuantizedCode {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[i32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> i32 {
        self.data[(c * self.height + y) * self.width + x]
    }
}

/// Round each element to the nearest integer, ties away from zero.
pub fn quantize(y: &Tensor) -> Result<QuantizedCode> {
    if !y.all_finite() {
        return Err(NtcError::Numeric("cannot quantize non-finite code".into()));
    }
    let data: Vec<i32> = y.data().iter().map(|&v| v.round() as i32).collect();
    QuantizedCode::from_vec(y.channels(), y.height(), y.width(), data)
}

/// Reinterpret integers as real values (bin centers).
pub fn dequantize(q: &QuantizedCode) -> Tensor {
    Tensor::from_vec(
        q.channels,
        q.height,
        q.width,
        q.data.iter().map(|&v| v as f64).collect(),
    )
    .expect("shape is consistent by construction")
}

fn mirror_fold(mut i: isize, len: usize) -> usize {
    let n = len as isize;
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

fn pad_up(v: usize) -> usize {
    v.div_ceil(PAD_MULTIPLE) * PAD_MULTIPLE
}

/// Mirror-extend the image to dims divisible by 16 and normalize pixels
/// into the transform domain.
fn image_to_padded_tensor(img: &RawImage, norm_scale: f64) -> Tensor {
    let (pw, ph) = (pad_up(img.width), pad_up(img.height));
    Tensor::from_fn(img.channels, ph, pw, |c, y, x| {
        let sy = mirror_fold(y as isize, img.height);
        let sx = mirror_fold(x as isize, img.width);
        img.sample(c, sy, sx) as f64 / norm_scale
    })
}

struct FileHeader {
    width: u16,
    height: u16,
    color: ColorMode,
    lambda_index: u16,
}

fn write_header(h: &FileHeader) -> Vec<u8> {
    let mut out = Vec::with_capacity(16);
    out.extend_from_slice(FILE_MAGIC);
    let mut bits = BitWriter::new();
    bits.push_bits(h.width as u64, 16);
    bits.push_bits(h.height as u64, 16);
    bits.push_bit(matches!(h.color, ColorMode::Rgb));
    bits.push_bits(h.lambda_index as u64, 16);
    out.extend_from_slice(&bits.into_bytes());
    out
}

fn parse_header(bytes: &[u8]) -> Result<(FileHeader, usize)> {
    if bytes.len() < 4 || &bytes[..4] != FILE_MAGIC {
        return Err(NtcError::Corrupt("not an NTCB compressed file".into()));
    }
    let mut r = BitReader::new(&bytes[4..]);
    let width = r.read_bits(16)? as u16;
    let height = r.read_bits(16)? as u16;
    let color = if r.read_bit()? {
        ColorMode::Rgb
    } else {
        ColorMode::Grayscale
    };
    let lambda_index = r.read_bits(16)? as u16;
    r.align();
    if width == 0 || height == 0 {
        return Err(NtcError::Corrupt("zero image dimension in header".into()));
    }
    Ok((
        FileHeader {
            width,
            height,
            color,
            lambda_index,
        },
        4 + r.byte_offset(),
    ))
}

/// Compress an 8-bit image with the model at `lambda_index`.
pub fn compress(img: &RawImage, lambda_index: u16, registry: &ModelRegistry) -> Result<Vec<u8>> {
    let (container, model) = registry.resolve(lambda_index)?;
    if img.width > u16::MAX as usize || img.height > u16::MAX as usize {
        return Err(NtcError::Parameter(format!(
            "image {}x{} exceeds the 16-bit header dims",
            img.width, img.height
        )));
    }
    if img.width == 0 || img.height == 0 {
        return Err(NtcError::Parameter("empty image".into()));
    }
    if img.channels != container.spec.input_channels() {
        return Err(NtcError::Parameter(format!(
            "image has {} channels but the model expects {}",
            img.channels,
            container.spec.input_channels()
        )));
    }
    let x = image_to_padded_tensor(img, container.norm_scale);
    let eff_a = effective_transform(&container.spec, &model.analysis)?;
    let (y, _) = analysis_forward_eff(&x, &eff_a)?;
    let q = quantize(&y)?;
    let payload = encode_code(&q, &model.pmfs, AdaptationMode::Adaptive)?;
    let mut out = write_header(&FileHeader {
        width: img.width as u16,
        height: img.height as u16,
        color: container.spec.color,
        lambda_index,
    });
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Decompress an NTCB file back to an 8-bit image.
pub fn decompress(bytes: &[u8], registry: &ModelRegistry) -> Result<RawImage> {
    let (header, header_len) = parse_header(bytes)?;
    let (container, model) = registry.resolve(header.lambda_index)?;
    if header.color != container.spec.color {
        return Err(NtcError::Corrupt(format!(
            "file color mode {:?} does not match model {:?}",
            header.color, container.spec.color
        )));
    }
    let (pw, ph) = (pad_up(header.width as usize), pad_up(header.height as usize));
    let f = container.spec.total_factor();
    let (cw, chh) = (pw / f, ph / f);
    let q = decode_code(
        &bytes[header_len..],
        &model.pmfs,
        container.spec.code_channels(),
        chh,
        cw,
        AdaptationMode::Adaptive,
    )?;
    let eff_s = effective_transform(&container.spec, &model.synthesis)?;
    let (xhat, _) = synthesis_forward_eff(&dequantize(&q), &eff_s)?;
    let scaled = xhat.map(|v| v * container.norm_scale);
    let full = RawImage::from_tensor_8bit(&scaled)?;
    // crop the padding back off
    let (w, h) = (header.width as usize, header.height as usize);
    let mut data = vec![0u8; w * h * full.channels];
    for y in 0..h {
        for x in 0..w {
            for c in 0..full.channels {
                data[(y * w + x) * full.channels + c] = full.sample(c, y, x);
            }
        }
    }
    RawImage::new(w, h, full.channels, data)
}

/// One row of a rate-distortion report, averaged over the evaluated images.
/// Infinite PSNR (identical images) serializes as null.
#[derive(Debug, Clone, Serialize)]
pub struct RdCurvePoint {
    pub lambda_index: u16,
    pub lambda: f64,
    pub mean_rate_bpp: f64,
    pub mean_psnr_db: Option<f64>,
    pub mean_ms_ssim: f64,
    pub images: usize,
}

/// Compress and decompress every image at each lambda; rates come from the
/// actual file sizes (header included). PSNR is measured on the gray or
/// luma plane, MS-SSIM on luma with the given number of scales.
pub fn rd_curve(
    images: &[RawImage],
    registry: &ModelRegistry,
    lambda_indices: &[u16],
    ms_ssim_scales: usize,
) -> Result<Vec<RdCurvePoint>> {
    if images.is_empty() {
        return Err(NtcError::Parameter("no images to evaluate".into()));
    }
    let mut points = Vec::with_capacity(lambda_indices.len());
    for &li in lambda_indices {
        let (_, model) = registry.resolve(li)?;
        let mut bpp_sum = 0.0;
        let mut psnr_sum = 0.0;
        let mut ssim_sum = 0.0;
        for img in images {
            let file = compress(img, li, registry)?;
            let recon = decompress(&file, registry)?;
            bpp_sum += 8.0 * file.len() as f64 / (img.width * img.height) as f64;
            let plane = if img.channels == 1 {
                PsnrPlane::Gray
            } else {
                PsnrPlane::Luma
            };
            psnr_sum += psnr(img, &recon, plane)?;
            ssim_sum += ms_ssim_with_scales(img, &recon, ms_ssim_scales)?;
        }
        let n = images.len() as f64;
        let mean_psnr = psnr_sum / n;
        points.push(RdCurvePoint {
            lambda_index: li,
            lambda: model.lambda,
            mean_rate_bpp: bpp_sum / n,
            mean_psnr_db: mean_psnr.is_finite().then_some(mean_psnr),
            mean_ms_ssim: ssim_sum / n,
            images: images.len(),
        });
    }
    Ok(points)
}
