//! Learned lossy image compression by nonlinear transform coding.
//!
//! The pipeline: a multi-stage analysis transform (convolution,
//! downsampling, generalized divisive normalization) maps pixels into a
//! code space where uniform scalar quantization is cheap; a mirrored
//! synthesis transform (IGDN, upsampling, convolution) maps quantized codes
//! back to pixels. Training replaces the quantizer with additive uniform
//! noise so the weighted rate-distortion objective stays differentiable;
//! rates are modeled by per-channel piecewise-linear densities and realized
//! by an adaptive binary arithmetic coder.
//!
//! Modules:
//! * [`tensor`] / [`layers`] - the dense tensor type and the four primitive
//!   layers with forward and gradient evaluation,
//! * [`dct`] / [`transforms`] - the composed transforms with their raw
//!   (DCT-domain, reparameterized) parameter handling,
//! * [`density`] - non-parametric entropy models and their discretization,
//! * [`trainer`] - the relaxed objective, Adam loop and dataset pipeline,
//! * [`coder`] - the range coder, binarization and Golomb bypass,
//! * [`codec`] - compressed files, model containers and R-D reports,
//! * [`metrics`] - PSNR and MS-SSIM,
//! * [`imageio`] - PNG/PGM/PPM handling.

#![allow(clippy::needless_range_loop)]

pub mod codec;
pub mod coder;
pub mod dct;
pub mod density;
pub mod error;
pub mod imageio;
pub mod layers;
pub mod metrics;
pub mod tensor;
pub mod trainer;
pub mod transforms;

pub use codec::{
    compress, decompress, quantize, rd_curve, ModelContainer, ModelRegistry, QuantizedCode,
    TrainedModel,
};
pub use error::{NtcError, Result};
pub use tensor::Tensor;
pub use transforms::{ArchitectureSpec, ColorMode, TransformParams};
