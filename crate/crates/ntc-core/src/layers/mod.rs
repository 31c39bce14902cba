//! The four primitive layers of the transforms: affine convolution,
//! down/upsampling, GDN and IGDN, each with forward and gradient evaluation.
//!
//! All layers are pure functions of their inputs; gradients are exact
//! (verified against central finite differences in the test suite).

mod conv;
mod gdn;
mod sample;

pub use conv::{
    conv2d, conv2d_backward, conv2d_downsample, conv2d_downsample_backward, upsample_conv2d,
    upsample_conv2d_backward, ConvGrads, ConvKernel, PaddingMode,
};
pub use gdn::{gdn_backward, gdn_forward, igdn_backward, igdn_forward, GdnGrads, GdnParams};
pub use sample::{downsample, upsample};
