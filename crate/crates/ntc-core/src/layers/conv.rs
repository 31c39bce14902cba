//! Same-size affine 2-D convolution with centered, odd-sized kernels.
//!
//! The convolution is a true convolution (kernel tap (p, q) multiplies the
//! input at offset -(p - radius)), matching the transform definition the
//! rest of the crate is built on. Border samples are read through the
//! selected padding mode; mirror padding reflects the signal with edge
//! repetition, so a width-1 plane is still well defined for any kernel.
//!
//! Besides the plain layer there are fused variants that evaluate the
//! convolution only on the sampling lattice (conv followed by downsampling,
//! or upsampling followed by conv). They compute exactly the same values as
//! the composed primitives and exist purely to skip the discarded positions.

use crate::error::{NtcError, Result};
use crate::tensor::Tensor;

/// Border handling for same-size convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaddingMode {
    /// Symmetric reflection with edge repetition: x[-1] reads x[0],
    /// x[len] reads x[len-1].
    Mirror,
    /// Out-of-range samples read as zero.
    Zero,
}

/// Convolution filter bank with one bias per output channel.
///
/// `weights[((i * in + j) * kh + p) * kw + q]` is the tap of output channel
/// `i`, input channel `j` at kernel position (p, q).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    out_channels: usize,
    in_channels: usize,
    kernel_height: usize,
    kernel_width: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl ConvKernel {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        kernel_height: usize,
        kernel_width: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<ConvKernel> {
        if kernel_height.is_multiple_of(2) || kernel_width.is_multiple_of(2) {
            return Err(NtcError::Parameter(format!(
                "kernel dims must be odd, got {}x{}",
                kernel_height, kernel_width
            )));
        }
        if weights.len() != out_channels * in_channels * kernel_height * kernel_width {
            return Err(NtcError::Parameter(format!(
                "kernel weights length {} does not match {}x{}x{}x{}",
                weights.len(),
                out_channels,
                in_channels,
                kernel_height,
                kernel_width
            )));
        }
        if bias.len() != out_channels {
            return Err(NtcError::Parameter(format!(
                "bias length {} does not match {} output channels",
                bias.len(),
                out_channels
            )));
        }
        Ok(ConvKernel {
            out_channels,
            in_channels,
            kernel_height,
            kernel_width,
            weights,
            bias,
        })
    }

    pub fn zeros(
        out_channels: usize,
        in_channels: usize,
        kernel_height: usize,
        kernel_width: usize,
    ) -> Result<ConvKernel> {
        ConvKernel::new(
            out_channels,
            in_channels,
            kernel_height,
            kernel_width,
            vec![0.0; out_channels * in_channels * kernel_height * kernel_width],
            vec![0.0; out_channels],
        )
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn kernel_height(&self) -> usize {
        self.kernel_height
    }

    pub fn kernel_width(&self) -> usize {
        self.kernel_width
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    #[inline]
    fn weight(&self, i: usize, j: usize, p: usize, q: usize) -> f64 {
        self.weights[((i * self.in_channels + j) * self.kernel_height + p) * self.kernel_width + q]
    }
}

/// Gradients of a convolution with respect to its kernel.
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

const OOR: usize = usize::MAX;

fn mirror_index(mut i: isize, len: usize) -> usize {
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

/// Per-(output position, tap) source index table. Entry `[m * k + p]` holds
/// the input index read by output `m` through tap `p`, or `OOR` for zero
/// padding out of range. `stride` is the sampling step between outputs.
fn index_map(
    out_len: usize,
    stride: usize,
    k: usize,
    radius: usize,
    in_len: usize,
    padding: PaddingMode,
) -> Vec<usize> {
    let mut map = vec![0usize; out_len * k];
    for m in 0..out_len {
        for p in 0..k {
            let src = (stride * m + radius) as isize - p as isize;
            map[m * k + p] = if src >= 0 && (src as usize) < in_len {
                src as usize
            } else {
                match padding {
                    PaddingMode::Mirror => mirror_index(src, in_len),
                    PaddingMode::Zero => OOR,
                }
            };
        }
    }
    map
}

fn check_conv_shapes(input: &Tensor, kernel: &ConvKernel) -> Result<()> {
    if input.channels() != kernel.in_channels() {
        return Err(NtcError::Parameter(format!(
            "input has {} channels but kernel expects {}",
            input.channels(),
            kernel.in_channels()
        )));
    }
    Ok(())
}

/// Affine convolution: out_i = sum_j (h_ij * u_j) + c_i, same spatial size.
pub fn conv2d(input: &Tensor, kernel: &ConvKernel, padding: PaddingMode) -> Result<Tensor> {
    conv2d_downsample(input, kernel, 1, padding)
}

/// Gradients of `sum(grad_out ⊙ conv2d(input))` w.r.t. input, weights, bias.
pub fn conv2d_backward(
    input: &Tensor,
    kernel: &ConvKernel,
    padding: PaddingMode,
    grad_out: &Tensor,
) -> Result<(Tensor, ConvGrads)> {
    conv2d_downsample_backward(input, kernel, 1, padding, grad_out)
}

/// `downsample(conv2d(input, kernel), factor)` evaluated only on the kept
/// lattice positions.
pub fn conv2d_downsample(
    input: &Tensor,
    kernel: &ConvKernel,
    factor: usize,
    padding: PaddingMode,
) -> Result<Tensor> {
    check_conv_shapes(input, kernel)?;
    if factor == 0 {
        return Err(NtcError::Parameter("sampling factor must be >= 1".into()));
    }
    let (in_ch, h, w) = input.shape();
    if !h.is_multiple_of(factor) || !w.is_multiple_of(factor) {
        return Err(NtcError::Parameter(format!(
            "dims {}x{} not divisible by sampling factor {}",
            h, w, factor
        )));
    }
    let (kh, kw) = (kernel.kernel_height(), kernel.kernel_width());
    let (rh, rw) = (kh / 2, kw / 2);
    let (out_h, out_w) = (h / factor, w / factor);
    let my = index_map(out_h, factor, kh, rh, h, padding);
    let nx = index_map(out_w, factor, kw, rw, w, padding);

    let mut out = Tensor::zeros(kernel.out_channels(), out_h, out_w);
    for i in 0..kernel.out_channels() {
        for m in 0..out_h {
            for n in 0..out_w {
                let mut acc = kernel.bias()[i];
                for j in 0..in_ch {
                    let plane = input.channel(j);
                    for p in 0..kh {
                        let sy = my[m * kh + p];
                        if sy == OOR {
                            continue;
                        }
                        let row = &plane[sy * w..sy * w + w];
                        for q in 0..kw {
                            let sx = nx[n * kw + q];
                            if sx == OOR {
                                continue;
                            }
                            acc += kernel.weight(i, j, p, q) * row[sx];
                        }
                    }
                }
                out.set(i, m, n, acc);
            }
        }
    }
    Ok(out)
}

/// Backward pass of [`conv2d_downsample`].
pub fn conv2d_downsample_backward(
    input: &Tensor,
    kernel: &ConvKernel,
    factor: usize,
    padding: PaddingMode,
    grad_out: &Tensor,
) -> Result<(Tensor, ConvGrads)> {
    check_conv_shapes(input, kernel)?;
    let (in_ch, h, w) = input.shape();
    let (out_h, out_w) = (h / factor, w / factor);
    if grad_out.shape() != (kernel.out_channels(), out_h, out_w) {
        return Err(NtcError::Parameter(format!(
            "grad_out shape {:?} does not match conv output {:?}",
            grad_out.shape(),
            (kernel.out_channels(), out_h, out_w)
        )));
    }
    let (kh, kw) = (kernel.kernel_height(), kernel.kernel_width());
    let (rh, rw) = (kh / 2, kw / 2);
    let my = index_map(out_h, factor, kh, rh, h, padding);
    let nx = index_map(out_w, factor, kw, rw, w, padding);

    let mut grad_input = Tensor::zeros(in_ch, h, w);
    let mut grad_weights = vec![0.0; kernel.weights().len()];
    let mut grad_bias = vec![0.0; kernel.out_channels()];

    for i in 0..kernel.out_channels() {
        for m in 0..out_h {
            for n in 0..out_w {
                let g = grad_out.get(i, m, n);
                grad_bias[i] += g;
                if g == 0.0 {
                    continue;
                }
                for j in 0..in_ch {
                    let base = ((i * in_ch + j) * kh) * kw;
                    for p in 0..kh {
                        let sy = my[m * kh + p];
                        if sy == OOR {
                            continue;
                        }
                        for q in 0..kw {
                            let sx = nx[n * kw + q];
                            if sx == OOR {
                                continue;
                            }
                            grad_weights[base + p * kw + q] += g * input.get(j, sy, sx);
                            grad_input.add_at(j, sy, sx, g * kernel.weight(i, j, p, q));
                        }
                    }
                }
            }
        }
    }
    Ok((
        grad_input,
        ConvGrads {
            weights: grad_weights,
            bias: grad_bias,
        },
    ))
}

/// `conv2d(upsample(input, factor), kernel)` skipping the inserted zeros.
pub fn upsample_conv2d(
    input: &Tensor,
    kernel: &ConvKernel,
    factor: usize,
    padding: PaddingMode,
) -> Result<Tensor> {
    check_conv_shapes(input, kernel)?;
    if factor == 0 {
        return Err(NtcError::Parameter("sampling factor must be >= 1".into()));
    }
    let (in_ch, h, w) = input.shape();
    let (out_h, out_w) = (h * factor, w * factor);
    let (kh, kw) = (kernel.kernel_height(), kernel.kernel_width());
    let (rh, rw) = (kh / 2, kw / 2);
    // Index maps live on the upsampled grid; only lattice hits survive.
    let my = upsample_index_map(out_h, kh, rh, factor, padding);
    let nx = upsample_index_map(out_w, kw, rw, factor, padding);

    let mut out = Tensor::zeros(kernel.out_channels(), out_h, out_w);
    for i in 0..kernel.out_channels() {
        for m in 0..out_h {
            for n in 0..out_w {
                let mut acc = kernel.bias()[i];
                for j in 0..in_ch {
                    let plane = input.channel(j);
                    for p in 0..kh {
                        let sy = my[m * kh + p];
                        if sy == OOR {
                            continue;
                        }
                        let row = &plane[sy * w..sy * w + w];
                        for q in 0..kw {
                            let sx = nx[n * kw + q];
                            if sx == OOR {
                                continue;
                            }
                            acc += kernel.weight(i, j, p, q) * row[sx];
                        }
                    }
                }
                out.set(i, m, n, acc);
            }
        }
    }
    Ok(out)
}

/// Backward pass of [`upsample_conv2d`].
pub fn upsample_conv2d_backward(
    input: &Tensor,
    kernel: &ConvKernel,
    factor: usize,
    padding: PaddingMode,
    grad_out: &Tensor,
) -> Result<(Tensor, ConvGrads)> {
    check_conv_shapes(input, kernel)?;
    let (in_ch, h, w) = input.shape();
    let (out_h, out_w) = (h * factor, w * factor);
    if grad_out.shape() != (kernel.out_channels(), out_h, out_w) {
        return Err(NtcError::Parameter(format!(
            "grad_out shape {:?} does not match conv output {:?}",
            grad_out.shape(),
            (kernel.out_channels(), out_h, out_w)
        )));
    }
    let (kh, kw) = (kernel.kernel_height(), kernel.kernel_width());
    let (rh, rw) = (kh / 2, kw / 2);
    let my = upsample_index_map(out_h, kh, rh, factor, padding);
    let nx = upsample_index_map(out_w, kw, rw, factor, padding);

    let mut grad_input = Tensor::zeros(in_ch, h, w);
    let mut grad_weights = vec![0.0; kernel.weights().len()];
    let mut grad_bias = vec![0.0; kernel.out_channels()];

    for i in 0..kernel.out_channels() {
        for m in 0..out_h {
            for n in 0..out_w {
                let g = grad_out.get(i, m, n);
                grad_bias[i] += g;
                if g == 0.0 {
                    continue;
                }
                for j in 0..in_ch {
                    let base = ((i * in_ch + j) * kh) * kw;
                    for p in 0..kh {
                        let sy = my[m * kh + p];
                        if sy == OOR {
                            continue;
                        }
                        for q in 0..kw {
                            let sx = nx[n * kw + q];
                            if sx == OOR {
                                continue;
                            }
                            grad_weights[base + p * kw + q] += g * input.get(j, sy, sx);
                            grad_input.add_at(j, sy, sx, g * kernel.weight(i, j, p, q));
                        }
                    }
                }
            }
        }
    }
    Ok((
        grad_input,
        ConvGrads {
            weights: grad_weights,
            bias: grad_bias,
        },
    ))
}

/// Map on the upsampled grid of length `out_len`: entry `[m * k + p]` is the
/// index into the small (pre-upsampling) tensor, or `OOR` when the tap lands
/// between lattice points or (for zero padding) out of range.
fn upsample_index_map(
    out_len: usize,
    k: usize,
    radius: usize,
    factor: usize,
    padding: PaddingMode,
) -> Vec<usize> {
    let mut map = vec![OOR; out_len * k];
    for m in 0..out_len {
        for p in 0..k {
            let src = (m + radius) as isize - p as isize;
            let mapped = if src >= 0 && (src as usize) < out_len {
                src as usize
            } else {
                match padding {
                    PaddingMode::Mirror => mirror_index(src, out_len),
                    PaddingMode::Zero => continue,
                }
            };
            if mapped.is_multiple_of(factor) {
                map[m * k + p] = mapped / factor;
            }
        }
    }
    map
}
