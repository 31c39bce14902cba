//! Multi-stage analysis and synthesis transforms.
//!
//! The analysis transform runs stages of affine convolution, downsampling
//! and GDN; the synthesis transform mirrors it with IGDN, upsampling and
//! convolution. Parameters are kept in a raw, reparameterized form:
//!
//! * filters as orthonormal DCT coefficients of each spatial slice,
//! * GDN/IGDN parameters through beta = beta_raw^2 - 2^-10 (and the same for
//!   gamma after symmetrizing the raw matrix), which keeps gradients small
//!   near zero while guaranteeing nonnegative effective values.
//!
//! After every gradient step the caller projects the raw parameters back to
//! their constraint set ([`project_parameters`]) and rescales each filter to
//! unit norm ([`renormalize_filters`]).

use crate::dct::Dct2;
use crate::error::{NtcError, Result};
use crate::layers::{
    conv2d_downsample, conv2d_downsample_backward, gdn_backward, gdn_forward, igdn_backward,
    igdn_forward, upsample_conv2d, upsample_conv2d_backward, ConvKernel, GdnParams, PaddingMode,
};
use crate::tensor::Tensor;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Offset subtracted in the squared reparameterization of beta/gamma.
pub const REPARAM_OFFSET: f64 = 1.0 / 1024.0; // 2^-10
/// Lower bound the raw beta/gamma values are projected onto.
pub const RAW_FLOOR: f64 = 1.0 / 32.0; // 2^-5

/// Number of input channels for each color mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorMode {
    Grayscale,
    Rgb,
}

impl ColorMode {
    pub fn channels(self) -> usize {
        match self {
            ColorMode::Grayscale => 1,
            ColorMode::Rgb => 3,
        }
    }
}

/// One stage of the analysis transform: conv (in -> out), downsample by
/// `factor`, GDN over the out channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSpec {
    pub kernel_height: usize,
    pub kernel_width: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub factor: usize,
}

/// Shape of the full transform pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureSpec {
    pub stages: Vec<StageSpec>,
    pub color: ColorMode,
    pub padding: PaddingMode,
}

impl ArchitectureSpec {
    /// Grayscale reference network: 9x9 conv to 128 channels subsampled by
    /// 4, then two 5x5 128-channel stages subsampled by 2 each.
    pub fn reference_grayscale() -> ArchitectureSpec {
        ArchitectureSpec::with_channels(128, ColorMode::Grayscale)
    }

    /// RGB reference network: same structure with 192 channels.
    pub fn reference_rgb() -> ArchitectureSpec {
        ArchitectureSpec::with_channels(192, ColorMode::Rgb)
    }

    /// Reference three-stage structure with a configurable channel count.
    pub fn with_channels(channels: usize, color: ColorMode) -> ArchitectureSpec {
        ArchitectureSpec {
            stages: vec![
                StageSpec {
                    kernel_height: 9,
                    kernel_width: 9,
                    in_channels: color.channels(),
                    out_channels: channels,
                    factor: 4,
                },
                StageSpec {
                    kernel_height: 5,
                    kernel_width: 5,
                    in_channels: channels,
                    out_channels: channels,
                    factor: 2,
                },
                StageSpec {
                    kernel_height: 5,
                    kernel_width: 5,
                    in_channels: channels,
                    out_channels: channels,
                    factor: 2,
                },
            ],
            color,
            padding: PaddingMode::Mirror,
        }
    }

    /// Two-stage reduced structure used for gradient checking and other
    /// small-scale tests: 5x5 conv subsampled by 4, then 3x3 subsampled by 4.
    pub fn shrunken(channels: usize, color: ColorMode) -> ArchitectureSpec {
        ArchitectureSpec {
            stages: vec![
                StageSpec {
                    kernel_height: 5,
                    kernel_width: 5,
                    in_channels: color.channels(),
                    out_channels: channels,
                    factor: 4,
                },
                StageSpec {
                    kernel_height: 3,
                    kernel_width: 3,
                    in_channels: channels,
                    out_channels: channels,
                    factor: 4,
                },
            ],
            color,
            padding: PaddingMode::Mirror,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(NtcError::Config("architecture needs at least one stage".into()));
        }
        if self.stages[0].in_channels != self.color.channels() {
            return Err(NtcError::Config(format!(
                "first stage expects {} input channels but color mode has {}",
                self.stages[0].in_channels,
                self.color.channels()
            )));
        }
        for pair in self.stages.windows(2) {
            if pair[0].out_channels != pair[1].in_channels {
                return Err(NtcError::Config("stage channel counts do not chain".into()));
            }
        }
        for s in &self.stages {
            if s.kernel_height.is_multiple_of(2) || s.kernel_width.is_multiple_of(2) {
                return Err(NtcError::Config("kernel dims must be odd".into()));
            }
            if s.factor == 0 {
                return Err(NtcError::Config("sampling factor must be >= 1".into()));
            }
            if s.in_channels == 0 || s.out_channels == 0 {
                return Err(NtcError::Config("channel counts must be >= 1".into()));
            }
        }
        if self.total_factor() != 16 {
            return Err(NtcError::Config(format!(
                "sampling factors must multiply to 16, got {}",
                self.total_factor()
            )));
        }
        Ok(())
    }

    pub fn input_channels(&self) -> usize {
        self.color.channels()
    }

    /// Channel count of the code space y.
    pub fn code_channels(&self) -> usize {
        self.stages.last().map(|s| s.out_channels).unwrap_or(0)
    }

    pub fn total_factor(&self) -> usize {
        self.stages.iter().map(|s| s.factor).product()
    }

    /// Stage list of the synthesis transform: the analysis stages reversed
    /// with input/output channel counts swapped. Stage k applies IGDN over
    /// its `in_channels`, upsamples by `factor`, then convolves in -> out.
    pub fn synthesis_stages(&self) -> Vec<StageSpec> {
        self.stages
            .iter()
            .rev()
            .map(|s| StageSpec {
                kernel_height: s.kernel_height,
                kernel_width: s.kernel_width,
                in_channels: s.out_channels,
                out_channels: s.in_channels,
                factor: s.factor,
            })
            .collect()
    }

    /// Code-space spatial dims for an input of the given size.
    pub fn code_dims(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        let f = self.total_factor();
        if !height.is_multiple_of(f) || !width.is_multiple_of(f) {
            return Err(NtcError::Parameter(format!(
                "input dims {}x{} not divisible by the total sampling factor {}",
                height, width, f
            )));
        }
        Ok((height / f, width / f))
    }
}

/// Which half of the transform pair a parameter set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Analysis,
    Synthesis,
}

/// Raw parameters of one stage. The normalization (GDN or IGDN) acts on
/// `gdn_channels` channels: the stage output for analysis, the stage input
/// for synthesis.
#[derive(Debug, Clone, PartialEq)]
pub struct RawStage {
    pub dct_coeffs: Vec<f64>,
    pub bias: Vec<f64>,
    pub beta_raw: Vec<f64>,
    /// Full gdn_channels x gdn_channels matrix; symmetrized on projection.
    pub gamma_raw: Vec<f64>,
}

impl RawStage {
    fn zeros(stage: &StageSpec, gdn_channels: usize) -> RawStage {
        RawStage {
            dct_coeffs: vec![
                0.0;
                stage.out_channels
                    * stage.in_channels
                    * stage.kernel_height
                    * stage.kernel_width
            ],
            bias: vec![0.0; stage.out_channels],
            beta_raw: vec![0.0; gdn_channels],
            gamma_raw: vec![0.0; gdn_channels * gdn_channels],
        }
    }
}

/// Raw parameter vector of one transform (phi or theta).
#[derive(Debug, Clone, PartialEq)]
pub struct TransformParams {
    pub kind: TransformKind,
    pub stages: Vec<RawStage>,
}

/// Gradients with the same layout as [`TransformParams`].
#[derive(Debug, Clone)]
pub struct TransformGrads {
    pub stages: Vec<RawStage>,
}

impl TransformParams {
    fn stage_specs(&self, spec: &ArchitectureSpec) -> Vec<StageSpec> {
        match self.kind {
            TransformKind::Analysis => spec.stages.clone(),
            TransformKind::Synthesis => spec.synthesis_stages(),
        }
    }

    fn gdn_channels(&self, stage: &StageSpec) -> usize {
        match self.kind {
            TransformKind::Analysis => stage.out_channels,
            TransformKind::Synthesis => stage.in_channels,
        }
    }

    /// Iterate over all raw parameter vectors (used by the optimizer).
    pub fn vectors_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.stages.iter_mut().flat_map(|s| {
            [
                &mut s.dct_coeffs,
                &mut s.bias,
                &mut s.beta_raw,
                &mut s.gamma_raw,
            ]
            .into_iter()
        })
    }

    pub fn vectors(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.stages
            .iter()
            .flat_map(|s| [&s.dct_coeffs, &s.bias, &s.beta_raw, &s.gamma_raw].into_iter())
    }

    pub fn param_count(&self) -> usize {
        self.vectors().map(|v| v.len()).sum()
    }
}

impl TransformGrads {
    pub fn vectors(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.stages
            .iter()
            .flat_map(|s| [&s.dct_coeffs, &s.bias, &s.beta_raw, &s.gamma_raw].into_iter())
    }

    pub fn vectors_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.stages.iter_mut().flat_map(|s| {
            [
                &mut s.dct_coeffs,
                &mut s.bias,
                &mut s.beta_raw,
                &mut s.gamma_raw,
            ]
            .into_iter()
        })
    }

    /// Elementwise accumulate another gradient of the same shape.
    pub fn add_assign(&mut self, other: &TransformGrads) {
        for (dst, src) in self.vectors_mut().zip(other.vectors()) {
            debug_assert_eq!(dst.len(), src.len());
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for vec in self.vectors_mut() {
            for v in vec.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.vectors().all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Symmetrized entry of the raw gamma matrix.
#[inline]
fn sym_entry(gamma_raw: &[f64], c: usize, i: usize, j: usize) -> f64 {
    0.5 * (gamma_raw[i * c + j] + gamma_raw[j * c + i])
}

/// Effective (forward-ready) kernels and normalization parameters.
#[derive(Debug, Clone)]
pub struct EffectiveTransform {
    pub kind: TransformKind,
    pub kernels: Vec<ConvKernel>,
    pub gdns: Vec<GdnParams>,
    pub factors: Vec<usize>,
    pub padding: PaddingMode,
}

/// Build the effective transform from raw parameters: inverse-DCT the
/// filters and square the normalization parameters.
pub fn effective_transform(
    spec: &ArchitectureSpec,
    params: &TransformParams,
) -> Result<EffectiveTransform> {
    let stage_specs = params.stage_specs(spec);
    if stage_specs.len() != params.stages.len() {
        return Err(NtcError::Usage(format!(
            "params have {} stages but spec has {}",
            params.stages.len(),
            stage_specs.len()
        )));
    }
    let mut kernels = Vec::with_capacity(stage_specs.len());
    let mut gdns = Vec::with_capacity(stage_specs.len());
    let mut factors = Vec::with_capacity(stage_specs.len());
    for (ss, raw) in stage_specs.iter().zip(params.stages.iter()) {
        let dct = Dct2::new(ss.kernel_height, ss.kernel_width);
        let block = dct.block_len();
        let slices = ss.out_channels * ss.in_channels;
        if raw.dct_coeffs.len() != slices * block || raw.bias.len() != ss.out_channels {
            return Err(NtcError::Usage("stage parameter shapes do not match spec".into()));
        }
        let mut weights = vec![0.0; slices * block];
        for s in 0..slices {
            let spatial = dct.inverse(&raw.dct_coeffs[s * block..(s + 1) * block]);
            weights[s * block..(s + 1) * block].copy_from_slice(&spatial);
        }
        kernels.push(ConvKernel::new(
            ss.out_channels,
            ss.in_channels,
            ss.kernel_height,
            ss.kernel_width,
            weights,
            raw.bias.clone(),
        )?);

        let c = params.gdn_channels(ss);
        if raw.beta_raw.len() != c || raw.gamma_raw.len() != c * c {
            return Err(NtcError::Usage("normalization parameter shapes do not match spec".into()));
        }
        let beta: Vec<f64> = raw
            .beta_raw
            .iter()
            .map(|b| b * b - REPARAM_OFFSET)
            .collect();
        let mut packed = vec![0.0; GdnParams::packed_len(c)];
        let mut idx = 0;
        for i in 0..c {
            for j in i..c {
                let s = sym_entry(&raw.gamma_raw, c, i, j);
                packed[idx] = s * s - REPARAM_OFFSET;
                idx += 1;
            }
        }
        gdns.push(GdnParams::from_packed(beta, packed)?);
        factors.push(ss.factor);
    }
    Ok(EffectiveTransform {
        kind: params.kind,
        kernels,
        gdns,
        factors,
        padding: spec.padding,
    })
}

/// Intermediates retained by a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardRecord {
    kind: TransformKind,
    /// Input to each stage.
    stage_inputs: Vec<Tensor>,
    /// Analysis: conv+downsample output (pre-GDN). Synthesis: IGDN output
    /// (pre-upsampling).
    stage_mids: Vec<Tensor>,
}

/// y = g_a(x): per stage conv, downsample, GDN.
pub fn analysis_forward(
    x: &Tensor,
    spec: &ArchitectureSpec,
    params: &TransformParams,
) -> Result<(Tensor, ForwardRecord)> {
    let eff = effective_transform(spec, params)?;
    analysis_forward_eff(x, &eff)
}

/// Forward pass with pre-built effective parameters (one build per
/// minibatch instead of one per image).
pub fn analysis_forward_eff(x: &Tensor, eff: &EffectiveTransform) -> Result<(Tensor, ForwardRecord)> {
    if eff.kind != TransformKind::Analysis {
        return Err(NtcError::Usage("analysis_forward needs analysis parameters".into()));
    }
    if x.channels() != eff.kernels[0].in_channels() {
        return Err(NtcError::Parameter(format!(
            "input has {} channels, transform expects {}",
            x.channels(),
            eff.kernels[0].in_channels()
        )));
    }
    let mut stage_inputs = Vec::with_capacity(eff.kernels.len());
    let mut stage_mids = Vec::with_capacity(eff.kernels.len());
    let mut cur = x.clone();
    for (k, kernel) in eff.kernels.iter().enumerate() {
        let w = conv2d_downsample(&cur, kernel, eff.factors[k], eff.padding)?;
        let u = gdn_forward(&w, &eff.gdns[k])?;
        stage_inputs.push(cur);
        stage_mids.push(w);
        cur = u;
    }
    Ok((
        cur,
        ForwardRecord {
            kind: TransformKind::Analysis,
            stage_inputs,
            stage_mids,
        },
    ))
}

/// x_hat = g_s(y_hat): per stage IGDN, upsample, conv.
pub fn synthesis_forward(
    y: &Tensor,
    spec: &ArchitectureSpec,
    params: &TransformParams,
) -> Result<(Tensor, ForwardRecord)> {
    let eff = effective_transform(spec, params)?;
    synthesis_forward_eff(y, &eff)
}

pub fn synthesis_forward_eff(y: &Tensor, eff: &EffectiveTransform) -> Result<(Tensor, ForwardRecord)> {
    if eff.kind != TransformKind::Synthesis {
        return Err(NtcError::Usage("synthesis_forward needs synthesis parameters".into()));
    }
    if y.channels() != eff.gdns[0].channels() {
        return Err(NtcError::Parameter(format!(
            "code has {} channels, transform expects {}",
            y.channels(),
            eff.gdns[0].channels()
        )));
    }
    let mut stage_inputs = Vec::with_capacity(eff.kernels.len());
    let mut stage_mids = Vec::with_capacity(eff.kernels.len());
    let mut cur = y.clone();
    for (k, kernel) in eff.kernels.iter().enumerate() {
        let wh = igdn_forward(&cur, &eff.gdns[k])?;
        let next = upsample_conv2d(&wh, kernel, eff.factors[k], eff.padding)?;
        stage_inputs.push(cur);
        stage_mids.push(wh);
        cur = next;
    }
    Ok((
        cur,
        ForwardRecord {
            kind: TransformKind::Synthesis,
            stage_inputs,
            stage_mids,
        },
    ))
}

fn map_conv_grads_to_raw(
    ss: &StageSpec,
    spatial_weight_grads: &[f64],
    bias_grads: Vec<f64>,
) -> (Vec<f64>, Vec<f64>) {
    let dct = Dct2::new(ss.kernel_height, ss.kernel_width);
    let block = dct.block_len();
    let slices = ss.out_channels * ss.in_channels;
    let mut coeff_grads = vec![0.0; slices * block];
    for s in 0..slices {
        let g = dct.forward(&spatial_weight_grads[s * block..(s + 1) * block]);
        coeff_grads[s * block..(s + 1) * block].copy_from_slice(&g);
    }
    (coeff_grads, bias_grads)
}

/// Map packed effective-gamma gradients and effective-beta gradients back to
/// the raw (squared, symmetrized) parameterization.
fn map_gdn_grads_to_raw(
    raw: &RawStage,
    c: usize,
    grad_beta_eff: &[f64],
    grad_gamma_packed: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut beta_raw_grad = vec![0.0; c];
    for i in 0..c {
        beta_raw_grad[i] = 2.0 * raw.beta_raw[i] * grad_beta_eff[i];
    }
    let mut gamma_raw_grad = vec![0.0; c * c];
    let mut idx = 0;
    for i in 0..c {
        for j in i..c {
            let s = sym_entry(&raw.gamma_raw, c, i, j);
            let g = grad_gamma_packed[idx];
            if i == j {
                gamma_raw_grad[i * c + i] = 2.0 * s * g;
            } else {
                // d(effective)/d(raw_ij) = sym_ij for both mirror entries
                gamma_raw_grad[i * c + j] = s * g;
                gamma_raw_grad[j * c + i] = s * g;
            }
            idx += 1;
        }
    }
    (beta_raw_grad, gamma_raw_grad)
}

/// Gradients of the analysis transform: returns raw-parameter gradients and
/// the gradient with respect to the input image.
pub fn analysis_backward(
    spec: &ArchitectureSpec,
    params: &TransformParams,
    eff: &EffectiveTransform,
    tape: &ForwardRecord,
    grad_y: &Tensor,
) -> Result<(TransformGrads, Tensor)> {
    if tape.kind != TransformKind::Analysis || params.kind != TransformKind::Analysis {
        return Err(NtcError::Usage("analysis_backward needs an analysis tape".into()));
    }
    let stage_specs = params.stage_specs(spec);
    if tape.stage_inputs.len() != stage_specs.len() {
        return Err(NtcError::Usage("tape does not match the architecture".into()));
    }
    let mut grads: Vec<RawStage> = stage_specs
        .iter()
        .map(|ss| RawStage::zeros(ss, params.gdn_channels(ss)))
        .collect();
    let mut grad = grad_y.clone();
    for k in (0..stage_specs.len()).rev() {
        let ss = &stage_specs[k];
        let w = &tape.stage_mids[k];
        if grad.shape() != w.shape() {
            return Err(NtcError::Usage("gradient shape does not match tape".into()));
        }
        let (grad_w, gdn_g) = gdn_backward(w, &eff.gdns[k], &grad)?;
        let (grad_in, conv_g) = conv2d_downsample_backward(
            &tape.stage_inputs[k],
            &eff.kernels[k],
            eff.factors[k],
            eff.padding,
            &grad_w,
        )?;
        let (coeffs, bias) = map_conv_grads_to_raw(ss, &conv_g.weights, conv_g.bias);
        let c = params.gdn_channels(ss);
        let (beta_raw, gamma_raw) =
            map_gdn_grads_to_raw(&params.stages[k], c, &gdn_g.beta, &gdn_g.gamma_packed);
        grads[k] = RawStage {
            dct_coeffs: coeffs,
            bias,
            beta_raw,
            gamma_raw,
        };
        grad = grad_in;
    }
    Ok((TransformGrads { stages: grads }, grad))
}

/// Gradients of the synthesis transform (raw-parameter gradients plus the
/// gradient with respect to the code-space input).
pub fn synthesis_backward(
    spec: &ArchitectureSpec,
    params: &TransformParams,
    eff: &EffectiveTransform,
    tape: &ForwardRecord,
    grad_xhat: &Tensor,
) -> Result<(TransformGrads, Tensor)> {
    if tape.kind != TransformKind::Synthesis || params.kind != TransformKind::Synthesis {
        return Err(NtcError::Usage("synthesis_backward needs a synthesis tape".into()));
    }
    let stage_specs = params.stage_specs(spec);
    if tape.stage_inputs.len() != stage_specs.len() {
        return Err(NtcError::Usage("tape does not match the architecture".into()));
    }
    let mut grads: Vec<RawStage> = stage_specs
        .iter()
        .map(|ss| RawStage::zeros(ss, params.gdn_channels(ss)))
        .collect();
    let mut grad = grad_xhat.clone();
    for k in (0..stage_specs.len()).rev() {
        let ss = &stage_specs[k];
        let wh = &tape.stage_mids[k];
        let (grad_wh, conv_g) =
            upsample_conv2d_backward(wh, &eff.kernels[k], eff.factors[k], eff.padding, &grad)?;
        let (grad_u, gdn_g) = igdn_backward(&tape.stage_inputs[k], &eff.gdns[k], &grad_wh)?;
        let (coeffs, bias) = map_conv_grads_to_raw(ss, &conv_g.weights, conv_g.bias);
        let c = params.gdn_channels(ss);
        let (beta_raw, gamma_raw) =
            map_gdn_grads_to_raw(&params.stages[k], c, &gdn_g.beta, &gdn_g.gamma_packed);
        grads[k] = RawStage {
            dct_coeffs: coeffs,
            bias,
            beta_raw,
            gamma_raw,
        };
        grad = grad_u;
    }
    Ok((TransformGrads { stages: grads }, grad))
}

/// Project raw parameters onto their constraint set: beta_raw clamped to
/// [2^-5, inf), gamma_raw symmetrized then clamped the same way. Applied
/// after every gradient step.
pub fn project_parameters(params: &mut TransformParams) {
    for stage in &mut params.stages {
        for b in &mut stage.beta_raw {
            if *b < RAW_FLOOR {
                *b = RAW_FLOOR;
            }
        }
        let c = stage.beta_raw.len();
        for i in 0..c {
            for j in i..c {
                let s = 0.5 * (stage.gamma_raw[i * c + j] + stage.gamma_raw[j * c + i]);
                let s = if s < RAW_FLOOR { RAW_FLOOR } else { s };
                stage.gamma_raw[i * c + j] = s;
                stage.gamma_raw[j * c + i] = s;
            }
        }
    }
}

/// Rescale every filter to unit Euclidean norm. For the analysis transform a
/// filter is the set of taps feeding one output channel (norm over space and
/// input channels); for the synthesis transform it is the set of taps fed by
/// one input channel (norm over space and output channels). Thanks to the
/// orthonormal DCT the rescale happens directly on the coefficients.
///
/// Returns the number of filters skipped because their norm was zero.
pub fn renormalize_filters(params: &mut TransformParams, spec: &ArchitectureSpec) -> usize {
    let stage_specs = params.stage_specs(spec);
    let mut skipped = 0;
    for (ss, raw) in stage_specs.iter().zip(params.stages.iter_mut()) {
        let block = ss.kernel_height * ss.kernel_width;
        match params.kind {
            TransformKind::Analysis => {
                for i in 0..ss.out_channels {
                    let start = i * ss.in_channels * block;
                    let end = start + ss.in_channels * block;
                    skipped += rescale_group(&mut raw.dct_coeffs[start..end]);
                }
            }
            TransformKind::Synthesis => {
                for j in 0..ss.in_channels {
                    let mut sq = 0.0;
                    for i in 0..ss.out_channels {
                        let start = (i * ss.in_channels + j) * block;
                        sq += raw.dct_coeffs[start..start + block]
                            .iter()
                            .map(|v| v * v)
                            .sum::<f64>();
                    }
                    if sq == 0.0 {
                        skipped += 1;
                        continue;
                    }
                    let inv = 1.0 / sq.sqrt();
                    for i in 0..ss.out_channels {
                        let start = (i * ss.in_channels + j) * block;
                        for v in &mut raw.dct_coeffs[start..start + block] {
                            *v *= inv;
                        }
                    }
                }
            }
        }
    }
    skipped
}

fn rescale_group(group: &mut [f64]) -> usize {
    let sq: f64 = group.iter().map(|v| v * v).sum();
    if sq == 0.0 {
        return 1;
    }
    let inv = 1.0 / sq.sqrt();
    for v in group {
        *v *= inv;
    }
    0
}

/// Norms of all filters of a transform (diagnostic / test hook).
pub fn filter_norms(params: &TransformParams, spec: &ArchitectureSpec) -> Vec<f64> {
    let stage_specs = params.stage_specs(spec);
    let mut norms = Vec::new();
    for (ss, raw) in stage_specs.iter().zip(params.stages.iter()) {
        let block = ss.kernel_height * ss.kernel_width;
        match params.kind {
            TransformKind::Analysis => {
                for i in 0..ss.out_channels {
                    let start = i * ss.in_channels * block;
                    let end = start + ss.in_channels * block;
                    norms.push(raw.dct_coeffs[start..end].iter().map(|v| v * v).sum::<f64>().sqrt());
                }
            }
            TransformKind::Synthesis => {
                for j in 0..ss.in_channels {
                    let mut sq = 0.0;
                    for i in 0..ss.out_channels {
                        let start = (i * ss.in_channels + j) * block;
                        sq += raw.dct_coeffs[start..start + block]
                            .iter()
                            .map(|v| v * v)
                            .sum::<f64>();
                    }
                    norms.push(sq.sqrt());
                }
            }
        }
    }
    norms
}

/// Deterministic parameter initialization: unit-norm random DCT filters,
/// beta_raw = 1, gamma_raw = 2^-2 on the diagonal and 2^-5 off it, then
/// projected. The GDN starts out close to the identity.
pub fn init_params(spec: &ArchitectureSpec, seed: u64) -> Result<(TransformParams, TransformParams)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let analysis = init_one(spec, TransformKind::Analysis, &mut rng);
    let synthesis = init_one(spec, TransformKind::Synthesis, &mut rng);
    Ok((analysis, synthesis))
}

fn init_one(spec: &ArchitectureSpec, kind: TransformKind, rng: &mut ChaCha8Rng) -> TransformParams {
    let mut params = TransformParams { kind, stages: Vec::new() };
    let stage_specs = match kind {
        TransformKind::Analysis => spec.stages.clone(),
        TransformKind::Synthesis => spec.synthesis_stages(),
    };
    for ss in &stage_specs {
        let c = match kind {
            TransformKind::Analysis => ss.out_channels,
            TransformKind::Synthesis => ss.in_channels,
        };
        let mut stage = RawStage::zeros(ss, c);
        for v in &mut stage.dct_coeffs {
            *v = rng.random_range(-0.5..0.5);
        }
        for b in &mut stage.beta_raw {
            *b = 1.0;
        }
        for i in 0..c {
            for j in 0..c {
                stage.gamma_raw[i * c + j] = if i == j { 0.25 } else { RAW_FLOOR };
            }
        }
        params.stages.push(stage);
    }
    project_parameters(&mut params);
    renormalize_filters(&mut params, spec);
    params
}
