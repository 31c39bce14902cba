//! Binarization of quantized values and the per-channel context machinery.
//!
//! Each integer is coded as a short walk through a decision tree: first
//! "is it the mode of the channel's PMF", then on which side of the mode it
//! lies, then one decision per integer marching away from the mode. Leaving
//! the PMF support [q_min, q_max] switches to an exponential Golomb code of
//! the excess magnitude minus one, sent through the bypass path.
//!
//! Every tree node owns one adaptive context, shared across space within
//! the channel. Fresh contexts are seeded with the exact conditional
//! probability of their branch under the channel PMF, so a non-adaptive
//! (static) coder already performs at the entropy of the model.

use crate::codec::QuantizedCode;
use crate::coder::bits::{exp_golomb_decode, exp_golomb_encode};
use crate::coder::range::{Context, RangeDecoder, RangeEncoder};
use crate::density::DiscretePmf;
use crate::error::{NtcError, Result};

/// Whether contexts adapt after each coded decision or stay at their
/// seeded probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptationMode {
    Adaptive,
    Static,
}

/// Contexts of one channel's binarization tree.
#[derive(Debug, Clone)]
pub struct ChannelContexts {
    q_min: i32,
    q_max: i32,
    mode: i32,
    mode_ctx: Context,
    side_ctx: Context,
    /// Node k tests q == mode - 1 - k, conditioned on q <= mode - 1 - k.
    below: Vec<Context>,
    /// Node k tests q > mode + 1 + k, conditioned on q > mode + k.
    above: Vec<Context>,
}

impl ChannelContexts {
    /// Total number of tree nodes: 2 + (q_max - q_min).
    pub fn node_count(&self) -> usize {
        2 + self.below.len() + self.above.len()
    }

    pub fn mode_context(&self) -> &Context {
        &self.mode_ctx
    }

    pub fn side_context(&self) -> &Context {
        &self.side_ctx
    }

    /// Total adaptive updates across all nodes (equals the number of
    /// arithmetic-coded decisions when running adaptively).
    pub fn total_updates(&self) -> u64 {
        self.mode_ctx.updates()
            + self.side_ctx.updates()
            + self.below.iter().map(|c| c.updates()).sum::<u64>()
            + self.above.iter().map(|c| c.updates()).sum::<u64>()
    }
}

/// Seed a channel's contexts with the exact branch probabilities of its PMF.
pub fn init_contexts_from_pmf(pmf: &DiscretePmf) -> ChannelContexts {
    let (q_min, q_max, mode) = (pmf.q_min(), pmf.q_max(), pmf.mode());
    let p_mode = pmf.prob(mode);
    let p_gt_mode: f64 = ((mode + 1)..=q_max).map(|v| pmf.prob(v)).sum();
    let p_ne = 1.0 - p_mode;
    let side_p = if p_ne > 0.0 { p_gt_mode / p_ne } else { 0.5 };

    let mut below = Vec::with_capacity((mode - q_min) as usize);
    let mut p_le: f64 = (q_min..mode).map(|v| pmf.prob(v)).sum();
    let mut v = mode - 1;
    while v >= q_min {
        let p = if p_le > 0.0 { pmf.prob(v) / p_le } else { 0.5 };
        below.push(Context::from_prob(p));
        p_le -= pmf.prob(v);
        v -= 1;
    }

    let mut above = Vec::with_capacity((q_max - mode) as usize);
    let mut p_ge: f64 = p_gt_mode;
    let mut v = mode + 1;
    while v <= q_max {
        let p_beyond = p_ge - pmf.prob(v);
        let p = if p_ge > 0.0 { p_beyond / p_ge } else { 0.5 };
        above.push(Context::from_prob(p));
        p_ge = p_beyond;
        v += 1;
    }

    ChannelContexts {
        q_min,
        q_max,
        mode,
        mode_ctx: Context::from_prob(p_mode),
        side_ctx: Context::from_prob(side_p),
        below,
        above,
    }
}

/// One context tree per channel plus the shared adaptation switch.
#[derive(Debug, Clone)]
pub struct ContextSet {
    channels: Vec<ChannelContexts>,
    mode: AdaptationMode,
}

impl ContextSet {
    pub fn from_pmfs(pmfs: &[DiscretePmf], mode: AdaptationMode) -> ContextSet {
        ContextSet {
            channels: pmfs.iter().map(init_contexts_from_pmf).collect(),
            mode,
        }
    }

    pub fn channel(&self, c: usize) -> &ChannelContexts {
        &self.channels[c]
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn adaptation(&self) -> AdaptationMode {
        self.mode
    }
}

#[inline]
fn code_bit(enc: &mut RangeEncoder, ctx: &mut Context, mode: AdaptationMode, bit: bool) {
    enc.encode_bit(ctx, bit);
    if mode == AdaptationMode::Adaptive {
        ctx.update(bit);
    }
}

#[inline]
fn read_bit(dec: &mut RangeDecoder, ctx: &mut Context, mode: AdaptationMode) -> Result<bool> {
    let bit = dec.decode_bit(ctx)?;
    if mode == AdaptationMode::Adaptive {
        ctx.update(bit);
    }
    Ok(bit)
}

/// Encode one quantized value through a channel's decision tree.
pub fn binarize_encode(
    enc: &mut RangeEncoder,
    ch: &mut ChannelContexts,
    adapt: AdaptationMode,
    q: i32,
) {
    let is_mode = q == ch.mode;
    code_bit(enc, &mut ch.mode_ctx, adapt, is_mode);
    if is_mode {
        return;
    }
    let greater = q > ch.mode;
    code_bit(enc, &mut ch.side_ctx, adapt, greater);
    if greater {
        for k in 0..ch.above.len() {
            let v = ch.mode + 1 + k as i32;
            let beyond = q > v;
            code_bit(enc, &mut ch.above[k], adapt, beyond);
            if !beyond {
                return;
            }
        }
        exp_golomb_encode(enc, (q as i64 - ch.q_max as i64 - 1) as u64);
    } else {
        for k in 0..ch.below.len() {
            let v = ch.mode - 1 - k as i32;
            let here = q == v;
            code_bit(enc, &mut ch.below[k], adapt, here);
            if here {
                return;
            }
        }
        exp_golomb_encode(enc, (ch.q_min as i64 - q as i64 - 1) as u64);
    }
}

/// Decode one quantized value; exact inverse of [`binarize_encode`] under
/// identical context evolution.
pub fn binarize_decode(
    dec: &mut RangeDecoder,
    ch: &mut ChannelContexts,
    adapt: AdaptationMode,
) -> Result<i32> {
    if read_bit(dec, &mut ch.mode_ctx, adapt)? {
        return Ok(ch.mode);
    }
    let greater = read_bit(dec, &mut ch.side_ctx, adapt)?;
    if greater {
        for k in 0..ch.above.len() {
            let v = ch.mode + 1 + k as i32;
            if !read_bit(dec, &mut ch.above[k], adapt)? {
                return Ok(v);
            }
        }
        let excess = exp_golomb_decode(dec)?;
        let q = ch.q_max as i64 + 1 + excess as i64;
        i32::try_from(q).map_err(|_| NtcError::Corrupt("decoded value out of i32 range".into()))
    } else {
        for k in 0..ch.below.len() {
            let v = ch.mode - 1 - k as i32;
            if read_bit(dec, &mut ch.below[k], adapt)? {
                return Ok(v);
            }
        }
        let excess = exp_golomb_decode(dec)?;
        let q = ch.q_min as i64 - 1 - excess as i64;
        i32::try_from(q).map_err(|_| NtcError::Corrupt("decoded value out of i32 range".into()))
    }
}

/// Entropy-code a full quantized tensor: fresh contexts seeded from the
/// per-channel PMFs, elements visited channel by channel in raster order,
/// coder flushed to a byte-aligned payload.
pub fn encode_code(
    q: &QuantizedCode,
    pmfs: &[DiscretePmf],
    adapt: AdaptationMode,
) -> Result<Vec<u8>> {
    if q.channels() != pmfs.len() {
        return Err(NtcError::Parameter(format!(
            "code has {} channels but {} PMFs were provided",
            q.channels(),
            pmfs.len()
        )));
    }
    let mut ctx = ContextSet::from_pmfs(pmfs, adapt);
    let adapt = ctx.adaptation();
    let mut enc = RangeEncoder::new();
    let plane = q.height() * q.width();
    for c in 0..q.channels() {
        let ch = &mut ctx.channels[c];
        for s in 0..plane {
            binarize_encode(&mut enc, ch, adapt, q.data()[c * plane + s]);
        }
    }
    Ok(enc.finish())
}

/// Inverse of [`encode_code`] given the same PMFs and the code dimensions.
pub fn decode_code(
    payload: &[u8],
    pmfs: &[DiscretePmf],
    channels: usize,
    height: usize,
    width: usize,
    adapt: AdaptationMode,
) -> Result<QuantizedCode> {
    if channels != pmfs.len() {
        return Err(NtcError::Parameter(format!(
            "code has {channels} channels but {} PMFs were provided",
            pmfs.len()
        )));
    }
    let mut ctx = ContextSet::from_pmfs(pmfs, adapt);
    let mut dec = RangeDecoder::new(payload)?;
    let plane = height * width;
    let mut data = vec![0i32; channels * plane];
    for c in 0..channels {
        let ch = &mut ctx.channels[c];
        for v in data[c * plane..(c + 1) * plane].iter_mut() {
            *v = binarize_decode(&mut dec, ch, adapt)?;
        }
    }
    QuantizedCode::from_vec(channels, height, width, data)
}
