//! Adaptive binary arithmetic coding of quantized codes.
//!
//! The core is a 32-bit binary range coder with byte-wise renormalization
//! and 16-bit fixed-point context probabilities, so encoder and decoder
//! state trajectories are integer-identical on every platform. Quantized
//! values are binarized with a mode-test / side / chain decision tree, one
//! adaptive context per tree node shared across space within each channel;
//! values beyond the PMF support fall back to an order-0 exponential Golomb
//! code written through the coder's bypass path (fixed half-interval splits,
//! no context, no adaptation).
//!
//! The bit-level payload layout is documented in docs/bitstream.md.

mod binarize;
mod bits;
mod range;

pub use binarize::{
    binarize_decode, binarize_encode, decode_code, encode_code, init_contexts_from_pmf,
    AdaptationMode, ChannelContexts, ContextSet,
};
pub use bits::{
    exp_golomb_decode, exp_golomb_encode, BitReader, BitSink, BitSource, BitWriter,
};
pub use range::{Context, RangeDecoder, RangeEncoder};
