//! Binary range coder with carry handling and byte-wise renormalization.
//!
//! The encoder keeps a 33-bit low accumulator (the extra bit is the carry),
//! a 32-bit range, and a cache of pending bytes that may still be bumped by
//! a carry. Renormalization keeps range >= 2^24 before every symbol, so the
//! probability quantization error per symbol is below 2^-8 relative.
//!
//! Context probabilities are 16-bit fixed point, bounded away from 0 and 1
//! by one quantization step (2^-16). Adaptation is an exponential update
//! p += (bit - p) / 32, computed in integer arithmetic and applied by the
//! caller so that encoder and decoder evolve identically whether adaptation
//! is on or off.

use crate::error::{NtcError, Result};

const TOP: u32 = 1 << 24;
const PROB_BITS: u32 = 16;
const PROB_ONE: u32 = 1 << PROB_BITS;
/// Adaptation rate exponent: p moves 1/32 of the way per update.
const ADAPT_SHIFT: u32 = 5;

/// Adaptive probability of coding a "true" bit, in 16-bit fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Context {
    p16: u16,
    updates: u64,
}

impl Context {
    /// Context with P(true) = p, clamped to [2^-16, 1 - 2^-16].
    pub fn from_prob(p: f64) -> Context {
        let scaled = (p * PROB_ONE as f64).round();
        let p16 = scaled.clamp(1.0, (PROB_ONE - 1) as f64) as u16;
        Context { p16, updates: 0 }
    }

    /// Equiprobable context.
    pub fn half() -> Context {
        Context {
            p16: (PROB_ONE / 2) as u16,
            updates: 0,
        }
    }

    pub fn prob16(&self) -> u16 {
        self.p16
    }

    pub fn prob(&self) -> f64 {
        self.p16 as f64 / PROB_ONE as f64
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Exponential adaptation toward the observed bit.
    pub fn update(&mut self, bit: bool) {
        let p = self.p16 as u32;
        let p = if bit {
            p + ((PROB_ONE - p) >> ADAPT_SHIFT)
        } else {
            p - (p >> ADAPT_SHIFT)
        };
        self.p16 = p.clamp(1, PROB_ONE - 1) as u16;
        self.updates += 1;
    }
}

/// Encoding half of the range coder. `finish` flushes the accumulator and
/// returns the byte-aligned payload.
#[derive(Debug)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> RangeEncoder {
        RangeEncoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    /// Subdivide the interval by the context probability. Adaptation is the
    /// caller's move (see [`Context::update`]).
    pub fn encode_bit(&mut self, ctx: &Context, bit: bool) {
        let bound = (self.range >> PROB_BITS) * ctx.p16 as u32;
        if bit {
            self.range = bound;
        } else {
            self.low += bound as u64;
            self.range -= bound;
        }
        while self.range < TOP {
            self.shift_low();
            self.range <<= 8;
        }
    }

    /// Fixed half-interval split: one raw bit, no context.
    pub fn encode_bypass(&mut self, bit: bool) {
        let bound = self.range >> 1;
        if bit {
            self.range = bound;
        } else {
            self.low += bound as u64;
            self.range -= bound;
        }
        while self.range < TOP {
            self.shift_low();
            self.range <<= 8;
        }
    }

    fn shift_low(&mut self) {
        let low32 = self.low as u32;
        if low32 < 0xFF00_0000 || self.low > u32::MAX as u64 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (low32 >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = ((low32 & 0x00FF_FFFF) as u64) << 8;
    }

    /// Number of bytes emitted so far (diagnostic; excludes pending state).
    pub fn bytes_emitted(&self) -> usize {
        self.out.len()
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

/// Decoding half; rebuilds the exact interval trajectory of the encoder.
#[derive(Debug)]
pub struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    input: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<RangeDecoder<'a>> {
        let mut dec = RangeDecoder {
            code: 0,
            range: u32::MAX,
            input,
            pos: 0,
        };
        for _ in 0..5 {
            let b = dec.next_byte()?;
            dec.code = (dec.code << 8) | b as u32;
        }
        Ok(dec)
    }

    fn next_byte(&mut self) -> Result<u8> {
        if self.pos >= self.input.len() {
            return Err(NtcError::Corrupt("arithmetic payload exhausted".into()));
        }
        let b = self.input[self.pos];
        self.pos += 1;
        Ok(b)
    }

    pub fn decode_bit(&mut self, ctx: &Context) -> Result<bool> {
        let bound = (self.range >> PROB_BITS) * ctx.p16 as u32;
        let bit = self.code < bound;
        if bit {
            self.range = bound;
        } else {
            self.code -= bound;
            self.range -= bound;
        }
        while self.range < TOP {
            let b = self.next_byte()?;
            self.code = (self.code << 8) | b as u32;
            self.range <<= 8;
        }
        Ok(bit)
    }

    pub fn decode_bypass(&mut self) -> Result<bool> {
        let bound = self.range >> 1;
        let bit = self.code < bound;
        if bit {
            self.range = bound;
        } else {
            self.code -= bound;
            self.range -= bound;
        }
        while self.range < TOP {
            let b = self.next_byte()?;
            self.code = (self.code << 8) | b as u32;
            self.range <<= 8;
        }
        Ok(bit)
    }

    /// Bytes consumed from the payload.
    pub fn bytes_consumed(&self) -> usize {
        self.pos
    }
}
