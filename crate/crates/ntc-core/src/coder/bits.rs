//! Plain bit streams and the order-0 exponential Golomb code.
//!
//! The Golomb code is a pure binarization: value n is written as the
//! unary-prefixed binary representation of n + 1 (n = 0 -> "1",
//! n = 1 -> "010", n = 2 -> "011"). Where its bits end up is up to the
//! sink: a raw `BitWriter` for header fields and tests, or the arithmetic
//! coder's bypass path inside a payload.

use crate::coder::range::{RangeDecoder, RangeEncoder};
use crate::error::{NtcError, Result};

/// Destination for raw bits.
pub trait BitSink {
    fn put_bit(&mut self, bit: bool);
}

/// Source of raw bits.
pub trait BitSource {
    fn get_bit(&mut self) -> Result<bool>;
}

/// MSB-first bit writer over a byte vector.
#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    /// Bits already used in the last byte (0 = byte-aligned).
    bit_pos: u8,
}

impl BitWriter {
    pub fn new() -> BitWriter {
        BitWriter::default()
    }

    pub fn push_bit(&mut self, bit: bool) {
        if self.bit_pos == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> self.bit_pos;
        }
        self.bit_pos = (self.bit_pos + 1) % 8;
    }

    /// Write the `width` low bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        for k in (0..width).rev() {
            self.push_bit((value >> k) & 1 == 1);
        }
    }

    /// Pad with zero bits to the next byte boundary.
    pub fn align(&mut self) {
        while self.bit_pos != 0 {
            self.push_bit(false);
        }
    }

    pub fn bit_len(&self) -> usize {
        if self.bit_pos == 0 {
            self.bytes.len() * 8
        } else {
            (self.bytes.len() - 1) * 8 + self.bit_pos as usize
        }
    }

    pub fn into_bytes(mut self) -> Vec<u8> {
        self.align();
        self.bytes
    }
}

impl BitSink for BitWriter {
    fn put_bit(&mut self, bit: bool) {
        self.push_bit(bit);
    }
}

impl BitSink for RangeEncoder {
    fn put_bit(&mut self, bit: bool) {
        self.encode_bypass(bit);
    }
}

/// MSB-first bit reader over a byte slice.
#[derive(Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> BitReader<'a> {
        BitReader { bytes, pos: 0 }
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        let byte = self.pos / 8;
        if byte >= self.bytes.len() {
            return Err(NtcError::Corrupt("bitstream exhausted".into()));
        }
        let bit = (self.bytes[byte] >> (7 - self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }

    /// Skip to the next byte boundary.
    pub fn align(&mut self) {
        self.pos = self.pos.div_ceil(8) * 8;
    }

    pub fn byte_offset(&self) -> usize {
        self.pos.div_ceil(8)
    }
}

impl BitSource for BitReader<'_> {
    fn get_bit(&mut self) -> Result<bool> {
        self.read_bit()
    }
}

impl BitSource for RangeDecoder<'_> {
    fn get_bit(&mut self) -> Result<bool> {
        self.decode_bypass()
    }
}

/// Order-0 exponential Golomb code of a nonnegative integer.
pub fn exp_golomb_encode(sink: &mut impl BitSink, n: u64) {
    let m = n + 1;
    let len = 64 - m.leading_zeros();
    for _ in 0..len - 1 {
        sink.put_bit(false);
    }
    for k in (0..len).rev() {
        sink.put_bit((m >> k) & 1 == 1);
    }
}

pub fn exp_golomb_decode(src: &mut impl BitSource) -> Result<u64> {
    let mut zeros = 0u32;
    while !src.get_bit()? {
        zeros += 1;
        if zeros > 63 {
            return Err(NtcError::Corrupt("malformed exponential Golomb prefix".into()));
        }
    }
    let mut m = 1u64;
    for _ in 0..zeros {
        m = (m << 1) | src.get_bit()? as u64;
    }
    Ok(m - 1)
}
