//! MSB-first bit packing.

use num_bigint::BigUint;

use crate::error::{Error, Result};

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_bit(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        for i in (0..width).rev() {
            self.push_bit((value >> i) & 1 == 1);
        }
    }

    /// `value` as exactly `width` big-endian bits; fails if it does not fit.
    pub fn push_biguint(&mut self, value: &BigUint, width: u64) -> Result<()> {
        if value.bits() > width {
            return Err(Error::Frame(format!("value needs {} bits, field has {width}", value.bits())));
        }
        for i in (0..width).rev() {
            self.push_bit(value.bit(i));
        }
        Ok(())
    }

    pub fn bit_len(&self) -> usize {
        self.len
    }

    pub fn finish(self) -> (Vec<u8>, usize) {
        (self.bytes, self.len)
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    len: usize,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], len: usize) -> Result<Self> {
        if len > bytes.len() * 8 {
            return Err(Error::Frame(format!("bit length {len} exceeds {} bytes", bytes.len())));
        }
        Ok(Self { bytes, len, pos: 0 })
    }

    pub fn remaining(&self) -> usize {
        self.len - self.pos
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.len {
            return Err(Error::Frame("unexpected end of frame".into()));
        }
        let bit = self.bytes[self.pos / 8] & (0x80 >> (self.pos % 8)) != 0;
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

    pub fn read_biguint(&mut self, width: u64) -> Result<BigUint> {
        let mut v = BigUint::default();
        for i in (0..width).rev() {
            if self.read_bit()? {
                v.set_bit(i, true);
            }
        }
        Ok(v)
    }
}
