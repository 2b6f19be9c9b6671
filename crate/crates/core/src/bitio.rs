//! MSB-first bit packing.

/// Accumulates bit fields most-significant-bit first into a byte buffer.
#[derive(Debug, Default)]
pub struct BitWriter {
    buf: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity_bits(bits: usize) -> Self {
        Self {
            buf: Vec::with_capacity(bits.div_ceil(8)),
            ..Self::default()
        }
    }

    /// Append the low `width` bits of `value` (`width <= 32`).
    #[inline]
    pub fn write_bits(&mut self, value: u32, width: u32) {
        debug_assert!(width <= 32);
        if width == 0 {
            return;
        }
        let value = value as u64 & ((1u64 << width) - 1);
        self.acc = (self.acc << width) | value;
        self.nbits += width;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.buf.push((self.acc >> self.nbits) as u8);
        }
        self.acc &= (1u64 << self.nbits) - 1;
    }

    pub fn bit_len(&self) -> usize {
        self.buf.len() * 8 + self.nbits as usize
    }

    /// Flush, padding the last byte with zero bits.
    pub fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            self.buf.push((self.acc << (8 - self.nbits)) as u8);
        }
        self.buf
    }
}

/// Read `width <= 32` bits starting at absolute bit `offset`.
///
/// Bits past the end of `buf` read as zero; callers check lengths first.
#[inline]
pub fn read_bits(buf: &[u8], offset: usize, width: u32) -> u32 {
    debug_assert!(width <= 32);
    if width == 0 {
        return 0;
    }
    let first = offset / 8;
    let skip = (offset % 8) as u32;
    // up to 5 bytes cover skip + 32 bits
    let mut window = 0u64;
    for i in 0..5 {
        window = (window << 8) | *buf.get(first + i).unwrap_or(&0) as u64;
    }
    ((window << (24 + skip)) >> (64 - width)) as u32
}
