//! EFn words, decoder tables and bit-packed streams.
//!
//! Word layout, most significant bit first:
//!
//! ```text
//! ExponentOnly:       [ sign | coded exponent | significand ]
//! JointSignExponent:  [ coded (sign, exponent) | significand ]
//! ```
//!
//! The code width varies per value; the total width `n` does not. Decoding
//! looks up the `K` bits after the fixed prefix in a table that returns the
//! symbol and the code length, which also fixes where the significand begins.
//! Missing low significand bits are zero-filled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitio::{read_bits, BitWriter};
use crate::entropy::{self, CanonicalCodeTable, CodingMode, MAX_CODE_WIDTH};
use crate::fp_bits::{compose_unchecked, round_bits, Fp32Parts, RoundingMode, SIGNIFICAND_BITS};
use crate::{Error, Result};

pub const MIN_BITS: u32 = 8;
pub const MAX_BITS: u32 = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EFloatConfig {
    bits: u32,
    max_code: u32,
    mode: CodingMode,
    rounding: RoundingMode,
}

impl EFloatConfig {
    pub fn new(bits: u32, max_code: u32, mode: CodingMode, rounding: RoundingMode) -> Result<Self> {
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(Error::Config(format!("EF width {bits} outside {MIN_BITS}..={MAX_BITS}")));
        }
        if !(1..=MAX_CODE_WIDTH).contains(&max_code) {
            return Err(Error::Config(format!(
                "maximum code width {max_code} outside 1..={MAX_CODE_WIDTH}"
            )));
        }
        // at least one significand bit behind the longest code
        if mode.fixed_bits() + max_code > bits - 1 {
            return Err(Error::Config(format!(
                "maximum code width {max_code} leaves no significand bit in EF{bits} ({} allowed)",
                bits - 1 - mode.fixed_bits()
            )));
        }
        Ok(Self { bits, max_code, mode, rounding })
    }

    /// EF`bits` with exponent-only coding and DETR rounding.
    pub fn ef(bits: u32, max_code: u32) -> Result<Self> {
        Self::new(bits, max_code, CodingMode::ExponentOnly, RoundingMode::Detr)
    }

    /// Largest maximum code width `bits` allows under `mode`.
    pub fn widest_code(bits: u32, mode: CodingMode) -> u32 {
        bits.saturating_sub(1 + mode.fixed_bits()).min(MAX_CODE_WIDTH)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn max_code(&self) -> u32 {
        self.max_code
    }

    pub fn mode(&self) -> CodingMode {
        self.mode
    }

    pub fn rounding(&self) -> RoundingMode {
        self.rounding
    }

    pub fn with_rounding(mut self, rounding: RoundingMode) -> Self {
        self.rounding = rounding;
        self
    }

    /// Significand bits left after a code of `code_len` bits.
    #[inline]
    pub fn significand_width(&self, code_len: u32) -> u32 {
        self.bits - self.mode.fixed_bits() - code_len
    }

    fn check_table(&self, table: &CanonicalCodeTable) -> Result<()> {
        if table.mode() != self.mode {
            return Err(Error::Config("code table mode does not match config".into()));
        }
        let longest = table.code_lengths().longest();
        if longest > self.max_code {
            return Err(Error::CodeTooLong { len: longest, max_len: self.max_code });
        }
        Ok(())
    }
}

/// One encoded value in the low `n` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EFloatWord(pub u32);

/// Decoded table slot: original symbol and its code length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderEntry {
    pub symbol: u16,
    pub len: u8,
}

/// Anything that resolves a `K`-bit window to the code at its front.
pub trait SymbolLookup: Sync {
    fn width(&self) -> u32;
    fn mode(&self) -> CodingMode;
    fn lookup(&self, window: u32) -> Option<DecoderEntry>;
}

/// Flat `2^K` table; a code of length `l` fills `2^(K-l)` consecutive slots.
#[derive(Debug, Clone)]
pub struct DecoderTable {
    width: u32,
    mode: CodingMode,
    // len == 0 marks an unused slot
    entries: Vec<DecoderEntry>,
}

impl DecoderTable {
    pub fn entries(&self) -> &[DecoderEntry] {
        &self.entries
    }

    pub fn invalid_entries(&self) -> usize {
        self.entries.iter().filter(|e| e.len == 0).count()
    }
}

impl SymbolLookup for DecoderTable {
    fn width(&self) -> u32 {
        self.width
    }

    fn mode(&self) -> CodingMode {
        self.mode
    }

    #[inline]
    fn lookup(&self, window: u32) -> Option<DecoderEntry> {
        let e = self.entries[window as usize];
        (e.len > 0).then_some(e)
    }
}

pub fn build_decoder_table(table: &CanonicalCodeTable, width: u32) -> Result<DecoderTable> {
    check_width(table, width)?;
    let mut entries = vec![DecoderEntry { symbol: 0, len: 0 }; 1 << width];
    for e in table.entries() {
        let shift = width - e.len as u32;
        let start = (e.code << shift) as usize;
        entries[start..start + (1 << shift)].fill(DecoderEntry { symbol: e.symbol, len: e.len });
    }
    Ok(DecoderTable { width, mode: table.mode(), entries })
}

fn check_width(table: &CanonicalCodeTable, width: u32) -> Result<()> {
    if !(1..=MAX_CODE_WIDTH).contains(&width) {
        return Err(Error::Config(format!("decoder width {width} outside 1..={MAX_CODE_WIDTH}")));
    }
    let longest = table.code_lengths().longest();
    if longest > width {
        return Err(Error::CodeTooLong { len: longest, max_len: width });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum RootSlot {
    Empty,
    Direct(DecoderEntry),
    Sub { offset: u32, bits: u8 },
}

/// Two-level decoder: a `2^L1` root indexed by the first `L1` window bits,
/// with one sub-table per root slot shared by codes longer than `L1`.
#[derive(Debug, Clone)]
pub struct TwoLevelDecoderTable {
    width: u32,
    root_bits: u32,
    mode: CodingMode,
    root: Vec<RootSlot>,
    sub: Vec<DecoderEntry>,
}

impl TwoLevelDecoderTable {
    /// Root plus sub-table slots.
    pub fn entry_count(&self) -> usize {
        self.root.len() + self.sub.len()
    }

    pub fn root_bits(&self) -> u32 {
        self.root_bits
    }
}

impl SymbolLookup for TwoLevelDecoderTable {
    fn width(&self) -> u32 {
        self.width
    }

    fn mode(&self) -> CodingMode {
        self.mode
    }

    #[inline]
    fn lookup(&self, window: u32) -> Option<DecoderEntry> {
        match self.root[(window >> (self.width - self.root_bits)) as usize] {
            RootSlot::Empty => None,
            RootSlot::Direct(e) => Some(e),
            RootSlot::Sub { offset, bits } => {
                let bits = bits as u32;
                let idx = (window >> (self.width - self.root_bits - bits)) & ((1 << bits) - 1);
                let e = self.sub[(offset + idx) as usize];
                (e.len > 0).then_some(e)
            }
        }
    }
}

pub fn build_two_level_table(
    table: &CanonicalCodeTable,
    width: u32,
    root_bits: u32,
) -> Result<TwoLevelDecoderTable> {
    check_width(table, width)?;
    if root_bits < 1 || root_bits >= width {
        return Err(Error::Config(format!("root width {root_bits} must lie in 1..{width}")));
    }
    let entries = table.entries();
    let mut root = vec![RootSlot::Empty; 1 << root_bits];

    // deepest code per root prefix decides the sub-table size
    let mut sub_bits = vec![0u32; 1 << root_bits];
    for e in &entries {
        let len = e.len as u32;
        if len <= root_bits {
            let shift = root_bits - len;
            let start = (e.code << shift) as usize;
            root[start..start + (1 << shift)].fill(RootSlot::Direct(DecoderEntry {
                symbol: e.symbol,
                len: e.len,
            }));
        } else {
            let prefix = (e.code >> (len - root_bits)) as usize;
            sub_bits[prefix] = sub_bits[prefix].max(len - root_bits);
        }
    }

    let mut sub = Vec::new();
    for (prefix, &bits) in sub_bits.iter().enumerate() {
        if bits > 0 {
            root[prefix] = RootSlot::Sub { offset: sub.len() as u32, bits: bits as u8 };
            sub.resize(sub.len() + (1 << bits), DecoderEntry { symbol: 0, len: 0 });
        }
    }
    for e in &entries {
        let len = e.len as u32;
        if len <= root_bits {
            continue;
        }
        let prefix = (e.code >> (len - root_bits)) as usize;
        let RootSlot::Sub { offset, bits } = root[prefix] else {
            unreachable!("sub-table allocated for every long prefix");
        };
        let rest = len - root_bits;
        let shift = bits as u32 - rest;
        let start = offset as usize + (((e.code & ((1 << rest) - 1)) << shift) as usize);
        sub[start..start + (1 << shift)].fill(DecoderEntry { symbol: e.symbol, len: e.len });
    }
    Ok(TwoLevelDecoderTable { width, root_bits, mode: table.mode(), root, sub })
}

/// Encode one value. `index` keys the STOC draw.
pub fn encode_value(
    x: f32,
    index: usize,
    table: &CanonicalCodeTable,
    cfg: &EFloatConfig,
) -> Result<EFloatWord> {
    cfg.check_table(table)?;
    encode_unchecked(x, index, table, cfg)
}

#[inline]
fn encode_unchecked(
    x: f32,
    index: usize,
    table: &CanonicalCodeTable,
    cfg: &EFloatConfig,
) -> Result<EFloatWord> {
    let symbol = cfg.mode.symbol_of(x);
    let (code, len) = table.code(symbol).ok_or(Error::MissingSymbol { symbol, index })?;
    let p = Fp32Parts::from_f32(x);
    let sig_width = cfg.significand_width(len as u32);
    let keep = sig_width.min(SIGNIFICAND_BITS);
    let draw = cfg.rounding.draw(index as u64);
    let mut stored = round_bits(p.significand, SIGNIFICAND_BITS - keep, cfg.rounding, draw)
        << (sig_width - keep);
    if p.is_special() && p.significand != 0 && stored == 0 {
        // NaN guard: a zero significand would turn the NaN into an infinity
        stored = 1 << (sig_width - 1);
    }
    let mut word = (code << sig_width) | stored;
    if cfg.mode == CodingMode::ExponentOnly {
        word |= (p.sign as u32) << (cfg.bits - 1);
    }
    Ok(EFloatWord(word))
}

/// Decode one word through any decoder table.
pub fn decode_value<T: SymbolLookup + ?Sized>(
    word: EFloatWord,
    dec: &T,
    cfg: &EFloatConfig,
) -> Result<f32> {
    check_decoder(dec, cfg)?;
    decode_unchecked(word, dec, cfg)
}

fn check_decoder<T: SymbolLookup + ?Sized>(dec: &T, cfg: &EFloatConfig) -> Result<()> {
    if dec.width() != cfg.max_code || dec.mode() != cfg.mode {
        return Err(Error::Config(format!(
            "decoder table (K={}, {:?}) does not match config (K={}, {:?})",
            dec.width(),
            dec.mode(),
            cfg.max_code,
            cfg.mode
        )));
    }
    Ok(())
}

#[inline]
fn decode_unchecked<T: SymbolLookup + ?Sized>(
    word: EFloatWord,
    dec: &T,
    cfg: &EFloatConfig,
) -> Result<f32> {
    let w = word.0;
    let fixed = cfg.mode.fixed_bits();
    let k = cfg.max_code;
    let window = (w >> (cfg.bits - fixed - k)) & ((1 << k) - 1);
    let entry = dec
        .lookup(window)
        .ok_or_else(|| Error::CorruptStream(format!("no code matches window {window:#b}")))?;
    let sig_width = cfg.significand_width(entry.len as u32);
    let stored = w & ((1 << sig_width) - 1);
    let significand = if sig_width >= SIGNIFICAND_BITS {
        stored >> (sig_width - SIGNIFICAND_BITS)
    } else {
        stored << (SIGNIFICAND_BITS - sig_width)
    };
    let (sign, exponent) = match cfg.mode {
        CodingMode::ExponentOnly => ((w >> (cfg.bits - 1)) & 1 == 1, entry.symbol as u8),
        CodingMode::JointSignExponent => (entry.symbol >> 8 == 1, entry.symbol as u8),
    };
    Ok(f32::from_bits(compose_unchecked(sign, exponent, significand)))
}

/// Bytes needed for `count` values of `bits` each.
#[inline]
pub fn payload_len(count: usize, bits: u32) -> usize {
    (count * bits as usize).div_ceil(8)
}

/// Pack `values` at a fixed `n`-bit pitch, MSB first, zero-padded to a byte.
pub fn encode_stream(values: &[f32], table: &CanonicalCodeTable, cfg: &EFloatConfig) -> Result<Vec<u8>> {
    cfg.check_table(table)?;
    let words: Vec<Result<EFloatWord>> = values
        .par_iter()
        .enumerate()
        .with_min_len(1024)
        .map(|(i, &x)| encode_unchecked(x, i, table, cfg))
        .collect();
    let mut w = BitWriter::with_capacity_bits(values.len() * cfg.bits as usize);
    for word in words {
        w.write_bits(word?.0, cfg.bits);
    }
    Ok(w.finish())
}

#[inline]
pub fn read_word(payload: &[u8], index: usize, bits: u32) -> EFloatWord {
    EFloatWord(read_bits(payload, index * bits as usize, bits))
}

/// Decode `count` values starting at value index `start`.
pub fn decode_range<T: SymbolLookup + ?Sized>(
    payload: &[u8],
    dec: &T,
    cfg: &EFloatConfig,
    start: usize,
    count: usize,
) -> Result<Vec<f32>> {
    check_decoder(dec, cfg)?;
    let needed = payload_len(start + count, cfg.bits);
    if payload.len() < needed {
        return Err(Error::ShortPayload { needed, available: payload.len() });
    }
    (start..start + count)
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| decode_unchecked(read_word(payload, i, cfg.bits), dec, cfg))
        .collect()
}

pub fn decode_stream<T: SymbolLookup + ?Sized>(
    payload: &[u8],
    dec: &T,
    cfg: &EFloatConfig,
    count: usize,
) -> Result<Vec<f32>> {
    decode_range(payload, dec, cfg, 0, count)
}

/// Decode one `dim`-wide row; row `r` starts at bit `r * dim * n`.
pub fn decode_row<T: SymbolLookup + ?Sized>(
    payload: &[u8],
    dec: &T,
    cfg: &EFloatConfig,
    dim: usize,
    row: usize,
) -> Result<Vec<f32>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("row dimension must be positive".into()));
    }
    let rows = payload.len() * 8 / (dim * cfg.bits as usize);
    if row >= rows {
        return Err(Error::RowOutOfRange { row, rows });
    }
    decode_range(payload, dec, cfg, row * dim, dim)
}

/// Code table, decoder and config bundled for a data set.
#[derive(Debug, Clone)]
pub struct EFloatCodec {
    cfg: EFloatConfig,
    table: CanonicalCodeTable,
    decoder: DecoderTable,
}

impl EFloatCodec {
    pub fn new(cfg: EFloatConfig, table: CanonicalCodeTable) -> Result<Self> {
        cfg.check_table(&table)?;
        let decoder = build_decoder_table(&table, cfg.max_code)?;
        Ok(Self { cfg, table, decoder })
    }

    /// Histogram `values` (every `stride`-th), build the length-limited code
    /// and its decoder. `include_all` codes every symbol of the alphabet.
    pub fn fit(values: &[f32], cfg: EFloatConfig, stride: usize, include_all: bool) -> Result<Self> {
        let mut hist = entropy::build_histogram(values, cfg.mode, stride)?;
        if include_all {
            hist.include_all();
        }
        let table = entropy::build_code_table(&hist, cfg.max_code)?;
        Self::new(cfg, table)
    }

    pub fn config(&self) -> &EFloatConfig {
        &self.cfg
    }

    pub fn table(&self) -> &CanonicalCodeTable {
        &self.table
    }

    pub fn decoder(&self) -> &DecoderTable {
        &self.decoder
    }

    pub fn encode(&self, values: &[f32]) -> Result<Vec<u8>> {
        encode_stream(values, &self.table, &self.cfg)
    }

    pub fn decode(&self, payload: &[u8], count: usize) -> Result<Vec<f32>> {
        decode_stream(payload, &self.decoder, &self.cfg, count)
    }

    /// Encode then decode, i.e. the FP32 values an EFn copy represents.
    pub fn round_trip(&self, values: &[f32]) -> Result<Vec<f32>> {
        self.decode(&self.encode(values)?, values.len())
    }
}
