//! Symbol histograms and length-limited canonical Huffman codes.
//!
//! A symbol is either the 8-bit biased FP32 exponent or, in joint mode, the
//! 9-bit value `(sign << 8) | exponent`. Code lengths come from the
//! package-merge algorithm, which gives the minimum-redundancy prefix code
//! under a maximum code length.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fp_bits::Fp32Parts;
use crate::{Error, Result};

/// Largest supported maximum code width. Decoder tables hold `2^K` entries.
pub const MAX_CODE_WIDTH: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodingMode {
    /// Code the 8-bit exponent; the sign bit is stored verbatim.
    #[default]
    ExponentOnly,
    /// Code sign and exponent together as one 9-bit symbol.
    JointSignExponent,
}

impl CodingMode {
    pub fn alphabet_size(self) -> usize {
        match self {
            CodingMode::ExponentOnly => 256,
            CodingMode::JointSignExponent => 512,
        }
    }

    #[inline]
    pub fn symbol_of(self, x: f32) -> u16 {
        let p = Fp32Parts::from_f32(x);
        match self {
            CodingMode::ExponentOnly => p.biased_exponent as u16,
            CodingMode::JointSignExponent => ((p.sign as u16) << 8) | p.biased_exponent as u16,
        }
    }

    /// Bits of the word not available to the code or significand.
    #[inline]
    pub fn fixed_bits(self) -> u32 {
        match self {
            CodingMode::ExponentOnly => 1,
            CodingMode::JointSignExponent => 0,
        }
    }

    pub fn id(self) -> u8 {
        match self {
            CodingMode::ExponentOnly => 0,
            CodingMode::JointSignExponent => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(CodingMode::ExponentOnly),
            1 => Some(CodingMode::JointSignExponent),
            _ => None,
        }
    }
}

/// Occurrence counts per symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolHistogram {
    mode: CodingMode,
    counts: Vec<u64>,
    total: u64,
}

impl SymbolHistogram {
    pub fn new(mode: CodingMode) -> Self {
        Self {
            mode,
            counts: vec![0; mode.alphabet_size()],
            total: 0,
        }
    }

    /// Build from explicit counts; `counts` is padded with zeros to the
    /// alphabet size.
    pub fn from_counts(mode: CodingMode, counts: &[u64]) -> Result<Self> {
        if counts.len() > mode.alphabet_size() {
            return Err(Error::InvalidArgument(format!(
                "{} counts for an alphabet of {}",
                counts.len(),
                mode.alphabet_size()
            )));
        }
        let mut h = Self::new(mode);
        h.counts[..counts.len()].copy_from_slice(counts);
        h.total = counts.iter().sum();
        Ok(h)
    }

    #[inline]
    pub fn add(&mut self, symbol: u16) {
        self.counts[symbol as usize] += 1;
        self.total += 1;
    }

    /// Element-wise sum of two partial histograms.
    pub fn merge(&mut self, other: &SymbolHistogram) {
        assert_eq!(self.mode, other.mode, "merging histograms of different modes");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    /// Give every absent symbol a count of one so the resulting code covers
    /// the whole alphabet.
    pub fn include_all(&mut self) {
        for c in self.counts.iter_mut().filter(|c| **c == 0) {
            *c = 1;
            self.total += 1;
        }
    }

    pub fn mode(&self) -> CodingMode {
        self.mode
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, symbol: u16) -> u64 {
        self.counts[symbol as usize]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Present symbols in ascending order.
    pub fn present(&self) -> impl Iterator<Item = (u16, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| (s as u16, c))
    }

    pub fn unique(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Histogram every `stride`-th value.
pub fn build_histogram(values: &[f32], mode: CodingMode, stride: usize) -> Result<SymbolHistogram> {
    if stride == 0 {
        return Err(Error::InvalidStride);
    }
    let sampled = values.len().div_ceil(stride);
    Ok((0..sampled)
        .into_par_iter()
        .with_min_len(4096)
        .fold(
            || SymbolHistogram::new(mode),
            |mut h, j| {
                h.add(mode.symbol_of(values[j * stride]));
                h
            },
        )
        .reduce(
            || SymbolHistogram::new(mode),
            |mut a, b| {
                a.merge(&b);
                a
            },
        ))
}

/// Code length per symbol, 0 for symbols without a code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeLengths {
    mode: CodingMode,
    max_len: u32,
    lengths: Vec<u8>,
}

impl CodeLengths {
    /// Validate lengths against `max_len` and the Kraft inequality.
    pub fn new(mode: CodingMode, max_len: u32, lengths: Vec<u8>) -> Result<Self> {
        check_max_len(max_len)?;
        if lengths.len() != mode.alphabet_size() {
            return Err(Error::InvalidArgument(format!(
                "expected {} code lengths, got {}",
                mode.alphabet_size(),
                lengths.len()
            )));
        }
        if let Some(&len) = lengths.iter().find(|&&l| l as u32 > max_len) {
            return Err(Error::CodeTooLong { len: len as u32, max_len });
        }
        let out = Self { mode, max_len, lengths };
        if out.kraft_numerator() > 1u64 << max_len {
            return Err(Error::KraftViolation);
        }
        Ok(out)
    }

    pub fn mode(&self) -> CodingMode {
        self.mode
    }

    pub fn max_len(&self) -> u32 {
        self.max_len
    }

    pub fn lengths(&self) -> &[u8] {
        &self.lengths
    }

    #[inline]
    pub fn get(&self, symbol: u16) -> u8 {
        self.lengths[symbol as usize]
    }

    /// `sum 2^(K - len)` over coded symbols; Kraft holds iff this is `<= 2^K`.
    pub fn kraft_numerator(&self) -> u64 {
        self.lengths
            .iter()
            .filter(|&&l| l > 0)
            .map(|&l| 1u64 << (self.max_len - l as u32))
            .sum()
    }

    pub fn kraft_sum(&self) -> f64 {
        self.kraft_numerator() as f64 / (1u64 << self.max_len) as f64
    }

    pub fn present(&self) -> usize {
        self.lengths.iter().filter(|&&l| l > 0).count()
    }

    pub fn longest(&self) -> u32 {
        self.lengths.iter().copied().max().unwrap_or(0) as u32
    }

    pub fn shortest(&self) -> u32 {
        self.lengths.iter().copied().filter(|&l| l > 0).min().unwrap_or(0) as u32
    }
}

fn check_max_len(max_len: u32) -> Result<()> {
    if !(1..=MAX_CODE_WIDTH).contains(&max_len) {
        return Err(Error::Config(format!(
            "maximum code width {max_len} outside 1..={MAX_CODE_WIDTH}"
        )));
    }
    Ok(())
}

/// Optimal code lengths no longer than `max_len` (package-merge).
///
/// Symbols are ranked by (count descending, symbol ascending) so equal
/// counts resolve deterministically. A lone symbol gets length 1.
pub fn limited_huffman_lengths(hist: &SymbolHistogram, max_len: u32) -> Result<CodeLengths> {
    check_max_len(max_len)?;
    let mut ranked: Vec<(u16, u64)> = hist.present().collect();
    if ranked.len() as u64 > 1u64 << max_len {
        return Err(Error::Capacity { present: ranked.len(), max_len });
    }
    // lightest first
    ranked.sort_unstable_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)));
    let weights: Vec<u64> = ranked.iter().map(|&(_, c)| c).collect();

    let mut lengths = vec![0u8; hist.mode().alphabet_size()];
    for ((symbol, _), len) in ranked.iter().zip(package_merge(&weights, max_len)) {
        lengths[*symbol as usize] = len;
    }
    CodeLengths::new(hist.mode(), max_len, lengths)
}

#[derive(Clone, Copy)]
enum Item {
    Leaf(usize),
    // items 2i and 2i+1 of the previous level
    Package(usize),
}

/// Package-merge over weights sorted ascending; returns a length per weight.
fn package_merge(weights: &[u64], max_len: u32) -> Vec<u8> {
    let n = weights.len();
    match n {
        0 => return Vec::new(),
        1 => return vec![1],
        _ => {}
    }
    let leaves: Vec<(u128, Item)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| (w as u128, Item::Leaf(i)))
        .collect();

    let mut levels = vec![leaves.clone()];
    for _ in 1..max_len {
        let prev = levels.last().unwrap();
        let packages = prev
            .chunks_exact(2)
            .enumerate()
            .map(|(i, pair)| (pair[0].0 + pair[1].0, Item::Package(i)));
        let mut merged = Vec::with_capacity(2 * n);
        let mut leaf_iter = leaves.iter().copied().peekable();
        let mut pkg_iter = packages.peekable();
        loop {
            let take_leaf = match (leaf_iter.peek(), pkg_iter.peek()) {
                (None, None) => break,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (Some(l), Some(p)) => l.0 <= p.0,
            };
            merged.push(if take_leaf {
                leaf_iter.next().unwrap()
            } else {
                pkg_iter.next().unwrap()
            });
        }
        levels.push(merged);
    }

    let mut lengths = vec![0u8; n];
    let top = levels.len() - 1;
    let mut stack: Vec<(usize, usize)> = (0..2 * n - 2).map(|i| (top, i)).collect();
    while let Some((level, idx)) = stack.pop() {
        match levels[level][idx].1 {
            Item::Leaf(i) => lengths[i] += 1,
            Item::Package(p) => {
                stack.push((level - 1, 2 * p));
                stack.push((level - 1, 2 * p + 1));
            }
        }
    }
    lengths
}

/// Canonical prefix code: codes assigned in increasing (length, symbol) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalCodeTable {
    lengths: CodeLengths,
    codes: Vec<u32>,
}

/// One coded symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeEntry {
    pub symbol: u16,
    pub code: u32,
    pub len: u8,
}

impl CanonicalCodeTable {
    pub fn mode(&self) -> CodingMode {
        self.lengths.mode()
    }

    pub fn max_len(&self) -> u32 {
        self.lengths.max_len()
    }

    pub fn code_lengths(&self) -> &CodeLengths {
        &self.lengths
    }

    #[inline]
    pub fn code(&self, symbol: u16) -> Option<(u32, u8)> {
        let len = *self.lengths.lengths.get(symbol as usize)?;
        (len > 0).then(|| (self.codes[symbol as usize], len))
    }

    /// Coded symbols in canonical order.
    pub fn entries(&self) -> Vec<CodeEntry> {
        let mut out: Vec<CodeEntry> = self
            .lengths
            .lengths
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0)
            .map(|(s, &len)| CodeEntry { symbol: s as u16, code: self.codes[s], len })
            .collect();
        out.sort_unstable_by_key(|e| (e.len, e.symbol));
        out
    }

    pub fn present(&self) -> usize {
        self.lengths.present()
    }
}

pub fn canonical_codes(lengths: &CodeLengths) -> Result<CanonicalCodeTable> {
    if lengths.kraft_numerator() > 1u64 << lengths.max_len {
        return Err(Error::KraftViolation);
    }
    let max = lengths.longest() as usize;
    let mut per_len = vec![0u32; max + 1];
    for &l in lengths.lengths.iter().filter(|&&l| l > 0) {
        per_len[l as usize] += 1;
    }
    let mut next = vec![0u32; max + 1];
    let mut code = 0u32;
    for len in 1..=max {
        code = (code + per_len[len - 1]) << 1;
        next[len] = code;
    }
    let mut codes = vec![0u32; lengths.lengths.len()];
    for (s, &l) in lengths.lengths.iter().enumerate() {
        if l > 0 {
            codes[s] = next[l as usize];
            next[l as usize] += 1;
        }
    }
    Ok(CanonicalCodeTable { lengths: lengths.clone(), codes })
}

/// Histogram → length-limited lengths → canonical table.
pub fn build_code_table(hist: &SymbolHistogram, max_len: u32) -> Result<CanonicalCodeTable> {
    canonical_codes(&limited_huffman_lengths(hist, max_len)?)
}

/// Mean code length in bits per symbol, weighted by the histogram.
pub fn average_code_width(hist: &SymbolHistogram, lengths: &CodeLengths) -> Result<f64> {
    if hist.total() == 0 {
        return Err(Error::EmptyHistogram);
    }
    let mut bits = 0u128;
    for (s, c) in hist.present() {
        let len = lengths.lengths.get(s as usize).copied().unwrap_or(0);
        if len == 0 {
            return Err(Error::InvalidArgument(format!("symbol {s} has no code")));
        }
        bits += c as u128 * len as u128;
    }
    Ok(bits as f64 / hist.total() as f64)
}
