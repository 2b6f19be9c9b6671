//! Precision and ranking-quality evaluation.
//!
//! Every format is evaluated the same way: round-trip the FP32 data through
//! the format and compare the regenerated FP32 values with the originals,
//! either element-wise (RMSE) or through the rankings of cosine-similarity
//! queries (NDCG@k against the FP32 ranking).

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{EFloatCodec, EFloatConfig, MAX_BITS, MIN_BITS};
use crate::entropy::{self, average_code_width, limited_huffman_lengths, CodingMode};
use crate::fp_bits::{self, Fp32Parts, RoundingMode, SIGNIFICAND_BITS};
use crate::model_io::{code_table_bytes, EmbeddingModel};
use crate::{Error, Result};

/// A number format data can be round-tripped through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Format {
    Fp32,
    Bf16,
    Fp16,
    /// EFn with `n` total bits.
    Ef(u32),
}

impl Format {
    pub fn is_efn(&self) -> bool {
        matches!(self, Format::Ef(_))
    }

    pub fn is_baseline(&self) -> bool {
        matches!(self, Format::Bf16 | Format::Fp16)
    }

    /// EF16 down to EF8.
    pub fn ef_range() -> impl Iterator<Item = Format> {
        (8..=16).rev().map(Format::Ef)
    }

    /// Parse a comma-separated list such as `bf16,fp16,ef16,ef12`.
    pub fn parse_list(s: &str) -> Result<Vec<Format>> {
        s.split(',').map(|f| f.trim().parse()).collect()
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Format::Fp32 => f.write_str("fp32"),
            Format::Bf16 => f.write_str("bf16"),
            Format::Fp16 => f.write_str("fp16"),
            Format::Ef(n) => write!(f, "ef{n}"),
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "fp32" => Ok(Format::Fp32),
            "bf16" => Ok(Format::Bf16),
            "fp16" => Ok(Format::Fp16),
            _ => lower
                .strip_prefix("ef")
                .and_then(|n| n.parse::<u32>().ok())
                .filter(|n| (MIN_BITS..=MAX_BITS).contains(n))
                .map(Format::Ef)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown format {s:?}"))),
        }
    }
}

impl Serialize for Format {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// How EFn tables are built during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EfnOptions {
    /// Requested maximum code width; narrower formats clamp it to what
    /// their width allows.
    pub max_code: u32,
    pub mode: CodingMode,
    pub stride: usize,
    pub include_all: bool,
}

impl Default for EfnOptions {
    fn default() -> Self {
        Self { max_code: 8, mode: CodingMode::ExponentOnly, stride: 1, include_all: false }
    }
}

impl EfnOptions {
    pub fn config(&self, bits: u32, rounding: RoundingMode) -> Result<EFloatConfig> {
        let k = self.max_code.min(EFloatConfig::widest_code(bits, self.mode));
        EFloatConfig::new(bits, k, self.mode, rounding)
    }
}

/// FP32 values as regenerated from `format`.
pub fn reconstruct(
    values: &[f32],
    format: Format,
    opts: &EfnOptions,
    rounding: RoundingMode,
) -> Result<Vec<f32>> {
    match format {
        Format::Fp32 => Ok(values.to_vec()),
        Format::Bf16 => Ok(fp_bits::bf16_round_trip(values, rounding)),
        Format::Fp16 => Ok(fp_bits::fp16_round_trip(values, rounding)),
        Format::Ef(n) => {
            let cfg = opts.config(n, rounding)?;
            EFloatCodec::fit(values, cfg, opts.stride, opts.include_all)?.round_trip(values)
        }
    }
}

/// RMSE together with the number of pairs left out as non-finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RmseValue {
    pub rmse: f64,
    pub compared: usize,
    pub excluded: usize,
}

/// Root mean square error; pairs where either side is NaN or infinite are
/// skipped and counted.
pub fn rmse_detailed(original: &[f32], reconstructed: &[f32]) -> Result<RmseValue> {
    if original.len() != reconstructed.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            original.len(),
            reconstructed.len()
        )));
    }
    if original.is_empty() {
        return Err(Error::InvalidArgument("RMSE of an empty sequence".into()));
    }
    let (sum, compared) = original
        .par_iter()
        .zip(reconstructed)
        .with_min_len(4096)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            (d * d, 1usize)
        })
        .reduce(|| (0.0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    if compared == 0 {
        return Err(Error::InvalidArgument("no finite pairs to compare".into()));
    }
    Ok(RmseValue {
        rmse: (sum / compared as f64).sqrt(),
        compared,
        excluded: original.len() - compared,
    })
}

pub fn rmse(original: &[f32], reconstructed: &[f32]) -> Result<f64> {
    rmse_detailed(original, reconstructed).map(|r| r.rmse)
}

#[derive(Debug, Clone, Serialize)]
pub struct FormatRmse {
    pub format: Format,
    pub rmse: f64,
    pub excluded: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RmseRatio {
    pub base: Format,
    pub efn: Format,
    /// `rmse(base) / rmse(efn)`; above 1 means the EFn copy is closer.
    pub ratio: f64,
    /// The EFn copy was exact while the base was not.
    pub infinite: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RmseReport {
    pub rounding: String,
    pub entries: Vec<FormatRmse>,
    pub ratios: Vec<RmseRatio>,
}

impl RmseReport {
    pub fn rmse(&self, format: Format) -> Option<f64> {
        self.entries.iter().find(|e| e.format == format).map(|e| e.rmse)
    }

    /// `rmse(num) / rmse(den)`. Two exact reconstructions compare as 1.
    pub fn ratio(&self, num: Format, den: Format) -> Option<f64> {
        Some(ratio(self.rmse(num)?, self.rmse(den)?))
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    match (num == 0.0, den == 0.0) {
        (true, true) => 1.0,
        (false, true) => f64::INFINITY,
        _ => num / den,
    }
}

/// RMSE of every format against FP32 plus the BF16/FP16 over EFn ratios.
pub fn rmse_ratio_report(
    values: &[f32],
    formats: &[Format],
    opts: &EfnOptions,
    rounding: RoundingMode,
) -> Result<RmseReport> {
    let mut entries = Vec::with_capacity(formats.len());
    for &format in formats {
        let rec = reconstruct(values, format, opts, rounding)?;
        let r = rmse_detailed(values, &rec)?;
        entries.push(FormatRmse { format, rmse: r.rmse, excluded: r.excluded });
    }
    let mut ratios = Vec::new();
    for base in entries.iter().filter(|e| e.format.is_baseline()) {
        for efn in entries.iter().filter(|e| e.format.is_efn()) {
            let r = ratio(base.rmse, efn.rmse);
            ratios.push(RmseRatio {
                base: base.format,
                efn: efn.format,
                ratio: r,
                infinite: r.is_infinite(),
            });
        }
    }
    Ok(RmseReport { rounding: rounding.to_string(), entries, ratios })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Most similar first (descending cosine).
    #[default]
    Similar,
    /// Most dissimilar first (ascending cosine).
    Dissimilar,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Similar => "sim",
            Direction::Dissimilar => "dissim",
        })
    }
}

/// Row vectors with precomputed norms.
pub struct VectorSet<'a> {
    data: &'a [f32],
    dim: usize,
    norms: Vec<f64>,
}

impl<'a> VectorSet<'a> {
    pub fn new(data: &'a [f32], dim: usize) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} values do not form rows of {dim}",
                data.len()
            )));
        }
        let norms = data
            .par_chunks(dim)
            .map(|r| r.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt())
            .collect();
        Ok(Self { data, dim, norms })
    }

    pub fn from_model(model: &'a EmbeddingModel) -> Result<Self> {
        Self::new(model.matrix(), model.dim())
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn usable(&self, i: usize) -> bool {
        self.norms[i] > 0.0 && self.norms[i].is_finite()
    }

    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        let dot: f64 = self
            .row(a)
            .iter()
            .zip(self.row(b))
            .map(|(&x, &y)| x as f64 * y as f64)
            .sum();
        dot / (self.norms[a] * self.norms[b])
    }
}

/// Top-k answer to one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedResult {
    pub direction: Direction,
    /// (token index, cosine score), best first.
    pub items: Vec<(usize, f64)>,
}

impl RankedResult {
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|&(i, _)| i)
    }
}

/// Exact top-k by cosine over all other usable rows. Ties go to the lower
/// token index.
pub fn topk_query(set: &VectorSet, query: usize, k: usize, direction: Direction) -> Result<RankedResult> {
    if query >= set.len() {
        return Err(Error::RowOutOfRange { row: query, rows: set.len() });
    }
    if k == 0 || k >= set.len() {
        return Err(Error::InvalidArgument(format!("k={k} must lie in 1..{}", set.len())));
    }
    if !set.usable(query) {
        return Err(Error::InvalidArgument(format!("query {query} has a zero or non-finite norm")));
    }
    let skipped = (0..set.len()).filter(|&i| i != query && !set.usable(i)).count();
    if skipped > 0 {
        log::warn!("{skipped} zero-norm vectors excluded from query {query}");
    }
    let mut scored: Vec<(usize, f64)> = (0..set.len())
        .filter(|&i| i != query && set.usable(i))
        .map(|i| (i, set.cosine(query, i)))
        .collect();
    let order = |a: &(usize, f64), b: &(usize, f64)| {
        let by_score = match direction {
            Direction::Similar => b.1.total_cmp(&a.1),
            Direction::Dissimilar => a.1.total_cmp(&b.1),
        };
        by_score.then(a.0.cmp(&b.0))
    };
    let k = k.min(scored.len());
    if k < scored.len() {
        scored.select_nth_unstable_by(k, order);
        scored.truncate(k);
    }
    scored.sort_unstable_by(order);
    Ok(RankedResult { direction, items: scored })
}

/// NDCG@k of `test` against the `baseline` ranking.
///
/// The baseline item at position `p` (0-based) has graded relevance `k - p`;
/// items outside the baseline top-k have relevance 0. Position `i` (1-based)
/// is discounted by `log2(i + 1)`.
pub fn ndcg_at_k(test: &RankedResult, baseline: &RankedResult, k: usize) -> Result<f64> {
    if baseline.items.is_empty() {
        return Err(Error::InvalidArgument("empty baseline ranking".into()));
    }
    if k == 0 || k > test.items.len() || k > baseline.items.len() {
        return Err(Error::InvalidArgument(format!(
            "k={k} exceeds ranking lengths ({} test, {} baseline)",
            test.items.len(),
            baseline.items.len()
        )));
    }
    let relevance = |item: usize| -> f64 {
        baseline.items[..k]
            .iter()
            .position(|&(b, _)| b == item)
            .map_or(0.0, |p| (k - p) as f64)
    };
    let dcg = |r: &RankedResult| -> f64 {
        r.items[..k]
            .iter()
            .enumerate()
            .map(|(i, &(item, _))| relevance(item) / ((i + 2) as f64).log2())
            .sum()
    };
    Ok(dcg(test) / dcg(baseline))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuerySuiteConfig {
    pub queries: usize,
    pub k: usize,
    pub seed: u64,
    pub direction: Direction,
}

impl Default for QuerySuiteConfig {
    fn default() -> Self {
        Self { queries: 20, k: 10, seed: 0, direction: Direction::Similar }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FormatNdcg {
    pub format: Format,
    pub direction: Direction,
    pub mean_ndcg: f64,
    pub per_query: Vec<f64>,
}

/// `q` distinct query rows with usable norms, drawn from a seeded generator.
pub fn sample_queries(set: &VectorSet, q: usize, seed: u64) -> Result<Vec<usize>> {
    let eligible: Vec<usize> = (0..set.len()).filter(|&i| set.usable(i)).collect();
    if q == 0 || q > eligible.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {q} queries from {} usable tokens",
            eligible.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, eligible.len(), q)
        .into_iter()
        .map(|i| eligible[i])
        .collect())
}

/// Mean NDCG@k of each format's rankings against the FP32 rankings.
pub fn query_suite(
    model: &EmbeddingModel,
    cfg: &QuerySuiteConfig,
    formats: &[Format],
    opts: &EfnOptions,
    rounding: RoundingMode,
) -> Result<Vec<FormatNdcg>> {
    if cfg.k == 0 || cfg.k >= model.len() {
        return Err(Error::InvalidArgument(format!(
            "k={} must be below the token count {}",
            cfg.k,
            model.len()
        )));
    }
    let base_set = VectorSet::from_model(model)?;
    let queries = sample_queries(&base_set, cfg.queries, cfg.seed)?;
    let baselines: Vec<RankedResult> = queries
        .par_iter()
        .map(|&q| topk_query(&base_set, q, cfg.k, cfg.direction))
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(formats.len());
    for &format in formats {
        let rec = reconstruct(model.matrix(), format, opts, rounding)?;
        let set = VectorSet::new(&rec, model.dim())?;
        let per_query: Vec<f64> = queries
            .par_iter()
            .zip(&baselines)
            .map(|(&q, base)| match topk_query(&set, q, cfg.k, cfg.direction) {
                Ok(test) if test.items.len() >= cfg.k => ndcg_at_k(&test, base, cfg.k),
                Ok(_) | Err(Error::InvalidArgument(_)) => {
                    log::warn!("{format}: query {q} unusable after conversion, scored 0");
                    Ok(0.0)
                }
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;
        let mean_ndcg = per_query.iter().sum::<f64>() / per_query.len() as f64;
        out.push(FormatNdcg { format, direction: cfg.direction, mean_ndcg, per_query });
    }
    Ok(out)
}

/// Frequency of the leading decimal digit 1..=9 of |x| over nonzero finite
/// values.
pub fn benford_digits(values: &[f32]) -> Result<[f64; 9]> {
    let (counts, n) = values
        .par_iter()
        .with_min_len(4096)
        .filter(|v| v.is_finite() && **v != 0.0)
        .fold(
            || ([0u64; 9], 0u64),
            |(mut c, n), &v| {
                c[leading_digit(v.abs() as f64) - 1] += 1;
                (c, n + 1)
            },
        )
        .reduce(
            || ([0u64; 9], 0u64),
            |(mut a, na), (b, nb)| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                (a, na + nb)
            },
        );
    if n == 0 {
        return Err(Error::InvalidArgument("no nonzero finite values".into()));
    }
    Ok(counts.map(|c| c as f64 / n as f64))
}

fn leading_digit(x: f64) -> usize {
    let mut scaled = x / 10f64.powi(x.log10().floor() as i32);
    // log10 can land one decade off near powers of ten
    if scaled >= 10.0 {
        scaled /= 10.0;
    } else if scaled < 1.0 {
        scaled *= 10.0;
    }
    (scaled as usize).clamp(1, 9)
}

/// Probability that each FP32 significand bit is set; index 0 is the most
/// significant fraction bit.
pub fn significand_bit_distribution(values: &[f32]) -> Result<[f64; 23]> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no values".into()));
    }
    let counts = values
        .par_iter()
        .with_min_len(4096)
        .fold(
            || [0u64; 23],
            |mut c, v| {
                let m = v.to_bits();
                for (pos, slot) in c.iter_mut().enumerate() {
                    *slot += ((m >> (SIGNIFICAND_BITS - 1 - pos as u32)) & 1) as u64;
                }
                c
            },
        )
        .reduce(
            || [0u64; 23],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(counts.map(|c| c as f64 / values.len() as f64))
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolStat {
    pub symbol: u16,
    /// Unbiased exponent of the symbol.
    pub exponent: i32,
    pub negative: bool,
    pub count: u64,
    pub code_len: u8,
}

/// Exponent-coding characteristics of a data set for one EFn config.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentStats {
    pub bits: u32,
    pub max_code: u32,
    pub mode: CodingMode,
    pub total: u64,
    pub unique: usize,
    pub min_code_width: u32,
    pub max_code_width: u32,
    pub avg_code_width: f64,
    pub avg_significand_width: f64,
    /// Serialized size of the code-table section in the container.
    pub table_bytes: usize,
    pub symbols: Vec<SymbolStat>,
}

pub fn exponent_stats(values: &[f32], cfg: &EFloatConfig, stride: usize) -> Result<ExponentStats> {
    let hist = entropy::build_histogram(values, cfg.mode(), stride)?;
    if hist.total() == 0 {
        return Err(Error::EmptyHistogram);
    }
    let lengths = limited_huffman_lengths(&hist, cfg.max_code())?;
    let avg = average_code_width(&hist, &lengths)?;
    let symbols = hist
        .present()
        .map(|(symbol, count)| SymbolStat {
            symbol,
            exponent: (symbol & 0xFF) as i32 - fp_bits::EXPONENT_BIAS,
            negative: symbol >> 8 == 1,
            count,
            code_len: lengths.get(symbol),
        })
        .collect();
    Ok(ExponentStats {
        bits: cfg.bits(),
        max_code: cfg.max_code(),
        mode: cfg.mode(),
        total: hist.total(),
        unique: hist.unique(),
        min_code_width: lengths.shortest(),
        max_code_width: lengths.longest(),
        avg_code_width: avg,
        avg_significand_width: (cfg.bits() - cfg.mode().fixed_bits()) as f64 - avg,
        table_bytes: code_table_bytes(lengths.present()),
        symbols,
    })
}

/// Unbiased exponent of `x` as stored in its exponent field.
pub fn exponent_of(x: f32) -> i32 {
    Fp32Parts::from_f32(x).biased_exponent as i32 - fp_bits::EXPONENT_BIAS
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranked(items: &[usize]) -> RankedResult {
        RankedResult {
            direction: Direction::Similar,
            items: items.iter().map(|&i| (i, 0.0)).collect(),
        }
    }

    #[test]
    fn format_names() {
        assert_eq!("EF12".parse::<Format>().unwrap(), Format::Ef(12));
        assert_eq!(Format::parse_list("fp32, bf16,fp16,ef8").unwrap().len(), 4);
        assert!("ef7".parse::<Format>().is_err());
        assert!("fp8".parse::<Format>().is_err());
        assert_eq!(Format::Ef(16).to_string(), "ef16");
        assert_eq!(Format::ef_range().count(), 9);
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let r = rmse(&[1.0, 2.0], &[1.5, 2.0]).unwrap();
        assert!((r - (0.125f64).sqrt()).abs() < 1e-15);
        assert!((r - 0.35355).abs() < 1e-5);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse(&[], &[]).is_err());
        let d = rmse_detailed(&[1.0, f32::NAN, 3.0], &[1.0, 2.0, f32::INFINITY]).unwrap();
        assert_eq!((d.compared, d.excluded, d.rmse), (1, 2, 0.0));
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(ratio(0.5, 0.5), 1.0);
        assert_eq!(ratio(1.0, 0.0), f64::INFINITY);
        assert_eq!(ratio(0.0, 0.0), 1.0);
    }

    #[test]
    fn ndcg_examples() {
        let base = ranked(&[0, 1, 2]);
        assert_eq!(ndcg_at_k(&base, &base, 3).unwrap(), 1.0);
        assert_eq!(ndcg_at_k(&ranked(&[5, 6, 7]), &base, 3).unwrap(), 0.0);
        // rel a=3 b=2 c=1, test order b a c
        let dcg = 2.0 + 3.0 / 3f64.log2() + 1.0 / 2.0;
        let idcg = 3.0 + 2.0 / 3f64.log2() + 1.0 / 2.0;
        let got = ndcg_at_k(&ranked(&[1, 0, 2]), &base, 3).unwrap();
        assert!((got - dcg / idcg).abs() < 1e-15);
        assert!((got - 0.92249).abs() < 1e-5);
        assert!(ndcg_at_k(&base, &ranked(&[]), 1).is_err());
        assert!(ndcg_at_k(&base, &base, 4).is_err());
    }

    #[test]
    fn topk_duplicate_and_negation() {
        let data = [1.0, 2.0, 0.5, -1.0, 3.0, 1.0, 2.0, 4.0, -0.5, 0.25, -1.0, -2.0, 0.0, 0.0];
        let set = VectorSet::new(&data, 2).unwrap();
        let sim = topk_query(&set, 0, 2, Direction::Similar).unwrap();
        assert_eq!(sim.items[0].0, 3);
        assert!((sim.items[0].1 - 1.0).abs() < 1e-12);
        let dis = topk_query(&set, 0, 1, Direction::Dissimilar).unwrap();
        assert_eq!(dis.items[0].0, 5);
        assert!((dis.items[0].1 + 1.0).abs() < 1e-12);
        // zero rows (index 6) are never returned
        let all = topk_query(&set, 0, 6, Direction::Similar).unwrap();
        assert_eq!(all.items.len(), 5);
        assert!(all.indices().all(|i| i != 6 && i != 0));
        assert!(topk_query(&set, 6, 1, Direction::Similar).is_err());
        assert!(topk_query(&set, 0, 7, Direction::Similar).is_err());
    }

    #[test]
    fn benford_and_bits() {
        let d = benford_digits(&[1.0; 10]).unwrap();
        assert_eq!(d[0], 1.0);
        assert_eq!(leading_digit(1000.0), 1);
        assert_eq!(leading_digit(0.00999), 9);
        assert_eq!(leading_digit(9.999999e-5), 9);
        assert!(benford_digits(&[0.0, f32::NAN]).is_err());

        let b = significand_bit_distribution(&[1.0, 2.0, 0.5]).unwrap();
        assert_eq!(b.len(), 23);
        assert!(b.iter().all(|&p| p == 0.0));
        let b = significand_bit_distribution(&[1.5]).unwrap();
        assert_eq!(b[0], 1.0);
        assert_eq!(b[1], 0.0);
        assert!(significand_bit_distribution(&[]).is_err());
    }

    #[test]
    fn stats_examples() {
        let cfg = EFloatConfig::ef(16, 8).unwrap();
        let s = exponent_stats(&[1.0, 1.5, 1.25], &cfg, 1).unwrap();
        assert_eq!((s.unique, s.min_code_width, s.max_code_width), (1, 1, 1));
        assert_eq!(s.avg_significand_width, 14.0);

        let s = exponent_stats(&[1.0, 1.0, 2.0, 4.0], &cfg, 1).unwrap();
        assert_eq!(s.avg_code_width, 1.5);
        assert_eq!(s.avg_significand_width, 13.5);
        assert!(exponent_stats(&[], &cfg, 1).is_err());
    }
}
