//! Embedding model files and the `EFLT` compressed container.
//!
//! Supported inputs are word2vec text (`count dim` header), GloVe text (no
//! header) and word2vec binary (ASCII header, then per token the token
//! bytes, a space and `dim` little-endian FP32 values).
//!
//! Container layout, integers little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "EFLT"
//! 4       2     version (1)
//! 6       1     n, bits per value
//! 7       1     K, maximum code width
//! 8       1     coding mode (0 exponent-only, 1 joint sign+exponent)
//! 9       1     rounding (0 DETR, 1 STOC)
//! 10      8     STOC seed (0 for DETR)
//! 18      8     token count
//! 26      4     dim
//! 30      2     coded symbol count S
//! 32      3*S   (symbol u16, code length u8), ascending symbol
//! ..      ..    tokens: (byte length u16, UTF-8 bytes) per token
//! ..      8     payload byte length P
//! ..      P     payload, MSB-first n-bit words, zero-padded
//! ..      4     CRC-32 of the payload
//! ```

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::codec::{self, DecoderTable, EFloatCodec, EFloatConfig};
use crate::entropy::{canonical_codes, CanonicalCodeTable, CodeLengths, CodingMode};
use crate::fp_bits::RoundingMode;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EFLT";
pub const VERSION: u16 = 1;
const FIXED_HEADER_LEN: usize = 30;

/// Tokens plus a row-major FP32 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    tokens: Vec<String>,
    dim: usize,
    matrix: Vec<f32>,
}

impl EmbeddingModel {
    pub fn new(tokens: Vec<String>, dim: usize, matrix: Vec<f32>) -> Result<Self> {
        if dim == 0 && !tokens.is_empty() {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if matrix.len() != tokens.len() * dim {
            return Err(Error::InvalidArgument(format!(
                "matrix has {} values, expected {} x {}",
                matrix.len(),
                tokens.len(),
                dim
            )));
        }
        let mut seen = HashSet::with_capacity(tokens.len());
        for t in &tokens {
            if !seen.insert(t.as_str()) {
                return Err(Error::DuplicateToken(t.clone()));
            }
        }
        Ok(Self { tokens, dim, matrix })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn matrix(&self) -> &[f32] {
        &self.matrix
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.tokens.iter().position(|t| t == token)
    }

    /// Same tokens, different values.
    pub fn with_matrix(&self, matrix: Vec<f32>) -> Result<Self> {
        if matrix.len() != self.matrix.len() {
            return Err(Error::InvalidArgument("replacement matrix has the wrong size".into()));
        }
        Ok(Self { tokens: self.tokens.clone(), dim: self.dim, matrix })
    }
}

fn parse_row(line_no: usize, fields: &[&str], dim: usize, out: &mut Vec<f32>) -> Result<()> {
    if fields.len() != dim + 1 {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("expected {} values, found {}", dim, fields.len().saturating_sub(1)),
        });
    }
    for f in &fields[1..] {
        let v: f32 = f.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("non-numeric value {f:?}"),
        })?;
        out.push(v);
    }
    Ok(())
}

/// Parse word2vec or GloVe text. A first line made of exactly two integers
/// is taken as the word2vec `count dim` header.
pub fn load_text_model<R: BufRead>(reader: R) -> Result<EmbeddingModel> {
    let mut header: Option<(usize, usize)> = None;
    let mut dim: Option<usize> = None;
    let mut tokens = Vec::new();
    let mut matrix = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if i == 0 && fields.len() == 2 {
            if let (Ok(count), Ok(d)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                header = Some((count, d));
                dim = Some(d);
                continue;
            }
        }
        let d = *dim.get_or_insert(fields.len() - 1);
        if d == 0 {
            return Err(Error::Parse { line: line_no, msg: "row without values".into() });
        }
        parse_row(line_no, &fields, d, &mut matrix)?;
        tokens.push(fields[0].to_string());
    }
    if let Some((count, _)) = header {
        if count != tokens.len() {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header announces {count} tokens, file has {}", tokens.len()),
            });
        }
    }
    EmbeddingModel::new(tokens, dim.unwrap_or(0), matrix)
}

/// Parse the word2vec binary convention.
pub fn load_binary_model(bytes: &[u8]) -> Result<EmbeddingModel> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Parse { line: 1, msg: "missing header line".into() })?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| Error::Parse { line: 1, msg: "header is not UTF-8".into() })?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(|f| f.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse { line: 1, msg: format!("bad header {header:?}") })?;
    let [count, dim] = nums[..] else {
        return Err(Error::Parse { line: 1, msg: format!("bad header {header:?}") });
    };
    if dim == 0 && count > 0 {
        return Err(Error::Parse { line: 1, msg: "dimension must be positive".into() });
    }

    let mut pos = nl + 1;
    let mut tokens = Vec::with_capacity(count);
    let mut matrix = Vec::with_capacity(count * dim);
    for _ in 0..count {
        while bytes.get(pos) == Some(&b'\n') {
            pos += 1;
        }
        let start = pos;
        let len = bytes[start..].iter().position(|&b| b == b' ').ok_or(Error::Truncated {
            offset: start,
            msg: "unterminated token".into(),
        })?;
        let token = std::str::from_utf8(&bytes[start..start + len])
            .map_err(|_| Error::Truncated { offset: start, msg: "token is not UTF-8".into() })?;
        tokens.push(token.to_string());
        pos = start + len + 1;
        let block = dim * 4;
        if bytes.len() < pos + block {
            return Err(Error::Truncated {
                offset: bytes.len(),
                msg: format!("need {block} bytes of vector data at offset {pos}"),
            });
        }
        matrix.extend(
            bytes[pos..pos + block]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])),
        );
        pos += block;
    }
    EmbeddingModel::new(tokens, dim, matrix)
}

/// Load by extension: `.bin` is word2vec binary, anything else text.
pub fn load_model(path: &Path) -> Result<EmbeddingModel> {
    if is_binary_path(path) {
        load_binary_model(&fs::read(path)?)
    } else {
        let f = fs::File::open(path)?;
        load_text_model(std::io::BufReader::new(f))
    }
}

pub fn save_model(model: &EmbeddingModel, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    if is_binary_path(path) {
        write_binary_model(model, &mut out)?;
    } else {
        write_text_model(model, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn is_binary_path(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("bin"))
}

/// word2vec text with header. Values print in shortest round-trip form.
pub fn write_text_model<W: Write>(model: &EmbeddingModel, out: &mut W) -> Result<()> {
    writeln!(out, "{} {}", model.len(), model.dim())?;
    for (i, token) in model.tokens().iter().enumerate() {
        write!(out, "{token}")?;
        for v in model.row(i) {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_binary_model<W: Write>(model: &EmbeddingModel, out: &mut W) -> Result<()> {
    writeln!(out, "{} {}", model.len(), model.dim())?;
    for (i, token) in model.tokens().iter().enumerate() {
        out.write_all(token.as_bytes())?;
        out.write_all(b" ")?;
        for v in model.row(i) {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Fixed header fields of a container.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainerHeader {
    pub version: u16,
    pub config: EFloatConfig,
    pub token_count: u64,
    pub dim: u32,
}

/// A parsed or freshly built container.
#[derive(Debug, Clone)]
pub struct CompressedModel {
    header: ContainerHeader,
    table: CanonicalCodeTable,
    decoder: DecoderTable,
    tokens: Vec<String>,
    payload: Vec<u8>,
}

/// Size in bytes of the serialized code-table section for `present` symbols.
pub fn code_table_bytes(present: usize) -> usize {
    2 + 3 * present
}

impl CompressedModel {
    /// Encode `model` with a prepared code table.
    pub fn encode(model: &EmbeddingModel, cfg: EFloatConfig, table: CanonicalCodeTable) -> Result<Self> {
        if model.dim() > u32::MAX as usize {
            return Err(Error::InvalidArgument("dimension does not fit the header".into()));
        }
        let codec = EFloatCodec::new(cfg, table)?;
        let payload = codec.encode(model.matrix())?;
        Ok(Self {
            header: ContainerHeader {
                version: VERSION,
                config: cfg,
                token_count: model.len() as u64,
                dim: model.dim() as u32,
            },
            table: codec.table().clone(),
            decoder: codec.decoder().clone(),
            tokens: model.tokens().to_vec(),
            payload,
        })
    }

    pub fn header(&self) -> &ContainerHeader {
        &self.header
    }

    pub fn config(&self) -> &EFloatConfig {
        &self.header.config
    }

    pub fn table(&self) -> &CanonicalCodeTable {
        &self.table
    }

    pub fn decoder(&self) -> &DecoderTable {
        &self.decoder
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn rows(&self) -> usize {
        self.tokens.len()
    }

    pub fn dim(&self) -> usize {
        self.header.dim as usize
    }

    pub fn decode_row(&self, row: usize) -> Result<Vec<f32>> {
        if row >= self.rows() {
            return Err(Error::RowOutOfRange { row, rows: self.rows() });
        }
        codec::decode_range(&self.payload, &self.decoder, self.config(), row * self.dim(), self.dim())
    }

    pub fn decode_all(&self) -> Result<Vec<f32>> {
        codec::decode_stream(&self.payload, &self.decoder, self.config(), self.rows() * self.dim())
    }

    pub fn decode_model(&self) -> Result<EmbeddingModel> {
        EmbeddingModel::new(self.tokens.clone(), self.dim(), self.decode_all()?)
    }

    pub fn table_section_len(&self) -> usize {
        code_table_bytes(self.table.present())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let cfg = self.config();
        let mut out = Vec::with_capacity(FIXED_HEADER_LEN + self.payload.len() + 64);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.header.version.to_le_bytes());
        out.push(cfg.bits() as u8);
        out.push(cfg.max_code() as u8);
        out.push(cfg.mode().id());
        out.push(cfg.rounding().id());
        out.extend_from_slice(&cfg.rounding().seed().to_le_bytes());
        out.extend_from_slice(&self.header.token_count.to_le_bytes());
        out.extend_from_slice(&self.header.dim.to_le_bytes());

        let lengths = self.table.code_lengths().lengths();
        out.extend_from_slice(&(self.table.present() as u16).to_le_bytes());
        for (symbol, &len) in lengths.iter().enumerate().filter(|(_, &l)| l > 0) {
            out.extend_from_slice(&(symbol as u16).to_le_bytes());
            out.push(len);
        }

        for t in &self.tokens {
            let len = u16::try_from(t.len())
                .map_err(|_| Error::InvalidArgument(format!("token longer than 65535 bytes: {t:.32}...")))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(t.as_bytes());
        }

        out.extend_from_slice(&(self.payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&crc32fast::hash(&self.payload).to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Container("bad magic".into()));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::Container(format!("unsupported version {version}")));
        }
        let bits = r.u8()? as u32;
        let max_code = r.u8()? as u32;
        let mode = CodingMode::from_id(r.u8()?)
            .ok_or_else(|| Error::Container("unknown coding mode".into()))?;
        let rounding_id = r.u8()?;
        let seed = r.u64()?;
        let rounding = RoundingMode::from_id(rounding_id, seed)
            .ok_or_else(|| Error::Container("unknown rounding mode".into()))?;
        let config = EFloatConfig::new(bits, max_code, mode, rounding)
            .map_err(|e| Error::Container(e.to_string()))?;
        let token_count = r.u64()?;
        let dim = r.u32()?;

        let present = r.u16()? as usize;
        let mut lengths = vec![0u8; mode.alphabet_size()];
        for _ in 0..present {
            let symbol = r.u16()? as usize;
            let len = r.u8()?;
            if symbol >= lengths.len() || len == 0 || lengths[symbol] != 0 {
                return Err(Error::Container(format!("bad code table entry for symbol {symbol}")));
            }
            lengths[symbol] = len;
        }
        let lengths = CodeLengths::new(mode, max_code, lengths)
            .map_err(|e| Error::Container(format!("code table: {e}")))?;
        let table = canonical_codes(&lengths)?;

        let count = usize::try_from(token_count)
            .map_err(|_| Error::Container("token count too large".into()))?;
        // each token needs at least its length prefix
        if count > r.remaining() / 2 {
            return Err(Error::Container(format!("token count {count} exceeds container size")));
        }
        let mut tokens = Vec::with_capacity(count);
        for _ in 0..count {
            let len = r.u16()? as usize;
            let offset = r.pos;
            let raw = r.take(len)?;
            let t = std::str::from_utf8(raw)
                .map_err(|_| Error::Container(format!("token at byte {offset} is not UTF-8")))?;
            tokens.push(t.to_string());
        }

        let payload_bytes = r.u64()? as usize;
        let expected = codec::payload_len(count * dim as usize, bits);
        if payload_bytes != expected {
            return Err(Error::Container(format!(
                "payload is {payload_bytes} bytes, header implies {expected}"
            )));
        }
        let payload = r.take(payload_bytes)?.to_vec();
        let stored = r.u32()?;
        let computed = crc32fast::hash(&payload);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        if r.remaining() != 0 {
            return Err(Error::Container(format!("{} trailing bytes", r.remaining())));
        }
        let decoder = codec::build_decoder_table(&table, max_code)?;
        Ok(Self {
            header: ContainerHeader { version, config, token_count, dim },
            table,
            decoder,
            tokens,
            payload,
        })
    }
}

/// Histogram the model, build the code table and serialize the container.
pub fn write_compressed(
    model: &EmbeddingModel,
    cfg: EFloatConfig,
    table: CanonicalCodeTable,
) -> Result<Vec<u8>> {
    CompressedModel::encode(model, cfg, table)?.to_bytes()
}

pub fn read_compressed(bytes: &[u8]) -> Result<CompressedModel> {
    CompressedModel::from_bytes(bytes)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Truncated {
                offset: self.bytes.len(),
                msg: format!("need {n} bytes at offset {}", self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{build_code_table, build_histogram};

    fn text(s: &str) -> Result<EmbeddingModel> {
        load_text_model(s.as_bytes())
    }

    #[test]
    fn word2vec_text() {
        let m = text("2 3\na 1 2 3\nb 4 5 6\n").unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.dim(), 3);
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn glove_text() {
        let m = text("a 1 2 3\nb 4 5 6\n").unwrap();
        assert_eq!(m.tokens(), &["a".to_string(), "b".to_string()]);
        assert_eq!(m.dim(), 3);
        assert_eq!(m.matrix(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn text_errors() {
        assert!(matches!(text("2 3\na 1 2\nb 4 5 6\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(text("a 1 x 3\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(text("a 1 2\na 3 4\n"), Err(Error::DuplicateToken(_))));
        assert!(matches!(text("3 2\na 1 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(text("").unwrap().is_empty());
    }

    #[test]
    fn binary_parse() {
        let mut bytes = b"1 2\na ".to_vec();
        bytes.extend_from_slice(&1.5f32.to_le_bytes());
        bytes.extend_from_slice(&(-2.0f32).to_le_bytes());
        let m = load_binary_model(&bytes).unwrap();
        assert_eq!(m.tokens(), &["a".to_string()]);
        assert_eq!(m.matrix(), &[1.5, -2.0]);

        let err = load_binary_model(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(err, Error::Truncated { offset: 11, .. }), "{err}");
        assert!(load_binary_model(b"x y\n").is_err());
        assert!(load_binary_model(b"1 2").is_err());
    }

    #[test]
    fn binary_text_binary_round_trip() {
        let m = EmbeddingModel::new(
            vec!["x".into(), "yy".into(), "z".into()],
            2,
            vec![0.1, -3.25e-7, 1e10, f32::MIN_POSITIVE, -0.0, 7.0],
        )
        .unwrap();
        let mut bin = Vec::new();
        write_binary_model(&m, &mut bin).unwrap();
        let from_bin = load_binary_model(&bin).unwrap();
        let mut txt = Vec::new();
        write_text_model(&from_bin, &mut txt).unwrap();
        let from_txt = load_text_model(&txt[..]).unwrap();
        assert_eq!(from_txt.tokens(), m.tokens());
        let bits = |m: &EmbeddingModel| m.matrix().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&from_txt), bits(&m));
    }

    fn compress(m: &EmbeddingModel, bits: u32) -> CompressedModel {
        let cfg = EFloatConfig::ef(bits, 8).unwrap();
        let hist = build_histogram(m.matrix(), cfg.mode(), 1).unwrap();
        let table = build_code_table(&hist, 8).unwrap();
        CompressedModel::encode(m, cfg, table).unwrap()
    }

    #[test]
    fn empty_model_container() {
        let m = EmbeddingModel::new(vec![], 4, vec![]).unwrap();
        let c = compress(&m, 16);
        let bytes = c.to_bytes().unwrap();
        assert_eq!(bytes.len(), FIXED_HEADER_LEN + 2 + 8 + 4);
        let back = read_compressed(&bytes).unwrap();
        assert_eq!(back.rows(), 0);
        assert_eq!(back.header(), c.header());
        assert!(back.decode_all().unwrap().is_empty());
    }

    #[test]
    fn payload_size_and_corruption() {
        let tokens: Vec<String> = (0..1000).map(|i| format!("t{i}")).collect();
        let matrix: Vec<f32> = (0..50_000).map(|i| ((i % 97) as f32 - 48.0) / 7.0).collect();
        let m = EmbeddingModel::new(tokens, 50, matrix).unwrap();
        let c = compress(&m, 16);
        assert_eq!(c.payload().len(), 100_000);
        let mut bytes = c.to_bytes().unwrap();
        let back = read_compressed(&bytes).unwrap();
        assert_eq!(back.decode_row(7).unwrap(), c.decode_row(7).unwrap());
        assert_eq!(back.table(), c.table());

        let n = bytes.len();
        bytes[n - 10] ^= 1;
        assert!(matches!(read_compressed(&bytes), Err(Error::Checksum { .. })));
        assert!(matches!(read_compressed(&bytes[..n - 2]), Err(Error::Truncated { .. })));
        bytes[0] = b'X';
        assert!(matches!(read_compressed(&bytes), Err(Error::Container(_))));
    }

    #[test]
    fn code_table_section_size() {
        // 23 coded exponents serialize to 71 bytes
        assert_eq!(code_table_bytes(23), 71);
    }
}
