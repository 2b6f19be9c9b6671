//! EFloat: entropy-coded floating point compression for FP32 embedding models.
//!
//! An EFn value spends a fixed budget of `n` bits per number. The FP32
//! exponent is replaced by a length-limited Huffman code built from the
//! exponent histogram of the data set, and whatever bits the code does not use
//! go to the significand. Frequent exponents therefore carry wide
//! significands, while the logical exponent range stays the full 8 bits of
//! FP32.
//!
//! Module map:
//!
//! - [`fp_bits`]: FP32 field access and BF16/FP16 baselines with DETR/STOC rounding.
//! - [`entropy`]: exponent histograms and length-limited canonical Huffman codes.
//! - [`codec`]: EFn word layout, decoder tables and bit-packed streams.
//! - [`model_io`]: word2vec/GloVe parsers and the `EFLT` container.
//! - [`eval`]: RMSE, cosine top-k, NDCG@k and distribution analyses.
//! - [`synth`]: synthetic embedding models with bell-shaped exponent histograms.

pub mod bitio;
pub mod codec;
pub mod entropy;
mod error;
pub mod eval;
pub mod fp_bits;
pub mod model_io;
pub mod synth;

pub use codec::{DecoderTable, EFloatConfig, EFloatWord, TwoLevelDecoderTable};
pub use entropy::{CanonicalCodeTable, CodeLengths, CodingMode, SymbolHistogram};
pub use error::{Error, Result};
pub use fp_bits::{Fp32Parts, RoundingMode};
pub use model_io::{CompressedModel, EmbeddingModel};
