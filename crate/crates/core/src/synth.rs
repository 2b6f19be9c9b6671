//! Synthetic embedding models.
//!
//! Exponents follow a discretized split-normal bell peaking at `exp_center`:
//! standard deviation `exp_spread` above the peak and twice that below it,
//! so the long tail sits at small magnitudes. The bell is truncated to a
//! window of `uniques` consecutive exponents ending `round(exp_spread)` steps
//! above the peak, and every exponent of the window is placed at least once.
//! Significands and signs are uniform.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fp_bits::{compose_unchecked, EXPONENT_BIAS};
use crate::model_io::EmbeddingModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub tokens: usize,
    pub dim: usize,
    /// Unbiased exponent at the peak of the bell.
    pub exp_center: i32,
    /// Standard deviation of the bell, in exponent steps.
    pub exp_spread: f64,
    pub uniques: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self { tokens: 1000, dim: 50, exp_center: -2, exp_spread: 2.0, uniques: 23, seed: 0 }
    }
}

impl SynthParams {
    /// Inclusive range of unbiased exponents the generator can emit.
    pub fn exponent_window(&self) -> (i32, i32) {
        let above = (self.exp_spread.round() as usize).min(self.uniques.saturating_sub(1)) as i32;
        let below = self.uniques as i32 - 1 - above;
        (self.exp_center - below, self.exp_center + above)
    }

    fn validate(&self) -> Result<()> {
        if self.tokens == 0 || self.dim == 0 {
            return Err(Error::InvalidArgument("tokens and dim must be positive".into()));
        }
        if !(self.exp_spread.is_finite() && self.exp_spread > 0.0) {
            return Err(Error::InvalidArgument("exponent spread must be positive".into()));
        }
        if self.uniques == 0 || self.uniques > self.tokens * self.dim {
            return Err(Error::InvalidArgument(format!(
                "{} unique exponents cannot be placed in {} values",
                self.uniques,
                self.tokens * self.dim
            )));
        }
        let (lo, hi) = self.exponent_window();
        if lo + EXPONENT_BIAS < 1 || hi + EXPONENT_BIAS > 254 {
            return Err(Error::InvalidArgument(format!(
                "exponent window {lo}..={hi} leaves the FP32 normal range"
            )));
        }
        Ok(())
    }
}

/// Unnormalized bell weight of exponent `e`.
pub fn bell_weight(p: &SynthParams, e: i32) -> f64 {
    let sigma = if e >= p.exp_center { p.exp_spread } else { 2.0 * p.exp_spread };
    (-((e - p.exp_center) as f64).powi(2) / (2.0 * sigma * sigma)).exp()
}

pub fn generate(p: &SynthParams) -> Result<EmbeddingModel> {
    p.validate()?;
    let (lo, hi) = p.exponent_window();
    let exponents: Vec<i32> = (lo..=hi).collect();
    let weights: Vec<f64> = exponents.iter().map(|&e| bell_weight(p, e)).collect();
    let bell = WeightedIndex::new(&weights).map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let n = p.tokens * p.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut forced: Vec<Option<i32>> = vec![None; n];
    for (slot, &e) in rand::seq::index::sample(&mut rng, n, exponents.len())
        .into_iter()
        .zip(&exponents)
    {
        forced[slot] = Some(e);
    }
    let matrix = forced
        .into_iter()
        .map(|f| {
            let e = f.unwrap_or_else(|| exponents[bell.sample(&mut rng)]);
            let significand = rng.gen_range(0..1u32 << 23);
            let sign = rng.gen_bool(0.5);
            f32::from_bits(compose_unchecked(sign, (e + EXPONENT_BIAS) as u8, significand))
        })
        .collect();
    let tokens = (0..p.tokens).map(|i| format!("w{i}")).collect();
    EmbeddingModel::new(tokens, p.dim, matrix)
}
