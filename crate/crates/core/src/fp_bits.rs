//! FP32 bit fields and the BF16/FP16 baselines.
//!
//! Every conversion that drops significand bits goes through
//! [`round_significand`], so BF16, FP16 and EFn share the same rounding
//! semantics: a rounding increment that would carry out of the kept field is
//! suppressed instead of bumping the exponent.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SIGNIFICAND_BITS: u32 = 23;
pub const EXPONENT_BIAS: i32 = 127;
const SIGNIFICAND_MASK: u32 = (1 << SIGNIFICAND_BITS) - 1;

/// Raw sign / biased exponent / significand fields of an FP32 value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp32Parts {
    pub sign: bool,
    pub biased_exponent: u8,
    /// Fraction bits only; the implied leading one of normals is not stored.
    pub significand: u32,
}

impl Fp32Parts {
    #[inline]
    pub fn from_f32(x: f32) -> Self {
        decompose_fp32(x.to_bits())
    }

    pub fn is_special(&self) -> bool {
        self.biased_exponent == 0xFF
    }
}

#[inline]
pub fn decompose_fp32(bits: u32) -> Fp32Parts {
    Fp32Parts {
        sign: bits >> 31 != 0,
        biased_exponent: (bits >> SIGNIFICAND_BITS) as u8,
        significand: bits & SIGNIFICAND_MASK,
    }
}

#[inline]
pub fn compose_fp32(parts: Fp32Parts) -> Result<u32> {
    if parts.significand > SIGNIFICAND_MASK {
        return Err(Error::FieldOverflow("significand wider than 23 bits"));
    }
    Ok(compose_unchecked(parts.sign, parts.biased_exponent, parts.significand))
}

#[inline]
pub(crate) fn compose_unchecked(sign: bool, biased_exponent: u8, significand: u32) -> u32 {
    ((sign as u32) << 31) | ((biased_exponent as u32) << SIGNIFICAND_BITS) | significand
}

/// How dropped significand bits are rounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum RoundingMode {
    /// Increment when the leading dropped bit is 1.
    #[default]
    Detr,
    /// Increment with probability `value(d) / 2^(d+1)` for `d` dropped bits.
    Stoc { seed: u64 },
}

impl RoundingMode {
    /// Stable numeric id used by the container header.
    pub fn id(&self) -> u8 {
        match self {
            RoundingMode::Detr => 0,
            RoundingMode::Stoc { .. } => 1,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            RoundingMode::Detr => 0,
            RoundingMode::Stoc { seed } => *seed,
        }
    }

    pub fn from_id(id: u8, seed: u64) -> Option<Self> {
        match id {
            0 => Some(RoundingMode::Detr),
            1 => Some(RoundingMode::Stoc { seed }),
            _ => None,
        }
    }

    /// Uniform draw in `[0, 1)` for the element at `index`.
    ///
    /// The draw depends only on `(seed, index)`, so results do not change
    /// with evaluation order or thread count. DETR always returns 0.
    #[inline]
    pub fn draw(&self, index: u64) -> f64 {
        match self {
            RoundingMode::Detr => 0.0,
            RoundingMode::Stoc { seed } => unit_draw(*seed, index),
        }
    }
}

impl std::fmt::Display for RoundingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RoundingMode::Detr => f.write_str("detr"),
            RoundingMode::Stoc { .. } => f.write_str("stoc"),
        }
    }
}

// splitmix64 finalizer
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn unit_draw(seed: u64, index: u64) -> f64 {
    let key = mix64(seed ^ 0x05EE_D0FE_10A7) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    // 53 random bits into [0, 1).
    (mix64(mix64(key)) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Round a 23-bit significand down to its top `keep_width` bits.
///
/// `draw` is the unit-interval sample used by STOC and ignored by DETR.
/// An increment that would overflow `keep_width` bits is dropped, so the
/// result always fits the kept field.
pub fn round_significand(m: u32, keep_width: u32, mode: RoundingMode, draw: f64) -> Result<u32> {
    if !(1..=SIGNIFICAND_BITS).contains(&keep_width) {
        return Err(Error::KeepWidth(keep_width));
    }
    Ok(round_bits(m & SIGNIFICAND_MASK, SIGNIFICAND_BITS - keep_width, mode, draw))
}

/// Drop the low `dropped` bits of `m` (a field of `dropped + keep` bits),
/// rounding with carry suppression.
#[inline]
pub(crate) fn round_bits(m: u32, dropped: u32, mode: RoundingMode, draw: f64) -> u32 {
    if dropped == 0 {
        return m;
    }
    let kept = m >> dropped;
    let keep_width = SIGNIFICAND_BITS - dropped;
    let max_kept = (1u32 << keep_width) - 1;
    let increment = match mode {
        RoundingMode::Detr => (m >> (dropped - 1)) & 1 == 1,
        RoundingMode::Stoc { .. } => {
            let value = m & ((1u32 << dropped) - 1);
            let p = value as f64 / (1u64 << (dropped + 1)) as f64;
            draw < p
        }
    };
    if increment && kept < max_kept {
        kept + 1
    } else {
        kept
    }
}

/// Narrow to BF16 (8-bit exponent, 7-bit significand).
pub fn to_bf16(x: f32, mode: RoundingMode, draw: f64) -> u16 {
    let p = Fp32Parts::from_f32(x);
    let mut kept = round_bits(p.significand, 16, mode, draw);
    if p.is_special() && p.significand != 0 && kept == 0 {
        // keep NaN a NaN
        kept = 0x40;
    }
    ((p.sign as u16) << 15) | ((p.biased_exponent as u16) << 7) | kept as u16
}

#[inline]
pub fn widen_bf16(b: u16) -> f32 {
    f32::from_bits((b as u32) << 16)
}

const FP16_BIAS: i32 = 15;

/// Narrow to IEEE half precision.
///
/// Magnitudes beyond the FP16 exponent range become infinities; magnitudes
/// below the smallest FP16 normal flush to a signed zero.
pub fn to_fp16(x: f32, mode: RoundingMode, draw: f64) -> u16 {
    let p = Fp32Parts::from_f32(x);
    let sign = (p.sign as u16) << 15;
    if p.is_special() {
        return if p.significand == 0 { sign | 0x7C00 } else { sign | 0x7E00 };
    }
    if p.biased_exponent == 0 {
        return sign;
    }
    let half_exp = p.biased_exponent as i32 - EXPONENT_BIAS + FP16_BIAS;
    if half_exp >= 31 {
        return sign | 0x7C00;
    }
    if half_exp <= 0 {
        return sign;
    }
    let kept = round_bits(p.significand, 13, mode, draw) as u16;
    sign | ((half_exp as u16) << 10) | kept
}

pub fn widen_fp16(h: u16) -> f32 {
    let sign = h >> 15 != 0;
    let exp = ((h >> 10) & 0x1F) as i32;
    let frac = (h & 0x3FF) as u32;
    match exp {
        0 => {
            // denormal or zero: frac * 2^-24 is exact in f32
            let mag = frac as f32 * f32::from_bits(0x3380_0000);
            if sign {
                -mag
            } else {
                mag
            }
        }
        31 => {
            let bits = if frac == 0 { 0 } else { frac << 13 | 0x40_0000 };
            f32::from_bits(compose_unchecked(sign, 0xFF, bits))
        }
        _ => {
            let biased = (exp - FP16_BIAS + EXPONENT_BIAS) as u8;
            f32::from_bits(compose_unchecked(sign, biased, frac << 13))
        }
    }
}

/// Element-wise BF16 round trip, keyed by element index for STOC.
pub fn bf16_round_trip(values: &[f32], mode: RoundingMode) -> Vec<f32> {
    use rayon::prelude::*;
    values
        .par_iter()
        .enumerate()
        .map(|(i, &x)| widen_bf16(to_bf16(x, mode, mode.draw(i as u64))))
        .collect()
}

/// Element-wise FP16 round trip, keyed by element index for STOC.
pub fn fp16_round_trip(values: &[f32], mode: RoundingMode) -> Vec<f32> {
    use rayon::prelude::*;
    values
        .par_iter()
        .enumerate()
        .map(|(i, &x)| widen_fp16(to_fp16(x, mode, mode.draw(i as u64))))
        .collect()
}
