//! Acceptance suite. Each test prints one `[PASS]`/`[FAIL]` line per
//! criterion and then asserts it. Run with `--nocapture` to see the lines.

use std::time::{Duration, Instant};

use efloat::codec::{
    build_decoder_table, build_two_level_table, decode_value, encode_value, EFloatCodec,
    EFloatConfig, EFloatWord,
};
use efloat::entropy::{
    average_code_width, build_code_table, build_histogram, canonical_codes, limited_huffman_lengths,
    CanonicalCodeTable, CodingMode, SymbolHistogram,
};
use efloat::eval::{
    benford_digits, exponent_stats, query_suite, rmse_ratio_report, Direction, EfnOptions, Format,
    QuerySuiteConfig,
};
use efloat::fp_bits::{decompose_fp32, RoundingMode};
use efloat::model_io::{read_compressed, CompressedModel, EmbeddingModel};
use efloat::synth::{generate, SynthParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] C{id:02} {name}: {detail}");
}

fn check(id: u32, name: &str, started: Instant, budget: Duration, ok: bool, detail: String) {
    let elapsed = started.elapsed();
    let ok = ok && elapsed < budget;
    report(id, name, ok, format!("{detail} ({:.2}s, budget {}s)", elapsed.as_secs_f64(), budget.as_secs()));
    assert!(ok, "criterion {id} failed: {detail}");
}

fn synth_model() -> EmbeddingModel {
    generate(&SynthParams {
        tokens: 1000,
        dim: 50,
        exp_center: -2,
        exp_spread: 2.0,
        uniques: 23,
        seed: 0,
    })
    .unwrap()
}

/// Minimum of `sum count * len` over non-decreasing length vectors (counts
/// sorted descending) with lengths in 1..=k and Kraft sum <= 1.
fn exhaustive_optimum(counts_desc: &[u64], k: u32) -> Option<u64> {
    fn go(counts: &[u64], k: u32, pos: usize, min_len: u32, kraft: u64, cost: u64, best: &mut Option<u64>) {
        if pos == counts.len() {
            if best.is_none_or(|b| cost < b) {
                *best = Some(cost);
            }
            return;
        }
        for len in min_len..=k {
            let kraft = kraft + (1u64 << (k - len));
            if kraft > 1u64 << k {
                continue;
            }
            go(counts, k, pos + 1, len, kraft, cost + counts[pos] * len as u64, best);
        }
    }
    let mut best = None;
    go(counts_desc, k, 0, 1, 0, 0, &mut best);
    best
}

fn prefix_free(table: &CanonicalCodeTable) -> bool {
    let e = table.entries();
    e.iter().all(|a| {
        e.iter()
            .all(|b| a.symbol == b.symbol || a.len > b.len || b.code >> (b.len - a.len) != a.code)
    })
}

#[test]
fn c01_huffman_ground_truth() {
    let t0 = Instant::now();
    let hist = SymbolHistogram::from_counts(CodingMode::ExponentOnly, &[2, 1, 1]).unwrap();
    let lengths = limited_huffman_lengths(&hist, 8).unwrap();
    let got = &lengths.lengths()[..3];
    let avg = average_code_width(&hist, &lengths).unwrap();
    check(
        1,
        "Huffman ground truth",
        t0,
        Duration::from_secs(1),
        got == [1, 2, 2] && avg == 1.5,
        format!("lengths {got:?}, average {avg} bits/symbol"),
    );
}

#[test]
fn c02_length_limit_property() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut cases: Vec<Vec<u64>> = (0..200)
        .map(|_| {
            let n = rng.gen_range(1..=36);
            (0..n).map(|_| rng.gen_range(1..=1_000_000)).collect()
        })
        .collect();
    // Fibonacci weights force deep unconstrained trees
    for n in [8usize, 12, 20, 30, 36] {
        let mut f = vec![1u64, 1];
        while f.len() < n {
            f.push(f[f.len() - 1] + f[f.len() - 2]);
        }
        cases.push(f);
    }

    let mut checked = 0;
    let mut exhaustive = 0;
    let mut failures = Vec::new();
    for counts in &cases {
        let hist = SymbolHistogram::from_counts(CodingMode::ExponentOnly, counts).unwrap();
        for k in [4u32, 5, 8, 10] {
            if counts.len() > 1 << k {
                if limited_huffman_lengths(&hist, k).is_ok() {
                    failures.push(format!("{} symbols accepted at K={k}", counts.len()));
                }
                continue;
            }
            let lengths = limited_huffman_lengths(&hist, k).unwrap();
            let table = canonical_codes(&lengths).unwrap();
            checked += 1;
            if lengths.longest() > k || lengths.kraft_sum() > 1.0 || !prefix_free(&table) {
                failures.push(format!("invalid code for {counts:?} at K={k}"));
            }
            if counts.len() <= 8 {
                exhaustive += 1;
                let mut desc = counts.clone();
                desc.sort_unstable_by(|a, b| b.cmp(a));
                let want = exhaustive_optimum(&desc, k).unwrap();
                let got: u64 =
                    counts.iter().enumerate().map(|(s, &c)| c * lengths.get(s as u16) as u64).sum();
                if got != want {
                    failures.push(format!("{counts:?} K={k}: cost {got}, optimum {want}"));
                }
            }
        }
    }
    check(
        2,
        "Length-limit property",
        t0,
        Duration::from_secs(30),
        failures.is_empty(),
        format!("{checked} codes checked, {exhaustive} against exhaustive optimum, {} failures {:?}", failures.len(), failures.first()),
    );
}

#[test]
fn c03_round_trip_exactness() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values: Vec<f32> = (0..100_000)
        .map(|_| loop {
            let x = f32::from_bits(rng.gen());
            if !x.is_nan() {
                break x;
            }
        })
        .collect();
    let mut failures = 0usize;
    let mut total = 0usize;
    for bits in [16u32, 12] {
        let cfg = EFloatConfig::ef(bits, 8).unwrap();
        let codec = EFloatCodec::fit(&values, cfg, 1, true).unwrap();
        let table = codec.table();
        // clear the significand bits this value's code pushes out of the word
        let exact: Vec<f32> = values
            .iter()
            .map(|&x| {
                let (_, len) = table.code(cfg.mode().symbol_of(x)).unwrap();
                let width = cfg.significand_width(len as u32).min(23);
                let mask = !((1u32 << (23 - width)) - 1);
                f32::from_bits(x.to_bits() & (0xFF80_0000 | (mask & 0x7F_FFFF)))
            })
            .collect();
        let back = codec.round_trip(&exact).unwrap();
        total += exact.len();
        failures += exact.iter().zip(&back).filter(|(a, b)| a.to_bits() != b.to_bits()).count();

        for x in [0.0f32, -0.0, f32::INFINITY, f32::NEG_INFINITY] {
            total += 1;
            let w = encode_value(x, 0, table, &cfg).unwrap();
            if decode_value(w, codec.decoder(), &cfg).unwrap().to_bits() != x.to_bits() {
                failures += 1;
            }
        }
        let nans: Vec<f32> = (0..1000)
            .map(|_| {
                let payload = rng.gen_range(1..1u32 << 23);
                let sign = (rng.gen::<bool>() as u32) << 31;
                f32::from_bits(sign | 0x7F80_0000 | payload)
            })
            .collect();
        total += nans.len();
        failures += codec.round_trip(&nans).unwrap().iter().filter(|x| !x.is_nan()).count();
    }
    check(
        3,
        "Round-trip exactness",
        t0,
        Duration::from_secs(60),
        failures == 0,
        format!("{total} values through EF16/EF12, {failures} failures"),
    );
}

/// Bit-by-bit walk over the code set, independent of any lookup table.
fn walk_decode(word: u32, table: &CanonicalCodeTable, cfg: &EFloatConfig) -> Option<f32> {
    let entries = table.entries();
    let fixed = cfg.mode().fixed_bits();
    let body = cfg.bits() - fixed;
    let mut code = 0u32;
    for len in 1..=cfg.max_code() {
        code = (code << 1) | ((word >> (body - len)) & 1);
        if let Some(e) = entries.iter().find(|e| e.len as u32 == len && e.code == code) {
            let sig_width = body - len;
            let stored = word & ((1 << sig_width) - 1);
            let significand = if sig_width >= 23 { stored >> (sig_width - 23) } else { stored << (23 - sig_width) };
            let (sign, exp) = match cfg.mode() {
                CodingMode::ExponentOnly => (word >> (cfg.bits() - 1) & 1, e.symbol as u32),
                CodingMode::JointSignExponent => ((e.symbol >> 8) as u32, (e.symbol & 0xFF) as u32),
            };
            return Some(f32::from_bits(sign << 31 | exp << 23 | significand));
        }
    }
    None
}

#[test]
fn c04_decoder_table_equivalence() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0usize;
    let mut words = 0usize;
    for t in 0..20 {
        let mode = if t % 2 == 0 { CodingMode::ExponentOnly } else { CodingMode::JointSignExponent };
        let k = rng.gen_range(4..=10u32);
        let bits = rng.gen_range((k + 1 + mode.fixed_bits()).max(8)..=28);
        let cfg = EFloatConfig::new(bits, k, mode, RoundingMode::Detr).unwrap();
        let symbols = rng.gen_range(2..=(mode.alphabet_size().min(1 << k)).min(60));
        let mut counts = vec![0u64; mode.alphabet_size()];
        for s in rand::seq::index::sample(&mut rng, mode.alphabet_size(), symbols) {
            counts[s] = rng.gen_range(1..=100_000);
        }
        let hist = SymbolHistogram::from_counts(mode, &counts).unwrap();
        let table = build_code_table(&hist, k).unwrap();
        let flat = build_decoder_table(&table, k).unwrap();
        let two = build_two_level_table(&table, k, rng.gen_range(1..k)).unwrap();
        let present: Vec<u16> = hist.present().map(|(s, _)| s).collect();
        for _ in 0..5_000 {
            let s = present[rng.gen_range(0..present.len())] as u32;
            let sign = if mode == CodingMode::ExponentOnly { rng.gen::<bool>() as u32 } else { s >> 8 };
            let mut m = rng.gen_range(0..1u32 << 23);
            if s & 0xFF == 0xFF && m == 0 {
                m = 1;
            }
            let x = f32::from_bits(sign << 31 | (s & 0xFF) << 23 | m);
            let w: EFloatWord = encode_value(x, 0, &table, &cfg).unwrap();
            let a = decode_value(w, &flat, &cfg).unwrap().to_bits();
            let b = decode_value(w, &two, &cfg).unwrap().to_bits();
            let c = walk_decode(w.0, &table, &cfg).map(f32::to_bits);
            words += 1;
            if Some(a) != c || a != b {
                mismatches += 1;
            }
        }
    }
    check(
        4,
        "Decoder-table equivalence",
        t0,
        Duration::from_secs(60),
        mismatches == 0 && words == 100_000,
        format!("{words} words over 20 tables, {mismatches} mismatches"),
    );
}

#[test]
fn c05_rmse_ratio_against_baselines() {
    let t0 = Instant::now();
    let model = synth_model();
    let formats = [Format::Bf16, Format::Fp16, Format::Ef(16), Format::Ef(12)];
    let r = rmse_ratio_report(model.matrix(), &formats, &EfnOptions::default(), RoundingMode::Detr).unwrap();
    let ef16 = r.ratio(Format::Bf16, Format::Ef(16)).unwrap();
    let ef12 = r.ratio(Format::Bf16, Format::Ef(12)).unwrap();
    check(
        5,
        "RMSE ratio",
        t0,
        Duration::from_secs(10),
        ef16 >= 10.0 && (0.8..=3.0).contains(&ef12),
        format!("BF16/EF16 = {ef16:.2} (>= 10), BF16/EF12 = {ef12:.2} (in [0.8, 3.0])"),
    );
}

#[test]
fn c06_rounding_comparison() {
    let t0 = Instant::now();
    let model = synth_model();
    let formats = [Format::Bf16, Format::Fp16, Format::Ef(16)];
    let opts = EfnOptions::default();
    let detr = rmse_ratio_report(model.matrix(), &formats, &opts, RoundingMode::Detr).unwrap();
    let stoc = rmse_ratio_report(model.matrix(), &formats, &opts, RoundingMode::Stoc { seed: 0 }).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for f in formats {
        let (d, s) = (detr.rmse(f).unwrap(), stoc.rmse(f).unwrap());
        ok &= d <= s;
        detail.push(format!("{f}: DETR {d:.3e} <= STOC {s:.3e}"));
    }
    check(6, "Rounding comparison", t0, Duration::from_secs(10), ok, detail.join(", "));
}

#[test]
fn c07_ndcg_against_fp32() {
    let t0 = Instant::now();
    let model = synth_model();
    let formats = [Format::Fp32, Format::Bf16, Format::Ef(16), Format::Ef(8)];
    let mut ok = true;
    let mut detail = Vec::new();
    for direction in [Direction::Similar, Direction::Dissimilar] {
        let cfg = QuerySuiteConfig { queries: 20, k: 10, seed: 0, direction };
        let res = query_suite(&model, &cfg, &formats, &EfnOptions::default(), RoundingMode::Detr).unwrap();
        let mean = |f: Format| res.iter().find(|r| r.format == f).unwrap().mean_ndcg;
        let (fp32, bf16, ef16, ef8) = (mean(Format::Fp32), mean(Format::Bf16), mean(Format::Ef(16)), mean(Format::Ef(8)));
        ok &= fp32 == 1.0 && ef16 >= bf16 - 0.02 && ef8 <= ef16 + 0.02;
        detail.push(format!("{direction}: fp32 {fp32:.4} bf16 {bf16:.4} ef16 {ef16:.4} ef8 {ef8:.4}"));
    }
    check(7, "NDCG@10", t0, Duration::from_secs(30), ok, detail.join("; "));
}

#[test]
fn c08_exponent_stats_interval() {
    let t0 = Instant::now();
    let model = synth_model();
    let cfg = EFloatConfig::ef(16, 8).unwrap();
    let s = exponent_stats(model.matrix(), &cfg, 1).unwrap();
    let relation = (s.avg_significand_width - (15.0 - s.avg_code_width)).abs() < 1e-12;
    check(
        8,
        "Exponent-stats interval",
        t0,
        Duration::from_secs(5),
        (3.0..=6.0).contains(&s.avg_code_width) && relation && s.avg_significand_width >= 10.5,
        format!(
            "{} unique, code width min {} max {} avg {:.3}, avg significand {:.3}",
            s.unique, s.min_code_width, s.max_code_width, s.avg_code_width, s.avg_significand_width
        ),
    );
}

#[test]
fn c09_benford() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let values: Vec<f32> = (0..1_000_000).map(|_| 10f64.powf(rng.gen_range(-3.0..3.0)) as f32).collect();
    let d = benford_digits(&values).unwrap();
    let ok = (d[0] - 0.301).abs() <= 0.01 && (d[8] - 0.046).abs() <= 0.005;
    check(
        9,
        "Benford digits",
        t0,
        Duration::from_secs(5),
        ok,
        format!("digit 1 {:.4} (0.301 +- 0.01), digit 9 {:.4} (0.046 +- 0.005)", d[0], d[8]),
    );
}

#[test]
fn c10_container_round_trip() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures = Vec::new();
    let mut rows_checked = 0;
    for case in 0..50 {
        let tokens = if case == 0 { 0 } else { rng.gen_range(1..60) };
        let dim = rng.gen_range(1..40);
        let matrix: Vec<f32> = (0..tokens * dim)
            .map(|_| {
                let e = rng.gen_range(-12..4);
                let v = rng.gen_range(1.0..2.0f32) * 2f32.powi(e);
                if rng.gen() { v } else { -v }
            })
            .collect();
        let names = (0..tokens).map(|i| format!("tok{i}_{}", "é".repeat(i % 3))).collect();
        let model = EmbeddingModel::new(names, dim, matrix).unwrap();
        let mode = if case % 3 == 1 { CodingMode::JointSignExponent } else { CodingMode::ExponentOnly };
        let bits = rng.gen_range(10..=20);
        let rounding = if case % 2 == 0 { RoundingMode::Detr } else { RoundingMode::Stoc { seed: case } };
        let cfg = EFloatConfig::new(bits, 8, mode, rounding).unwrap();
        let mut hist = build_histogram(model.matrix(), mode, 1).unwrap();
        if tokens == 0 {
            hist.include_all();
        }
        let table = build_code_table(&hist, 8).unwrap();
        let original = CompressedModel::encode(&model, cfg, table).unwrap();
        let bytes = original.to_bytes().unwrap();
        let parsed = read_compressed(&bytes).unwrap();
        if parsed.header() != original.header()
            || parsed.table() != original.table()
            || parsed.tokens() != original.tokens()
            || parsed.payload() != original.payload()
            || parsed.to_bytes().unwrap() != bytes
        {
            failures.push(format!("case {case}: container fields differ"));
        }
        if tokens > 0 {
            let full = parsed.decode_all().unwrap();
            for _ in 0..3 {
                let r = rng.gen_range(0..tokens);
                rows_checked += 1;
                if parsed.decode_row(r).unwrap() != full[r * dim..(r + 1) * dim] {
                    failures.push(format!("case {case}: row {r} differs"));
                }
            }
        }
    }
    check(
        10,
        "Container round-trip",
        t0,
        Duration::from_secs(30),
        failures.is_empty() && rows_checked >= 100,
        format!("50 containers, {rows_checked} rows spot-checked, failures {failures:?}"),
    );
}

#[test]
fn decompose_sampled_patterns() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1_000_000 {
        let bits: u32 = rng.gen();
        let p = decompose_fp32(bits);
        assert_eq!(efloat::fp_bits::compose_fp32(p).unwrap(), bits);
    }
}
