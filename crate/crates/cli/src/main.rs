//! `efc`: compress embedding models to EFn containers, decode them, and run
//! the precision and ranking evaluations.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 config error. On
//! failure the last line on stderr has the form
//! `efc: error kind=<usage|data|config> code=<n> msg=<text>`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use efloat::codec::EFloatCodec;
use efloat::eval::{self, Direction, EfnOptions, Format, QuerySuiteConfig};
use efloat::model_io::{self, load_model, read_compressed, save_model, write_compressed};
use efloat::synth::{self, SynthParams};
use efloat::{fp_bits, CodingMode, EFloatConfig, EmbeddingModel, RoundingMode};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "efc", version, about = "EFn entropy-coded float compression for embedding models")]
struct Cli {
    /// Worker thread cap. Output does not depend on it.
    #[arg(long, global = true, env = "EFC_THREADS")]
    threads: Option<usize>,
    /// Require an explicit --seed for every randomized procedure.
    #[arg(long, global = true, env = "EFC_CI")]
    ci: bool,
    /// Print JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exponent histogram and code-width statistics of a model.
    Stats {
        model: PathBuf,
        #[command(flatten)]
        coding: CodingArgs,
        /// Histogram every s-th value.
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Compress a model into an EFLT container.
    Encode {
        model: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        coding: CodingArgs,
        #[command(flatten)]
        rounding: RoundingArgs,
        /// Give every possible symbol a code, so any value can be encoded.
        #[arg(long)]
        include_all: bool,
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Decode a container to a model file, or a single row.
    Decode {
        container: PathBuf,
        /// Output model file (`.bin` for word2vec binary). Defaults to stdout text.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Target representation, applied after EFn decoding.
        #[arg(long, value_enum, default_value_t = Target::Fp32)]
        format: Target,
        /// Decode only this row, by token or index.
        #[arg(long)]
        row: Option<String>,
    },
    /// RMSE or NDCG@k of formats against the FP32 model.
    Eval {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Metric::Rmse)]
        metric: Metric,
        /// Comma-separated list, e.g. fp32,bf16,fp16,ef16,ef12.
        #[arg(long, default_value = "bf16,fp16,ef16,ef12,ef8", value_parser = parse_formats)]
        formats: FormatList,
        #[arg(long, default_value_t = 20)]
        queries: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Dir::Sim)]
        direction: Dir,
        #[command(flatten)]
        rounding: RoundingArgs,
        /// Requested maximum code width; narrow formats clamp it.
        #[arg(long, default_value_t = 8)]
        max_code: u32,
        #[arg(long)]
        joint: bool,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long)]
        include_all: bool,
    },
    /// Generate a synthetic model with bell-shaped exponents.
    Synth {
        #[arg(long, default_value_t = 1000)]
        tokens: usize,
        #[arg(long, default_value_t = 50)]
        dim: usize,
        #[arg(long, default_value_t = -2, allow_negative_numbers = true)]
        exp_center: i32,
        #[arg(long, default_value_t = 2.0)]
        exp_spread: f64,
        #[arg(long, default_value_t = 23)]
        uniques: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output model file. Defaults to stdout text.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct CodingArgs {
    /// Bits per value, n.
    #[arg(long, default_value_t = 16)]
    bits: u32,
    /// Maximum code width, K.
    #[arg(long, default_value_t = 8)]
    max_code: u32,
    /// Code sign and exponent together.
    #[arg(long)]
    joint: bool,
}

#[derive(Debug, Args)]
struct RoundingArgs {
    #[arg(long, value_enum, default_value_t = Rounding::Detr)]
    rounding: Rounding,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Rounding {
    Detr,
    Stoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Fp32,
    Bf16,
    Fp16,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Metric {
    Rmse,
    Ndcg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Dir {
    Sim,
    Dissim,
}

#[derive(Debug, Clone)]
struct FormatList(Vec<Format>);

fn parse_formats(s: &str) -> Result<FormatList, String> {
    Format::parse_list(s).map(FormatList).map_err(|e| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Config(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Config(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Data(_) => "data",
            Failure::Config(_) => "config",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Config(m) => m,
        }
    }
}

impl From<efloat::Error> for Failure {
    fn from(e: efloat::Error) -> Self {
        match e {
            efloat::Error::MissingSymbol { .. } => {
                Failure::Data(format!("{e}; rerun with --include-all to code every symbol"))
            }
            e if e.is_config() => Failure::Config(e.to_string()),
            e => Failure::Data(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let msg = e.kind().to_string();
            return fail(&Failure::Usage(msg));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(&f),
    }
}

fn fail(f: &Failure) -> ExitCode {
    eprintln!(
        "efc: error kind={} code={} msg={}",
        f.kind(),
        f.code(),
        f.message().replace('\n', " ")
    );
    ExitCode::from(f.code())
}

fn run(cli: Cli) -> CliResult {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let out = Output { json: cli.json };
    match cli.command {
        Command::Stats { model, coding, stride } => stats(&out, &model, &coding, stride),
        Command::Encode { model, output, coding, rounding, include_all, stride } => {
            let rounding = rounding_mode(&rounding, cli.ci)?;
            encode(&out, &model, &output, &coding, rounding, include_all, stride)
        }
        Command::Decode { container, output, format, row } => {
            decode(&out, &container, output.as_deref(), format, row.as_deref())
        }
        Command::Eval {
            model,
            metric,
            formats,
            queries,
            k,
            direction,
            rounding,
            max_code,
            joint,
            stride,
            include_all,
        } => {
            let needs_seed = matches!(metric, Metric::Ndcg) || matches!(rounding.rounding, Rounding::Stoc);
            let seed = resolve_seed(rounding.seed, cli.ci, needs_seed)?;
            let rounding = match rounding.rounding {
                Rounding::Detr => RoundingMode::Detr,
                Rounding::Stoc => RoundingMode::Stoc { seed },
            };
            let opts = EfnOptions { max_code, mode: mode_of(joint), stride, include_all };
            let suite = QuerySuiteConfig {
                queries,
                k,
                seed,
                direction: match direction {
                    Dir::Sim => Direction::Similar,
                    Dir::Dissim => Direction::Dissimilar,
                },
            };
            evaluate(&out, &model, metric, &formats.0, &suite, &opts, rounding)
        }
        Command::Synth { tokens, dim, exp_center, exp_spread, uniques, seed, output } => {
            let seed = resolve_seed(seed, cli.ci, true)?;
            let params = SynthParams { tokens, dim, exp_center, exp_spread, uniques, seed };
            synthesize(&out, &params, output.as_deref())
        }
    }
}

fn resolve_seed(seed: Option<u64>, ci: bool, needed: bool) -> CliResult<u64> {
    match seed {
        None if ci && needed => Err(Failure::Usage("--seed is required in CI mode".into())),
        s => Ok(s.unwrap_or(0)),
    }
}

fn rounding_mode(args: &RoundingArgs, ci: bool) -> CliResult<RoundingMode> {
    Ok(match args.rounding {
        Rounding::Detr => RoundingMode::Detr,
        Rounding::Stoc => RoundingMode::Stoc { seed: resolve_seed(args.seed, ci, true)? },
    })
}

fn mode_of(joint: bool) -> CodingMode {
    if joint {
        CodingMode::JointSignExponent
    } else {
        CodingMode::ExponentOnly
    }
}

fn mode_name(mode: CodingMode) -> &'static str {
    match mode {
        CodingMode::ExponentOnly => "exponent",
        CodingMode::JointSignExponent => "joint",
    }
}

fn in_file(path: &Path, f: Failure) -> Failure {
    let msg = format!("{}: {}", path.display(), f.message());
    match f {
        Failure::Usage(_) => Failure::Usage(msg),
        Failure::Data(_) => Failure::Data(msg),
        Failure::Config(_) => Failure::Config(msg),
    }
}

fn load(path: &Path) -> CliResult<EmbeddingModel> {
    load_model(path).map_err(|e| in_file(path, e.into()))
}

fn check_stride(stride: usize) -> CliResult {
    if stride == 0 {
        return Err(Failure::Usage("--stride must be positive".into()));
    }
    Ok(())
}

struct Output {
    json: bool,
}

impl Output {
    fn json<T: Serialize + ?Sized>(&self, value: &T) -> CliResult {
        let mut w = io::stdout().lock();
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        Ok(())
    }

    fn csv<T: Serialize>(&self, rows: &[T]) -> CliResult {
        let mut w = csv::Writer::from_writer(io::stdout().lock());
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct StatsSummary {
    bits: u32,
    max_code: u32,
    mode: &'static str,
    total: u64,
    unique: usize,
    min_code_width: u32,
    max_code_width: u32,
    avg_code_width: f64,
    avg_significand_width: f64,
    table_bytes: usize,
}

#[derive(Serialize)]
struct SymbolRow {
    symbol: u16,
    exponent: i32,
    negative: bool,
    count: u64,
    code_len: u8,
}

fn stats(out: &Output, path: &Path, coding: &CodingArgs, stride: usize) -> CliResult {
    check_stride(stride)?;
    let cfg = EFloatConfig::new(coding.bits, coding.max_code, mode_of(coding.joint), RoundingMode::Detr)?;
    let model = load(path)?;
    let s = eval::exponent_stats(model.matrix(), &cfg, stride)?;
    if out.json {
        return out.json(&s);
    }
    out.csv(&[StatsSummary {
        bits: s.bits,
        max_code: s.max_code,
        mode: mode_name(s.mode),
        total: s.total,
        unique: s.unique,
        min_code_width: s.min_code_width,
        max_code_width: s.max_code_width,
        avg_code_width: s.avg_code_width,
        avg_significand_width: s.avg_significand_width,
        table_bytes: s.table_bytes,
    }])?;
    println!();
    let rows: Vec<SymbolRow> = s
        .symbols
        .iter()
        .map(|x| SymbolRow {
            symbol: x.symbol,
            exponent: x.exponent,
            negative: x.negative,
            count: x.count,
            code_len: x.code_len,
        })
        .collect();
    out.csv(&rows)
}

#[derive(Serialize)]
struct EncodeSummary {
    output: String,
    tokens: usize,
    dim: usize,
    bits: u32,
    max_code: u32,
    mode: &'static str,
    rounding: String,
    seed: u64,
    payload_bytes: usize,
    container_bytes: usize,
    fp32_bytes: usize,
    compression_ratio: f64,
}

fn encode(
    out: &Output,
    path: &Path,
    output: &Path,
    coding: &CodingArgs,
    rounding: RoundingMode,
    include_all: bool,
    stride: usize,
) -> CliResult {
    check_stride(stride)?;
    let cfg = EFloatConfig::new(coding.bits, coding.max_code, mode_of(coding.joint), rounding)?;
    let model = load(path)?;
    let codec = EFloatCodec::fit(model.matrix(), cfg, stride, include_all)?;
    let bytes = write_compressed(&model, cfg, codec.table().clone())?;
    fs::write(output, &bytes).map_err(|e| in_file(output, e.into()))?;

    let fp32_bytes = model.matrix().len() * 4;
    let summary = EncodeSummary {
        output: output.display().to_string(),
        tokens: model.len(),
        dim: model.dim(),
        bits: cfg.bits(),
        max_code: cfg.max_code(),
        mode: mode_name(cfg.mode()),
        rounding: rounding.to_string(),
        seed: rounding.seed(),
        payload_bytes: efloat::codec::payload_len(model.matrix().len(), cfg.bits()),
        container_bytes: bytes.len(),
        fp32_bytes,
        compression_ratio: fp32_bytes as f64 / bytes.len() as f64,
    };
    if out.json {
        out.json(&summary)
    } else {
        out.csv(&[summary])
    }
}

fn convert(values: &[f32], target: Target) -> Vec<f32> {
    match target {
        Target::Fp32 => values.to_vec(),
        Target::Bf16 => fp_bits::bf16_round_trip(values, RoundingMode::Detr),
        Target::Fp16 => fp_bits::fp16_round_trip(values, RoundingMode::Detr),
    }
}

#[derive(Serialize)]
struct RowOut<'a> {
    index: usize,
    token: &'a str,
    values: Vec<f32>,
}

fn decode(
    out: &Output,
    path: &Path,
    output: Option<&Path>,
    target: Target,
    row: Option<&str>,
) -> CliResult {
    let bytes = fs::read(path).map_err(|e| in_file(path, e.into()))?;
    let cm = read_compressed(&bytes).map_err(|e| in_file(path, e.into()))?;
    let Some(key) = row else {
        let model = cm.decode_model()?;
        let model = model.with_matrix(convert(model.matrix(), target))?;
        return write_model(&model, output);
    };

    let index = cm
        .tokens()
        .iter()
        .position(|t| t == key)
        .or_else(|| key.parse::<usize>().ok().filter(|&i| i < cm.rows()))
        .ok_or_else(|| Failure::Data(format!("unknown token or row {key:?}")))?;
    let values = convert(&cm.decode_row(index)?, target);
    let token = cm.tokens()[index].as_str();
    if let Some(p) = output {
        let single = EmbeddingModel::new(vec![token.to_string()], cm.dim(), values)?;
        return Ok(save_model(&single, p)?);
    }
    if out.json {
        return out.json(&RowOut { index, token, values });
    }
    let mut w = io::stdout().lock();
    write!(w, "{token}")?;
    for v in &values {
        write!(w, " {v}")?;
    }
    writeln!(w)?;
    Ok(())
}

fn write_model(model: &EmbeddingModel, output: Option<&Path>) -> CliResult {
    match output {
        Some(p) => save_model(model, p)?,
        None => {
            let mut w = io::BufWriter::new(io::stdout().lock());
            model_io::write_text_model(model, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct RmseRow {
    metric: &'static str,
    format: String,
    base: String,
    rounding: String,
    value: f64,
    excluded: Option<usize>,
}

#[derive(Serialize)]
struct NdcgRow {
    metric: &'static str,
    format: String,
    direction: String,
    k: usize,
    queries: usize,
    seed: u64,
    rounding: String,
    value: f64,
}

#[derive(Serialize)]
struct NdcgReport<'a> {
    k: usize,
    queries: usize,
    seed: u64,
    rounding: String,
    results: &'a [eval::FormatNdcg],
}

fn evaluate(
    out: &Output,
    path: &Path,
    metric: Metric,
    formats: &[Format],
    suite: &QuerySuiteConfig,
    opts: &EfnOptions,
    rounding: RoundingMode,
) -> CliResult {
    check_stride(opts.stride)?;
    if suite.k == 0 || suite.queries == 0 {
        return Err(Failure::Usage("--k and --queries must be positive".into()));
    }
    for f in formats {
        if let Format::Ef(n) = f {
            opts.config(*n, rounding)?;
        }
    }
    let model = load(path)?;

    match metric {
        Metric::Rmse => {
            let report = eval::rmse_ratio_report(model.matrix(), formats, opts, rounding)?;
            if out.json {
                return out.json(&report);
            }
            let mut rows: Vec<RmseRow> = report
                .entries
                .iter()
                .map(|e| RmseRow {
                    metric: "rmse",
                    format: e.format.to_string(),
                    base: "fp32".into(),
                    rounding: report.rounding.clone(),
                    value: e.rmse,
                    excluded: Some(e.excluded),
                })
                .collect();
            rows.extend(report.ratios.iter().map(|r| RmseRow {
                metric: "rmse_ratio",
                format: r.efn.to_string(),
                base: r.base.to_string(),
                rounding: report.rounding.clone(),
                value: r.ratio,
                excluded: None,
            }));
            out.csv(&rows)
        }
        Metric::Ndcg => {
            if suite.queries > model.len() {
                return Err(Failure::Config(format!(
                    "--queries {} exceeds the token count {}",
                    suite.queries,
                    model.len()
                )));
            }
            let results = eval::query_suite(&model, suite, formats, opts, rounding)?;
            if out.json {
                return out.json(&NdcgReport {
                    k: suite.k,
                    queries: suite.queries,
                    seed: suite.seed,
                    rounding: rounding.to_string(),
                    results: &results,
                });
            }
            let rows: Vec<NdcgRow> = results
                .iter()
                .map(|r| NdcgRow {
                    metric: "ndcg",
                    format: r.format.to_string(),
                    direction: r.direction.to_string(),
                    k: suite.k,
                    queries: suite.queries,
                    seed: suite.seed,
                    rounding: rounding.to_string(),
                    value: r.mean_ndcg,
                })
                .collect();
            out.csv(&rows)
        }
    }
}

#[derive(Serialize)]
struct SynthSummary {
    output: String,
    tokens: usize,
    dim: usize,
    values: usize,
    exp_min: i32,
    exp_max: i32,
    seed: u64,
}

fn synthesize(out: &Output, params: &SynthParams, output: Option<&Path>) -> CliResult {
    let model = synth::generate(params)?;
    write_model(&model, output)?;
    let Some(p) = output else { return Ok(()) };
    let (exp_min, exp_max) = params.exponent_window();
    let summary = SynthSummary {
        output: p.display().to_string(),
        tokens: model.len(),
        dim: model.dim(),
        values: model.matrix().len(),
        exp_min,
        exp_max,
        seed: params.seed,
    };
    if out.json {
        out.json(&summary)
    } else {
        out.csv(&[summary])
    }
}
