//! The `pbk` command line.
//!
//! Exit codes: 0 success, 2 bad parameters or arguments, 3 I/O error,
//! 4 missing or corrupt shards, 5 MDS check failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{self, c1_optimal_l, c2_optimal_l, to_f64};
use crate::c2::DEFAULT_THETA;
use crate::code::{verify_mds_seeded, ArrayCode, CodeParams, CodeSpec, Variant, DEFAULT_SAMPLE_SEED};
use crate::error::{param_err, Error, Result};
use crate::field::Gf256;
use crate::grid::Grid;
use crate::repair::{bandwidth_table, ErasedStripe};
use crate::shard;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARAM: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_SHARDS: i32 = 4;
pub const EXIT_MDS: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "pbk", version, about = "Piggybacking MDS array codes: encode, repair, verify and benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a file into n shard files plus a manifest.
    Encode {
        #[command(flatten)]
        code: CodeArgs,
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Base name of the shard files; defaults to the input file name.
        #[arg(long)]
        stem: Option<String>,
    },
    /// Rebuild the original file from k shards.
    Decode {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        stem: String,
        #[arg(long)]
        output: PathBuf,
        /// 1-based nodes to decode from, comma separated.
        #[arg(long, value_delimiter = ',')]
        nodes: Option<Vec<usize>>,
    },
    /// Regenerate one lost shard from the others.
    Repair {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        stem: String,
        /// 1-based failed node.
        #[arg(long)]
        node: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Print a repair plan, or the bandwidth of every node.
    Plan {
        #[command(flatten)]
        code: CodeArgs,
        /// 1-based node; all nodes when omitted.
        #[arg(long)]
        node: Option<usize>,
        /// Run the plan on a random stripe drawn from this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Check that every k-subset of nodes recovers the data.
    VerifyMds {
        #[command(flatten)]
        code: CodeArgs,
        /// Seed for the sampled subsets of large codes.
        #[arg(long, default_value_t = DEFAULT_SAMPLE_SEED)]
        seed: u64,
    },
    /// Measured and predicted repair ratios over a parameter grid.
    Bench(BenchArgs),
}

#[derive(Clone, Debug, Args)]
pub struct CodeArgs {
    /// 1 for C1, 2 for C2.
    #[arg(long, value_parser = parse_variant)]
    pub variant: Variant,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of piggyback subsets; the optimal value when omitted.
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// C2 only: m = s r.
    #[arg(long)]
    pub s: Option<usize>,
    /// C2 only: transform coefficient, decimal or 0x hex.
    #[arg(long, value_parser = parse_theta)]
    pub theta: Option<u8>,
}

#[derive(Clone, Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_parser = parse_variant)]
    pub variant: Variant,
    /// Parities, `a..b` inclusive or a single value.
    #[arg(long, value_parser = parse_range)]
    pub r: Range,
    #[arg(long, value_parser = parse_range)]
    pub k: Option<Range>,
    /// Code rate k/n; k is derived per r and non-integral values are skipped.
    #[arg(long)]
    pub rate: Option<f64>,
    /// C1 sub-packetization: a number or `r`.
    #[arg(long, value_parser = parse_dim)]
    pub m: Option<Dim>,
    /// C2 groups per node (m = s r): a number or `r`.
    #[arg(long, value_parser = parse_dim)]
    pub s: Option<Dim>,
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long, value_parser = parse_theta)]
    pub theta: Option<u8>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

/// Inclusive range; empty when `lo > hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Range {
    pub lo: usize,
    pub hi: usize,
}

impl Range {
    pub fn iter(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dim {
    Fixed(usize),
    R,
}

impl Dim {
    fn at(self, r: usize) -> usize {
        match self {
            Dim::Fixed(v) => v,
            Dim::R => r,
        }
    }
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "c1" => Ok(Variant::C1),
        "2" | "c2" => Ok(Variant::C2),
        _ => Err(format!("unknown variant `{s}`, expected 1 or 2")),
    }
}

fn parse_theta(s: &str) -> std::result::Result<u8, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u8::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("bad theta `{s}`: {e}"))
}

pub fn parse_range(s: &str) -> std::result::Result<Range, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad range `{s}`: {e}"));
    match s.split_once("..") {
        Some((a, b)) => Ok(Range {
            lo: num(a)?,
            hi: num(b.strip_prefix('=').unwrap_or(b))?,
        }),
        None => {
            let v = num(s)?;
            Ok(Range { lo: v, hi: v })
        }
    }
}

fn parse_dim(s: &str) -> std::result::Result<Dim, String> {
    if s.eq_ignore_ascii_case("r") {
        return Ok(Dim::R);
    }
    s.parse().map(Dim::Fixed).map_err(|e| format!("bad value `{s}`: {e}"))
}

/// Parameters after defaults are filled in, plus a note on what was chosen.
pub struct Resolved {
    pub params: CodeParams,
    pub note: Option<String>,
}

pub fn resolve(a: &CodeArgs) -> Result<Resolved> {
    if a.k == 0 || a.k >= a.n {
        return Err(param_err(format!("need 0 < k < n, got n = {}, k = {}", a.n, a.k)));
    }
    let r = a.n - a.k;
    match a.variant {
        Variant::C1 => {
            if a.s.is_some() || a.theta.is_some() {
                return Err(param_err("--s and --theta apply to C2 only"));
            }
            let m = a.m.ok_or_else(|| param_err("C1 needs --m"))?;
            let (l, note) = match a.l {
                Some(l) => (l, None),
                None => {
                    let (star, l) = c1_optimal_l(m, r, a.n)?;
                    (l, Some(format!("L = {l} (optimal, L* = {star:.4})")))
                }
            };
            let params = CodeParams::c1(a.n, a.k, m, l);
            params.build()?;
            Ok(Resolved { params, note })
        }
        Variant::C2 => {
            let s = match (a.s, a.m) {
                (Some(s), Some(m)) if m != s * r => {
                    return Err(param_err(format!("--m {m} disagrees with --s {s} x r = {}", s * r)))
                }
                (Some(s), _) => s,
                (None, Some(m)) if m % r == 0 => m / r,
                (None, Some(m)) => return Err(param_err(format!("C2 needs m divisible by r = {r}, got {m}"))),
                (None, None) => return Err(param_err("C2 needs --s or --m")),
            };
            let theta = a.theta.map(Gf256).unwrap_or(DEFAULT_THETA);
            let (l, note) = match a.l {
                Some(l) => (l, None),
                None => {
                    let (star, l) = c2_optimal_l(s, r, a.k)?;
                    (l, Some(format!("L = {l} (optimal, L* = {star:.4})")))
                }
            };
            let params = CodeParams::c2(a.n, a.k, s, l, theta);
            params.build()?;
            Ok(Resolved { params, note })
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::BadMagic
        | Error::VersionMismatch(_)
        | Error::TruncatedPayload { .. }
        | Error::HeaderSpecMismatch(_)
        | Error::ChecksumMismatch { .. }
        | Error::InsufficientShards { .. }
        | Error::MissingCell(_) => EXIT_SHARDS,
        Error::SingularSystem => EXIT_MDS,
        Error::ZeroInverse | Error::ProgramFault(_) => 1,
        _ => EXIT_PARAM,
    }
}

fn node_arg(node: usize, n: usize) -> Result<usize> {
    if node == 0 || node > n {
        return Err(param_err(format!("node {node} outside 1..={n}")));
    }
    Ok(node - 1)
}

fn join_1based(nodes: impl IntoIterator<Item = usize>) -> String {
    nodes.into_iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(",")
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARAM } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match execute(&cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Encode {
            code,
            input,
            out_dir,
            stem,
        } => {
            let resolved = resolve(code)?;
            let spec = resolved.params.build()?;
            let stem = match stem {
                Some(s) => s.clone(),
                None => input
                    .file_name()
                    .map(|f| f.to_string_lossy().into_owned())
                    .ok_or_else(|| param_err("cannot derive a stem from the input path"))?,
            };
            let manifest = shard::encode_file(&spec, input, out_dir, &stem)?;
            if let Some(note) = &resolved.note {
                writeln!(out, "{note}")?;
            }
            writeln!(
                out,
                "encoded {} bytes with {} into {} stripes: {} shards {}.pbk1..{} and manifest {}",
                manifest.file_length,
                resolved.params,
                manifest.stripe_count,
                spec.n(),
                stem,
                spec.n(),
                shard::manifest_path(out_dir, &stem).display()
            )?;
            Ok(EXIT_OK)
        }
        Command::Decode {
            dir,
            stem,
            output,
            nodes,
        } => {
            let zero_based = match nodes {
                Some(list) => {
                    let manifest = shard::read_manifest(&shard::manifest_path(dir, stem))?;
                    let n = manifest.params.n;
                    Some(list.iter().map(|&v| node_arg(v, n)).collect::<Result<Vec<_>>>()?)
                }
                None => None,
            };
            let used = shard::decode_files(dir, stem, zero_based.as_deref(), output)?;
            let len = std::fs::metadata(output)?.len();
            writeln!(
                out,
                "decoded {len} bytes from nodes {} into {}; checksum ok",
                join_1based(used),
                output.display()
            )?;
            Ok(EXIT_OK)
        }
        Command::Repair {
            dir,
            stem,
            node,
            format,
        } => {
            let manifest = shard::read_manifest(&shard::manifest_path(dir, stem))?;
            let failed = node_arg(*node, manifest.params.n)?;
            let report = shard::repair_file(dir, stem, failed)?;
            match format {
                Format::Csv => {
                    writeln!(out, "node,symbols_per_stripe,data_symbols_per_stripe,ratio,stripes")?;
                    writeln!(
                        out,
                        "{},{},{},{:.6},{}",
                        node,
                        report.symbols_per_stripe,
                        report.data_symbols_per_stripe,
                        report.ratio(),
                        report.stripes
                    )?;
                }
                Format::Text => writeln!(
                    out,
                    "repaired node {node} of {}: {} symbols per stripe, ratio {:.6} of k*m = {}, {} stripes, helpers {}",
                    manifest.params,
                    report.symbols_per_stripe,
                    report.ratio(),
                    report.data_symbols_per_stripe,
                    report.stripes,
                    join_1based(report.helper_nodes.iter().copied())
                )?,
            }
            Ok(EXIT_OK)
        }
        Command::Plan {
            code,
            node,
            seed,
            format,
        } => plan_cmd(code, *node, *seed, *format, out),
        Command::VerifyMds { code, seed } => verify_cmd(code, *seed, out),
        Command::Bench(args) => bench_cmd(args, out, err),
    }
}

fn plan_cmd(code: &CodeArgs, node: Option<usize>, seed: Option<u64>, format: Format, out: &mut dyn Write) -> Result<i32> {
    let resolved = resolve(code)?;
    let spec = resolved.params.build()?;
    let km = spec.k() * spec.m();
    if format == Format::Text {
        if let Some(note) = &resolved.note {
            writeln!(out, "{note}")?;
        }
    }
    match node {
        Some(v) => {
            let failed = node_arg(v, spec.n())?;
            let plan = spec.plan_repair(failed)?;
            match format {
                Format::Text => {
                    writeln!(out, "{}", resolved.params)?;
                    write!(out, "{}", plan.listing())?;
                    writeln!(
                        out,
                        "bandwidth: {} symbols, ratio {:.6}",
                        plan.bandwidth(),
                        plan.bandwidth() as f64 / km as f64
                    )?;
                }
                Format::Csv => {
                    writeln!(out, "node,bandwidth,ratio")?;
                    writeln!(out, "{v},{},{:.6}", plan.bandwidth(), plan.bandwidth() as f64 / km as f64)?;
                }
            }
            if let Some(seed) = seed {
                let stripe = random_stripe(&spec, seed)?;
                let row = plan.execute(spec.base(), &ErasedStripe {
                    stripe: &stripe,
                    erased: failed,
                })?;
                if row != stripe.row(failed) {
                    return Err(Error::ProgramFault("plan output differs from the stored row".into()));
                }
                if format == Format::Text {
                    writeln!(out, "check on random stripe (seed {seed}): ok")?;
                }
            }
        }
        None => {
            let table = bandwidth_table(&spec)?;
            match format {
                Format::Text => {
                    writeln!(out, "{}", resolved.params)?;
                    writeln!(out, "node  bandwidth  ratio")?;
                    for (v, b) in table.per_node.iter().enumerate() {
                        writeln!(out, "{:>4}  {:>9}  {:.6}", v + 1, b, *b as f64 / km as f64)?;
                    }
                    writeln!(
                        out,
                        "gamma_all {:.6}  gamma_sys {:.6}  gamma_parity {:.6}",
                        to_f64(table.gamma_all()),
                        to_f64(table.gamma_sys()),
                        to_f64(table.gamma_parity())
                    )?;
                }
                Format::Csv => {
                    writeln!(out, "node,bandwidth,ratio")?;
                    for (v, b) in table.per_node.iter().enumerate() {
                        writeln!(out, "{},{},{:.6}", v + 1, b, *b as f64 / km as f64)?;
                    }
                }
            }
        }
    }
    Ok(EXIT_OK)
}

fn random_stripe(spec: &CodeSpec, seed: u64) -> Result<Grid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = Grid::from_fn(spec.k(), spec.m(), |_, _| Gf256(rng.gen()));
    spec.encode(&data)
}

fn verify_cmd(code: &CodeArgs, seed: u64, out: &mut dyn Write) -> Result<i32> {
    let resolved = resolve(code)?;
    if let Some(note) = &resolved.note {
        writeln!(out, "{note}")?;
    }
    let spec = resolved.params.build()?;
    let report = verify_mds_seeded(&spec, seed)?;
    writeln!(out, "{}: {report}", resolved.params)?;
    if report.passed() {
        return Ok(EXIT_OK);
    }
    if let CodeSpec::C2(_) = spec {
        for t in 2..=255u8 {
            let mut p = resolved.params;
            if Gf256(t) == p.theta {
                continue;
            }
            p.theta = Gf256(t);
            let candidate = p.build()?;
            let r = verify_mds_seeded(&candidate, seed)?;
            if r.passed() {
                writeln!(out, "fallback theta {}: {r}", Gf256(t))?;
                return Ok(EXIT_OK);
            }
        }
        writeln!(out, "no theta in 2..=255 passes")?;
    }
    Ok(EXIT_MDS)
}

/// The parameter grid of a bench run, in output order.
pub fn bench_grid(a: &BenchArgs) -> Result<Vec<Result<CodeParams>>> {
    let theta = a.theta.map(Gf256).unwrap_or(DEFAULT_THETA);
    match (a.k.is_some(), a.rate.is_some()) {
        (true, true) => return Err(param_err("give either --k or --rate, not both")),
        (false, false) => return Err(param_err("bench needs --k or --rate")),
        _ => {}
    }
    if let Some(rate) = a.rate {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(param_err(format!("rate must lie in (0, 1), got {rate}")));
        }
    }
    let dim = match a.variant {
        Variant::C1 => a.m.ok_or_else(|| param_err("C1 bench needs --m"))?,
        Variant::C2 => a.s.ok_or_else(|| param_err("C2 bench needs --s"))?,
    };
    let mut grid = Vec::new();
    for r in a.r.iter() {
        let ks: Vec<usize> = match (a.k, a.rate) {
            (Some(k), _) => k.iter().collect(),
            (None, Some(rate)) => {
                let k = rate * r as f64 / (1.0 - rate);
                let kr = k.round();
                if (k - kr).abs() < 1e-6 && kr >= 1.0 {
                    vec![kr as usize]
                } else {
                    Vec::new()
                }
            }
            (None, None) => Vec::new(),
        };
        for k in ks {
            let n = k + r;
            let d = dim.at(r);
            let row = match a.variant {
                Variant::C1 => a
                    .l
                    .map_or_else(|| c1_optimal_l(d, r, n).map(|x| x.1), Ok)
                    .map(|l| CodeParams::c1(n, k, d, l)),
                Variant::C2 => a
                    .l
                    .map_or_else(|| c2_optimal_l(d, r, k).map(|x| x.1), Ok)
                    .map(|l| CodeParams::c2(n, k, d, l, theta)),
            };
            grid.push(row.map_err(|e| param_err(format!("r = {r}, k = {k}: {e}"))));
        }
    }
    Ok(grid)
}

fn bench_cmd(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let grid = bench_grid(a)?;
    let mut params = Vec::with_capacity(grid.len());
    for g in grid {
        match g {
            Ok(p) => params.push(p),
            Err(e) => writeln!(err, "skipped: {e}")?,
        }
    }
    let rows = analysis::sweep(&params);
    for row in &rows {
        if let Err(e) = &row.outcome {
            writeln!(err, "skipped {}: {e}", row.params)?;
        }
    }
    match a.format {
        Format::Csv => write!(out, "{}", analysis::to_csv(&rows))?,
        Format::Text => {
            writeln!(
                out,
                "{:<24} {:>9} {:>9} {:>9} {:>9} {:>9} {:>11}",
                "code", "gamma_all", "gamma_sys", "gamma_par", "gamma_min", "gamma_max", "par_formula"
            )?;
            for row in &rows {
                if let Ok(v) = &row.outcome {
                    let f = |x: Option<analysis::Rational>| x.map_or("-".to_string(), |q| format!("{:.6}", to_f64(q)));
                    let label = match row.params.variant {
                        Variant::C1 => format!("C1({},{},{},{})", row.params.n, row.params.k, row.params.m, row.params.l),
                        Variant::C2 => format!("C2({},{},{},{})", row.params.n, row.params.k, row.params.m, row.params.l),
                    };
                    writeln!(
                        out,
                        "{:<24} {:>9} {:>9} {:>9} {:>9} {:>9} {:>11}",
                        label,
                        f(Some(v.table.gamma_all())),
                        f(Some(v.table.gamma_sys())),
                        f(Some(v.table.gamma_parity())),
                        f(v.bounds.map(|b| b.gamma_min)),
                        f(v.bounds.map(|b| b.gamma_max)),
                        f(v.parity_formula)
                    )?;
                }
            }
        }
    }
    Ok(EXIT_OK)
}
