//! `freechaos`: batch front end for kernel contractions, chaos moments,
//! non-crossing partition tools, limit-theorem verification and the random
//! matrix oracle.
//!
//! Exit codes: 0 success or passing verdict, 1 failing verdict, 2 usage or
//! input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use freechaos::distributions::nc_block_counts;
use freechaos::harness::{FamilyConfig, KernelFamily, Theorem, VerifyOptions};
use freechaos::moments::{moment, MomentOptions, MomentPath, MomentResponse};
use freechaos::oracle::{estimate_moments, MatrixModel, SimConfig};
use freechaos::partition::{
    count_r_row, enumerate_nc, enumerate_nc2, enumerate_nc_ge2, partition_to_word,
    word_to_partition, NCPartition,
};
use freechaos::words::{enumerate_star_words, enumerate_words, ContractionWord, WordSet};
use freechaos::{Flavor, Kernel, KernelJson};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "freechaos", version, about = "Free Wigner and free Poisson chaos toolkit")]
struct Cli {
    /// Seed for seeded computations (family perturbations, matrix oracle).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Absolute tolerance for verification.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include wall-clock timings in reports.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Arc or star contraction of two kernel files.
    Contract(ContractArgs),
    /// Moment φ(I(f_1)⋯I(f_m)) of a list of kernels.
    Moment(MomentArgs),
    /// Non-crossing partitions, contraction words and the word/partition bijection.
    Partitions(PartitionArgs),
    /// Four-moment verification of a kernel family.
    Verify(VerifyArgs),
    /// Random-matrix estimate of target moments.
    Oracle(OracleArgs),
}

#[derive(Args, Debug)]
struct ContractArgs {
    /// Left kernel JSON.
    left: PathBuf,
    /// Right kernel JSON; defaults to the left kernel.
    right: Option<PathBuf>,
    /// Arc contraction order r.
    #[arg(long, conflicts_with = "star", required_unless_present = "star")]
    arc: Option<usize>,
    /// Star contraction order p (shares one variable, integrates p-1).
    #[arg(long)]
    star: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PathArg {
    Words,
    Product,
    Both,
}

#[derive(Args, Debug)]
struct MomentArgs {
    #[arg(long, value_parser = parse_flavor)]
    flavor: Flavor,
    /// Kernel JSON files, one per factor, or a single file repeated `--m` times.
    #[arg(required = true)]
    kernels: Vec<PathBuf>,
    /// Number of factors when a single kernel is given.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_enum, default_value = "words")]
    path: PathArg,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    /// List NC(n).
    #[arg(long, value_name = "N")]
    nc: Option<usize>,
    /// List NC_2(n).
    #[arg(long, value_name = "N")]
    nc2: Option<usize>,
    /// List NC_{>=2}(n).
    #[arg(long, value_name = "N")]
    nc_ge2: Option<usize>,
    /// Print only counts.
    #[arg(long)]
    count: bool,
    /// Row R_{m,0..m}: partitions of NC_{>=2}(m) by number of blocks.
    #[arg(long, value_name = "M")]
    r: Option<usize>,
    /// Word set A, B, D or E.
    #[arg(long, value_parser = parse_word_set)]
    words: Option<WordSet>,
    /// Use star words (Poisson).
    #[arg(long)]
    star: bool,
    /// Map between a word and a partition; needs --q and one of --word, --partition.
    #[arg(long)]
    bijection: bool,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Contraction word such as 0,5,10.
    #[arg(long)]
    word: Option<String>,
    /// Partition such as 1,4|2,3.
    #[arg(long)]
    partition: Option<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Family config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Theorem code or name, such as `wigner_free_family`.
    #[arg(long, value_parser = parse_theorem)]
    theorem: Theorem,
    /// Moment-error CSV; defaults to the report path with a .csv extension.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// semicircle or free_poisson.
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Matrix size N.
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Comma-separated orders.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    orders: Vec<usize>,
}

fn parse_flavor(s: &str) -> Result<Flavor, String> {
    s.parse().map_err(|e: freechaos::ChaosError| e.to_string())
}

fn parse_word_set(s: &str) -> Result<WordSet, String> {
    s.parse().map_err(|e: freechaos::ChaosError| e.to_string())
}

fn parse_theorem(s: &str) -> Result<Theorem, String> {
    s.parse().map_err(|e: freechaos::ChaosError| e.to_string())
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    inputs: Vec<String>,
    seed: Option<u64>,
    tolerance: Option<f64>,
    output: Option<String>,
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_seconds: Option<f64>,
}

enum Outcome {
    Done,
    VerdictFail,
}

struct Ctx {
    cli_seed: Option<u64>,
    tolerance: Option<f64>,
    out: Option<PathBuf>,
    timings: bool,
    started: Instant,
}

impl Ctx {
    fn manifest(&self, command: &str, inputs: &[&Path], seed: Option<u64>) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            seed,
            tolerance: self.tolerance,
            output: self.out.as_ref().map(|p| p.display().to_string()),
            version: env!("CARGO_PKG_VERSION"),
            wall_time_seconds: self.timings.then(|| self.started.elapsed().as_secs_f64()),
        }
    }

    /// Writes `body` with the manifest attached under `"manifest"`.
    fn emit(&self, manifest: RunManifest, body: Value) -> anyhow::Result<()> {
        let mut obj = match body {
            Value::Object(map) => map,
            other => {
                let mut m = serde_json::Map::new();
                m.insert("result".into(), other);
                m
            }
        };
        obj.insert("manifest".into(), serde_json::to_value(manifest)?);
        let text = serde_json::to_string_pretty(&Value::Object(obj))? + "\n";
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

fn read_kernel(path: &Path) -> anyhow::Result<Kernel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    KernelJson::parse(&text)
        .and_then(|k| k.to_kernel())
        .with_context(|| format!("parsing kernel {}", path.display()))
}

fn cmd_contract(ctx: &Ctx, a: &ContractArgs) -> anyhow::Result<Outcome> {
    let f = read_kernel(&a.left)?;
    let right = a.right.as_deref().unwrap_or(&a.left);
    let g = read_kernel(right)?;
    let h = match (a.arc, a.star) {
        (Some(r), None) => f.arc_contract(&g, r)?,
        (None, Some(p)) => f.star_contract(&g, p)?,
        _ => bail!("give exactly one of --arc and --star"),
    };
    log::info!("contracted to order {} with {} entries", h.order(), h.nnz());
    let body = serde_json::to_value(KernelJson::from_kernel(&h))?;
    ctx.emit(ctx.manifest("contract", &[&a.left, right], None), body)?;
    Ok(Outcome::Done)
}

fn cmd_moment(ctx: &Ctx, a: &MomentArgs) -> anyhow::Result<Outcome> {
    let loaded: Vec<Kernel> = a.kernels.iter().map(|p| read_kernel(p)).collect::<anyhow::Result<_>>()?;
    let kernels: Vec<&Kernel> = match (loaded.len(), a.m) {
        (1, Some(m)) => vec![&loaded[0]; m],
        (n, Some(m)) if n != m => bail!("{n} kernels given for a moment of order {m}"),
        _ => loaded.iter().collect(),
    };
    let run = |path| -> anyhow::Result<MomentResponse> {
        let opts = MomentOptions {
            path,
            ..MomentOptions::default()
        };
        Ok(MomentResponse::from_result(&moment(a.flavor, &kernels, &opts)?))
    };
    let body = match a.path {
        PathArg::Words => serde_json::to_value(run(MomentPath::Words)?)?,
        PathArg::Product => serde_json::to_value(run(MomentPath::Product)?)?,
        PathArg::Both => {
            let w = run(MomentPath::Words)?;
            let p = run(MomentPath::Product)?;
            json!({
                "words": w.value,
                "product": p.value,
                "difference": w.value - p.value,
                "word_count": w.word_count,
            })
        }
    };
    let inputs: Vec<&Path> = a.kernels.iter().map(PathBuf::as_path).collect();
    ctx.emit(ctx.manifest("moment", &inputs, None), body)?;
    Ok(Outcome::Done)
}

fn parse_word(q: usize, text: &str) -> anyhow::Result<ContractionWord> {
    let r = text
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| anyhow!("bad word entry {t:?}: {e}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(ContractionWord::new(q, r.len() + 1, r)?)
}

fn partitions_listing(kind: &str, n: usize, parts: Vec<NCPartition>, count_only: bool) -> Value {
    let mut v = json!({ "kind": kind, "n": n, "count": parts.len() });
    if !count_only {
        v["partitions"] = parts.iter().map(|p| Value::String(p.to_string())).collect();
    }
    v
}

fn cmd_partitions(ctx: &Ctx, a: &PartitionArgs) -> anyhow::Result<Outcome> {
    let body = if let Some(n) = a.nc {
        partitions_listing("nc", n, enumerate_nc(n), a.count)
    } else if let Some(n) = a.nc2 {
        partitions_listing("nc2", n, enumerate_nc2(n), a.count)
    } else if let Some(n) = a.nc_ge2 {
        partitions_listing("nc_ge2", n, enumerate_nc_ge2(n), a.count)
    } else if let Some(m) = a.r {
        json!({ "m": m, "r": count_r_row(m), "nc_blocks": nc_block_counts(m, false) })
    } else if let Some(set) = a.words {
        let q = a.q.ok_or_else(|| anyhow!("--words needs --q"))?;
        let m = a.m.ok_or_else(|| anyhow!("--words needs --m"))?;
        let words: Vec<String> = if a.star {
            enumerate_star_words(q, m, set)?.iter().map(ToString::to_string).collect()
        } else {
            enumerate_words(q, m, set)?.iter().map(ToString::to_string).collect()
        };
        if a.count {
            json!({ "set": format!("{set:?}"), "q": q, "m": m, "star": a.star, "count": words.len() })
        } else {
            json!({ "set": format!("{set:?}"), "q": q, "m": m, "star": a.star, "count": words.len(), "words": words })
        }
    } else if a.bijection {
        let q = a.q.ok_or_else(|| anyhow!("--bijection needs --q"))?;
        match (&a.word, &a.partition) {
            (Some(w), None) => {
                let w = parse_word(q, w)?;
                json!({ "q": q, "word": w.r(), "partition": word_to_partition(&w)?.to_string() })
            }
            (None, Some(p)) => {
                let p: NCPartition = p.parse()?;
                let w = partition_to_word(&p, q)?;
                json!({ "q": q, "partition": p.to_string(), "word": w.r() })
            }
            _ => bail!("--bijection needs exactly one of --word and --partition"),
        }
    } else {
        bail!("nothing to do: give one of --nc, --nc2, --nc-ge2, --r, --words, --bijection");
    };
    ctx.emit(ctx.manifest("partitions", &[], None), body)?;
    Ok(Outcome::Done)
}

fn cmd_verify(ctx: &Ctx, a: &VerifyArgs) -> anyhow::Result<Outcome> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg: FamilyConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing family config {}", a.config.display()))?;
    if let Some(seed) = ctx.cli_seed {
        cfg.seed = seed;
    }
    let family = KernelFamily::from_config(&cfg, a.theorem.shape())?;
    let mut opts = VerifyOptions::default();
    if let Some(t) = ctx.tolerance {
        if !(t.is_finite() && t >= 0.0) {
            bail!("tolerance must be a nonnegative number");
        }
        opts.abs_tol = t;
    }
    let mut report = freechaos::verify(&family, a.theorem, cfg.max_order, &cfg.n_list, &opts)?;
    if !ctx.timings {
        report.timings = None;
    }
    let csv_path = a.csv.clone().or_else(|| ctx.out.as_ref().map(|p| p.with_extension("csv")));
    if let Some(p) = &csv_path {
        fs::write(p, report.to_csv()).with_context(|| format!("writing {}", p.display()))?;
    }
    eprintln!("verdict: {}", if report.passed() { "pass" } else { "fail" });
    for f in &report.failures {
        eprintln!("  {f}");
    }
    let passed = report.passed();
    let mut body = serde_json::to_value(&report)?;
    if let Some(p) = &csv_path {
        body["csv"] = Value::String(p.display().to_string());
    }
    ctx.emit(ctx.manifest("verify", &[&a.config], Some(cfg.seed)), body)?;
    Ok(if passed { Outcome::Done } else { Outcome::VerdictFail })
}

fn cmd_oracle(ctx: &Ctx, a: &OracleArgs) -> anyhow::Result<Outcome> {
    let model = MatrixModel::parse(&a.model, a.lambda)?;
    let seed = ctx.cli_seed.unwrap_or(0);
    let cfg = SimConfig::new(model, a.n, a.trials, seed, a.orders.clone());
    let rows = estimate_moments(&cfg)?;
    let body = json!({
        "model": model.name(),
        "lambda": match model { MatrixModel::FreePoisson { lambda } => Some(lambda), _ => None },
        "n": a.n,
        "trials": a.trials,
        "moments": rows,
    });
    ctx.emit(ctx.manifest("oracle", &[], Some(seed)), body)?;
    Ok(Outcome::Done)
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let ctx = Ctx {
        cli_seed: cli.seed,
        tolerance: cli.tolerance,
        out: cli.out.clone(),
        timings: cli.timings,
        started: Instant::now(),
    };
    match &cli.command {
        Command::Contract(a) => cmd_contract(&ctx, a),
        Command::Moment(a) => cmd_moment(&ctx, a),
        Command::Partitions(a) => cmd_partitions(&ctx, a),
        Command::Verify(a) => cmd_verify(&ctx, a),
        Command::Oracle(a) => cmd_oracle(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FREECHAOS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::VerdictFail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
