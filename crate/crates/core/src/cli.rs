//! Command-line front end.
//!
//! Every command writes one artifact (CSV or JSON) to `--out`, or to standard
//! output for `--out -`. Files are written to a temporary sibling first and
//! renamed on success, and each file gets a `<out>.manifest.json` recording the
//! command line, law, resolved configuration, tool version and output digest.
//!
//! Exit codes: 0 success, 1 failed verification, 2 usage error, 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::asymptotics::{self, VRule};
use crate::error::{Error, Result};
use crate::gen_dist::{self, PmfMethod};
use crate::ldp::{self, Growth, PiecewiseLinearPath, RateKind, RateRegime, TableRegime};
use crate::montecarlo::{self, SimConfig, DEFAULT_POPULATION_CAP};
use crate::offspring::OffspringLaw;
use crate::verify;

pub const SEED_ENV: &str = "GW_LIMITS_SEED";
const DEFAULT_SEED: u64 = 42;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gwlimits", version, about = "Galton-Watson limit laws: exact pmfs, local-limit scales, rate functions, Monte Carlo checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print m, q, gamma, alpha, j0, beta and the regime of a law.
    Classify(ClassifyArgs),
    /// Exact pmf of Z_n.
    Pmf(PmfArgs),
    /// Local-limit ratios P(Z_n = v_n) / A_n over a range of n.
    Locallimit(LocalLimitArgs),
    /// Q_n(s) and Q(s) on a grid.
    Qfun(QfunArgs),
    /// The Boettcher function G on a grid, against the iteration oracle.
    Gfun(GfunArgs),
    /// A conditional rate function on an x grid.
    Rate(RateArgs),
    /// The rate of a piecewise-linear path.
    Pathrate(PathRateArgs),
    /// Seeded Monte Carlo estimates.
    Simulate(SimulateArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct LawArgs {
    /// Sparse law, e.g. `0:0.25,2:0.75`.
    #[arg(long, required_unless_present = "law_file", conflicts_with = "law_file")]
    pub law: Option<String>,
    /// JSON file of the form {"probs": [p_0, p_1, ...]}.
    #[arg(long)]
    pub law_file: Option<PathBuf>,
}

impl LawArgs {
    fn load(&self) -> Result<OffspringLaw> {
        match (&self.law, &self.law_file) {
            (Some(spec), _) => OffspringLaw::from_sparse(spec),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
                OffspringLaw::from_json(&text)
            }
            (None, None) => Err(Error::InvalidArgument("no law given".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output path, `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: String,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    law: LawArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Compose,
    Dft,
    Both,
}

#[derive(Debug, Args)]
pub struct PmfArgs {
    #[command(flatten)]
    law: LawArgs,
    #[arg(long)]
    n: u32,
    /// Truncation cap K; defaults to min(2^16, ceil(8 m^n), d^n).
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long, value_enum, default_value = "compose")]
    method: MethodArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LocalLimitArgs {
    #[command(flatten)]
    law: LawArgs,
    /// Inclusive range `a:b`.
    #[arg(long, default_value = "6:14")]
    n_range: String,
    /// sqrt | linear | m-power:r | const:c
    #[arg(long, default_value = "sqrt")]
    v_rule: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct QfunArgs {
    #[command(flatten)]
    law: LawArgs,
    /// Generation for Q_n.
    #[arg(long, default_value_t = 20)]
    n: u32,
    /// Grid `start:end:step`.
    #[arg(long, default_value = "0:0.95:0.05")]
    s_range: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GfunArgs {
    #[command(flatten)]
    law: LawArgs,
    /// Generation for the oracle j0^-n log f_n(s).
    #[arg(long, default_value_t = 20)]
    n: u32,
    #[arg(long, default_value = "0.05:1:0.05")]
    s_range: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Offspring,
    W,
    Boettcher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GrowthArg {
    Linear,
    Superlinear,
    Sublinear,
}

#[derive(Debug, Clone, Args)]
pub struct RegimeArgs {
    /// Conditioning lag.
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, value_enum, default_value = "linear")]
    growth: GrowthArg,
    /// Growth constant: lim (n-k)/v_{n-k}, or lim j0^n/v_n for Boettcher laws.
    #[arg(long, default_value_t = 0.0)]
    b: f64,
}

impl RegimeArgs {
    fn growth(&self) -> Result<Growth> {
        let name = match self.growth {
            GrowthArg::Linear => "linear",
            GrowthArg::Superlinear => "superlinear",
            GrowthArg::Sublinear => "sublinear",
        };
        Growth::parse(name, Some(self.b))
    }
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[command(flatten)]
    law: LawArgs,
    #[arg(long, value_enum, default_value = "offspring")]
    kind: KindArg,
    #[command(flatten)]
    regime: RegimeArgs,
    /// Grid `start:end:step`.
    #[arg(long)]
    x_range: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PathRateArgs {
    #[command(flatten)]
    law: LawArgs,
    #[command(flatten)]
    regime: RegimeArgs,
    /// Breakpoints `t:y,t:y,...` from t = 0 to t = 1.
    #[arg(long)]
    path: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    RnTail,
    CondLdp,
    Ak,
    W,
    Path,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    law: LawArgs,
    #[arg(long, value_enum, default_value = "rn-tail")]
    task: Task,
    #[arg(long, default_value_t = 12)]
    n: u32,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 1)]
    v: u64,
    #[arg(long, default_value_t = 1.8)]
    a: f64,
    #[arg(long, default_value_t = 100_000)]
    reps: u64,
    /// Defaults to $GW_LIMITS_SEED, then 42.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core. Does not change results.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = DEFAULT_POPULATION_CAP)]
    population_cap: u64,
    /// Grid size for `--task path`.
    #[arg(long, default_value_t = 11)]
    grid_points: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Reduced replicate counts for the Monte Carlo checks.
    #[arg(long)]
    fast: bool,
    /// Comma-separated criterion ids.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    #[arg(long, hide = true, value_enum)]
    inject_fault: Option<verify::Fault>,
}

/// A command's result before serialization.
struct Artifact {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    json: Value,
    default_format: Format,
    /// Law and configuration for the manifest.
    config: Value,
    seeds: Vec<u64>,
}

impl Artifact {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("json values serialize");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = self.header.join(",");
                s.push('\n');
                for row in &self.rows {
                    s.push_str(&row.join(","));
                    s.push('\n');
                }
                s
            }
        }
    }
}

fn num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

/// Inclusive grid `start:end:step`; a zero-length range gives one point.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("expected start:end:step, got `{spec}`"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, end, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
        return Err(bad());
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    if count > 10_000_000 {
        return Err(Error::InvalidArgument(format!("grid `{spec}` has too many points")));
    }
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn parse_range(spec: &str) -> Result<std::ops::RangeInclusive<u32>> {
    let bad = || Error::InvalidArgument(format!("expected a:b, got `{spec}`"));
    let (a, b) = spec.split_once(':').ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

fn law_config(law: &OffspringLaw) -> Value {
    json!({ "probs": law.probs() })
}

fn cmd_classify(args: &ClassifyArgs) -> Result<Artifact> {
    let law = args.law.load()?;
    let c = crate::classify(&law);
    let beta = c.beta.map_or("".to_string(), num);
    let rows = vec![
        vec!["m".into(), num(c.m)],
        vec!["q".into(), num(c.q)],
        vec!["gamma".into(), num(c.gamma)],
        vec!["alpha".into(), num(c.alpha)],
        vec!["j0".into(), c.j0.to_string()],
        vec!["beta".into(), beta],
        vec!["regime".into(), c.regime.to_string()],
    ];
    let json = json!({
        "m": c.m, "q": c.q, "gamma": c.gamma,
        "alpha": if c.alpha.is_finite() { json!(c.alpha) } else { json!("inf") },
        "j0": c.j0, "beta": c.beta, "regime": c.regime,
    });
    Ok(Artifact {
        header: vec!["field", "value"],
        rows,
        json,
        default_format: Format::Csv,
        config: json!({ "law": law_config(&law) }),
        seeds: vec![],
    })
}

fn cmd_pmf(args: &PmfArgs) -> Result<Artifact> {
    let law = args.law.load()?;
    let cap = args.cap.unwrap_or_else(|| gen_dist::default_cap(&law, args.n)).max(1);
    let dft = || -> Result<gen_dist::GenerationPmf> {
        let mut p = gen_dist::zn_pmf_dft(&law, args.n, (cap + 1).next_power_of_two())?;
        p.coeffs.truncate(cap + 1);
        Ok(p)
    };
    let config = json!({ "law": law_config(&law), "n": args.n, "cap": cap, "method": format!("{:?}", args.method).to_lowercase() });
    let (header, rows, json) = match args.method {
        MethodArg::Compose | MethodArg::Dft => {
            let p = if args.method == MethodArg::Compose { gen_dist::zn_pmf_compose(&law, args.n, cap)? } else { dft()? };
            let rows = p.coeffs.iter().enumerate().map(|(k, &x)| vec![k.to_string(), num(x)]).collect();
            let json = json!({
                "n": p.n, "cap": cap, "method": p.method, "tail_mass": p.tail_mass,
                "alias_bound": p.alias_bound, "cap_too_small": p.cap_too_small(), "probabilities": p.coeffs,
            });
            (vec!["k", "probability"], rows, json)
        }
        MethodArg::Both => {
            let a = gen_dist::zn_pmf_compose(&law, args.n, cap)?;
            let b = dft()?;
            let mut max_diff = 0.0f64;
            let rows = a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .enumerate()
                .map(|(k, (&x, &y))| {
                    max_diff = max_diff.max((x - y).abs());
                    vec![k.to_string(), num(x), num(y), num((x - y).abs())]
                })
                .collect();
            let json = json!({
                "n": args.n, "cap": cap, "tail_mass": a.tail_mass, "alias_bound": b.alias_bound,
                "max_abs_diff": max_diff, "compose": a.coeffs, "dft": b.coeffs,
                "methods": [PmfMethod::Compose, PmfMethod::Dft],
            });
            (vec!["k", "compose", "dft", "abs_diff"], rows, json)
        }
    };
    Ok(Artifact { header, rows, json, default_format: Format::Csv, config, seeds: vec![] })
}

fn cmd_locallimit(args: &LocalLimitArgs) -> Result<Artifact> {
    let law = args.law.load()?;
    let range = parse_range(&args.n_range)?;
    let rule: VRule = args.v_rule.parse()?;
    let seq = asymptotics::local_limit_sequence(&law, range, rule)?;
    let rows = seq
        .entries
        .iter()
        .map(|e| {
            vec![
                e.n.to_string(),
                e.v.to_string(),
                num(e.a_n),
                e.k_n.map_or(String::new(), |k| k.to_string()),
                num(e.prob),
                num(e.ratio),
            ]
        })
        .collect();
    let json = json!({ "regime": seq.regime, "v_rule": rule, "band": seq.band(), "entries": seq.entries });
    Ok(Artifact {
        header: vec!["n", "v_n", "A_n", "k_n", "P", "ratio"],
        rows,
        json,
        default_format: Format::Csv,
        config: json!({ "law": law_config(&law), "n_range": args.n_range, "v_rule": rule }),
        seeds: vec![],
    })
}

fn cmd_qfun(args: &QfunArgs) -> Result<Artifact> {
    let law = args.law.load()?;
    let grid = parse_grid(&args.s_range)?;
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for &s in &grid {
        let qn = asymptotics::q_n(&law, args.n, s)?;
        let q = asymptotics::q_limit(&law, s, asymptotics::Q_TOLERANCE, asymptotics::Q_MAX_ITERATIONS)?;
        rows.push(vec![num(s), num(qn.value), num(q.value), num(q.residual)]);
        entries.push(json!({ "s": s, "q_n": qn.value, "q": q.value, "residual": q.residual, "n_used": q.n_used }));
    }
    Ok(Artifact {
        header: vec!["s", "Q_n", "Q", "residual"],
        rows,
        json: json!({ "n": args.n, "entries": entries }),
        default_format: Format::Csv,
        config: json!({ "law": law_config(&law), "n": args.n, "s_range": args.s_range }),
        seeds: vec![],
    })
}

fn cmd_gfun(args: &GfunArgs) -> Result<Artifact> {
    let law = args.law.load()?;
    let grid = parse_grid(&args.s_range)?;
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for &s in &grid {
        let g = asymptotics::boettcher_g(&law, s, asymptotics::G_TOLERANCE)?;
        let it = asymptotics::boettcher_g_iterate(&law, args.n, s);
        let diff = (g.value - it).abs();
        rows.push(vec![num(s), num(g.value), num(it), num(diff)]);
        entries.push(json!({ "s": s, "g_series": g.value, "g_iterate": it, "diff": diff, "terms_used": g.terms_used }));
    }
    Ok(Artifact {
        header: vec!["s", "G_series", "G_iterate", "diff"],
        rows,
        json: json!({ "n": args.n, "entries": entries }),
        default_format: Format::Csv,
        config: json!({ "law": law_config(&law), "n": args.n, "s_range": args.s_range }),
        seeds: vec![],
    })
}

fn table_regime(law: &OffspringLaw, kind: KindArg, regime: &RegimeArgs) -> Result<TableRegime> {
    let cls = crate::classify(law);
    match kind {
        KindArg::Boettcher => {
            if !cls.is_boettcher() {
                return Err(Error::SchroederLaw);
            }
            Ok(TableRegime::Boettcher { k: regime.k, b: regime.b })
        }
        KindArg::Offspring | KindArg::W => Ok(TableRegime::Schroeder(RateRegime::new(&cls, regime.k, regime.growth()?)?)),
    }
}

fn cmd_rate(args: &RateArgs) -> Result<Artifact> {
    let law = args.law.load()?;
    let xs = parse_grid(&args.x_range)?;
    let kind = match args.kind {
        KindArg::Offspring => RateKind::Offspring,
        KindArg::W => RateKind::W,
        KindArg::Boettcher => RateKind::Boettcher,
    };
    let regime = table_regime(&law, args.kind, &args.regime)?;
    let table = ldp::rate_table(&law, kind, regime, &xs, None)?;
    let rows = (0..xs.len()).map(|i| vec![num(xs[i]), num(table.inner[i]), num(table.rates[i])]).collect();
    Ok(Artifact {
        header: vec!["x", "inner_rate", "total_rate"],
        rows,
        json: serde_json::to_value(&table).expect("rate table serializes"),
        default_format: Format::Csv,
        config: json!({ "law": law_config(&law), "kind": kind, "regime": regime, "x_range": args.x_range }),
        seeds: vec![],
    })
}

fn cmd_pathrate(args: &PathRateArgs) -> Result<Artifact> {
    let law = args.law.load()?;
    let path = PiecewiseLinearPath::parse(&args.path)?;
    let cls = crate::classify(&law);
    let regime = RateRegime::new(&cls, args.regime.k, args.regime.growth()?)?;
    let rate = ldp::path_rate(&law, &cls, &regime, &path)?;
    Ok(Artifact {
        header: vec!["path", "rate"],
        rows: vec![vec![format!("\"{}\"", args.path), num(rate)]],
        json: json!({ "path": path.points(), "regime": regime, "rate": if rate.is_finite() { json!(rate) } else { json!("inf") } }),
        default_format: Format::Csv,
        config: json!({ "law": law_config(&law), "regime": regime, "path": args.path }),
        seeds: vec![],
    })
}

fn resolve_seed(explicit: Option<u64>) -> Result<u64> {
    if let Some(s) = explicit {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn estimate_json(e: &montecarlo::McEstimate) -> Value {
    json!({ "estimate": e.value, "stderr": e.stderr, "hits": e.hits, "trials": e.trials, "discarded_cap": e.discarded_cap })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Artifact> {
    let law = args.law.load()?;
    let seed = resolve_seed(args.seed)?;
    let cfg = SimConfig { seed, replicates: args.reps, n: args.n, population_cap: args.population_cap, workers: args.workers };
    // workers is left out on purpose: output must not depend on it
    let echo = json!({
        "law": law_config(&law), "task": args.task, "n": args.n, "k": args.k, "v": args.v, "a": args.a,
        "reps": args.reps, "seed": seed, "population_cap": args.population_cap, "grid_points": args.grid_points,
    });
    let (header, rows, result): (Vec<&'static str>, Vec<Vec<String>>, Value) = match args.task {
        Task::RnTail => {
            let e = montecarlo::estimate_rn_tail(&law, args.a, &cfg)?;
            (
                vec!["estimate", "stderr", "hits", "trials", "discarded_cap"],
                vec![vec![num(e.value), num(e.stderr), e.hits.to_string(), e.trials.to_string(), e.discarded_cap.to_string()]],
                estimate_json(&e),
            )
        }
        Task::CondLdp => {
            let c = montecarlo::estimate_conditional_ldp(&law, args.k, args.v, args.a, &cfg)?;
            let e = c.estimate;
            let mut j = estimate_json(&e);
            j["acceptance_rate"] = json!(c.acceptance_rate);
            j["accepted"] = json!(c.accepted);
            (
                vec!["estimate", "stderr", "hits", "trials", "acceptance_rate", "discarded_cap"],
                vec![vec![
                    num(e.value),
                    num(e.stderr),
                    e.hits.to_string(),
                    e.trials.to_string(),
                    num(c.acceptance_rate),
                    e.discarded_cap.to_string(),
                ]],
                j,
            )
        }
        Task::Ak => {
            let h = montecarlo::empirical_ak(&law, args.a, &cfg)?;
            let rows = h.probs.iter().enumerate().map(|(k, &p)| vec![k.to_string(), num(p)]).collect();
            (
                vec!["k", "probability"],
                rows,
                json!({ "probabilities": h.probs, "samples": h.samples, "median": h.median(), "discarded_cap": h.discarded_cap }),
            )
        }
        Task::W => {
            let w = montecarlo::empirical_w(&law, &cfg)?;
            let deciles: Vec<f64> = (1..=9).map(|i| w.quantile(i as f64 / 10.0)).collect();
            let rows = deciles.iter().enumerate().map(|(i, &q)| vec![num((i + 1) as f64 / 10.0), num(q)]).collect();
            (
                vec!["level", "quantile"],
                rows,
                json!({
                    "mean": w.mean, "stderr": w.stderr, "samples": w.samples.len(),
                    "left_tail_slope": w.left_tail_slope, "deciles": deciles, "discarded_cap": w.discarded_cap,
                }),
            )
        }
        Task::Path => {
            let points = args.grid_points.max(2);
            let grid: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
            // first surviving replicate
            let mut path = Err(Error::NoSurvivors);
            for idx in 0..args.reps.max(1) {
                let mut rng = montecarlo::replicate_rng(seed, idx);
                path = montecarlo::sample_rn_path(&law, args.n, &grid, args.population_cap, &mut rng);
                if !matches!(path, Err(Error::NoSurvivors)) {
                    break;
                }
            }
            let path = path?;
            let rows = path.iter().map(|&(t, r)| vec![num(t), num(r)]).collect();
            (vec!["t", "R_n"], rows, json!({ "path": path }))
        }
    };
    Ok(Artifact {
        header,
        rows,
        json: json!({ "config": echo, "result": result }),
        default_format: Format::Json,
        config: echo,
        seeds: vec![seed],
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    command_line: Vec<String>,
    tool: &'static str,
    version: &'static str,
    config: &'a Value,
    seeds: &'a [u64],
    outputs: Vec<OutputDigest>,
}

#[derive(Serialize)]
struct OutputDigest {
    path: String,
    format: &'static str,
    sha256: String,
}

/// Writes `contents` to `path` through a temporary file in the same directory.
fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn emit(
    artifact: &Artifact,
    output: &OutputArgs,
    argv: &[String],
    stdout: &mut dyn Write,
) -> std::io::Result<()> {
    let format = output.format.unwrap_or(artifact.default_format);
    let text = artifact.render(format);
    if output.out == "-" {
        stdout.write_all(text.as_bytes())?;
        return stdout.flush();
    }
    let path = Path::new(&output.out);
    write_atomic(path, text.as_bytes())?;
    let manifest = Manifest {
        command_line: argv.to_vec(),
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: &artifact.config,
        seeds: &artifact.seeds,
        outputs: vec![OutputDigest {
            path: output.out.clone(),
            format: match format {
                Format::Csv => "csv",
                Format::Json => "json",
            },
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
        }],
    };
    let mut body = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    body.push(b'\n');
    write_atomic(&manifest_path(path), &body)
}

fn report_error(e: &Error, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(stderr, "error: {e}");
    if e.is_usage() {
        EXIT_USAGE
    } else {
        EXIT_NUMERICAL
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let (artifact, output) = match &cli.command {
        Command::Verify(v) => {
            let opts = verify::VerifyOptions { fast: v.fast, fault: v.inject_fault };
            let ids: Vec<&str> = if v.only.is_empty() {
                verify::CRITERIA.iter().map(|c| c.id).collect()
            } else {
                v.only.iter().map(String::as_str).collect()
            };
            if let Some(bad) = ids.iter().find(|id| verify::criterion(id).is_none()) {
                let _ = writeln!(stderr, "error: unknown criterion `{bad}`");
                return EXIT_USAGE;
            }
            let mut all = true;
            for id in ids {
                let outcome = verify::run_criterion(id, &opts);
                let _ = writeln!(stdout, "{outcome}");
                all &= outcome.passed;
            }
            let _ = stdout.flush();
            return if all { EXIT_OK } else { EXIT_VERIFY_FAILED };
        }
        Command::Classify(a) => (cmd_classify(a), &a.output),
        Command::Pmf(a) => (cmd_pmf(a), &a.output),
        Command::Locallimit(a) => (cmd_locallimit(a), &a.output),
        Command::Qfun(a) => (cmd_qfun(a), &a.output),
        Command::Gfun(a) => (cmd_gfun(a), &a.output),
        Command::Rate(a) => (cmd_rate(a), &a.output),
        Command::Pathrate(a) => (cmd_pathrate(a), &a.output),
        Command::Simulate(a) => (cmd_simulate(a), &a.output),
    };
    match artifact {
        Ok(artifact) => match emit(&artifact, output, &argv, stdout) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(stderr, "error: writing {}: {e}", output.out);
                EXIT_USAGE
            }
        },
        Err(e) => report_error(&e, stderr),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("gwlimits").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("1.5:1.5:1").unwrap(), vec![1.5]);
        let g = parse_grid("1:3:0.01").unwrap();
        assert_eq!(g.len(), 201);
        assert!((g[200] - 3.0).abs() < 1e-12);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("1:2").is_err());
        assert_eq!(parse_range("6:14").unwrap(), 6..=14);
    }

    #[test]
    fn classify_codes() {
        let (code, out, _) = run_capture(&["classify", "--law", "1:0.5,2:0.5"]);
        assert_eq!(code, 0);
        assert!(out.contains("SchroederSuper"));
        assert!(out.contains("alpha,1.7095"));
        let (code, _, err) = run_capture(&["classify", "--law", "0:1"]);
        assert_eq!(code, 2);
        assert!(err.contains("error"));
        let (code, _, _) = run_capture(&["classify"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn numerical_failure_exit_code() {
        let (code, _, _) = run_capture(&[
            "simulate", "--law", "1:0.5,2:0.5", "--task", "cond-ldp", "--n", "4", "--k", "1", "--v", "1000",
            "--reps", "100",
        ]);
        assert_eq!(code, 3);
    }

    #[test]
    fn rate_single_row() {
        let (code, out, _) = run_capture(&[
            "rate", "--law", "1:0.5,2:0.5", "--kind", "offspring", "--k", "0", "--growth", "linear", "--b", "0",
            "--x-range", "1.5:1.5:1",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out, "x,inner_rate,total_rate\n1.5,0,0\n");
    }
}
