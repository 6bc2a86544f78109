//! The `snmtf` command line tool.
//!
//! Exit codes: 0 normal stop, 1 runtime failure (non-finite objective),
//! 2 usage error, 3 data validation error, 4 memory guard.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::data::{self, RunSummary};
use crate::error::{Error, Result};
use crate::model::{AdamParams, DataBundle, Method, SolverConfig, StopReason, DEFAULT_MEMORY_BUDGET};
use crate::solver::{self, InitKind, Solution};
use crate::tune::{self, Problem, TuneOptions};

/// Environment variable holding the default GM-ELS memory budget in bytes.
pub const MEMORY_BUDGET_ENV: &str = "SNMTF_MEMORY_BUDGET";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_OOM: i32 = 4;

/// Marker written to summaries and result tables when the memory guard
/// fires.
pub const OOM_MARKER: &str = "OOM";

/// Default inner dimensions of a sweep, in percent of the planted `K`.
pub const DEFAULT_K_PERCENTS: [u32; 6] = [20, 40, 60, 80, 100, 120];

#[derive(Debug, Parser)]
#[command(name = "snmtf", version, about = "Symmetric multi-type non-negative matrix tri-factorization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a planted synthetic bundle.
    Generate(GenerateArgs),
    /// Factorize one bundle with one method.
    Solve(SolveArgs),
    /// Sweep methods and inner dimensions over a bundle suite.
    Benchmark(BenchmarkArgs),
    /// Name the lowest-MSE method per bundle and k from a benchmark CSV.
    Compare(CompareArgs),
    /// Random search over ADAM hyper-parameters.
    Tune(TuneArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    /// Planted inner dimension.
    #[arg(long = "K")]
    pub k: usize,
    /// Number of data matrices.
    #[arg(long = "N", default_value_t = data::DEFAULT_COUNT)]
    pub count: usize,
    #[arg(long, default_value_t = data::DEFAULT_DENSITY)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, default_value = "deterministic", value_parser = parse_init)]
    pub init: InitKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Iteration cap; defaults to the method's own cap.
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    #[arg(long = "mse-stop", default_value_t = 1e-2)]
    pub mse_stop: f64,
    #[arg(long = "delta-stop", default_value_t = 1e-10)]
    pub delta_stop: f64,
    #[arg(long = "trace-stride", default_value_t = 1)]
    pub trace_stride: usize,
    #[arg(long = "bcd-inner", default_value_t = 10)]
    pub bcd_inner: usize,
    #[arg(long = "adam-alpha", default_value_t = AdamParams::default().alpha)]
    pub adam_alpha: f64,
    #[arg(long = "adam-beta1", default_value_t = AdamParams::default().beta1)]
    pub adam_beta1: f64,
    #[arg(long = "adam-beta2", default_value_t = AdamParams::default().beta2)]
    pub adam_beta2: f64,
    #[arg(long = "adam-epsilon", default_value_t = AdamParams::default().epsilon)]
    pub adam_epsilon: f64,
    /// Use the conventional `β^i` bias correction in ADAM.
    #[arg(long = "standard-bias-correction")]
    pub standard_bias_correction: bool,
    /// GM-ELS memory budget in bytes (default: $SNMTF_MEMORY_BUDGET or 4 GiB).
    #[arg(long = "memory-budget")]
    pub memory_budget: Option<u64>,
    /// Average every R_i with its transpose before validation.
    #[arg(long)]
    pub symmetrize: bool,
}

impl RunArgs {
    pub fn config(&self, method: Method, k: usize) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::new(method, k).with_seed(self.seed);
        if let Some(m) = self.max_iters {
            cfg.max_iterations = m;
        }
        cfg.mse_stop = self.mse_stop;
        cfg.delta_stop = self.delta_stop;
        cfg.trace_stride = self.trace_stride;
        cfg.bcd_inner_iterations = self.bcd_inner;
        cfg.adam = AdamParams {
            alpha: self.adam_alpha,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
            standard_bias_correction: self.standard_bias_correction,
        };
        cfg.memory_budget_bytes = match self.memory_budget {
            Some(b) => b,
            None => default_memory_budget()?,
        };
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Start from a saved native factorization instead of `--init`.
    #[arg(long = "start-from", hide = true)]
    pub start_from: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// A bundle directory or a directory of bundle directories.
    #[arg(long)]
    pub suite: PathBuf,
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "fpm,bcd,gmels,adam")]
    pub methods: Vec<Method>,
    /// Inner dimensions in percent of the planted K.
    #[arg(long = "k-percent", value_delimiter = ',', default_value = "20,40,60,80,100,120")]
    pub k_percent: Vec<u32>,
    /// Planted K for bundles whose manifest does not record one.
    #[arg(long = "K")]
    pub planted_k: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Benchmark results CSV.
    #[arg(long)]
    pub results: PathBuf,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub suite: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Score only the `--adam-*` triple instead of searching.
    #[arg(long)]
    pub evaluate: bool,
    /// Inner dimension in percent of the planted K.
    #[arg(long = "k-percent", default_value_t = 100)]
    pub k_percent: u32,
    #[arg(long = "K")]
    pub planted_k: Option<usize>,
    #[arg(long, default_value_t = tune::RUNS_PER_PROBLEM)]
    pub runs: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_init(s: &str) -> std::result::Result<InitKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Budget from [`MEMORY_BUDGET_ENV`], or the built-in default.
pub fn default_memory_budget() -> Result<u64> {
    match std::env::var(MEMORY_BUDGET_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::InvalidArgument(format!("{MEMORY_BUDGET_ENV}={v:?} is not a byte count"))
        }),
        Err(_) => Ok(DEFAULT_MEMORY_BUDGET),
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Coords { .. } => EXIT_USAGE,
        Error::Dimension(_)
        | Error::InvalidData(_)
        | Error::DegenerateBundle
        | Error::Io { .. }
        | Error::Parse { .. }
        | Error::Json(_)
        | Error::Csv(_) => EXIT_DATA,
        Error::MemoryBudget { .. } => EXIT_OOM,
        Error::Eigen(_) | Error::NonFinite { .. } => EXIT_FAILURE,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(command: Command) -> Result<i32> {
    match command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Tune(a) => cmd_tune(&a),
    }
}

fn cmd_generate(a: &GenerateArgs) -> Result<i32> {
    let (bundle, planted) = data::generate_synthetic(a.n, a.k, a.count, a.density, a.seed)?;
    data::save_bundle(&bundle, &a.out, Some(&planted), Some((a.seed, a.density)))?;
    println!(
        "wrote {} matrices of order {} to {}",
        bundle.count(),
        bundle.order(),
        a.out.display()
    );
    Ok(EXIT_OK)
}

fn summary_for(
    bundle: &DataBundle,
    cfg: &SolverConfig,
    init: &str,
    outcome: &Result<Solution>,
    seconds: f64,
) -> Option<RunSummary> {
    let base = |stop_reason, final_se, final_mse, iterations, note| RunSummary {
        bundle: bundle.label().to_string(),
        method: cfg.method.to_string(),
        init: init.to_string(),
        config: cfg.clone(),
        stop_reason,
        final_se,
        final_mse,
        iterations,
        seconds,
        note,
    };
    match outcome {
        Ok(sol) => {
            let last = sol.trace.last();
            Some(base(
                sol.trace.stop_reason.unwrap_or(StopReason::MaxIterations),
                last.map(|r| r.se),
                last.map(|r| r.mse),
                sol.trace.iterations(),
                None,
            ))
        }
        Err(Error::MemoryBudget { .. }) => Some(base(
            StopReason::OutOfMemoryGuard,
            None,
            None,
            0,
            Some(OOM_MARKER.to_string()),
        )),
        Err(_) => None,
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let bundle = data::load_bundle(&a.bundle, a.run.symmetrize)?;
    let cfg = a.run.config(a.method, a.k)?;
    let started = Instant::now();
    let (outcome, init) = match &a.start_from {
        Some(dir) => {
            let start = data::load_factorization(dir)?;
            (solver::solve_from(&bundle, &cfg, &start), "start_from".to_string())
        }
        None => (
            solver::solve(&bundle, &cfg, a.run.init),
            serde_json::to_value(a.run.init)?.as_str().unwrap_or_default().to_string(),
        ),
    };
    let seconds = started.elapsed().as_secs_f64();
    let summary = summary_for(&bundle, &cfg, &init, &outcome, seconds);
    match (outcome, summary) {
        (Ok(sol), Some(summary)) => {
            data::save_factorization(&sol.factorization, &sol.trace, &summary, &a.out)?;
            println!(
                "{} k={} stop={} iterations={} mse={:.6e}",
                summary.method,
                cfg.k,
                summary.stop_reason,
                summary.iterations,
                summary.final_mse.unwrap_or(f64::NAN)
            );
            Ok(EXIT_OK)
        }
        (Err(e @ Error::MemoryBudget { .. }), Some(summary)) => {
            fs::create_dir_all(&a.out).map_err(|err| Error::io(&a.out, err))?;
            data::write_summary(&summary, &a.out.join("summary.json"))?;
            eprintln!("{OOM_MARKER}: {e}");
            Ok(EXIT_OOM)
        }
        (Err(e), _) => Err(e),
        (Ok(_), None) => unreachable!("successful runs always have a summary"),
    }
}

/// One row of the benchmark results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub bundle: String,
    pub method: String,
    pub n: usize,
    #[serde(rename = "K")]
    pub planted_k: usize,
    pub k: usize,
    pub k_over_k_pct: u32,
    pub final_mse: Option<f64>,
    pub iterations: usize,
    pub seconds: f64,
    pub stop_reason: String,
}

const RESULT_HEADER: [&str; 10] = [
    "bundle",
    "method",
    "n",
    "K",
    "k",
    "k_over_K_pct",
    "final_mse",
    "iterations",
    "seconds",
    "stop_reason",
];

/// Inner dimension for `pct` percent of `planted_k`, at least 1.
pub fn k_for_percent(planted_k: usize, pct: u32) -> usize {
    ((planted_k as f64 * pct as f64 / 100.0).round() as usize).max(1)
}

fn planted_k_of(dir: &Path, fallback: Option<usize>) -> Result<usize> {
    data::load_manifest(dir)?.planted_k.or(fallback).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{} records no planted K; pass --K",
            dir.display()
        ))
    })
}

/// Runs the method × k sweep over every bundle under `a.suite`, writing
/// `results.csv`, `aggregate.csv` and one trace per run under `traces/`.
pub fn benchmark(a: &BenchmarkArgs) -> Result<Vec<BenchmarkRow>> {
    let bundles = data::find_bundles(&a.suite)?;
    if bundles.is_empty() {
        return Err(Error::InvalidArgument(format!("no bundles under {}", a.suite.display())));
    }
    let traces = a.out.join("traces");
    fs::create_dir_all(&traces).map_err(|e| Error::io(&traces, e))?;
    let mut rows = Vec::new();
    for dir in &bundles {
        let bundle = data::load_bundle(dir, a.run.symmetrize)?;
        let planted_k = planted_k_of(dir, a.planted_k)?;
        let name = dir.file_name().map_or_else(|| bundle.label().to_string(), |s| s.to_string_lossy().into_owned());
        for &pct in &a.k_percent {
            let k = k_for_percent(planted_k, pct);
            for &method in &a.methods {
                let cfg = a.run.config(method, k)?;
                let started = Instant::now();
                let outcome = solver::solve(&bundle, &cfg, a.run.init);
                let seconds = started.elapsed().as_secs_f64();
                let (final_mse, iterations, stop_reason) = match &outcome {
                    Ok(sol) => {
                        let path = traces.join(format!("{name}_{method}_k{k}.csv"));
                        data::write_trace_csv(&sol.trace, &path)?;
                        (
                            sol.trace.final_mse(),
                            sol.trace.iterations(),
                            sol.trace.stop_reason.map_or_else(String::new, |r| r.to_string()),
                        )
                    }
                    Err(Error::MemoryBudget { .. }) => (None, 0, OOM_MARKER.to_string()),
                    Err(e) => (None, 0, format!("error: {e}")),
                };
                eprintln!("{name} {method} k={k}: {stop_reason} mse={final_mse:?}");
                rows.push(BenchmarkRow {
                    bundle: name.clone(),
                    method: method.to_string(),
                    n: bundle.order(),
                    planted_k,
                    k,
                    k_over_k_pct: pct,
                    final_mse,
                    iterations,
                    seconds,
                    stop_reason,
                });
            }
        }
    }
    write_results(&rows, &a.out.join("results.csv"))?;
    write_aggregate(&aggregate(&rows), &a.methods, &a.out.join("aggregate.csv"))?;
    Ok(rows)
}

pub fn write_results(rows: &[BenchmarkRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.write_record([
            r.bundle.clone(),
            r.method.clone(),
            r.n.to_string(),
            r.planted_k.to_string(),
            r.k.to_string(),
            r.k_over_k_pct.to_string(),
            r.final_mse.map_or_else(String::new, |v| v.to_string()),
            r.iterations.to_string(),
            r.seconds.to_string(),
            r.stop_reason.clone(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<BenchmarkRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(path, format!("missing column '{name}'")))
    };
    let idx: Vec<usize> = RESULT_HEADER.iter().map(|h| col(h)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |j: usize| rec.get(idx[j]).unwrap_or("").trim();
        let num = |j: usize| -> Result<usize> {
            field(j)
                .parse()
                .map_err(|_| Error::parse(path, format!("bad {} '{}'", RESULT_HEADER[j], field(j))))
        };
        let mse = field(6);
        rows.push(BenchmarkRow {
            bundle: field(0).to_string(),
            method: field(1).to_string(),
            n: num(2)?,
            planted_k: num(3)?,
            k: num(4)?,
            k_over_k_pct: num(5)? as u32,
            final_mse: if mse.is_empty() {
                None
            } else {
                Some(mse.parse().map_err(|_| Error::parse(path, format!("bad final_mse '{mse}'")))?)
            },
            iterations: num(7)?,
            seconds: field(8).parse().unwrap_or(f64::NAN),
            stop_reason: field(9).to_string(),
        });
    }
    Ok(rows)
}

/// Mean final MSE over bundles, keyed by `(n, k/K %)` and method name.
pub type Aggregate = BTreeMap<(usize, u32), BTreeMap<String, f64>>;

pub fn aggregate(rows: &[BenchmarkRow]) -> Aggregate {
    let mut sums: BTreeMap<(usize, u32), BTreeMap<String, (f64, usize)>> = BTreeMap::new();
    for r in rows {
        if let Some(m) = r.final_mse {
            let e = sums
                .entry((r.n, r.k_over_k_pct))
                .or_default()
                .entry(r.method.clone())
                .or_insert((0.0, 0));
            e.0 += m;
            e.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(key, per)| {
            (
                key,
                per.into_iter().map(|(m, (s, c))| (m, s / c as f64)).collect(),
            )
        })
        .collect()
}

pub fn write_aggregate(agg: &Aggregate, methods: &[Method], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["n".to_string(), "k_over_K_pct".into()];
    header.extend(methods.iter().map(|m| m.to_string()));
    w.write_record(&header)?;
    for ((n, pct), per) in agg {
        let mut row = vec![n.to_string(), pct.to_string()];
        row.extend(
            methods
                .iter()
                .map(|m| per.get(m.name()).map_or_else(String::new, |v| v.to_string())),
        );
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn cmd_benchmark(a: &BenchmarkArgs) -> Result<i32> {
    let rows = benchmark(a)?;
    println!("{} runs written to {}", rows.len(), a.out.display());
    Ok(EXIT_OK)
}

/// Winner of one `(bundle, k)` group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Winner {
    pub bundle: String,
    pub k: usize,
    pub winner: String,
    pub final_mse: Option<f64>,
    pub tie: bool,
    /// `"complete"`, or `"incomplete"` when a method seen elsewhere in the
    /// table has no usable row here.
    pub status: String,
}

/// Lowest final MSE per `(bundle, k)`; ties go to the lexicographically
/// first method name and are flagged.
pub fn compare(rows: &[BenchmarkRow]) -> Vec<Winner> {
    let methods: BTreeSet<&str> = rows.iter().map(|r| r.method.as_str()).collect();
    let mut groups: BTreeMap<(String, usize), Vec<&BenchmarkRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.bundle.clone(), r.k)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((bundle, k), group)| {
            let mut valid: Vec<(&str, f64)> = group
                .iter()
                .filter_map(|r| r.final_mse.filter(|v| v.is_finite()).map(|v| (r.method.as_str(), v)))
                .collect();
            valid.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));
            let present: BTreeSet<&str> = valid.iter().map(|v| v.0).collect();
            let complete = methods.iter().all(|m| present.contains(m));
            let (winner, final_mse, tie) = match valid.first() {
                Some(&(m, v)) => (m.to_string(), Some(v), valid.iter().filter(|x| x.1 == v).count() > 1),
                None => (String::new(), None, false),
            };
            Winner {
                bundle,
                k,
                winner,
                final_mse,
                tie,
                status: if complete { "complete" } else { "incomplete" }.to_string(),
            }
        })
        .collect()
}

fn cmd_compare(a: &CompareArgs) -> Result<i32> {
    let winners = compare(&read_results(&a.results)?);
    let write = |w: &mut csv::Writer<Box<dyn std::io::Write>>| -> Result<()> {
        w.write_record(["bundle", "k", "winner", "final_mse", "tie", "status"])?;
        for x in &winners {
            w.write_record([
                x.bundle.clone(),
                x.k.to_string(),
                x.winner.clone(),
                x.final_mse.map_or_else(String::new, |v| v.to_string()),
                x.tie.to_string(),
                x.status.clone(),
            ])?;
        }
        Ok(())
    };
    let sink: Box<dyn std::io::Write> = match &a.out {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| Error::io(p, e))?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    write(&mut w)?;
    w.flush().map_err(|e| Error::InvalidData(format!("writing comparison: {e}")))?;
    Ok(EXIT_OK)
}

/// Loads the tuning problems under `suite`, fitting `pct` percent of each
/// bundle's planted K.
pub fn load_problems(suite: &Path, pct: u32, fallback_k: Option<usize>, symmetrize: bool) -> Result<(Vec<Problem>, Vec<String>)> {
    let mut problems = Vec::new();
    let mut labels = Vec::new();
    for dir in data::find_bundles(suite)? {
        let k = k_for_percent(planted_k_of(&dir, fallback_k)?, pct);
        labels.push(dir.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned()));
        problems.push(Problem {
            bundle: data::load_bundle(&dir, symmetrize)?,
            k,
        });
    }
    if problems.is_empty() {
        return Err(Error::InvalidArgument(format!("no bundles under {}", suite.display())));
    }
    Ok((problems, labels))
}

fn cmd_tune(a: &TuneArgs) -> Result<i32> {
    let (problems, labels) = load_problems(&a.suite, a.k_percent, a.planted_k, a.run.symmetrize)?;
    let options = TuneOptions {
        init: a.run.init,
        max_iterations: a.run.max_iters.unwrap_or(Method::Adam.default_max_iterations()),
        runs: a.runs,
    };
    let ranked = if a.evaluate {
        let params = a.run.config(Method::Adam, 1)?.adam;
        let (problem_mse, score) = tune::evaluate(&params, &problems, &options, a.run.seed)?;
        vec![tune::Trial {
            trial: 0,
            params,
            problem_mse,
            score,
        }]
    } else {
        tune::tune_adam(&problems, a.trials, a.run.seed, &options)?
    };
    let file = fs::File::create(&a.out).map_err(|e| Error::io(&a.out, e))?;
    tune::write_csv(&ranked, &labels, file)?;
    let best = &ranked[0];
    println!(
        "best alpha={} beta1={} beta2={} score={}",
        best.params.alpha, best.params.beta1, best.params.beta2, best.score
    );
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(bundle: &str, method: &str, k: usize, mse: Option<f64>) -> BenchmarkRow {
        BenchmarkRow {
            bundle: bundle.into(),
            method: method.into(),
            n: 10,
            planted_k: 5,
            k,
            k_over_k_pct: 100,
            final_mse: mse,
            iterations: 1,
            seconds: 0.0,
            stop_reason: "max_iterations".into(),
        }
    }

    #[test]
    fn tie_goes_to_first_name() {
        let rows = vec![
            row("b", "fpm", 5, Some(0.3)),
            row("b", "bcd", 5, Some(0.2)),
            row("b", "gmels", 5, Some(0.2)),
            row("b", "adam", 5, Some(0.4)),
        ];
        let w = compare(&rows);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].winner, "bcd");
        assert!(w[0].tie);
        assert_eq!(w[0].status, "complete");
    }

    #[test]
    fn single_method_and_incomplete_groups() {
        let w = compare(&[row("a", "adam", 1, Some(0.5)), row("b", "adam", 2, Some(0.1))]);
        assert!(w.iter().all(|x| x.winner == "adam" && !x.tie));
        let w = compare(&[row("a", "adam", 1, Some(0.5)), row("a", "fpm", 1, None)]);
        assert_eq!(w[0].status, "incomplete");
        assert_eq!(w[0].winner, "adam");
    }

    #[test]
    fn aggregate_means_over_bundles() {
        let mut a = row("a", "fpm", 5, Some(0.2));
        let mut b = row("b", "fpm", 5, Some(0.4));
        a.planted_k = 5;
        b.planted_k = 10;
        let agg = aggregate(&[a, b, row("c", "adam", 5, None)]);
        assert_eq!(agg.len(), 1);
        assert!((agg[&(10, 100)]["fpm"] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn results_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![row("a", "fpm", 2, Some(0.25)), row("a", "gmels", 2, None)];
        write_results(&rows, &path).unwrap();
        assert_eq!(read_results(&path).unwrap(), rows);
        let head = fs::read_to_string(&path).unwrap();
        assert!(head.starts_with("bundle,method,n,K,k,k_over_K_pct,final_mse,iterations,seconds,stop_reason"));
    }

    #[test]
    fn k_percent_rounding() {
        assert_eq!(k_for_percent(10, 20), 2);
        assert_eq!(k_for_percent(10, 120), 12);
        assert_eq!(k_for_percent(3, 20), 1);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_cli(["snmtf", "solve"]), EXIT_USAGE);
        assert_eq!(run_cli(["snmtf", "generate", "--n", "10", "--K", "20", "--out", "/nonexistent/x"]), EXIT_USAGE);
    }
}
