//! Random search over ADAM hyper-parameters.
//!
//! `α` is drawn log-uniformly from `[1e-4, 1e-1]`, `β₁` uniformly from
//! `[0.2, 0.999]` and `β₂` uniformly from `[0.1, 0.999]`. A trial's score is
//! the largest, over the problems, of the mean final MSE of
//! [`RUNS_PER_PROBLEM`] seeded runs.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{AdamParams, DataBundle, Method, SolverConfig};
use crate::solver::{self, InitKind};

pub const RUNS_PER_PROBLEM: usize = 3;
pub const ALPHA_RANGE: (f64, f64) = (1e-4, 1e-1);
pub const BETA1_RANGE: (f64, f64) = (0.2, 0.999);
pub const BETA2_RANGE: (f64, f64) = (0.1, 0.999);

/// One tuning problem: a bundle and the inner dimension to fit.
#[derive(Debug, Clone)]
pub struct Problem {
    pub bundle: DataBundle,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub trial: usize,
    pub params: AdamParams,
    /// Mean final MSE per problem; failed runs count as infinite.
    pub problem_mse: Vec<f64>,
    pub score: f64,
}

/// Settings shared by every run of a search.
#[derive(Debug, Clone)]
pub struct TuneOptions {
    pub init: InitKind,
    pub max_iterations: usize,
    pub runs: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            init: InitKind::Deterministic,
            max_iterations: Method::Adam.default_max_iterations(),
            runs: RUNS_PER_PROBLEM,
        }
    }
}

/// Scores one parameter triple; run `j` of every problem uses seed
/// `seed + j`.
pub fn evaluate(
    params: &AdamParams,
    problems: &[Problem],
    options: &TuneOptions,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    if problems.is_empty() {
        return Err(Error::InvalidArgument("tuning needs at least one problem".into()));
    }
    let mut per_problem = Vec::with_capacity(problems.len());
    for p in problems {
        let mut total = 0.0;
        for j in 0..options.runs {
            let mut cfg = SolverConfig::new(Method::Adam, p.k)
                .with_seed(seed.wrapping_add(j as u64))
                .with_max_iterations(options.max_iterations);
            cfg.adam = *params;
            cfg.trace_stride = options.max_iterations;
            total += match solver::solve(&p.bundle, &cfg, options.init) {
                Ok(sol) => sol.trace.final_mse().unwrap_or(f64::INFINITY),
                Err(Error::NonFinite { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
        }
        per_problem.push(total / options.runs as f64);
    }
    let score = per_problem.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((per_problem, score))
}

/// Draws `trials` parameter triples from `seed` and returns them ranked by
/// score (ties by trial index).
pub fn tune_adam(problems: &[Problem], trials: usize, seed: u64, options: &TuneOptions) -> Result<Vec<Trial>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ln_lo, ln_hi) = (ALPHA_RANGE.0.ln(), ALPHA_RANGE.1.ln());
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let params = AdamParams {
            alpha: rng.gen_range(ln_lo..=ln_hi).exp(),
            beta1: rng.gen_range(BETA1_RANGE.0..=BETA1_RANGE.1),
            beta2: rng.gen_range(BETA2_RANGE.0..=BETA2_RANGE.1),
            ..AdamParams::default()
        };
        let run_seed = rng.gen::<u64>();
        let (problem_mse, score) = evaluate(&params, problems, options, run_seed)?;
        out.push(Trial {
            trial,
            params,
            problem_mse,
            score,
        });
    }
    rank(&mut out);
    Ok(out)
}

pub fn rank(trials: &mut [Trial]) {
    trials.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.trial.cmp(&b.trial)));
}

/// `trial,alpha,beta1,beta2,mse_<label>…,score`, in the given order.
pub fn write_csv(trials: &[Trial], labels: &[String], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["trial".to_string(), "alpha".into(), "beta1".into(), "beta2".into()];
    header.extend(labels.iter().map(|l| format!("mse_{l}")));
    header.push("score".into());
    w.write_record(&header)?;
    for t in trials {
        let mut row = vec![
            t.trial.to_string(),
            t.params.alpha.to_string(),
            t.params.beta1.to_string(),
            t.params.beta2.to_string(),
        ];
        row.extend(t.problem_mse.iter().map(f64::to_string));
        row.push(t.score.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::InvalidData(format!("writing tuner CSV: {e}")))?;
    Ok(())
}
