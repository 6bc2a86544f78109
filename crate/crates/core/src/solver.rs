//! Method dispatch and starting points.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gradients::TransformKind;
use crate::init;
use crate::model::{ConvergenceTrace, Coords, DataBundle, Factorization, Method, SolverConfig};
use crate::{adam, bcd, fpm, gmels};

/// How the starting factorization is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Spectral `G` from the eigenvectors of `Σ_i R_i`.
    Deterministic,
    /// Uniform random `G`.
    Random,
}

impl std::str::FromStr for InitKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic" => Ok(InitKind::Deterministic),
            "random" => Ok(InitKind::Random),
            other => Err(crate::Error::InvalidArgument(format!("unknown init kind '{other}'"))),
        }
    }
}

/// Result of one solver run. The factorization is always in native
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub factorization: Factorization,
    pub trace: ConvergenceTrace,
}

/// The search coordinates each method works in.
pub fn transform_for(method: Method) -> TransformKind {
    match method {
        Method::Fpm | Method::Bcd => TransformKind::Identity,
        Method::Gmels => TransformKind::Square,
        Method::Adam => TransformKind::Abs,
    }
}

/// Native starting point for `config.method`.
///
/// `S_i` is seeded random except for BCD, whose first `S` block is solved
/// from `G`.
pub fn start_point(bundle: &DataBundle, config: &SolverConfig, kind: InitKind) -> Result<Factorization> {
    let (n, k, count) = (bundle.order(), config.k, bundle.count());
    if k > n {
        return Err(crate::Error::InvalidArgument(format!(
            "k = {k} exceeds the matrix order {n}"
        )));
    }
    let random = init::random_init(n, k, count, config.seed);
    let g = match kind {
        InitKind::Deterministic => init::deterministic_g(bundle, k)?,
        InitKind::Random => random.g,
    };
    let s = if config.method == Method::Bcd {
        init::init_s_from_g(bundle, &g, config.bcd_inner_iterations)?
    } else {
        random.s
    };
    Factorization::native(g, s)
}

/// Runs `config.method` from the starting point built by `kind`.
pub fn solve(bundle: &DataBundle, config: &SolverConfig, kind: InitKind) -> Result<Solution> {
    config.validate()?;
    if config.method == Method::Gmels {
        // Fail before the (possibly expensive) starting point is built.
        gmels::check_memory(bundle, config)?;
    }
    let start = start_point(bundle, config, kind)?;
    solve_from(bundle, config, &start)
}

/// Runs `config.method` from a native starting factorization.
pub fn solve_from(bundle: &DataBundle, config: &SolverConfig, start: &Factorization) -> Result<Solution> {
    config.validate()?;
    start.expect_coords(Coords::Native)?;
    start.check_dims(bundle)?;
    let transform = transform_for(config.method);
    match config.method {
        Method::Fpm => fpm::fpm_solve(bundle, config, start),
        Method::Bcd => bcd::bcd_solve(bundle, config, start),
        Method::Gmels => gmels::gmels_solve(bundle, config, &init::lift_to_transformed(start, transform)?),
        Method::Adam => adam::adam_solve(bundle, config, &init::lift_to_transformed(start, transform)?),
    }
}
