//! Problem data, factorization state, objective evaluation and residuals.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradients::TransformKind;
use crate::linalg;

pub type Matrix = Array2<f64>;

/// Relative tolerance for symmetry of ingested data matrices.
pub const INPUT_SYMMETRY_TOL: f64 = 1e-12;
/// Relative tolerance for symmetry of `S_i` maintained during iteration.
pub const ITERATE_SYMMETRY_TOL: f64 = 1e-10;

/// The N-tuple `(R_1, …, R_N)` of symmetric non-negative `n × n` matrices.
///
/// Immutable after construction; `Σ_i ‖R_i‖²` is cached.
#[derive(Debug, Clone)]
pub struct DataBundle {
    label: String,
    matrices: Vec<Matrix>,
    norms_sq: Vec<f64>,
    norm_sq_total: f64,
}

impl DataBundle {
    /// Validates order, symmetry (relative tolerance `1e-12`) and
    /// non-negativity of every matrix.
    pub fn new(label: impl Into<String>, matrices: Vec<Matrix>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidData("bundle contains no matrices".into()));
        }
        let n = matrices[0].nrows();
        if n == 0 {
            return Err(Error::InvalidData("matrix order must be positive".into()));
        }
        for (idx, m) in matrices.iter().enumerate() {
            validate_matrix(idx, m, n)?;
        }
        let norms_sq: Vec<f64> = matrices.iter().map(linalg::frob_sq).collect();
        let norm_sq_total = norms_sq.iter().sum();
        Ok(DataBundle {
            label: label.into(),
            matrices,
            norms_sq,
            norm_sq_total,
        })
    }

    /// Replaces every `R_i` by `(R_i + R_iᵀ) / 2` before validating.
    pub fn new_symmetrized(label: impl Into<String>, mut matrices: Vec<Matrix>) -> Result<Self> {
        for (idx, m) in matrices.iter_mut().enumerate() {
            if !m.is_square() {
                return Err(Error::InvalidData(format!(
                    "R_{} is {}x{}, not square",
                    idx + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
            linalg::symmetrize(m);
        }
        Self::new(label, matrices)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Matrix order `n`.
    pub fn order(&self) -> usize {
        self.matrices[0].nrows()
    }

    /// Number of data matrices `N`.
    pub fn count(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn matrix(&self, i: usize) -> &Matrix {
        &self.matrices[i]
    }

    /// `‖R_i‖²` for every matrix.
    pub fn norms_sq(&self) -> &[f64] {
        &self.norms_sq
    }

    pub fn norm_sq_total(&self) -> f64 {
        self.norm_sq_total
    }

    /// Returns a copy with every matrix multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.label.clone(),
            self.matrices.iter().map(|m| m * c).collect(),
        )
    }
}

fn validate_matrix(idx: usize, m: &Matrix, n: usize) -> Result<()> {
    let name = idx + 1;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::InvalidData(format!(
            "R_{name} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    for ((r, c), &v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::InvalidData(format!(
                "R_{name} has non-finite entry at ({r}, {c})"
            )));
        }
        if v < 0.0 {
            return Err(Error::InvalidData(format!(
                "R_{name} has negative entry {v} at ({r}, {c})"
            )));
        }
    }
    let scale = linalg::max_abs(m);
    let (diff, (r, c)) = linalg::max_asymmetry(m);
    if diff > INPUT_SYMMETRY_TOL * scale {
        return Err(Error::InvalidData(format!(
            "R_{name} is not symmetric: |R[{r},{c}] - R[{c},{r}]| = {diff:e}"
        )));
    }
    Ok(())
}

/// Space in which the factors of a [`Factorization`] live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coords {
    Native,
    /// `G = |G̃|`, `S_i = |S̃_i|`.
    TransformedAbs,
    /// `G = G̃ ⊙ G̃`, `S_i = S̃_i ⊙ S̃_i`.
    TransformedSquare,
}

/// `G` (`n × k`) and `S_1 … S_N` (`k × k`, symmetric).
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub g: Matrix,
    pub s: Vec<Matrix>,
    pub coords: Coords,
}

impl Factorization {
    pub fn new(g: Matrix, s: Vec<Matrix>, coords: Coords) -> Result<Self> {
        let k = g.ncols();
        for (i, si) in s.iter().enumerate() {
            if si.dim() != (k, k) {
                return Err(Error::Dimension(format!(
                    "S_{} is {}x{}, expected {k}x{k}",
                    i + 1,
                    si.nrows(),
                    si.ncols()
                )));
            }
        }
        Ok(Factorization { g, s, coords })
    }

    pub fn native(g: Matrix, s: Vec<Matrix>) -> Result<Self> {
        Self::new(g, s, Coords::Native)
    }

    /// Inner dimension `k`.
    pub fn rank(&self) -> usize {
        self.g.ncols()
    }

    pub fn rows(&self) -> usize {
        self.g.nrows()
    }

    pub fn transform(&self) -> TransformKind {
        TransformKind::for_coords(self.coords)
    }

    /// Applies the coordinate transform, returning native factors.
    pub fn to_native(&self) -> Factorization {
        let f = self.transform();
        Factorization {
            g: f.apply(&self.g),
            s: self.s.iter().map(|s| f.apply(s)).collect(),
            coords: Coords::Native,
        }
    }

    pub(crate) fn expect_coords(&self, expected: Coords) -> Result<()> {
        if self.coords != expected {
            return Err(Error::Coords {
                expected,
                found: self.coords,
            });
        }
        Ok(())
    }

    /// Checks shapes against `bundle`.
    pub fn check_dims(&self, bundle: &DataBundle) -> Result<()> {
        if self.g.nrows() != bundle.order() {
            return Err(Error::Dimension(format!(
                "G has {} rows, bundle order is {}",
                self.g.nrows(),
                bundle.order()
            )));
        }
        if self.s.len() != bundle.count() {
            return Err(Error::Dimension(format!(
                "factorization has {} S matrices, bundle has {}",
                self.s.len(),
                bundle.count()
            )));
        }
        let k = self.rank();
        for (i, si) in self.s.iter().enumerate() {
            if si.dim() != (k, k) {
                return Err(Error::Dimension(format!(
                    "S_{} is {}x{}, expected {k}x{k}",
                    i + 1,
                    si.nrows(),
                    si.ncols()
                )));
            }
        }
        Ok(())
    }

    /// Largest relative asymmetry over all `S_i`.
    pub fn max_relative_asymmetry(&self) -> f64 {
        self.s
            .iter()
            .map(|s| {
                let scale = linalg::max_abs(s).max(f64::MIN_POSITIVE);
                linalg::max_asymmetry(s).0 / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Why a solver run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MseThreshold,
    DeltaThreshold,
    MaxIterations,
    OutOfMemoryGuard,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::MseThreshold => "mse_threshold",
            StopReason::DeltaThreshold => "delta_threshold",
            StopReason::MaxIterations => "max_iterations",
            StopReason::OutOfMemoryGuard => "out_of_memory_guard",
        })
    }
}

impl FromStr for StopReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse_threshold" => Ok(StopReason::MseThreshold),
            "delta_threshold" => Ok(StopReason::DeltaThreshold),
            "max_iterations" => Ok(StopReason::MaxIterations),
            "out_of_memory_guard" => Ok(StopReason::OutOfMemoryGuard),
            other => Err(Error::InvalidArgument(format!("unknown stop reason {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub se: f64,
    pub mse: f64,
    pub elapsed_seconds: f64,
}

/// Per-iteration objective history of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub stop_reason: Option<StopReason>,
}

impl ConvergenceTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn final_mse(&self) -> Option<f64> {
        self.last().map(|r| r.mse)
    }

    /// Index of the last completed iteration.
    pub fn iterations(&self) -> usize {
        self.last().map_or(0, |r| r.iteration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fpm,
    Bcd,
    Gmels,
    Adam,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Fpm, Method::Bcd, Method::Gmels, Method::Adam];

    /// Default outer-iteration cap.
    pub fn default_max_iterations(self) -> usize {
        match self {
            Method::Fpm => 4000,
            Method::Bcd => 300,
            Method::Gmels => 1000,
            Method::Adam => 3000,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Fpm => "fpm",
            Method::Bcd => "bcd",
            Method::Gmels => "gmels",
            Method::Adam => "adam",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fpm" => Ok(Method::Fpm),
            "bcd" => Ok(Method::Bcd),
            "gmels" | "gm-els" => Ok(Method::Gmels),
            "adam" => Ok(Method::Adam),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Use the conventional `β^i` bias correction instead of the `(1 − β)^i`
    /// schedule.
    pub standard_bias_correction: bool,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            alpha: 0.002,
            beta1: 0.95,
            beta2: 0.995,
            epsilon: 1e-8,
            standard_bias_correction: false,
        }
    }
}

/// Default memory budget for GM-ELS line-search intermediates (4 GiB).
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub k: usize,
    pub max_iterations: usize,
    pub mse_stop: f64,
    pub delta_stop: f64,
    pub seed: u64,
    pub adam: AdamParams,
    pub bcd_inner_iterations: usize,
    pub trace_stride: usize,
    pub memory_budget_bytes: u64,
}

impl SolverConfig {
    pub fn new(method: Method, k: usize) -> Self {
        SolverConfig {
            method,
            k,
            max_iterations: method.default_max_iterations(),
            mse_stop: 1e-2,
            delta_stop: 1e-10,
            seed: 0,
            adam: AdamParams::default(),
            bcd_inner_iterations: 10,
            trace_stride: 1,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        if self.trace_stride == 0 {
            return Err(Error::InvalidArgument("trace_stride must be positive".into()));
        }
        if self.bcd_inner_iterations == 0 {
            return Err(Error::InvalidArgument(
                "bcd_inner_iterations must be positive".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn expect_method(&self, method: Method) -> Result<()> {
        if self.method != method {
            return Err(Error::InvalidArgument(format!(
                "configuration is for {}, not {method}",
                self.method
            )));
        }
        self.validate()
    }
}

/// `G S_i Gᵀ` for native factors.
pub(crate) fn reconstruct(g: &Matrix, s: &Matrix) -> Matrix {
    g.dot(s).dot(&g.t())
}

/// Square error `Σ_i ‖R_i − G S_i Gᵀ‖²` of a native factorization.
pub fn se(bundle: &DataBundle, fact: &Factorization) -> Result<f64> {
    fact.expect_coords(Coords::Native)?;
    fact.check_dims(bundle)?;
    Ok(se_unchecked(bundle, &fact.g, &fact.s))
}

pub(crate) fn se_unchecked(bundle: &DataBundle, g: &Matrix, s: &[Matrix]) -> f64 {
    bundle
        .matrices()
        .iter()
        .zip(s)
        .map(|(r, si)| {
            let mut z = reconstruct(g, si);
            z.zip_mut_with(r, |t, &rv| *t = rv - *t);
            linalg::frob_sq(&z)
        })
        .sum()
}

/// SE from `k × k` quantities only, given `x_i = R_i g`:
/// `Σ_i ‖R_i‖² − 2⟨Gᵀ X_i, S_i⟩ + tr(S_i A S_i A)`, clamped at zero.
pub(crate) fn se_from_products(norms_sq: &[f64], g: &Matrix, s: &[Matrix], x: &[Matrix]) -> f64 {
    let a = g.t().dot(g);
    let se: f64 = norms_sq
        .iter()
        .zip(s)
        .zip(x)
        .map(|((&rr, si), xi)| {
            let sa = si.dot(&a);
            rr - 2.0 * linalg::inner(&g.t().dot(xi), si) + linalg::trace_of_product(&sa, &sa)
        })
        .sum();
    se.max(0.0)
}

/// `se / Σ_i ‖R_i‖²`. Transformed factorizations are mapped to native first.
pub fn mse(bundle: &DataBundle, fact: &Factorization) -> Result<f64> {
    if bundle.norm_sq_total() == 0.0 {
        return Err(Error::DegenerateBundle);
    }
    let native;
    let f = if fact.coords == Coords::Native {
        fact
    } else {
        native = fact.to_native();
        &native
    };
    Ok(se(bundle, f)? / bundle.norm_sq_total())
}

/// `Z_i = R_i − f(G̃) f(S̃_i) f(G̃)ᵀ` for every `i`.
pub fn residuals(
    bundle: &DataBundle,
    fact: &Factorization,
    transform: TransformKind,
) -> Result<Vec<Matrix>> {
    fact.expect_coords(transform.coords())?;
    fact.check_dims(bundle)?;
    let fg = transform.apply(&fact.g);
    Ok(bundle
        .matrices()
        .iter()
        .zip(&fact.s)
        .map(|(r, s)| {
            let mut z = reconstruct(&fg, &transform.apply(s));
            z.zip_mut_with(r, |t, &rv| *t = rv - *t);
            z
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, k: usize) -> Matrix {
        let mut m = Array2::from_shape_fn((k, k), |_| rng.gen::<f64>());
        linalg::symmetrize(&mut m);
        m
    }

    fn random_bundle(rng: &mut ChaCha8Rng, n: usize, count: usize) -> DataBundle {
        let ms = (0..count).map(|_| random_sym(rng, n)).collect();
        DataBundle::new("random", ms).unwrap()
    }

    /// Element-wise triple loop, independent of the matmul path.
    fn se_oracle(bundle: &DataBundle, g: &Matrix, s: &[Matrix]) -> f64 {
        let n = g.nrows();
        let k = g.ncols();
        let mut total = 0.0;
        for (r, si) in bundle.matrices().iter().zip(s) {
            for a in 0..n {
                for b in 0..n {
                    let mut rec = 0.0;
                    for p in 0..k {
                        for q in 0..k {
                            rec += g[[a, p]] * si[[p, q]] * g[[b, q]];
                        }
                    }
                    let d = r[[a, b]] - rec;
                    total += d * d;
                }
            }
        }
        total
    }

    #[test]
    fn zero_factors_give_data_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_bundle(&mut rng, 5, 3);
        let f = Factorization::native(linalg::zeros(5, 2), vec![linalg::zeros(2, 2); 3]).unwrap();
        assert_eq!(se(&b, &f).unwrap(), b.norm_sq_total());
        assert_eq!(mse(&b, &f).unwrap(), 1.0);
    }

    #[test]
    fn exact_planted_factorization_has_zero_error() {
        let g = array![[1.0, 0.0], [0.5, 0.0], [0.0, 2.0]];
        let s = vec![array![[1.0, 0.5], [0.5, 3.0]], array![[0.0, 1.0], [1.0, 0.0]]];
        let r = s.iter().map(|si| reconstruct(&g, si)).collect();
        let b = DataBundle::new("planted", r).unwrap();
        let f = Factorization::native(g, s).unwrap();
        assert_eq!(se(&b, &f).unwrap(), 0.0);
        assert_eq!(mse(&b, &f).unwrap(), 0.0);
        for z in residuals(&b, &f, TransformKind::Identity).unwrap() {
            assert!(z.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn se_matches_triple_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = random_bundle(&mut rng, 6, 2);
        let g = Array2::from_shape_fn((6, 2), |_| rng.gen::<f64>());
        let s: Vec<Matrix> = (0..2).map(|_| random_sym(&mut rng, 2)).collect();
        let expected = se_oracle(&b, &g, &s);
        let got = se(&b, &Factorization::native(g, s).unwrap()).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected, "{got} vs {expected}");
    }

    #[test]
    fn residual_norms_sum_to_se() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_bundle(&mut rng, 7, 3);
        let g = Array2::from_shape_fn((7, 3), |_| rng.gen::<f64>());
        let s: Vec<Matrix> = (0..3).map(|_| random_sym(&mut rng, 3)).collect();
        let f = Factorization::native(g, s).unwrap();
        let direct = se(&b, &f).unwrap();
        let via: f64 = residuals(&b, &f, TransformKind::Identity)
            .unwrap()
            .iter()
            .map(linalg::frob_sq)
            .sum();
        assert!((direct - via).abs() <= 1e-12 * direct);
        for z in residuals(&b, &f, TransformKind::Identity).unwrap() {
            assert!(linalg::max_asymmetry(&z).0 <= 1e-12 * linalg::max_abs(&z));
        }
    }

    #[test]
    fn square_transform_residual_with_all_ones_g() {
        // f(G̃) = 1 (3x2 of ones): Z = R − 1 S 1ᵀ, each entry R_ab − Σ_pq S_pq.
        let r = array![[4.0, 1.0, 2.0], [1.0, 5.0, 0.0], [2.0, 0.0, 6.0]];
        let b = DataBundle::new("3x3", vec![r.clone()]).unwrap();
        let s_tilde = array![[1.0, 0.5], [0.5, 2.0]];
        let f = Factorization::new(
            Array2::from_elem((3, 2), 1.0),
            vec![s_tilde],
            Coords::TransformedSquare,
        )
        .unwrap();
        // f(S̃) = [[1, .25], [.25, 4]] sums to 5.5
        let z = &residuals(&b, &f, TransformKind::Square).unwrap()[0];
        for a in 0..3 {
            for c in 0..3 {
                assert_eq!(z[[a, c]], r[[a, c]] - 5.5);
            }
        }
    }

    #[test]
    fn mse_invariant_under_joint_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = random_bundle(&mut rng, 6, 2);
        let g = Array2::from_shape_fn((6, 2), |_| rng.gen::<f64>());
        let s: Vec<Matrix> = (0..2).map(|_| random_sym(&mut rng, 2)).collect();
        let base = mse(&b, &Factorization::native(g.clone(), s.clone()).unwrap()).unwrap();
        for c in [0.01, 3.0, 1e4] {
            let bs = b.scaled(c).unwrap();
            let ss = s.iter().map(|m| m * c).collect();
            let scaled = mse(&bs, &Factorization::native(g.clone(), ss).unwrap()).unwrap();
            assert!((scaled - base).abs() <= 1e-10 * base);
        }
    }

    #[test]
    fn all_zero_bundle_has_no_mse() {
        let b = DataBundle::new("zero", vec![linalg::zeros(3, 3)]).unwrap();
        let f = Factorization::native(linalg::zeros(3, 1), vec![linalg::zeros(1, 1)]).unwrap();
        assert!(matches!(mse(&b, &f), Err(Error::DegenerateBundle)));
    }

    #[test]
    fn dimension_mismatch_names_offender() {
        let b = DataBundle::new("b", vec![linalg::zeros(3, 3), linalg::zeros(3, 3)]).unwrap();
        let f = Factorization::native(linalg::zeros(4, 1), vec![linalg::zeros(1, 1); 2]).unwrap();
        assert!(matches!(se(&b, &f), Err(Error::Dimension(_))));
        let err = Factorization::native(linalg::zeros(3, 2), vec![linalg::zeros(2, 2), linalg::zeros(3, 3)])
            .unwrap_err();
        assert!(err.to_string().contains("S_2"));
    }

    #[test]
    fn ingestion_rejects_bad_matrices() {
        let neg = array![[1.0, -0.1], [-0.1, 1.0]];
        let err = DataBundle::new("neg", vec![neg]).unwrap_err().to_string();
        assert!(err.contains("R_1") && err.contains("negative"));

        let asym = array![[1.0, 0.5], [0.5 + 1e-6, 1.0]];
        assert!(DataBundle::new("asym", vec![asym.clone()]).is_err());
        let fixed = DataBundle::new_symmetrized("asym", vec![asym]).unwrap();
        assert_eq!(fixed.matrix(0)[[0, 1]], fixed.matrix(0)[[1, 0]]);

        let rect = linalg::zeros(2, 3);
        assert!(DataBundle::new("rect", vec![rect]).is_err());
        assert!(DataBundle::new("mixed", vec![linalg::zeros(2, 2), linalg::zeros(3, 3)]).is_err());
    }

    #[test]
    fn config_defaults_follow_method() {
        assert_eq!(SolverConfig::new(Method::Fpm, 3).max_iterations, 4000);
        assert_eq!(SolverConfig::new(Method::Bcd, 3).max_iterations, 300);
        assert_eq!(SolverConfig::new(Method::Gmels, 3).max_iterations, 1000);
        let adam = SolverConfig::new(Method::Adam, 3);
        assert_eq!(adam.max_iterations, 3000);
        assert_eq!(adam.adam.alpha, 0.002);
        assert_eq!(adam.adam.beta1, 0.95);
        assert_eq!(adam.adam.beta2, 0.995);
        assert_eq!(adam.adam.epsilon, 1e-8);
        assert_eq!(adam.mse_stop, 1e-2);
        assert_eq!(adam.delta_stop, 1e-10);
    }
}
