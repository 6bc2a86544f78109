//! Two-block coordinate descent.
//!
//! Each outer iteration runs `bcd_inner_iterations` projected-gradient steps
//! on the `S` block (N independent convex quadratics, closed-form step) and
//! then on the `G` block, where the step minimises the exact quartic
//! `p(t) = Σ_i ‖R_i − (G + t dG) S_i (G + t dG)ᵀ‖²` over `t ∈ [−1, 0]`.
//!
//! All line-search quantities are evaluated in the `k × k` space from
//! `X_i = R_i G` and `Y_i = R_i dG`; no `n × n` residual is formed.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gradients;
use crate::linalg::{self, trace_of_product};
use crate::model::{self, Coords, DataBundle, Factorization, Matrix, Method, SolverConfig};
use crate::monitor::Monitor;
use crate::poly::LinePolynomial;
use crate::solver::Solution;

/// Size of the uniform perturbation added when the `G` step stalls.
pub const PERTURBATION: f64 = 1e-5;
/// A `G` step is a stall when it decreases `p` by less than this.
pub const STALL_DECREASE: f64 = 1e-3;

/// Stream offset separating the perturbation generator from other uses of
/// the run seed.
const PERTURBATION_STREAM: u64 = 0x6263_645f_7065_7274;

/// `p(t) = Σ_j coeffs[j] t^j` along `G + t dG`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticLine {
    pub coeffs: [f64; 5],
}

impl QuarticLine {
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn polynomial(&self) -> LinePolynomial {
        LinePolynomial::new(self.coeffs.to_vec())
    }

    /// Minimiser over `[lo, hi]`.
    pub fn minimize_on(&self, lo: f64, hi: f64) -> f64 {
        self.polynomial().minimize_on(lo, hi)
    }
}

/// Quartic coefficients of SE along `G + t dG` for a native factorization.
pub fn quartic_coeffs(bundle: &DataBundle, fact: &Factorization, dg: &Matrix) -> Result<QuarticLine> {
    fact.expect_coords(Coords::Native)?;
    fact.check_dims(bundle)?;
    if dg.dim() != fact.g.dim() {
        return Err(Error::Dimension(format!(
            "direction is {}x{}, G is {}x{}",
            dg.nrows(),
            dg.ncols(),
            fact.g.nrows(),
            fact.g.ncols()
        )));
    }
    let x = gradients::data_products(bundle, &fact.g);
    let y = gradients::data_products(bundle, dg);
    Ok(quartic_from_products(bundle.norms_sq(), &fact.g, &fact.s, dg, &x, &y))
}

/// With `Z = R − G S Gᵀ`, `P = dG S Gᵀ + G S dGᵀ`, `Q = dG S dGᵀ`:
/// `c0 = ‖Z‖²`, `c1 = −2⟨Z,P⟩`, `c2 = ‖P‖² − 2⟨Z,Q⟩`, `c3 = 2⟨P,Q⟩`,
/// `c4 = ‖Q‖²`, summed over `i`. Inputs: `x_i = R_i G`, `y_i = R_i dG`.
pub(crate) fn quartic_from_products(
    norms_sq: &[f64],
    g: &Matrix,
    s: &[Matrix],
    dg: &Matrix,
    x: &[Matrix],
    y: &[Matrix],
) -> QuarticLine {
    let a = g.t().dot(g);
    let b = g.t().dot(dg);
    let bt = b.t().to_owned();
    let c = dg.t().dot(dg);
    let mut coeffs = [0.0; 5];
    for (((si, xi), yi), &rr) in s.iter().zip(x).zip(y).zip(norms_sq) {
        let u = g.t().dot(xi); // Gᵀ R G
        let v = dg.t().dot(xi); // dGᵀ R G
        let w = dg.t().dot(yi); // dGᵀ R dG
        let sa = si.dot(&a);
        let sb = si.dot(&b);
        let sbt = si.dot(&bt);
        let sc = si.dot(&c);

        let r_t = linalg::inner(&u, si);
        let r_p = 2.0 * linalg::inner(&v, si);
        let r_q = linalg::inner(&w, si);
        let t_t = trace_of_product(&sa, &sa);
        let t_p = 2.0 * trace_of_product(&sb, &sa);
        let t_q = trace_of_product(&sb, &sbt);
        let p_p = 2.0 * trace_of_product(&sc, &sa) + 2.0 * trace_of_product(&sbt, &sbt);
        let p_q = 2.0 * trace_of_product(&sc, &sbt);
        let q_q = trace_of_product(&sc, &sc);

        coeffs[0] += rr - 2.0 * r_t + t_t;
        coeffs[1] += -2.0 * (r_p - t_p);
        coeffs[2] += p_p - 2.0 * (r_q - t_q);
        coeffs[3] += 2.0 * p_q;
        coeffs[4] += q_q;
    }
    QuarticLine { coeffs }
}

/// Outcome of one projected-gradient step on `G`.
#[derive(Debug, Clone)]
pub struct GStep {
    pub direction: Matrix,
    pub line: QuarticLine,
    pub t: f64,
    pub perturbed: bool,
    pub g_new: Matrix,
}

/// One projected-gradient step on `G` with exact line search over `[−1, 0]`.
pub fn linesearch_g(bundle: &DataBundle, fact: &Factorization, rng: &mut impl Rng) -> Result<Matrix> {
    Ok(linesearch_g_detailed(bundle, fact, rng)?.g_new)
}

pub fn linesearch_g_detailed(
    bundle: &DataBundle,
    fact: &Factorization,
    rng: &mut impl Rng,
) -> Result<GStep> {
    fact.expect_coords(Coords::Native)?;
    fact.check_dims(bundle)?;
    let x = gradients::data_products(bundle, &fact.g);
    Ok(g_step(bundle, &fact.g, &fact.s, &x, rng))
}

fn g_step(bundle: &DataBundle, g: &Matrix, s: &[Matrix], x: &[Matrix], rng: &mut impl Rng) -> GStep {
    g_step_with_products(bundle, g, s, x, rng).0
}

/// Also returns `R_i dG` for updating the data products.
fn g_step_with_products(
    bundle: &DataBundle,
    g: &Matrix,
    s: &[Matrix],
    x: &[Matrix],
    rng: &mut impl Rng,
) -> (GStep, Vec<Matrix>) {
    let a = g.t().dot(g);
    let dg = gradients::native_g_from_products(g, s, x, &a);
    let y = gradients::data_products(bundle, &dg);
    let line = quartic_from_products(bundle.norms_sq(), g, s, &dg, x, &y);
    let t = line.minimize_on(-1.0, 0.0);
    let perturbed = t == 0.0 || line.eval(t) - line.eval(0.0) > -STALL_DECREASE;
    let mut g_new = g.clone();
    g_new.scaled_add(t, &dg);
    if perturbed {
        g_new.mapv_inplace(|v| v + PERTURBATION * rng.sample::<f64, _>(Open01));
    }
    linalg::project_nonneg(&mut g_new);
    let step = GStep {
        direction: dg,
        line,
        t,
        perturbed,
        g_new,
    };
    (step, y)
}

/// `R_i G_new` from `x_i = R_i G` and `y_i = R_i dG` when
/// `G_new = G + t dG + E`. Sparse corrections `E` (projection only) are
/// applied column by column; dense ones fall back to full products.
fn advance_products(bundle: &DataBundle, g: &Matrix, dg: &Matrix, t: f64, g_new: &Matrix, x: &mut [Matrix], y: &[Matrix]) {
    let mut e = g_new - g;
    e.scaled_add(-t, dg);
    let nonzero: Vec<((usize, usize), f64)> = e
        .indexed_iter()
        .filter(|(_, &v)| v != 0.0)
        .map(|(ij, &v)| (ij, v))
        .collect();
    if nonzero.len() * 4 > e.len() {
        for (xi, r) in x.iter_mut().zip(bundle.matrices()) {
            *xi = r.dot(g_new);
        }
        return;
    }
    for ((xi, yi), r) in x.iter_mut().zip(y).zip(bundle.matrices()) {
        xi.scaled_add(t, yi);
        for &((row, col), v) in &nonzero {
            // R is symmetric, so its row `row` is also its column.
            xi.column_mut(col).scaled_add(v, &r.row(row));
        }
    }
}

/// Outcome of one projected-gradient step on `S_i`.
#[derive(Debug, Clone)]
pub struct SStep {
    pub direction: Matrix,
    /// `None` when `‖G dS_i Gᵀ‖ = 0` and the step was skipped.
    pub t: Option<f64>,
    pub s_new: Matrix,
}

/// One projected-gradient step on `S_i` with the closed-form exact step.
pub fn linesearch_s(bundle: &DataBundle, fact: &Factorization, i: usize) -> Result<Matrix> {
    Ok(linesearch_s_detailed(bundle, fact, i)?.s_new)
}

pub fn linesearch_s_detailed(bundle: &DataBundle, fact: &Factorization, i: usize) -> Result<SStep> {
    fact.expect_coords(Coords::Native)?;
    fact.check_dims(bundle)?;
    if i >= bundle.count() {
        return Err(Error::InvalidArgument(format!(
            "matrix index {i} out of range for {} matrices",
            bundle.count()
        )));
    }
    let g = &fact.g;
    let u = g.t().dot(&bundle.matrix(i).dot(g));
    let a = g.t().dot(g);
    Ok(s_step(&u, &a, &fact.s[i]))
}

/// `u = Gᵀ R_i G`, `a = Gᵀ G`. With `dS = 2 (A S A − U)` the exact step is
/// `t = ⟨U − A S A, dS⟩ / ⟨A dS A, dS⟩`.
fn s_step(u: &Matrix, a: &Matrix, s: &Matrix) -> SStep {
    let mut gram_resid = u - &linalg::sandwich(a, s);
    linalg::symmetrize(&mut gram_resid);
    let direction = &gram_resid * -2.0;
    let num = linalg::inner(&gram_resid, &direction);
    let den = linalg::inner(&linalg::sandwich(a, &direction), &direction);
    if den <= 0.0 || !den.is_finite() {
        return SStep {
            direction,
            t: None,
            s_new: s.clone(),
        };
    }
    let t = num / den;
    let mut s_new = s.clone();
    s_new.scaled_add(t, &direction);
    linalg::project_nonneg(&mut s_new);
    SStep {
        direction,
        t: Some(t),
        s_new,
    }
}

/// `iterations` sweeps of projected-gradient steps on every `S_i` for fixed
/// `G` (`x_i = R_i G`, `a = Gᵀ G`).
pub(crate) fn s_block(x: &[Matrix], g: &Matrix, a: &Matrix, s: &mut [Matrix], iterations: usize) {
    for (si, xi) in s.iter_mut().zip(x) {
        let mut u = g.t().dot(xi);
        linalg::symmetrize(&mut u);
        for _ in 0..iterations {
            let step = s_step(&u, a, si);
            if step.t.is_none() {
                break;
            }
            *si = step.s_new;
        }
    }
}

/// Runs the coordinate descent from a native starting point.
pub fn bcd_solve(bundle: &DataBundle, config: &SolverConfig, start: &Factorization) -> Result<Solution> {
    config.expect_method(Method::Bcd)?;
    start.expect_coords(Coords::Native)?;
    start.check_dims(bundle)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ PERTURBATION_STREAM);
    let mut g = start.g.clone();
    let mut s = start.s.clone();
    let mut x = gradients::data_products(bundle, &g);
    let mut monitor = Monitor::start(bundle, config, model::se_unchecked(bundle, &g, &s))?;
    let mut iteration = 0;
    loop {
        iteration += 1;
        let a = g.t().dot(&g);
        s_block(&x, &g, &a, &mut s, config.bcd_inner_iterations);
        for _ in 0..config.bcd_inner_iterations {
            let (step, y) = g_step_with_products(bundle, &g, &s, &x, &mut rng);
            advance_products(bundle, &g, &step.direction, step.t, &step.g_new, &mut x, &y);
            g = step.g_new;
        }
        // Refresh the incrementally updated products once per outer
        // iteration so rounding cannot accumulate.
        x = gradients::data_products(bundle, &g);
        let se = model::se_from_products(bundle.norms_sq(), &g, &s, &x);
        if monitor.observe(iteration, se)?.is_some() {
            break;
        }
    }
    Ok(Solution {
        factorization: Factorization::native(g, s)?,
        trace: monitor.finish(),
    })
}

/// Convenience: BCD from a starting `G`, with the first `S` block computed by
/// [`crate::init::init_s_from_g`].
pub fn bcd_solve_from_g(bundle: &DataBundle, config: &SolverConfig, start_g: &Matrix) -> Result<Solution> {
    let s = crate::init::init_s_from_g(bundle, start_g, config.bcd_inner_iterations)?;
    bcd_solve(bundle, config, &Factorization::native(start_g.clone(), s)?)
}
