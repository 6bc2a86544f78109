//! Fixed-point iteration by multiplicative updates.
//!
//! ```text
//! G   ← G   ⊙ √( Σ_i R_i G S_i ⊘ (Σ_i G S_i Gᵀ G S_i + eps) )
//! S_i ← S_i ⊙ √( Gᵀ R_i G      ⊘ (Gᵀ G S_i Gᵀ G     + eps) )
//! ```
//!
//! `G` is updated first and every `S_i` then uses the new `G`. Zero entries
//! stay zero.

use crate::error::Result;
use crate::gradients;
use crate::linalg;
use crate::model::{self, Coords, DataBundle, Factorization, Matrix, Method, SolverConfig};
use crate::monitor::Monitor;
use crate::solver::Solution;

/// Added to every denominator entry.
pub const EPS: f64 = f64::EPSILON;

fn multiplicative(x: &Matrix, num: &Matrix, den: &Matrix) -> Matrix {
    let mut out = x.clone();
    ndarray::Zip::from(&mut out)
        .and(num)
        .and(den)
        .for_each(|o, &n, &d| *o *= (n / (d + EPS)).sqrt());
    out
}

fn g_update(g: &Matrix, s: &[Matrix], x: &[Matrix]) -> Matrix {
    let (n, k) = g.dim();
    let a = g.t().dot(g);
    let mut num = linalg::zeros(n, k);
    let mut core = linalg::zeros(k, k);
    for (si, xi) in s.iter().zip(x) {
        num += &xi.dot(si);
        core += &si.dot(&a).dot(si);
    }
    multiplicative(g, &num, &g.dot(&core))
}

fn s_update(g: &Matrix, a: &Matrix, si: &Matrix, xi: &Matrix) -> Matrix {
    let mut num = g.t().dot(xi);
    linalg::symmetrize(&mut num);
    let mut den = linalg::sandwich(a, si);
    linalg::symmetrize(&mut den);
    multiplicative(si, &num, &den)
}

/// One multiplicative update of `G`.
pub fn fpm_step_g(bundle: &DataBundle, fact: &Factorization) -> Result<Matrix> {
    fact.expect_coords(Coords::Native)?;
    fact.check_dims(bundle)?;
    let x = gradients::data_products(bundle, &fact.g);
    Ok(g_update(&fact.g, &fact.s, &x))
}

/// One multiplicative update of `S_i` (0-based `i`).
pub fn fpm_step_s(bundle: &DataBundle, fact: &Factorization, i: usize) -> Result<Matrix> {
    fact.expect_coords(Coords::Native)?;
    fact.check_dims(bundle)?;
    if i >= bundle.count() {
        return Err(crate::Error::InvalidArgument(format!(
            "matrix index {i} out of range for {} matrices",
            bundle.count()
        )));
    }
    let xi = bundle.matrix(i).dot(&fact.g);
    let a = fact.g.t().dot(&fact.g);
    Ok(s_update(&fact.g, &a, &fact.s[i], &xi))
}

pub fn fpm_solve(bundle: &DataBundle, config: &SolverConfig, start: &Factorization) -> Result<Solution> {
    config.expect_method(Method::Fpm)?;
    start.expect_coords(Coords::Native)?;
    start.check_dims(bundle)?;
    let mut g = start.g.clone();
    let mut s = start.s.clone();
    let mut x = gradients::data_products(bundle, &g);
    let initial = model::se_from_products(bundle.norms_sq(), &g, &s, &x);
    let mut monitor = Monitor::start(bundle, config, initial)?;
    let mut iteration = 0;
    loop {
        iteration += 1;
        g = g_update(&g, &s, &x);
        x = gradients::data_products(bundle, &g);
        let a = g.t().dot(&g);
        for (si, xi) in s.iter_mut().zip(&x) {
            *si = s_update(&g, &a, si, xi);
        }
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
