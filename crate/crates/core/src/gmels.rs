//! Gradient method with exact line search on the square-transformed
//! objective `Σ_i ‖R_i − (G̃⊙G̃)(S̃_i⊙S̃_i)(G̃⊙G̃)ᵀ‖²`.
//!
//! Along `X + t D` with `D = −∇`, every square is a quadratic in `t`:
//! `(G̃ + t D_G)² = a0 + t a1 + t² a2`, and likewise `s0, s1, s2` for `S̃_i`.
//! The residual is then `Σ_{m=0}^{6} A_m tᵐ` and the objective a degree-12
//! polynomial whose coefficients are `c_j = Σ_i Σ_r ⟨A_r, A_{j−r}⟩`.

use crate::error::{Error, Result};
use crate::gradients::{self, Gradient, TransformKind};
use crate::linalg;
use crate::model::{self, Coords, DataBundle, Factorization, Matrix, Method, SolverConfig};
use crate::monitor::Monitor;
use crate::poly::LinePolynomial;
use crate::solver::Solution;

/// Number of `n × n` intermediates per data matrix.
const A_MATRICES: u64 = 7;

/// Bytes the `A` matrices of one line search occupy: `7 · N · n²` doubles.
pub fn line_search_bytes(n: usize, count: usize) -> u64 {
    A_MATRICES * count as u64 * (n as u64) * (n as u64) * 8
}

/// Fails with [`Error::MemoryBudget`] when the line search would not fit in
/// `config.memory_budget_bytes`.
pub fn check_memory(bundle: &DataBundle, config: &SolverConfig) -> Result<()> {
    let required = line_search_bytes(bundle.order(), bundle.count());
    if required > config.memory_budget_bytes {
        return Err(Error::MemoryBudget {
            required,
            budget: config.memory_budget_bytes,
        });
    }
    Ok(())
}

/// `[x², 2 x ⊙ d, d²]`.
fn square_terms(x: &Matrix, d: &Matrix) -> [Matrix; 3] {
    [
        x * x,
        linalg::hadamard(x, d) * 2.0,
        d * d,
    ]
}

/// Step polynomial along `X + t D` in square coordinates.
///
/// `dir` is the step direction itself; pass the negated gradient for a
/// descent step.
pub fn line_poly_coeffs(bundle: &DataBundle, fact: &Factorization, dir: &Gradient) -> Result<LinePolynomial> {
    fact.expect_coords(Coords::TransformedSquare)?;
    fact.check_dims(bundle)?;
    if dir.g.dim() != fact.g.dim() || dir.s.len() != fact.s.len() {
        return Err(Error::Dimension("direction does not match the factorization".into()));
    }
    for (i, (d, s)) in dir.s.iter().zip(&fact.s).enumerate() {
        if d.dim() != s.dim() {
            return Err(Error::Dimension(format!("direction for S_{} has the wrong shape", i + 1)));
        }
    }
    Ok(poly_unchecked(bundle, &fact.g, &fact.s, dir))
}

fn poly_unchecked(bundle: &DataBundle, g: &Matrix, s: &[Matrix], dir: &Gradient) -> LinePolynomial {
    let a = square_terms(g, &dir.g);
    let at: Vec<Matrix> = a.iter().map(|m| m.t().to_owned()).collect();
    let mut c = vec![0.0; 13];
    for ((r, si), di) in bundle.matrices().iter().zip(s).zip(&dir.s) {
        let sq = square_terms(si, di);
        // T_m = Σ_{p+q=m} a_p s_q, m = 0..4
        let t: Vec<Matrix> = (0..5)
            .map(|m| {
                let mut acc = linalg::zeros(g.nrows(), g.ncols());
                for p in 0..3 {
                    if m >= p && m - p < 3 {
                        acc += &a[p].dot(&sq[m - p]);
                    }
                }
                acc
            })
            .collect();
        // A_m = −Σ_{q+r=m} T_q a_rᵀ, with R added to A_0.
        let am: Vec<Matrix> = (0..7)
            .map(|m| {
                let mut acc = if m == 0 { -r } else { linalg::zeros(r.nrows(), r.ncols()) };
                for (rr, art) in at.iter().enumerate() {
                    if m >= rr && m - rr < 5 {
                        acc += &t[m - rr].dot(art);
                    }
                }
                -acc
            })
            .collect();
        for p in 0..7 {
            c[2 * p] += linalg::frob_sq(&am[p]);
            for q in p + 1..7 {
                c[p + q] += 2.0 * linalg::inner(&am[p], &am[q]);
            }
        }
    }
    LinePolynomial::new(c)
}

pub fn gmels_solve(bundle: &DataBundle, config: &SolverConfig, start: &Factorization) -> Result<Solution> {
    config.expect_method(Method::Gmels)?;
    start.expect_coords(Coords::TransformedSquare)?;
    start.check_dims(bundle)?;
    check_memory(bundle, config)?;
    let sq = TransformKind::Square;
    let mut g = start.g.clone();
    let mut s = start.s.clone();
    let native_se = |g: &Matrix, s: &[Matrix]| {
        let fs: Vec<Matrix> = s.iter().map(|m| sq.apply(m)).collect();
        model::se_unchecked(bundle, &sq.apply(g), &fs)
    };
    let mut se = native_se(&g, &s);
    let mut monitor = Monitor::start(bundle, config, se)?;
    let mut iteration = 0;
    loop {
        iteration += 1;
        let grad = gradients::transformed_unchecked(bundle, &g, &s, sq);
        if !grad.is_finite() {
            return Err(monitor.abort(iteration));
        }
        let dir = Gradient {
            g: -&grad.g,
            s: grad.s.iter().map(|d| -d).collect(),
        };
        let t = poly_unchecked(bundle, &g, &s, &dir).minimize();
        if t != 0.0 {
            let mut g_new = g.clone();
            g_new.scaled_add(t, &dir.g);
            let mut s_new = s.clone();
            for (sn, d) in s_new.iter_mut().zip(&dir.s) {
                sn.scaled_add(t, d);
            }
            let se_new = native_se(&g_new, &s_new);
            // Rounding in the coefficients can leave a tiny step that does
            // not actually descend; such a step is rejected.
            if se_new <= se || !se_new.is_finite() {
                g = g_new;
                s = s_new;
                se = se_new;
            }
        }
        if monitor.observe(iteration, se)?.is_some() {
            break;
        }
    }
    Ok(Solution {
        factorization: Factorization::new(g, s, Coords::TransformedSquare)?.to_native(),
        trace: monitor.finish(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reconstruct;
    use nalgebra::{DMatrix, DVector};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, k: usize, lo: f64) -> Matrix {
        let mut m = Array2::from_shape_fn((k, k), |_| rng.gen_range(lo..1.0));
        linalg::symmetrize(&mut m);
        m
    }

    fn instance(seed: u64, n: usize, k: usize, count: usize) -> (DataBundle, Factorization, Gradient) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = (0..count).map(|_| random_sym(&mut rng, n, 0.0)).collect();
        let b = DataBundle::new("g", r).unwrap();
        let g = Array2::from_shape_fn((n, k), |_| rng.gen_range(-1.0..1.0));
        let s = (0..count).map(|_| random_sym(&mut rng, k, -1.0)).collect();
        let f = Factorization::new(g, s, Coords::TransformedSquare).unwrap();
        let dir = Gradient {
            g: Array2::from_shape_fn((n, k), |_| rng.gen_range(-1.0..1.0)),
            s: (0..count).map(|_| random_sym(&mut rng, k, -1.0)).collect(),
        };
        (b, f, dir)
    }

    fn se_at(b: &DataBundle, f: &Factorization, dir: &Gradient, t: f64) -> f64 {
        let sqr = |m: &Matrix| m.mapv(|v| v * v);
        let mut g = f.g.clone();
        g.scaled_add(t, &dir.g);
        let g = sqr(&g);
        b.matrices()
            .iter()
            .zip(&f.s)
            .zip(&dir.s)
            .map(|((r, s), d)| {
                let mut st = s.clone();
                st.scaled_add(t, d);
                linalg::frob_sq(&(r - &reconstruct(&g, &sqr(&st))))
            })
            .sum()
    }

    #[test]
    fn zero_direction_is_constant() {
        let (b, f, mut dir) = instance(1, 6, 2, 2);
        dir.g.fill(0.0);
        dir.s.iter_mut().for_each(|d| d.fill(0.0));
        let p = line_poly_coeffs(&b, &f, &dir).unwrap();
        let se0 = se_at(&b, &f, &dir, 0.0);
        assert!((p.coeffs[0] - se0).abs() <= 1e-12 * se0);
        assert!(p.coeffs[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn leading_coefficient_is_pure_direction_term() {
        let (b, f, dir) = instance(2, 6, 2, 2);
        let p = line_poly_coeffs(&b, &f, &dir).unwrap();
        let d2 = dir.g.mapv(|v| v * v);
        let expected: f64 = dir
            .s
            .iter()
            .map(|d| linalg::frob_sq(&reconstruct(&d2, &d.mapv(|v| v * v))))
            .sum();
        assert!((p.coeffs[12] - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn coefficients_match_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..10 {
            let (b, f, dir) = instance(10 + seed, 6, 2, 2);
            let p = line_poly_coeffs(&b, &f, &dir).unwrap();
            for _ in 0..20 {
                let t = rng.gen_range(-1.0..1.0);
                let direct = se_at(&b, &f, &dir, t);
                assert!((p.eval(t) - direct).abs() <= 1e-8 * direct, "t = {t}");
            }
        }
    }

    #[test]
    fn coefficients_match_vandermonde_interpolation() {
        let (b, f, dir) = instance(7, 6, 2, 2);
        let p = line_poly_coeffs(&b, &f, &dir).unwrap();
        let nodes: Vec<f64> = (-6..=6).map(|j| 0.1 * j as f64).collect();
        let v = DMatrix::from_fn(13, 13, |i, j| nodes[i].powi(j as i32));
        let y = DVector::from_iterator(13, nodes.iter().map(|&t| se_at(&b, &f, &dir, t)));
        let c = v.lu().solve(&y).unwrap();
        for j in 0..13 {
            let scale = c[j].abs().max(p.coeffs[j].abs()).max(1e-300);
            assert!((c[j] - p.coeffs[j]).abs() <= 1e-6 * scale, "c{j}: {} vs {}", c[j], p.coeffs[j]);
        }
    }

    #[test]
    fn se_never_increases() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = (0..2).map(|_| random_sym(&mut rng, 10, 0.0)).collect();
            let b = DataBundle::new("m", r).unwrap();
            let start = crate::init::lift_to_transformed(
                &crate::init::random_init(10, 3, 2, seed),
                TransformKind::Square,
            )
            .unwrap();
            let mut cfg = SolverConfig::new(Method::Gmels, 3);
            cfg.max_iterations = 60;
            cfg.mse_stop = 0.0;
            let sol = gmels_solve(&b, &cfg, &start).unwrap();
            for w in sol.trace.records.windows(2) {
                assert!(w[1].se <= w[0].se * (1.0 + 1e-12));
            }
            assert_eq!(sol.factorization.coords, Coords::Native);
            assert!(sol.factorization.g.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn memory_guard() {
        let (b, f, _) = instance(3, 6, 2, 2);
        let mut cfg = SolverConfig::new(Method::Gmels, 2);
        cfg.memory_budget_bytes = line_search_bytes(6, 2) - 1;
        assert!(matches!(gmels_solve(&b, &cfg, &f), Err(Error::MemoryBudget { .. })));
        assert_eq!(line_search_bytes(2000, 5), 7 * 5 * 2000 * 2000 * 8);
    }
}
