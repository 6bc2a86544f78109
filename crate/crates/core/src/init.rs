//! Starting points: spectral `G`, seeded random factors, the first `S` block
//! for BCD, and lifting native factors into transformed coordinates.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};
use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bcd;
use crate::error::{Error, Result};
use crate::gradients::{self, TransformKind};
use crate::linalg;
use crate::model::{Coords, DataBundle, Factorization, Matrix};

/// Above this order the Lanczos solver replaces the dense decomposition.
pub const DENSE_EIGEN_LIMIT: usize = 2000;

/// Value of the constant matrices the first `S` block starts from.
pub const INITIAL_S_VALUE: f64 = 0.5;

/// Added to a column of the spectral start that came out all zero.
const ZERO_COLUMN_FILL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenSolver {
    Dense,
    Lanczos,
}

/// The `k` eigenpairs of symmetric `m` with largest `|λ|`, ordered by
/// decreasing magnitude. Eigenvectors are the columns of the returned matrix.
pub fn largest_magnitude_eigenpairs(m: &Matrix, k: usize) -> Result<(Vec<f64>, Matrix)> {
    let solver = if m.nrows() <= DENSE_EIGEN_LIMIT {
        EigenSolver::Dense
    } else {
        EigenSolver::Lanczos
    };
    largest_magnitude_eigenpairs_with(m, k, solver)
}

pub fn largest_magnitude_eigenpairs_with(
    m: &Matrix,
    k: usize,
    solver: EigenSolver,
) -> Result<(Vec<f64>, Matrix)> {
    let n = m.nrows();
    if !m.is_square() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", n, m.ncols())));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    match solver {
        EigenSolver::Dense => dense_eigenpairs(m, k),
        EigenSolver::Lanczos => lanczos_eigenpairs(m, k),
    }
}

fn select_by_magnitude(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    order.truncate(k);
    order
}

fn dense_eigenpairs(m: &Matrix, k: usize) -> Result<(Vec<f64>, Matrix)> {
    let n = m.nrows();
    let dm = DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
    let eig = SymmetricEigen::try_new(dm, f64::EPSILON, 100 * n.max(10))
        .ok_or_else(|| Error::Eigen(format!("dense decomposition of order {n} did not converge")))?;
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = select_by_magnitude(&values, k);
    let vecs = Array2::from_shape_fn((n, k), |(r, c)| eig.eigenvectors[(r, order[c])]);
    Ok((order.iter().map(|&j| values[j]).collect(), vecs))
}

/// Lanczos with full reorthogonalisation, growing the Krylov dimension
/// until every wanted Ritz pair has a small residual.
fn lanczos_eigenpairs(m: &Matrix, k: usize) -> Result<(Vec<f64>, Matrix)> {
    let n = m.nrows();
    let mut dim = (2 * k + 20).max(40).min(n);
    loop {
        let (values, vectors, converged) = lanczos_run(m, k, dim)?;
        if converged || dim == n {
            return Ok((values, vectors));
        }
        dim = (2 * dim).min(n);
    }
}

fn lanczos_run(m: &Matrix, k: usize, dim: usize) -> Result<(Vec<f64>, Matrix, bool)> {
    let n = m.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_205e);
    let scale = linalg::max_abs(m).max(f64::MIN_POSITIVE) * n as f64;
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(dim);
    basis.push(random_unit_orthogonal(&mut rng, n, &basis));
    let mut alphas = Vec::with_capacity(dim);
    let mut betas = Vec::with_capacity(dim);
    let mut last_residual = 0.0;
    for j in 0..dim {
        let mut w = m.dot(&basis[j]);
        let alpha = w.dot(&basis[j]);
        for _ in 0..2 {
            for q in &basis {
                let c = w.dot(q);
                w.scaled_add(-c, q);
            }
        }
        alphas.push(alpha);
        let beta = w.dot(&w).sqrt();
        if j + 1 == dim {
            last_residual = beta;
            break;
        }
        if beta <= 1e-12 * scale {
            // Invariant subspace found; continue in a fresh orthogonal direction.
            betas.push(0.0);
            basis.push(random_unit_orthogonal(&mut rng, n, &basis));
        } else {
            betas.push(beta);
            basis.push(w / beta);
        }
    }
    let t = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::try_new(t, f64::EPSILON, 100 * dim.max(10))
        .ok_or_else(|| Error::Eigen(format!("tridiagonal problem of order {dim} did not converge")))?;
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = select_by_magnitude(&values, k);
    let top = values[order[0]].abs().max(f64::MIN_POSITIVE);
    let converged = order
        .iter()
        .all(|&c| (last_residual * eig.eigenvectors[(dim - 1, c)]).abs() <= 1e-10 * top);
    let mut vectors = Array2::zeros((n, k));
    for (col, &c) in order.iter().enumerate() {
        let mut v = Array1::zeros(n);
        for (j, q) in basis.iter().enumerate() {
            v.scaled_add(eig.eigenvectors[(j, c)], q);
        }
        let norm = v.dot(&v).sqrt();
        vectors.column_mut(col).assign(&(v / norm));
    }
    Ok((order.iter().map(|&c| values[c]).collect(), vectors, converged))
}

fn random_unit_orthogonal(rng: &mut ChaCha8Rng, n: usize, basis: &[Array1<f64>]) -> Array1<f64> {
    loop {
        let mut v = Array1::from_shape_fn(n, |_| rng.gen::<f64>() - 0.5);
        for _ in 0..2 {
            for q in basis {
                let c = v.dot(q);
                v.scaled_add(-c, q);
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Spectral starting point: for each of the `k` largest-magnitude
/// eigenvectors of `Σ_i R_i`, keep whichever of its positive and negative
/// parts has the larger norm (positive part on ties).
pub fn deterministic_g(bundle: &DataBundle, k: usize) -> Result<Matrix> {
    let n = bundle.order();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let mut sum = linalg::zeros(n, n);
    for r in bundle.matrices() {
        sum += r;
    }
    let (_, vectors) = largest_magnitude_eigenpairs(&sum, k)?;
    Ok(split_parts(&vectors))
}

/// Applies the positive/negative-part selection column by column.
pub fn split_parts(vectors: &Matrix) -> Matrix {
    let mut g = Array2::zeros(vectors.dim());
    for (mut out, x) in g.columns_mut().into_iter().zip(vectors.columns()) {
        let pos_sq: f64 = x.iter().filter(|&&v| v > 0.0).map(|v| v * v).sum();
        let neg_sq: f64 = x.iter().filter(|&&v| v < 0.0).map(|v| v * v).sum();
        if pos_sq >= neg_sq {
            out.assign(&x.mapv(|v| v.max(0.0)));
        } else {
            out.assign(&x.mapv(|v| (-v).max(0.0)));
        }
        if out.iter().all(|&v| v == 0.0) {
            out.fill(ZERO_COLUMN_FILL);
        }
    }
    g
}

/// `G` with entries uniform on `(0, 1)` and `S_i = (S + Sᵀ)/2` for uniform
/// `S`, all drawn from one generator seeded with `seed`.
pub fn random_init(n: usize, k: usize, count: usize, seed: u64) -> Factorization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Array2::from_shape_fn((n, k), |_| rng.sample::<f64, _>(Open01));
    let s = (0..count)
        .map(|_| {
            let mut m = Array2::from_shape_fn((k, k), |_| rng.sample::<f64, _>(Open01));
            linalg::symmetrize(&mut m);
            m
        })
        .collect();
    Factorization {
        g,
        s,
        coords: Coords::Native,
    }
}

/// First `S` block for a given `G`: `iterations` projected-gradient sweeps
/// with exact line search from constant matrices.
pub fn init_s_from_g(bundle: &DataBundle, g: &Matrix, iterations: usize) -> Result<Vec<Matrix>> {
    if g.nrows() != bundle.order() {
        return Err(Error::Dimension(format!(
            "G has {} rows, bundle order is {}",
            g.nrows(),
            bundle.order()
        )));
    }
    if g.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument("G must be non-negative".into()));
    }
    let k = g.ncols();
    let mut s = vec![Array2::from_elem((k, k), INITIAL_S_VALUE); bundle.count()];
    let x = gradients::data_products(bundle, g);
    let a = g.t().dot(g);
    bcd::s_block(&x, g, &a, &mut s, iterations);
    Ok(s)
}

/// Maps non-negative native factors into `transform` coordinates so that
/// applying the transform gives them back.
pub fn lift_to_transformed(fact: &Factorization, transform: TransformKind) -> Result<Factorization> {
    fact.expect_coords(Coords::Native)?;
    let check = |m: &Matrix, name: &str| -> Result<()> {
        if let Some(((r, c), v)) = m.indexed_iter().find(|(_, &v)| v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cannot lift {name}: negative entry {v} at ({r}, {c})"
            )));
        }
        Ok(())
    };
    check(&fact.g, "G")?;
    for (i, s) in fact.s.iter().enumerate() {
        check(s, &format!("S_{}", i + 1))?;
    }
    let lift = |m: &Matrix| match transform {
        TransformKind::Square => m.mapv(f64::sqrt),
        TransformKind::Identity | TransformKind::Abs => m.clone(),
    };
    Ok(Factorization {
        g: lift(&fact.g),
        s: fact.s.iter().map(lift).collect(),
        coords: transform.coords(),
    })
}
