//! Small dense helpers on top of `ndarray`.

use ndarray::{Array2, Zip};

use crate::model::Matrix;

/// Squared Frobenius norm.
pub fn frob_sq(m: &Matrix) -> f64 {
    m.iter().map(|v| v * v).sum()
}

/// Frobenius inner product `⟨a, b⟩ = Σ a_ij b_ij`.
pub fn inner(a: &Matrix, b: &Matrix) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    Zip::from(a).and(b).fold(0.0, |acc, &x, &y| acc + x * y)
}

/// `tr(a b)` without forming the product.
pub fn trace_of_product(a: &Matrix, b: &Matrix) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[[i, j]] * b[[j, i]];
        }
    }
    acc
}

/// Replace `m` by `(m + mᵀ) / 2`, which makes it exactly symmetric.
pub fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest `|m_ij − m_ji|` together with its position.
pub fn max_asymmetry(m: &Matrix) -> (f64, (usize, usize)) {
    let n = m.nrows();
    let mut worst = (0.0, (0, 0));
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (m[[i, j]] - m[[j, i]]).abs();
            if d > worst.0 {
                worst = (d, (i, j));
            }
        }
    }
    worst
}

/// `a s a` for square `a` and `s`.
pub fn sandwich(a: &Matrix, s: &Matrix) -> Matrix {
    a.dot(s).dot(a)
}

/// Element-wise projection onto the non-negative orthant.
pub fn project_nonneg(m: &mut Matrix) {
    m.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 });
}

pub fn hadamard(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = a.clone();
    out.zip_mut_with(b, |x, &y| *x *= y);
    out
}

pub fn min_entry(m: &Matrix) -> f64 {
    m.iter().fold(f64::INFINITY, |acc, &v| acc.min(v))
}

pub fn zeros(rows: usize, cols: usize) -> Matrix {
    Array2::zeros((rows, cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn trace_of_product_matches_dot() {
        let a = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let b = array![[1.0, -1.0], [0.5, 2.0], [3.0, 0.0]];
        let full = a.dot(&b);
        assert_eq!(trace_of_product(&a, &b), full[[0, 0]] + full[[1, 1]]);
    }

    #[test]
    fn symmetrize_is_exact() {
        let mut m = array![[1.0, 0.3], [0.1, 2.0]];
        symmetrize(&mut m);
        assert_eq!(m[[0, 1]], m[[1, 0]]);
        assert!((m[[0, 1]] - 0.2).abs() < 1e-15);
        assert_eq!(max_asymmetry(&m).0, 0.0);
    }
}
