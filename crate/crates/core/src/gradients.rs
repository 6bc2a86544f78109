//! Gradients of the square error in native and transformed coordinates.
//!
//! With `F = f(G̃)`, `T_i = f(S̃_i)` and `Z_i = R_i − F T_i Fᵀ`:
//!
//! ```text
//! ∇_G̃ SE   = −4 Σ_i f′(G̃) ⊙ (Z_i F T_i)
//! ∇_S̃_i SE = −2 f′(S̃_i) ⊙ (Fᵀ Z_i F)
//! ```
//!
//! Only the `i`-th residual contributes to `∇_S̃_i`. Both are assembled from
//! `X_i = R_i F` and `A = Fᵀ F`, so one `n × n × k` product per data matrix
//! is the dominant cost: `Z_i F = X_i − F T_i A` and `Fᵀ Z_i F = Fᵀ X_i − A T_i A`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg;
use crate::model::{Coords, DataBundle, Factorization, Matrix};

/// Element-wise map from search variables to non-negative factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Identity,
    Abs,
    Square,
}

impl TransformKind {
    pub fn coords(self) -> Coords {
        match self {
            TransformKind::Identity => Coords::Native,
            TransformKind::Abs => Coords::TransformedAbs,
            TransformKind::Square => Coords::TransformedSquare,
        }
    }

    pub fn for_coords(coords: Coords) -> Self {
        match coords {
            Coords::Native => TransformKind::Identity,
            Coords::TransformedAbs => TransformKind::Abs,
            Coords::TransformedSquare => TransformKind::Square,
        }
    }

    pub fn apply_scalar(self, x: f64) -> f64 {
        match self {
            TransformKind::Identity => x,
            TransformKind::Abs => x.abs(),
            TransformKind::Square => x * x,
        }
    }

    /// `f′(x)`, using the subgradient `0` for `|·|` at the kink.
    pub fn derivative_scalar(self, x: f64) -> f64 {
        match self {
            TransformKind::Identity => 1.0,
            TransformKind::Abs => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            TransformKind::Square => 2.0 * x,
        }
    }

    pub fn apply(self, x: &Matrix) -> Matrix {
        match self {
            TransformKind::Identity => x.clone(),
            _ => x.mapv(|v| self.apply_scalar(v)),
        }
    }

    pub fn derivative(self, x: &Matrix) -> Matrix {
        x.mapv(|v| self.derivative_scalar(v))
    }
}

/// Gradient blocks with the shapes of `G` and every `S_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub g: Matrix,
    pub s: Vec<Matrix>,
}

impl Gradient {
    pub fn is_finite(&self) -> bool {
        self.g.iter().all(|v| v.is_finite()) && self.s.iter().all(|m| m.iter().all(|v| v.is_finite()))
    }

    /// `Σ ‖block‖²` over all blocks.
    pub fn norm_sq(&self) -> f64 {
        linalg::frob_sq(&self.g) + self.s.iter().map(linalg::frob_sq).sum::<f64>()
    }
}

/// `X_i = R_i G` for every data matrix.
pub(crate) fn data_products(bundle: &DataBundle, g: &Matrix) -> Vec<Matrix> {
    bundle.matrices().iter().map(|r| r.dot(g)).collect()
}

/// `∇_G SE = 4 (G Σ_i S_i A S_i − Σ_i X_i S_i)` given `x_i = R_i g`, `a = gᵀ g`.
pub(crate) fn native_g_from_products(g: &Matrix, s: &[Matrix], x: &[Matrix], a: &Matrix) -> Matrix {
    let (n, k) = g.dim();
    let mut data_term = linalg::zeros(n, k);
    let mut model_core = linalg::zeros(k, k);
    for (si, xi) in s.iter().zip(x) {
        data_term += &xi.dot(si);
        model_core += &si.dot(a).dot(si);
    }
    (g.dot(&model_core) - data_term) * 4.0
}

/// `∇_S_i SE = 2 (A S_i A − Gᵀ X_i)`, symmetrised.
pub(crate) fn native_s_from_products(g: &Matrix, si: &Matrix, xi: &Matrix, a: &Matrix) -> Matrix {
    let mut d = (linalg::sandwich(a, si) - g.t().dot(xi)) * 2.0;
    linalg::symmetrize(&mut d);
    d
}

/// Native gradient at `(g, s)` given `x_i = R_i g` and `a = gᵀ g`.
pub(crate) fn native_from_products(g: &Matrix, s: &[Matrix], x: &[Matrix], a: &Matrix) -> Gradient {
    Gradient {
        g: native_g_from_products(g, s, x, a),
        s: s
            .iter()
            .zip(x)
            .map(|(si, xi)| native_s_from_products(g, si, xi, a))
            .collect(),
    }
}

/// Gradient of SE with respect to native `G` and `S_i`.
pub fn grad_native(bundle: &DataBundle, fact: &Factorization) -> Result<Gradient> {
    fact.expect_coords(Coords::Native)?;
    fact.check_dims(bundle)?;
    let x = data_products(bundle, &fact.g);
    let a = fact.g.t().dot(&fact.g);
    Ok(native_from_products(&fact.g, &fact.s, &x, &a))
}

/// Gradient of the transformed SE with respect to `G̃` and `S̃_i`.
pub fn grad_transformed(
    bundle: &DataBundle,
    fact: &Factorization,
    transform: TransformKind,
) -> Result<Gradient> {
    fact.expect_coords(transform.coords())?;
    fact.check_dims(bundle)?;
    Ok(transformed_unchecked(bundle, &fact.g, &fact.s, transform))
}

pub(crate) fn transformed_unchecked(
    bundle: &DataBundle,
    g_tilde: &Matrix,
    s_tilde: &[Matrix],
    transform: TransformKind,
) -> Gradient {
    let fg = transform.apply(g_tilde);
    let fs: Vec<Matrix> = s_tilde.iter().map(|s| transform.apply(s)).collect();
    let x = data_products(bundle, &fg);
    let a = fg.t().dot(&fg);
    let native = native_from_products(&fg, &fs, &x, &a);
    chain_rule(transform, g_tilde, s_tilde, native)
}

/// Multiplies native gradient blocks by `f′` of the search variables.
pub(crate) fn chain_rule(
    transform: TransformKind,
    g_tilde: &Matrix,
    s_tilde: &[Matrix],
    mut grad: Gradient,
) -> Gradient {
    if transform == TransformKind::Identity {
        return grad;
    }
    grad.g
        .zip_mut_with(g_tilde, |d, &x| *d *= transform.derivative_scalar(x));
    for (ds, st) in grad.s.iter_mut().zip(s_tilde) {
        ds.zip_mut_with(st, |d, &x| *d *= transform.derivative_scalar(x));
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reconstruct, residuals};
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, k: usize, lo: f64) -> Matrix {
        let mut m = Array2::from_shape_fn((k, k), |_| rng.gen_range(lo..1.0));
        linalg::symmetrize(&mut m);
        m
    }

    fn transformed_se(bundle: &DataBundle, g: &Matrix, s: &[Matrix], t: TransformKind) -> f64 {
        let f = Factorization::new(g.clone(), s.to_vec(), t.coords()).unwrap();
        residuals(bundle, &f, t).unwrap().iter().map(linalg::frob_sq).sum()
    }

    /// Central differences of the transformed SE. S perturbations keep
    /// symmetry by moving both mirrored entries, so the off-diagonal
    /// derivative is split in half.
    fn fd_gradient(bundle: &DataBundle, g: &Matrix, s: &[Matrix], t: TransformKind, h: f64) -> Gradient {
        let mut dg = Array2::zeros(g.dim());
        for idx in 0..g.len() {
            let (r, c) = (idx / g.ncols(), idx % g.ncols());
            let mut gp = g.clone();
            gp[[r, c]] += h;
            let mut gm = g.clone();
            gm[[r, c]] -= h;
            dg[[r, c]] = (transformed_se(bundle, &gp, s, t) - transformed_se(bundle, &gm, s, t)) / (2.0 * h);
        }
        let mut ds = Vec::new();
        for i in 0..s.len() {
            let k = s[i].nrows();
            let mut d = Array2::zeros((k, k));
            for p in 0..k {
                for q in p..k {
                    let mut sp = s.to_vec();
                    let mut sm = s.to_vec();
                    sp[i][[p, q]] += h;
                    sm[i][[p, q]] -= h;
                    if p != q {
                        sp[i][[q, p]] += h;
                        sm[i][[q, p]] -= h;
                    }
                    let v = (transformed_se(bundle, g, &sp, t) - transformed_se(bundle, g, &sm, t)) / (2.0 * h);
                    let v = if p == q { v } else { v / 2.0 };
                    d[[p, q]] = v;
                    d[[q, p]] = v;
                }
            }
            ds.push(d);
        }
        Gradient { g: dg, s: ds }
    }

    fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
        let diff: f64 = (a - b).iter().map(|v| v * v).sum::<f64>().sqrt();
        diff / linalg::frob_sq(b).sqrt().max(1e-300)
    }

    fn random_instance(seed: u64) -> (DataBundle, Matrix, Vec<Matrix>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = (0..2).map(|_| random_sym(&mut rng, 8, 0.0)).collect();
        let bundle = DataBundle::new("fd", r).unwrap();
        let g = Array2::from_shape_fn((8, 3), |_| rng.gen_range(-1.0..1.0));
        let s = (0..2).map(|_| random_sym(&mut rng, 3, -1.0)).collect();
        (bundle, g, s)
    }

    #[test]
    fn scalar_native_gradient() {
        let b = DataBundle::new("scalar", vec![array![[4.0]]]).unwrap();
        let f = Factorization::native(array![[1.0]], vec![array![[1.0]]]).unwrap();
        let grad = grad_native(&b, &f).unwrap();
        assert_eq!(grad.g[[0, 0]], -12.0);
        assert_eq!(grad.s[0][[0, 0]], -6.0);
    }

    #[test]
    fn planted_point_is_stationary() {
        let g = array![[1.0, 0.0], [0.5, 0.0], [0.0, 2.0], [0.0, 1.0]];
        let s = vec![array![[1.0, 0.5], [0.5, 3.0]], array![[2.0, 1.0], [1.0, 0.0]]];
        let r = s.iter().map(|si| reconstruct(&g, si)).collect();
        let b = DataBundle::new("planted", r).unwrap();
        let grad = grad_native(&b, &Factorization::native(g, s).unwrap()).unwrap();
        assert!(grad.norm_sq().sqrt() < 1e-12);
    }

    #[test]
    fn native_gradient_matches_finite_differences() {
        for seed in 0..5 {
            let (b, g, s) = random_instance(seed);
            let g = g.mapv(f64::abs);
            let s: Vec<Matrix> = s.iter().map(|m| m.mapv(f64::abs)).collect();
            let grad = grad_native(&b, &Factorization::native(g.clone(), s.clone()).unwrap()).unwrap();
            let fd = fd_gradient(&b, &g, &s, TransformKind::Identity, 1e-6);
            assert!(rel_err(&grad.g, &fd.g) <= 1e-5);
            for (a, e) in grad.s.iter().zip(&fd.s) {
                assert!(rel_err(a, e) <= 1e-5);
            }
        }
    }

    #[test]
    fn square_gradient_matches_finite_differences() {
        let (b, g, s) = random_instance(42);
        let f = Factorization::new(g.clone(), s.clone(), Coords::TransformedSquare).unwrap();
        let grad = grad_transformed(&b, &f, TransformKind::Square).unwrap();
        for h in [1e-5, 1e-6] {
            let fd = fd_gradient(&b, &g, &s, TransformKind::Square, h);
            assert!(rel_err(&grad.g, &fd.g) <= 1e-5);
            for (a, e) in grad.s.iter().zip(&fd.s) {
                assert!(rel_err(a, e) <= 1e-5);
            }
        }
    }

    #[test]
    fn identity_transform_collapses_to_native() {
        let (b, g, s) = random_instance(3);
        let g = g.mapv(f64::abs);
        let s: Vec<Matrix> = s.iter().map(|m| m.mapv(f64::abs)).collect();
        let f = Factorization::native(g, s).unwrap();
        assert_eq!(
            grad_transformed(&b, &f, TransformKind::Identity).unwrap(),
            grad_native(&b, &f).unwrap()
        );
    }

    #[test]
    fn abs_gradient_vanishes_at_kink() {
        let (b, mut g, mut s) = random_instance(5);
        g[[2, 1]] = 0.0;
        s[0][[0, 1]] = 0.0;
        s[0][[1, 0]] = 0.0;
        let f = Factorization::new(g, s, Coords::TransformedAbs).unwrap();
        let grad = grad_transformed(&b, &f, TransformKind::Abs).unwrap();
        assert_eq!(grad.g[[2, 1]], 0.0);
        assert_eq!(grad.s[0][[0, 1]], 0.0);
    }

    #[test]
    fn square_chain_rule_identity() {
        let (b, g, s) = random_instance(9);
        let f = Factorization::new(g.clone(), s.clone(), Coords::TransformedSquare).unwrap();
        let tr = grad_transformed(&b, &f, TransformKind::Square).unwrap();
        let native = grad_native(&b, &f.to_native()).unwrap();
        let expected = linalg::hadamard(&(g.clone() * 2.0), &native.g);
        assert!(rel_err(&tr.g, &expected) <= 1e-10);
    }

    #[test]
    fn s_gradients_are_symmetric() {
        let (b, g, s) = random_instance(13);
        for t in [TransformKind::Abs, TransformKind::Square] {
            let f = Factorization::new(g.clone(), s.clone(), t.coords()).unwrap();
            for ds in grad_transformed(&b, &f, t).unwrap().s {
                assert!(linalg::max_asymmetry(&ds).0 <= 1e-10 * linalg::max_abs(&ds));
            }
        }
    }
}
