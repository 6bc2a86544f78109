//! Univariate step-size polynomials and their minimisation.
//!
//! Critical points come from the eigenvalues of the balanced companion
//! matrix of `p′`, polished by a few Newton steps.

use nalgebra::DMatrix;

/// Relative threshold below which leading coefficients are stripped.
const LEADING_TOL: f64 = 1e-14;
/// `|Im λ| ≤ REAL_TOL · (1 + |Re λ|)` counts as a real root.
const REAL_TOL: f64 = 1e-8;

/// `p(t) = Σ_j coeffs[j] t^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinePolynomial {
    pub coeffs: Vec<f64>,
}

impl LinePolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        LinePolynomial { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> LinePolynomial {
        LinePolynomial {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| j as f64 * c)
                .collect(),
        }
    }

    /// Coefficients with negligible leading terms removed.
    fn trimmed(&self) -> &[f64] {
        let scale = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return &[];
        }
        let mut len = self.coeffs.len();
        while len > 0 && self.coeffs[len - 1].abs() <= LEADING_TOL * scale {
            len -= 1;
        }
        &self.coeffs[..len]
    }

    /// Real roots, unordered.
    pub fn real_roots(&self) -> Vec<f64> {
        let c = self.trimmed();
        if c.len() < 2 {
            return Vec::new();
        }
        // Factor out roots at zero so the companion matrix stays well scaled.
        let zeros = c.iter().take_while(|&&v| v == 0.0).count();
        let c = &c[zeros..];
        let mut roots = vec![0.0; zeros.min(1)];
        let deg = c.len() - 1;
        if deg == 0 {
            return roots;
        }
        if deg == 1 {
            roots.push(-c[0] / c[1]);
            return roots;
        }
        let lead = c[deg];
        let mut companion = DMatrix::<f64>::zeros(deg, deg);
        for j in 0..deg {
            companion[(0, j)] = -c[deg - 1 - j] / lead;
        }
        for i in 1..deg {
            companion[(i, i - 1)] = 1.0;
        }
        balance(&mut companion);
        for z in companion.complex_eigenvalues().iter() {
            if z.im.abs() <= REAL_TOL * (1.0 + z.re.abs()) {
                roots.push(self.polish(z.re));
            }
        }
        roots
    }

    /// Newton refinement on `p`, kept only while it reduces `|p|`.
    fn polish(&self, mut t: f64) -> f64 {
        let d = self.derivative();
        let mut val = self.eval(t).abs();
        for _ in 0..4 {
            let slope = d.eval(t);
            if slope == 0.0 || !slope.is_finite() {
                break;
            }
            let next = t - self.eval(t) / slope;
            let next_val = self.eval(next).abs();
            if !(next_val < val) {
                break;
            }
            t = next;
            val = next_val;
        }
        t
    }

    /// Global minimiser over the real critical points of `p` and `t = 0`.
    ///
    /// A flat polynomial returns `0`. Ties prefer smaller `|t|`, then the
    /// negative sign.
    pub fn minimize(&self) -> f64 {
        let mut candidates = vec![0.0];
        candidates.extend(self.derivative().real_roots());
        self.best_of(candidates)
    }

    /// Minimiser over `[lo, hi]`: golden-section search cross-checked with the
    /// critical points inside the interval and both endpoints.
    pub fn minimize_on(&self, lo: f64, hi: f64) -> f64 {
        let mut candidates = vec![lo, hi, golden_section(|t| self.eval(t), lo, hi, 1e-8)];
        if lo <= 0.0 && 0.0 <= hi {
            candidates.push(0.0);
        }
        candidates.extend(
            self.derivative()
                .real_roots()
                .into_iter()
                .filter(|&t| lo <= t && t <= hi),
        );
        self.best_of(candidates)
    }

    fn best_of(&self, candidates: Vec<f64>) -> f64 {
        let mut best_t = 0.0_f64;
        let mut best_p = f64::INFINITY;
        for t in candidates {
            let p = self.eval(t);
            if !p.is_finite() {
                continue;
            }
            if best_p == f64::INFINITY {
                best_t = t;
                best_p = p;
                continue;
            }
            let tol = 1e-15 * best_p.abs().max(p.abs());
            let better = p < best_p - tol
                || ((p - best_p).abs() <= tol
                    && (t.abs() < best_t.abs() || (t.abs() == best_t.abs() && t < best_t)));
            if better {
                best_t = t;
                best_p = p;
            }
        }
        best_t
    }
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Parlett–Reinsch balancing by powers of two; eigenvalues are unchanged.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0_f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].abs();
                    row += m[(i, j)].abs();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut f = 1.0;
            let mut c = col;
            let g = row / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            let g = row * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + row) / f < 0.95 * total {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}
