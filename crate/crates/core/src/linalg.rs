//! Singular value decomposition of small complex matrices by one-sided Jacobi rotations.
//!
//! nalgebra 0.33's bidiagonal SVD returns factors that fail to recompose (errors of order
//! 1e-2) on some of the rank-deficient matrices met here, in both the real and complex
//! case. Jacobi sweeps are slower but accurate to working precision, and the matrices
//! involved are at most a dozen columns wide.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

type C = Complex64;

const MAX_SWEEPS: usize = 80;

/// `A = U Σ V^*` with singular values in descending order.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `m × n`; columns belonging to zero singular values are zero.
    pub u: DMatrix<C>,
    pub singular_values: Vec<f64>,
    /// `n × n` unitary.
    pub v: DMatrix<C>,
}

pub fn svd(a: &DMatrix<C>) -> Svd {
    let (m, n) = a.shape();
    let mut g = a.clone();
    let mut v = DMatrix::<C>::identity(n, n);
    // Columns below this squared norm are rounding noise and are left alone.
    let negligible = (f64::EPSILON * a.norm()).powi(2);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(q).norm_squared();
                let gamma = g.column(p).dotc(&g.column(q));
                let mag = gamma.norm();
                if alpha <= negligible || beta <= negligible || mag <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rotate column q by the phase of γ, then a real Jacobi rotation.
                let phase = gamma / mag;
                let zeta = (beta - alpha) / (2.0 * mag);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut g, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase.conj();
                        mat[(i, p)] = xp * c - xq * s;
                        mat[(i, q)] = xp * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| g.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = DMatrix::zeros(m, n);
    let mut vs = DMatrix::zeros(n, n);
    let mut sv = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        sv.push(norms[j]);
        if norms[j] > 0.0 {
            u.set_column(k, &(g.column(j) / C::from(norms[j])));
        }
        vs.set_column(k, &v.column(j));
    }
    Svd { u, singular_values: sv, v: vs }
}

impl Svd {
    pub fn max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.singular_values.iter().filter(|&&s| s > tol).count()
    }

    /// Orthonormal basis of the column space, from singular values above `tol`.
    pub fn range(&self, tol: f64) -> Vec<DVector<C>> {
        (0..self.rank(tol)).map(|k| self.u.column(k).into_owned()).collect()
    }

    /// Minimum-norm least-squares solution, singular values at or below `tol` cut.
    pub fn solve(&self, b: &DMatrix<C>, tol: f64) -> DMatrix<C> {
        let mut x = DMatrix::zeros(self.v.nrows(), b.ncols());
        for k in 0..self.rank(tol) {
            let coeff = self.u.column(k).adjoint() * b / C::from(self.singular_values[k]);
            x += self.v.column(k) * coeff;
        }
        x
    }

    pub fn recompose(&self) -> DMatrix<C> {
        let n = self.singular_values.len();
        let sigma =
            DMatrix::from_fn(n, n, |i, j| if i == j { C::from(self.singular_values[i]) } else { C::new(0.0, 0.0) });
        &self.u * sigma * self.v.adjoint()
    }
}

/// Complex singular values of a real matrix.
pub fn svd_real(a: &DMatrix<f64>) -> Svd {
    svd(&a.map(C::from))
}
