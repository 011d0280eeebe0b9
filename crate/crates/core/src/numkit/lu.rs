//! LU factorization with partial pivoting.

use num_complex::Complex64;

use super::matrix::{vec_norm, CMatrix};
use crate::error::Result;

pub struct Lu {
    n: usize,
    /// Packed L (unit lower, below diagonal) and U.
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    sign: f64,
    /// Smallest pivot magnitude encountered.
    pub min_pivot: f64,
}

impl Lu {
    /// Zero pivots are replaced by `floor` so the factorization always
    /// completes; callers inspect `min_pivot` when singularity matters.
    pub fn factor(m: &CMatrix, floor: f64) -> Result<Self> {
        let n = m.require_square("LU factorization")?;
        let mut lu = m.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].norm();
            for i in k + 1..n {
                let v = lu[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            min_pivot = min_pivot.min(best);
            if best == 0.0 {
                lu[k * n + k] = Complex64::new(floor.max(f64::MIN_POSITIVE), 0.0);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            sign,
            min_pivot,
        })
    }

    pub fn det(&self) -> Complex64 {
        let mut d = Complex64::new(self.sign, 0.0);
        for i in 0..self.n {
            d *= self.lu[i * self.n + i];
        }
        d
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves `A^H x = b`.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        // A = P^T L U  =>  A^H = U^H L^H P
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[j * n + i].conj() * y[j];
            }
            y[i] = s / self.lu[i * n + i].conj();
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[j * n + i].conj() * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve(&b.column(j));
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

pub fn det(m: &CMatrix) -> Result<Complex64> {
    Ok(Lu::factor(m, 0.0)?.det())
}

/// Upper estimate of the smallest singular value of `m` from a few rounds of
/// inverse iteration on `m^H m`. Exact zero pivots give 0.
pub fn sigma_min_estimate(m: &CMatrix) -> Result<f64> {
    let n = m.require_square("sigma_min_estimate")?;
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let lu = Lu::factor(m, f64::EPSILON * scale)?;
    if lu.min_pivot == 0.0 {
        return Ok(0.0);
    }
    // deterministic, not orthogonal to any structured subspace in practice
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.37 * (i as f64).sin(), 0.21 * (i as f64 * 1.3).cos()))
        .collect();
    for _ in 0..3 {
        let y = lu.solve_adjoint(&x);
        let z = lu.solve(&y);
        let nz = vec_norm(&z);
        if !nz.is_finite() || nz == 0.0 {
            return Ok(0.0);
        }
        x = z.into_iter().map(|v| v / nz).collect();
    }
    let mx = m.mul_vec(&x)?;
    Ok(vec_norm(&mx))
}
