use num_complex::Complex64;

use super::matrix::{vec_dot, vec_norm, CMatrix};
use super::svd::numerical_rank;
use crate::error::{Error, Result};

/// Orthonormal Krylov basis `{v, m v, m² v, …}` built until the next vector
/// is numerically dependent (relative `tol`).
pub fn krylov_basis(m: &CMatrix, v: &[Complex64], tol: f64) -> Result<Vec<Vec<Complex64>>> {
    let n = m.require_square("krylov_dim")?;
    if v.len() != n {
        return Err(Error::Dimension(format!("vector of length {} for {n}x{n} matrix", v.len())));
    }
    let nv = vec_norm(v);
    if nv == 0.0 {
        return Err(Error::Argument("Krylov start vector is zero".into()));
    }
    let mscale = (m.norm_one() * m.norm_inf()).sqrt();
    let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|z| z / nv).collect()];
    while basis.len() < n {
        let last = basis.last().expect("basis is nonempty");
        let mut w = m.mul_vec(last)?;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let h = vec_dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= h * qi;
                }
            }
        }
        let nw = vec_norm(&w);
        if nw <= tol * mscale {
            break;
        }
        basis.push(w.into_iter().map(|z| z / nw).collect());
    }
    Ok(basis)
}

/// Dimension of the cyclic subspace generated by `v` under `m`.
pub fn krylov_dim(m: &CMatrix, v: &[Complex64], tol: f64) -> Result<usize> {
    Ok(krylov_basis(m, v, tol)?.len())
}

/// Rank of the raw stacked Krylov matrix `[v, m v, …, m^{d} v]`, column
/// normalized. Independent check of [`krylov_dim`].
pub fn krylov_matrix_rank(m: &CMatrix, v: &[Complex64], cols: usize, tol: f64) -> Result<usize> {
    let n = m.require_square("krylov_matrix_rank")?;
    let mut k = CMatrix::zeros(n, cols);
    let mut x = v.to_vec();
    for j in 0..cols {
        let nx = vec_norm(&x);
        if nx == 0.0 {
            break;
        }
        for i in 0..n {
            k[(i, j)] = x[i] / nx;
        }
        x = m.mul_vec(&x)?;
    }
    Ok(numerical_rank(&k, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_and_jordan() {
        assert_eq!(krylov_dim(&CMatrix::identity(3), &[c(1.0), c(2.0), c(0.5)], 1e-10).unwrap(), 1);
        let j = CMatrix::from_real_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        assert_eq!(krylov_dim(&j, &[c(1.0), c(0.0)], 1e-10).unwrap(), 1);
        assert_eq!(krylov_dim(&j, &[c(0.0), c(1.0)], 1e-10).unwrap(), 2);
    }

    #[test]
    fn zero_vector_rejected() {
        let r = krylov_dim(&CMatrix::identity(2), &[c(0.0), c(0.0)], 1e-10);
        assert!(matches!(r, Err(Error::Argument(_))));
    }

    #[test]
    fn agrees_with_stacked_rank() {
        // diag(1, 2, 2, 3) plus a Jordan coupling between the two 2s
        let mut m = CMatrix::zeros(4, 4);
        for (i, d) in [1.0, 2.0, 2.0, 3.0].iter().enumerate() {
            m[(i, i)] = c(*d);
        }
        m[(1, 2)] = c(1.0);
        for v in [
            [c(1.0), c(0.0), c(0.0), c(0.0)],
            [c(0.0), c(0.0), c(1.0), c(0.0)],
            [c(1.0), c(1.0), c(1.0), c(1.0)],
            [c(0.0), c(1.0), c(0.0), c(1.0)],
        ] {
            let d = krylov_dim(&m, &v, 1e-10).unwrap();
            assert_eq!(d, krylov_matrix_rank(&m, &v, 4, 1e-10).unwrap());
        }
    }
}
