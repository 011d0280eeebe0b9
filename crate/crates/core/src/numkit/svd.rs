//! Singular values by one-sided Jacobi (Hestenes) rotations.

use num_complex::Complex64;

use super::matrix::CMatrix;

const MAX_SWEEPS: usize = 60;

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    // work on the orientation with fewer columns
    let a = if m.cols() > m.rows() { m.adjoint() } else { m.clone() };
    let (rows, cols) = (a.rows(), a.cols());
    // column-major copy so column rotations touch contiguous memory
    let mut col: Vec<Vec<Complex64>> = (0..cols).map(|j| a.column(j)).collect();
    let eps = f64::EPSILON;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for i in 0..rows {
                    alpha += col[p][i].norm_sqr();
                    beta += col[q][i].norm_sqr();
                    gamma += col[p][i].conj() * col[q][i];
                }
                let g = gamma.norm();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // diagonalize [[alpha, gamma], [conj(gamma), beta]]
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let xp = col[p][i];
                    let xq = col[q][i];
                    col[p][i] = xp * c - xq * phase.conj() * s;
                    col[q][i] = xp * phase * s + xq * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = col
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `tol · σ_max`; 0 for the zero matrix.
pub fn numerical_rank(m: &CMatrix, tol: f64) -> usize {
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * top).count()
}
