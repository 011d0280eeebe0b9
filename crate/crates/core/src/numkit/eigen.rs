//! Eigenvalues of dense complex matrices.
//!
//! Householder reduction to upper Hessenberg form followed by single-shift
//! complex QR iteration (Wilkinson shifts, exceptional shifts every ten
//! stalled sweeps) yields the Schur form `T`. The raw diagonal of `T` is
//! then post-processed for defective eigenvalues: a Jordan block of size
//! `m` splits under roundoff into a ring of radius `~(ε‖A‖)^{1/m}`, so the
//! individual values are useless while their arithmetic mean stays accurate
//! to `O(ε)`. Eigenvalues whose mutual distance is within their own
//! roundoff uncertainty (`ε‖A‖κᵢ`, with `κᵢ` the eigenvalue condition number
//! read off `T`) are grouped and replaced by the group mean. Each group is
//! accepted only if `A − μI` is numerically singular at the mean `μ`.

use num_complex::Complex64;

use super::lu::sigma_min_estimate;
use super::matrix::CMatrix;
use crate::error::{Error, Result};

/// Multiset of eigenvalues, one entry per algebraic multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub values: Vec<Complex64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> Complex64 {
        self.values.iter().sum()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Values sorted by real part, then imaginary part.
    pub fn sorted(&self) -> Vec<Complex64> {
        let mut v = self.values.clone();
        sort_complex(&mut v);
        v
    }
}

pub fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Greedy nearest-neighbour matching distance between two multisets.
///
/// Returns the largest distance used by the matching, or `inf` when the
/// sizes differ.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for (j, y) in b.iter().enumerate() {
            if !used[j] {
                let d = (x - y).norm();
                if d < best {
                    best = d;
                    best_j = j;
                }
            }
        }
        used[best_j] = true;
        worst = worst.max(best);
    }
    worst
}

const MAX_SWEEPS_PER_EIGENVALUE: usize = 100;

/// Eigenvalues with algebraic multiplicity.
pub fn eigvals(m: &CMatrix) -> Result<Spectrum> {
    let n = m.require_square("eigvals")?;
    if n == 1 {
        return Ok(Spectrum {
            values: vec![m[(0, 0)]],
        });
    }
    let t = schur_triangular(m)?;
    let raw: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let values = refine_defective_clusters(m, &t, raw)?;
    Ok(Spectrum { values })
}

/// Upper-triangular Schur factor `T` with `A = Q T Q^H` (Q not formed).
pub fn schur_triangular(m: &CMatrix) -> Result<CMatrix> {
    let n = m.require_square("schur")?;
    let mut h = m.clone();
    hessenberg_in_place(&mut h);
    qr_iterate(&mut h, m.norm_fro())?;
    // annihilate the converged subdiagonal
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    let _ = n;
    Ok(h)
}

fn hessenberg_in_place(a: &mut CMatrix) {
    let n = a.rows();
    let zero = Complex64::new(0.0, 0.0);
    for k in 0..n.saturating_sub(2) {
        let alpha_norm: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * alpha_norm;
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vn;
        }
        let d = a.as_mut_slice();
        // left: w = vᴴ A[k+1.., k..] accumulated row by row, then A −= 2 v w
        let mut w = vec![zero; n - k];
        for (idx, vi) in v.iter().enumerate() {
            let row = &d[(k + 1 + idx) * n + k..(k + 2 + idx) * n];
            let vc = vi.conj();
            for (wj, x) in w.iter_mut().zip(row) {
                *wj += vc * x;
            }
        }
        for (idx, vi) in v.iter().enumerate() {
            let row = &mut d[(k + 1 + idx) * n + k..(k + 2 + idx) * n];
            let f = vi * 2.0;
            for (x, wj) in row.iter_mut().zip(&w) {
                *x -= f * wj;
            }
        }
        // right: all rows, columns k+1..
        for row in d.chunks_exact_mut(n) {
            let tail = &mut row[k + 1..];
            let s2 = tail.iter().zip(&v).map(|(x, vi)| x * vi).sum::<Complex64>() * 2.0;
            for (x, vi) in tail.iter_mut().zip(&v) {
                *x -= s2 * vi.conj();
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = zero;
        }
    }
}

/// Givens rotation `G = [[c, s], [-conj(s), c]]` with `G·[a, b]ᵀ = [r, 0]ᵀ`.
#[inline]
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let nu = na.hypot(nb);
    (na / nu, (a / na) * b.conj() / nu)
}

fn qr_iterate(h: &mut CMatrix, norm_a: f64) -> Result<()> {
    let n = h.rows();
    let eps = f64::EPSILON;
    let small = eps * norm_a.max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    let mut total = 0usize;
    let mut rot: Vec<(f64, Complex64)> = Vec::with_capacity(n);
    while hi > 0 {
        // locate the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if sub <= eps * diag || sub <= small {
                h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            sweeps = 0;
            continue;
        }
        sweeps += 1;
        total += 1;
        if sweeps > MAX_SWEEPS_PER_EIGENVALUE {
            return Err(Error::Convergence {
                iterations: total,
                residual: h[(hi, hi - 1)].norm(),
            });
        }
        let shift = if sweeps.is_multiple_of(10) {
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 0.75
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for i in lo..=hi {
            h[(i, i)] -= shift;
        }
        rot.clear();
        let d = h.as_mut_slice();
        for k in lo..hi {
            let (c, s) = givens(d[k * n + k], d[(k + 1) * n + k]);
            rot.push((c, s));
            let (top, bottom) = d.split_at_mut((k + 1) * n);
            let row_k = &mut top[k * n + k..k * n + n];
            let row_k1 = &mut bottom[k..n];
            for (x, y) in row_k.iter_mut().zip(row_k1.iter_mut()) {
                let (xv, yv) = (*x, *y);
                *x = xv * c + s * yv;
                *y = yv * c - s.conj() * xv;
            }
        }
        for (idx, &(c, s)) in rot.iter().enumerate() {
            let k = lo + idx;
            let last = (k + 1).min(hi);
            for row in d.chunks_exact_mut(n).take(last + 1) {
                let (xv, yv) = (row[k], row[k + 1]);
                row[k] = xv * c + yv * s.conj();
                row[k + 1] = yv * c - xv * s;
            }
        }
        for i in lo..=hi {
            h[(i, i)] += shift;
        }
    }
    Ok(())
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let l1 = mean + disc;
    let l2 = mean - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Eigenvalue condition numbers read from an upper-triangular Schur factor.
///
/// Returns `inf` where the eigenvector recurrences overflow.
pub fn condition_numbers(t: &CMatrix) -> Vec<f64> {
    let n = t.rows();
    let tiny = f64::EPSILON * t.max_abs().max(f64::MIN_POSITIVE);
    let cap = 1e150;
    let zero = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    let mut x = vec![zero; n];
    for i in 0..n {
        let lam = t[(i, i)];
        // right eigenvector: x_i = 1, x_j = 0 for j > i, back-substitute j < i
        let mut norm_x_sq = 1.0;
        let mut overflow = false;
        x[i] = Complex64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut s = zero;
            for k in j + 1..=i {
                s += t[(j, k)] * x[k];
            }
            let mut d = t[(j, j)] - lam;
            if d.norm() < tiny {
                d = Complex64::new(tiny, 0.0);
            }
            x[j] = -s / d;
            let m = x[j].norm();
            if !m.is_finite() || m > cap {
                overflow = true;
                break;
            }
            norm_x_sq += m * m;
        }
        if overflow {
            out.push(f64::INFINITY);
            continue;
        }
        // left eigenvector: y_i = 1, y_j = 0 for j < i, forward for j > i;
        // acc[j] accumulates Σ_k y_k t_kj row by row
        let mut acc = vec![zero; n - i];
        let mut norm_y_sq = 1.0;
        let add_row = |acc: &mut [Complex64], k: usize, yk: Complex64| {
            for (a, tkj) in acc[k - i + 1..].iter_mut().zip(&t.row(k)[k + 1..]) {
                *a += yk * tkj;
            }
        };
        add_row(&mut acc, i, Complex64::new(1.0, 0.0));
        for j in i + 1..n {
            let mut d = lam - t[(j, j)];
            if d.norm() < tiny {
                d = Complex64::new(tiny, 0.0);
            }
            let yj = acc[j - i] / d;
            let m = yj.norm();
            if !m.is_finite() || m > cap {
                overflow = true;
                break;
            }
            norm_y_sq += m * m;
            add_row(&mut acc, j, yj);
        }
        if overflow {
            out.push(f64::INFINITY);
        } else {
            out.push((norm_x_sq * norm_y_sq).sqrt());
        }
    }
    out
}

/// Roundoff-uncertainty multiplier applied to `ε‖A‖_F κᵢ`.
const UNCERTAINTY_FACTOR: f64 = 64.0;
/// `σ_min(A − μI) / ‖A‖_F` must fall below this for a group to be merged.
const SINGULARITY_TOL: f64 = 1e-8;
/// Groups spread less than this (relative to `‖A‖_F`) are left untouched.
const SETTLED_SPREAD: f64 = 1e-11;

fn refine_defective_clusters(a: &CMatrix, t: &CMatrix, raw: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let n = raw.len();
    let scale = a.norm_fro();
    if scale == 0.0 {
        return Ok(raw);
    }
    let kappa = condition_numbers(t);
    let unc: Vec<f64> = kappa
        .iter()
        .map(|&k| (UNCERTAINTY_FACTOR * f64::EPSILON * scale * k).min(scale))
        .collect();
    let members: Vec<usize> = (0..n).collect();
    let mut out = raw.clone();
    refine_group(a, &raw, &unc, &members, scale, &mut out, 0)?;
    Ok(out)
}

fn refine_group(
    a: &CMatrix,
    raw: &[Complex64],
    unc: &[f64],
    members: &[usize],
    scale: f64,
    out: &mut [Complex64],
    depth: usize,
) -> Result<()> {
    for comp in linked_components(raw, unc, members) {
        if comp.len() < 2 {
            continue;
        }
        let mean = comp.iter().map(|&i| raw[i]).sum::<Complex64>() / comp.len() as f64;
        let spread = comp.iter().map(|&i| (raw[i] - mean).norm()).fold(0.0, f64::max);
        if spread <= SETTLED_SPREAD * scale {
            // already agrees to roundoff; nothing to repair
            continue;
        }
        let accept = sigma_min_estimate(&a.shifted(mean))? <= SINGULARITY_TOL * scale;
        if accept {
            for &i in &comp {
                out[i] = mean;
            }
        } else if depth < 8 {
            // tighten the linking radius and retry on the sub-population
            let tighter: Vec<f64> = unc.iter().map(|u| u * 0.1).collect();
            refine_group(a, raw, &tighter, &comp, scale, out, depth + 1)?;
        }
    }
    Ok(())
}

/// Connected components of the graph linking `i ~ j` when
/// `|λᵢ − λⱼ| ≤ max(uᵢ, uⱼ)`.
fn linked_components(raw: &[Complex64], unc: &[f64], members: &[usize]) -> Vec<Vec<usize>> {
    let m = members.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for a in 0..m {
        for b in a + 1..m {
            let (i, j) = (members[a], members[b]);
            if (raw[i] - raw[j]).norm() <= unc[i].max(unc[j]) {
                let ra = find(&mut parent, a);
                let rb = find(&mut parent, b);
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for a in 0..m {
        let r = find(&mut parent, a);
        groups.entry(r).or_default().push(members[a]);
    }
    groups.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::lu::det;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    #[test]
    fn identity_and_nilpotent_block() {
        let s = eigvals(&CMatrix::identity(2)).unwrap();
        assert_eq!(s.values, vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let j = CMatrix::from_real_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        let s = eigvals(&j).unwrap();
        assert!(s.values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(eigvals(&CMatrix::zeros(2, 3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn triangular_spectrum_is_diagonal() {
        let m = CMatrix::from_rows(&[
            [c(1.0, 0.0), c(2.0, 1.0), c(0.0, 3.0)],
            [c(0.0, 0.0), c(-2.0, 0.5), c(1.0, 1.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.5, -1.0)],
        ]);
        let s = eigvals(&m).unwrap();
        let expected = [c(1.0, 0.0), c(-2.0, 0.5), c(0.5, -1.0)];
        assert!(multiset_distance(&s.values, &expected) < 1e-12);
    }

    #[test]
    fn characteristic_polynomial_vanishes_on_random_4x4() {
        let mut seed = 42u64;
        for _ in 0..50 {
            let m = CMatrix::from_fn(4, 4, |_, _| c(lcg(&mut seed), lcg(&mut seed)));
            let s = eigvals(&m).unwrap();
            let norm = m.norm_fro();
            for z in &s.values {
                let p = det(&m.shifted(*z)).unwrap();
                assert!(p.norm() < 1e-8 * norm.powi(4), "|p(z)| = {}", p.norm());
            }
            assert!((s.sum() - m.trace()).norm() < 1e-9 * 4.0 * m.max_abs());
        }
    }

    #[test]
    fn jordan_blocks_collapse_to_exact_eigenvalue() {
        for size in [2usize, 4, 6, 10] {
            let shift = c(0.3, -0.7);
            let mut j = CMatrix::zeros(size, size);
            for i in 0..size {
                j[(i, i)] = shift;
                if i + 1 < size {
                    j[(i, i + 1)] = c(1.3, 0.2);
                }
            }
            // hide the structure behind a dense similarity transform
            let mut seed = 7 + size as u64;
            let p = CMatrix::from_fn(size, size, |i, k| {
                let d = if i == k { 2.0 } else { 0.0 };
                c(d + 0.3 * lcg(&mut seed), 0.3 * lcg(&mut seed))
            });
            let pinv = crate::numkit::lu::Lu::factor(&p, 0.0)
                .unwrap()
                .solve_matrix(&CMatrix::identity(size));
            let a = &(&p * &j) * &pinv;
            let s = eigvals(&a).unwrap();
            for z in &s.values {
                assert!((z - shift).norm() < 1e-10, "size {size}: {z}");
            }
        }
    }

    #[test]
    fn distinct_close_eigenvalues_are_not_merged() {
        let m = CMatrix::from_rows(&[
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(1.0 + 1e-7, 0.0)],
        ]);
        let s = eigvals(&m).unwrap();
        let expected = [c(1.0, 0.0), c(1.0 + 1e-7, 0.0)];
        assert!(multiset_distance(&s.values, &expected) < 1e-15);
    }
}
