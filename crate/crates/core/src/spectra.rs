//! Band structure, minimal polynomials, local ranges and degeneracy
//! classification of the flat bands.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    build_bloch, build_real_space, canonical_angle, gauge_fix, near_multiple_of_pi, LadderParams, LatticeSpec,
    Model, NChainParams, Site, ANGLE_TOL,
};
use crate::numkit::{eigvals, fit_loglog_slope, krylov_basis, CMatrix};
use crate::transfer::{flat_band_conditions, nchain_prohibited, FlatBandReport};

/// Default relative tolerance for rank, degeneracy and annihilation tests.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Eigenvalues closer than this (relative to `max(1, ρ)`) are one root.
pub const ROOT_CLUSTER_RADIUS: f64 = 1e-6;

/// Parameters of the closed-form quartic: the characteristic polynomial of
/// the Bloch matrix is `(E² − λ²)² − 4δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedForm {
    pub lambda_sq: f64,
    pub delta: f64,
}

pub fn closed_form(p: &LadderParams, k: f64) -> ClosedForm {
    let g = gauge_fix(p);
    let (j, t, t1, t2) = (g.j(), g.t(), g.t1(), g.t2());
    let c2 = k.cos().powi(2);
    let lambda_sq = t1 * t1 - t2 * t2 + 4.0 * (j * j - t * t) * c2;
    let mix = j * t1 * g.theta1().cos() - t * t2 * g.theta2().cos();
    let delta = 4.0 * c2 * (mix * mix + (j * j - t * t) * t1 * t1 * g.theta1().sin().powi(2));
    ClosedForm { lambda_sq, delta }
}

/// `±√(λ² ± 2√δ)` with principal complex roots.
pub fn closed_form_eigs(p: &LadderParams, k: f64) -> [Complex64; 4] {
    let cf = closed_form(p, k);
    let sd = Complex64::new(cf.delta, 0.0).sqrt() * 2.0;
    let l2 = Complex64::new(cf.lambda_sq, 0.0);
    let a = (l2 + sd).sqrt();
    let b = (l2 - sd).sqrt();
    [a, -a, b, -b]
}

/// Sorts by real part, then imaginary part, treating real parts within
/// `quantum` as equal so roundoff cannot reorder degenerate bands.
pub fn sort_bands(values: &mut [Complex64], quantum: f64) {
    // + 0.0 folds -0.0 into +0.0
    let key = |z: &Complex64| (z.re / quantum).round() + 0.0;
    values.sort_by(|a, b| key(a).total_cmp(&key(b)).then(a.im.total_cmp(&b.im)));
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandGrid {
    pub k_values: Vec<f64>,
    pub bands: Vec<[Complex64; 4]>,
}

impl BandGrid {
    /// Largest spread over k of any sorted band.
    pub fn max_band_spread(&self) -> f64 {
        (0..4)
            .map(|b| {
                let mut worst: f64 = 0.0;
                for x in &self.bands {
                    for y in &self.bands {
                        worst = worst.max((x[b] - y[b]).norm());
                    }
                }
                worst
            })
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["k".to_string()];
        for b in 0..4 {
            header.push(format!("band{b}_re"));
            header.push(format!("band{b}_im"));
        }
        out.write_record(&header)?;
        for (k, row) in self.k_values.iter().zip(&self.bands) {
            let mut rec = vec![fmt_f64(*k)];
            for z in row {
                rec.push(fmt_f64(z.re));
                rec.push(fmt_f64(z.im));
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Round-trip decimal formatting for CSV output.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn dispersion(p: &LadderParams, k_values: &[f64]) -> Result<BandGrid> {
    let mut bands = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let h = build_bloch(p, k)?;
        let mut v = eigvals(&h)?.values;
        let quantum = 1e-9 * h.norm_fro().max(1.0);
        sort_bands(&mut v, quantum);
        bands.push([v[0], v[1], v[2], v[3]]);
    }
    Ok(BandGrid {
        k_values: k_values.to_vec(),
        bands,
    })
}

/// Monic polynomial `Π (x − r)^μ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimalPoly {
    pub roots: Vec<(Complex64, usize)>,
    pub degree: usize,
}

impl MinimalPoly {
    /// Coefficients from the constant term up to the leading 1.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for &(r, mult) in &self.roots {
            for _ in 0..mult {
                let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
                for (i, ci) in c.iter().enumerate() {
                    next[i + 1] += ci;
                    next[i] -= r * ci;
                }
                c = next;
            }
        }
        c
    }

    /// Multiplicities sorted descending, for structural comparisons.
    pub fn multiplicity_pattern(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.roots.iter().map(|r| r.1).collect();
        m.sort_unstable_by(|a, b| b.cmp(a));
        m
    }
}

impl fmt::Display for MinimalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .roots
            .iter()
            .map(|(r, m)| format!("(x - ({:.6}{:+.6}i))^{m}", r.re, r.im))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Distinct roots with algebraic multiplicities, clustered single-linkage.
fn root_clusters(values: &[Complex64], radius: f64) -> Vec<(Complex64, usize)> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    // single linkage by repeated relabelling; n is at most a few hundred
    let mut changed = true;
    while changed {
        changed = false;
        for a in 0..n {
            for b in a + 1..n {
                if (values[a] - values[b]).norm() <= radius && label[a] != label[b] {
                    let (lo, hi) = (label[a].min(label[b]), label[a].max(label[b]));
                    for l in label.iter_mut() {
                        if *l == hi {
                            *l = lo;
                        }
                    }
                    changed = true;
                }
            }
        }
    }
    let ids: BTreeSet<usize> = label.iter().copied().collect();
    ids.into_iter()
        .map(|id| {
            let members: Vec<Complex64> = (0..n).filter(|&i| label[i] == id).map(|i| values[i]).collect();
            let mean = members.iter().sum::<Complex64>() / members.len() as f64;
            (mean, members.len())
        })
        .collect()
}

/// Lowest-degree monic `Π (m − rI)^μ` that vanishes to `tol`, relative to
/// `Π ‖m − rI‖∞^μ`.
pub fn minimal_polynomial(m: &CMatrix, tol: f64) -> Result<MinimalPoly> {
    let n = m.require_square("minimal_polynomial")?;
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let spec = eigvals(m)?;
    let scale = spec.spectral_radius().max(1.0);
    let mut roots = root_clusters(&spec.values, ROOT_CLUSTER_RADIUS * scale);
    roots.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    let q = roots.len();
    let shifted: Vec<CMatrix> = roots.iter().map(|(r, _)| m.shifted(*r)).collect();
    let norms: Vec<f64> = shifted.iter().map(|s| s.norm_inf().max(f64::MIN_POSITIVE)).collect();
    // powers[i][e-1] = (m − r_i I)^e
    let mut powers: Vec<Vec<CMatrix>> = shifted.iter().map(|s| vec![s.clone()]).collect();

    let alg: Vec<usize> = roots.iter().map(|r| r.1).collect();
    let max_degree: usize = alg.iter().sum();
    for degree in q..=max_degree.min(n) {
        let mut mult = vec![1usize; q];
        // enumerate all assignments 1 ≤ μ_i ≤ alg_i with Σ μ_i = degree
        let mut found = None;
        enumerate_assignments(&alg, degree, 0, &mut mult, &mut |mu| {
            if found.is_some() {
                return;
            }
            let mut prod: Option<CMatrix> = None;
            let mut bound = 1.0;
            for i in 0..q {
                while powers[i].len() < mu[i] {
                    let next = &powers[i][powers[i].len() - 1] * &shifted[i];
                    powers[i].push(next);
                }
                let f = &powers[i][mu[i] - 1];
                prod = Some(match prod {
                    None => f.clone(),
                    Some(p) => &p * f,
                });
                bound *= norms[i].powi(mu[i] as i32);
            }
            let prod = prod.expect("at least one root");
            if prod.max_abs() <= tol * bound {
                found = Some(mu.to_vec());
            }
        });
        if let Some(mu) = found {
            return Ok(MinimalPoly {
                roots: roots.iter().zip(&mu).map(|((r, _), &m)| (*r, m)).collect(),
                degree,
            });
        }
    }
    Err(Error::Internal(format!(
        "no annihilating polynomial up to degree {n}; tolerance {tol} too tight for this matrix"
    )))
}

fn enumerate_assignments(alg: &[usize], remaining: usize, i: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    let q = alg.len();
    if i == q {
        if remaining == 0 {
            f(cur);
        }
        return;
    }
    let rest_min = q - i - 1;
    let rest_max: usize = alg[i + 1..].iter().sum();
    for mu in 1..=alg[i] {
        if mu > remaining || remaining - mu < rest_min {
            break;
        }
        if remaining - mu > rest_max {
            continue;
        }
        cur[i] = mu;
        enumerate_assignments(alg, remaining - mu, i + 1, cur, f);
    }
}

/// Krylov support of an excitation: dimension and the set of occupied sites.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalRange {
    pub dim: usize,
    pub support: BTreeSet<Site>,
}

/// Entries below this (relative to each unit Krylov vector) are not support.
const SUPPORT_FLOOR: f64 = 1e-10;

pub fn excitation_vector(model: &Model, lat: &LatticeSpec, site: Site, amplitudes: [Complex64; 2]) -> Result<Vec<Complex64>> {
    let n = model.n_chains();
    site.check(n, lat)?;
    if amplitudes.iter().all(|a| a.norm() == 0.0) {
        return Err(Error::Argument("excitation amplitudes are both zero".into()));
    }
    let mut v = vec![Complex64::new(0.0, 0.0); 2 * n * lat.cells];
    let base = site.base_index(n);
    v[base] = amplitudes[0];
    v[base + 1] = amplitudes[1];
    Ok(v)
}

/// Whether `cell` is on the lattice edge as seen from `source`.
pub fn at_boundary(lat: &LatticeSpec, source: usize, cell: usize) -> bool {
    match lat.boundary {
        crate::model::Boundary::Open => cell == 0 || cell + 1 == lat.cells,
        crate::model::Boundary::Periodic => lat.column_distance(source, cell) >= lat.cells / 2,
    }
}

pub fn local_range_detail(
    model: &Model,
    lat: &LatticeSpec,
    site: Site,
    amplitudes: [Complex64; 2],
    tol: f64,
) -> Result<LocalRange> {
    let h = build_real_space(model, lat)?;
    let v = excitation_vector(model, lat, site, amplitudes)?;
    let basis = krylov_basis(&h, &v, tol)?;
    let n = model.n_chains();
    let mut support = BTreeSet::new();
    for q in &basis {
        for (idx, z) in q.iter().enumerate() {
            if z.norm() > SUPPORT_FLOOR {
                let pair = idx / 2;
                support.insert(Site::new(pair % n + 1, pair / n));
            }
        }
    }
    if let Some(edge) = support.iter().find(|s| at_boundary(lat, site.cell, s.cell)) {
        return Err(Error::Inconclusive(format!(
            "Krylov support reaches cell {} of {}; use a larger lattice",
            edge.cell, lat.cells
        )));
    }
    Ok(LocalRange {
        dim: basis.len(),
        support,
    })
}

/// Dimension of the cyclic subspace generated by a single-site excitation.
pub fn local_range(model: &Model, lat: &LatticeSpec, site: Site, amplitudes: [Complex64; 2], tol: f64) -> Result<usize> {
    Ok(local_range_detail(model, lat, site, amplitudes, tol)?.dim)
}

/// `[1/√2, 1/√2]`.
pub fn default_amplitudes() -> [Complex64; 2] {
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [a, a]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DegeneracyKind {
    DP2,
    EP2First,
    EP2Second,
    EP4,
    EP2N(usize),
    NonFlat,
}

impl fmt::Display for DegeneracyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegeneracyKind::DP2 => write!(f, "DP2"),
            DegeneracyKind::EP2First => write!(f, "EP2_first"),
            DegeneracyKind::EP2Second => write!(f, "EP2_second"),
            DegeneracyKind::EP4 => write!(f, "EP4"),
            DegeneracyKind::EP2N(_) => write!(f, "EP2N"),
            DegeneracyKind::NonFlat => write!(f, "NonFlat"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracyClass {
    pub kind: DegeneracyKind,
    /// `λ` of the flat pair `±λ` (zero for EP-at-zero types), if flat.
    pub flat_energy: Option<Complex64>,
    pub minimal_poly: Option<MinimalPoly>,
    pub flat_band: Option<FlatBandReport>,
}

/// Verdict from the parameter conditions alone; `None` where the conditions
/// do not cover the point.
pub fn table_verdict(p: &LadderParams, tol: f64) -> Option<DegeneracyKind> {
    let g = gauge_fix(p);
    let (th1, th2) = (g.theta1(), g.theta2());
    let equal = (g.t1().abs() - g.t2().abs()).abs() <= tol * g.t1().abs().max(g.t2().abs()).max(1.0);
    let z1 = near_multiple_of_pi(th1, ANGLE_TOL);
    let z2 = near_multiple_of_pi(th2, ANGLE_TOL);
    let sum_or_diff = near_multiple_of_pi(th1 + th2, ANGLE_TOL) || near_multiple_of_pi(th1 - th2, ANGLE_TOL);
    if z1 && z2 && equal {
        Some(DegeneracyKind::EP2First)
    } else if !z1 && sum_or_diff && equal {
        Some(DegeneracyKind::EP4)
    } else if z1 && !z2 && !equal {
        Some(DegeneracyKind::DP2)
    } else if !z1 && !sum_or_diff && !equal {
        Some(DegeneracyKind::EP2Second)
    } else {
        None
    }
}

/// Degeneracy type implied by a flat-band minimal polynomial.
pub fn verdict_from_minimal_poly(mp: &MinimalPoly, scale: f64) -> Option<DegeneracyKind> {
    let small = |z: Complex64| z.norm() <= 1e-6 * scale.max(1.0);
    let opposite = |a: Complex64, b: Complex64| (a + b).norm() <= 1e-6 * scale.max(1.0);
    match mp.roots.as_slice() {
        [(r, 4)] if small(*r) => Some(DegeneracyKind::EP4),
        [(r, 2)] if small(*r) => Some(DegeneracyKind::EP2First),
        [(a, 2), (b, 2)] if opposite(*a, *b) && !small(*a) => Some(DegeneracyKind::EP2Second),
        [(a, 1), (b, 1)] if opposite(*a, *b) && !small(*a) => Some(DegeneracyKind::DP2),
        _ => None,
    }
}

/// Classifies a ladder point; the condition table is cross-checked against
/// the minimal polynomial of the Bloch matrix at `k = 0`.
pub fn classify(p: &LadderParams, tol: f64) -> Result<DegeneracyClass> {
    let g = gauge_fix(p);
    let strength = [g.j(), g.t(), g.t1(), g.t2()].iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let report = flat_band_conditions(&g, tol * strength);
    if !report.is_cage {
        return Ok(DegeneracyClass {
            kind: DegeneracyKind::NonFlat,
            flat_energy: None,
            minimal_poly: None,
            flat_band: Some(report),
        });
    }
    let h = build_bloch(&g, 0.0)?;
    let mp = minimal_polynomial(&h, tol)?;
    let lambda = Complex64::new(g.t1() * g.t1() - g.t2() * g.t2(), 0.0).sqrt();
    let from_mp = verdict_from_minimal_poly(&mp, strength).filter(|k| {
        // the roots must sit at ±λ
        let target = match k {
            DegeneracyKind::EP4 | DegeneracyKind::EP2First => Complex64::new(0.0, 0.0),
            _ => lambda,
        };
        mp.roots
            .iter()
            .all(|(r, _)| (r - target).norm().min((r + target).norm()) <= 1e-6 * strength)
    });
    let table = table_verdict(&g, tol);
    let kind = match (table, from_mp) {
        (Some(a), Some(b)) if a == b => a,
        (None, Some(b)) => b,
        (a, b) => {
            return Err(Error::Consistency {
                table: a.map_or("uncovered".into(), |k| k.to_string()),
                minimal_poly: b.map_or(format!("unrecognized {mp}"), |k| k.to_string()),
            })
        }
    };
    let flat_energy = match kind {
        DegeneracyKind::EP4 | DegeneracyKind::EP2First => Complex64::new(0.0, 0.0),
        _ => lambda,
    };
    Ok(DegeneracyClass {
        kind,
        flat_energy: Some(flat_energy),
        minimal_poly: Some(mp),
        flat_band: Some(report),
    })
}

/// N-chain verdict: EP2N when every rung prohibits the side paths and the
/// real-space minimal polynomial is a pure power of `x`.
pub fn classify_nchain(p: &NChainParams, lat: &LatticeSpec, tol: f64) -> Result<DegeneracyClass> {
    if !nchain_prohibited(p, 1e-10) {
        return Ok(DegeneracyClass {
            kind: DegeneracyKind::NonFlat,
            flat_energy: None,
            minimal_poly: None,
            flat_band: None,
        });
    }
    let h = build_real_space(&Model::NChain(p.clone()), lat)?;
    let mp = minimal_polynomial(&h, tol)?;
    let zero_only = matches!(mp.roots.as_slice(), [(r, _)] if r.norm() <= 1e-6 * p.max_strength().max(1.0));
    let kind = if zero_only {
        DegeneracyKind::EP2N(mp.degree)
    } else {
        DegeneracyKind::NonFlat
    };
    Ok(DegeneracyClass {
        kind,
        flat_energy: zero_only.then(|| Complex64::new(0.0, 0.0)),
        minimal_poly: Some(mp),
        flat_band: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingResult {
    pub exponent: f64,
    pub deltas: Vec<f64>,
    pub responses: Vec<f64>,
}

/// Responses below this are indistinguishable from roundoff.
const RESPONSE_FLOOR: f64 = 1e-14;

/// Log-log slope of `max_i ||E_i(j + δ)| − |E(0)||` against `δ`.
pub fn perturbation_scaling(p: &LadderParams, deltas: &[f64], k: f64) -> Result<ScalingResult> {
    if deltas.len() < 2 || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Argument("need at least two positive perturbations".into()));
    }
    let g = gauge_fix(p);
    if classify(&g, DEFAULT_TOL)?.kind == DegeneracyKind::NonFlat {
        return Err(Error::Precondition("perturbation scaling needs flat-band parameters".into()));
    }
    let e0 = eigvals(&build_bloch(&g, k)?)?;
    let base = e0.values.iter().map(|z| z.norm()).sum::<f64>() / e0.len() as f64;
    let mut responses = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let e = eigvals(&build_bloch(&g.with_j(g.j() + d)?, k)?)?;
        let r = e.values.iter().map(|z| (z.norm() - base).abs()).fold(0.0, f64::max);
        responses.push(r);
    }
    if responses.iter().all(|r| *r < RESPONSE_FLOOR) {
        return Err(Error::DegenerateResponse(format!(
            "all eigenvalue responses below {RESPONSE_FLOOR:e}"
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = deltas
        .iter()
        .zip(&responses)
        .filter(|(_, r)| **r >= RESPONSE_FLOOR)
        .map(|(d, r)| (*d, *r))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::DegenerateResponse("fewer than two resolvable responses".into()));
    }
    Ok(ScalingResult {
        exponent: fit_loglog_slope(&xs, &ys)?,
        deltas: deltas.to_vec(),
        responses,
    })
}

/// Chain strength `j = t` used for phase-diagram points.
pub const SCAN_CHAIN_STRENGTH: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ScanClass {
    Class(DegeneracyKind),
    /// `cos θ2 = 0` with `cos θ1 ≠ 0`: the balance condition has no solution.
    Undefined,
    /// Condition table and minimal polynomial disagree.
    Inconsistent,
}

impl fmt::Display for ScanClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScanClass::Class(k) => write!(f, "{k}"),
            ScanClass::Undefined => write!(f, "Undefined"),
            ScanClass::Inconsistent => write!(f, "Inconsistent"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub theta1: f64,
    pub theta2: f64,
    /// Rung pair strength used, `NaN` for undefined points.
    pub t2: f64,
    pub class: ScanClass,
    /// `cos θ1 = cos θ2 = 0`: t2 carried over from the previous column.
    pub flagged: bool,
}

/// Scan grid `θ_i = −π + 2π(i+1)/n`, covering `(−π, π]`.
pub fn scan_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (i + 1) as f64 / n as f64)
        .collect()
}

/// Classifies each `(θ1, θ2)` under `t2 = t1 cos θ1 / cos θ2`, `j = t`.
/// Rows are θ1 (outer), columns θ2 (inner).
pub fn phase_diagram_scan(t1: f64, theta1_grid: &[f64], theta2_grid: &[f64]) -> Result<Vec<ScanPoint>> {
    if !(t1 > 0.0) || !t1.is_finite() {
        return Err(Error::Argument(format!("t1 must be positive, got {t1}")));
    }
    let mut out = Vec::with_capacity(theta1_grid.len() * theta2_grid.len());
    for &th1 in theta1_grid {
        let mut prev_t2 = t1;
        for &th2 in theta2_grid {
            let (c1, c2) = (th1.cos(), th2.cos());
            let mut flagged = false;
            let (t2, th2_eff) = if c2.abs() < 1e-9 {
                if c1.abs() < 1e-9 {
                    flagged = true;
                    (prev_t2, th2)
                } else {
                    out.push(ScanPoint {
                        theta1: th1,
                        theta2: th2,
                        t2: f64::NAN,
                        class: ScanClass::Undefined,
                        flagged: false,
                    });
                    continue;
                }
            } else {
                let raw = t1 * c1 / c2;
                if raw < 0.0 {
                    (-raw, canonical_angle(th2 + std::f64::consts::PI))
                } else {
                    (raw, th2)
                }
            };
            prev_t2 = t2;
            let s = SCAN_CHAIN_STRENGTH;
            let p = LadderParams::new(s, s, t1, t2, th1, th2_eff)?;
            let class = match classify(&p, DEFAULT_TOL) {
                Ok(c) => ScanClass::Class(c.kind),
                Err(Error::Consistency { .. }) => ScanClass::Inconsistent,
                Err(e) => return Err(e),
            };
            out.push(ScanPoint {
                theta1: th1,
                theta2: th2,
                t2,
                class,
                flagged,
            });
        }
    }
    Ok(out)
}

pub fn write_scan_csv<W: Write>(points: &[ScanPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["theta1", "theta2", "t2", "class", "flagged"])?;
    for pt in points {
        out.write_record([
            fmt_f64(pt.theta1),
            fmt_f64(pt.theta2),
            fmt_f64(pt.t2),
            pt.class.to_string(),
            pt.flagged.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
