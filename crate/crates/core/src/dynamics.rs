//! Heisenberg evolution of single-site excitations, confinement checks and
//! growth characterization of site intensities.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{build_real_space, LatticeSpec, Model, Site};
use crate::numkit::{expm, linear_fit, vec_norm, CMatrix};
use crate::spectra::{at_boundary, default_amplitudes, excitation_vector, fmt_f64, DEFAULT_TOL};
use crate::transfer::{flat_band_conditions, nchain_prohibited};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExcitationSpec {
    pub site: Site,
    /// Particle and hole amplitudes; normalized before use.
    pub amplitudes: [Complex64; 2],
}

impl ExcitationSpec {
    pub fn new(site: Site) -> Self {
        Self {
            site,
            amplitudes: default_amplitudes(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Propagator {
    /// Polynomial when the excitation orbit is nilpotent, otherwise `expm`.
    Auto,
    Expm,
    /// Fails unless the orbit is nilpotent.
    Polynomial,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    /// `intensities[t][s]` with site `s = cell·N + chain − 1`.
    pub intensities: Vec<Vec<f64>>,
    pub n_chains: usize,
    pub lattice: LatticeSpec,
    pub source: Site,
    pub source_column: usize,
    /// Nilpotency index of the orbit when the exact polynomial was used.
    pub nilpotent_index: Option<usize>,
}

impl EvolutionTrace {
    pub fn site_index(&self, site: Site) -> usize {
        site.cell * self.n_chains + site.chain - 1
    }

    pub fn site_of(&self, index: usize) -> Site {
        Site::new(index % self.n_chains + 1, index / self.n_chains)
    }

    pub fn series(&self, site: Site) -> Vec<f64> {
        let i = self.site_index(site);
        self.intensities.iter().map(|row| row[i]).collect()
    }

    /// Sites whose intensity ever exceeds `tol`.
    pub fn occupied(&self, tol: f64) -> Vec<Site> {
        let n_sites = self.intensities.first().map_or(0, |r| r.len());
        (0..n_sites)
            .filter(|&s| self.intensities.iter().any(|row| row[s] > tol))
            .map(|s| self.site_of(s))
            .collect()
    }

    /// Largest `|I(c, n+d) − I(c, n−d)|` relative to the peak intensity at
    /// each time.
    pub fn mirror_asymmetry(&self) -> f64 {
        let l = self.lattice.cells;
        let n = self.source_column;
        let mut worst: f64 = 0.0;
        for row in &self.intensities {
            let peak = row.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            for d in 1..l {
                let (right, left) = match self.lattice.boundary {
                    crate::model::Boundary::Periodic => ((n + d) % l, (n + l - d % l) % l),
                    crate::model::Boundary::Open => {
                        if n + d >= l || d > n {
                            break;
                        }
                        (n + d, n - d)
                    }
                };
                for c in 1..=self.n_chains {
                    let a = row[self.site_index(Site::new(c, right))];
                    let b = row[self.site_index(Site::new(c, left))];
                    worst = worst.max((a - b).abs() / peak);
                }
            }
        }
        worst
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["time", "chain", "cell", "intensity"])?;
        for (t, row) in self.times.iter().zip(&self.intensities) {
            for (s, v) in row.iter().enumerate() {
                let site = self.site_of(s);
                out.write_record([fmt_f64(*t), site.chain.to_string(), site.cell.to_string(), fmt_f64(*v)])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// `n` uniform points on `[0, t_max]`.
pub fn uniform_times(t_max: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
}

/// Largest orbit length searched for nilpotency.
const MAX_NILPOTENT_INDEX: usize = 32;

/// Krylov vectors `v, Hv, …, H^{ν−1} v` when one more application of `H`
/// annihilates the orbit: `‖H^ν v‖ ≤ 1e-10 ‖H‖ ‖H^{ν−1} v‖`.
fn nilpotent_orbit(h: &CMatrix, v: &[Complex64]) -> Result<Option<Vec<Vec<Complex64>>>> {
    let norm_h = h.norm_inf();
    let mut orbit = vec![v.to_vec()];
    for _ in 1..=MAX_NILPOTENT_INDEX.min(h.rows()) {
        let last = orbit.last().expect("orbit is nonempty");
        let next = h.mul_vec(last)?;
        if vec_norm(&next) <= 1e-10 * norm_h * vec_norm(last) {
            return Ok(Some(orbit));
        }
        orbit.push(next);
    }
    Ok(None)
}

fn intensities(psi: &[Complex64], n_sites: usize) -> Vec<f64> {
    (0..n_sites).map(|s| psi[2 * s].norm_sqr() + psi[2 * s + 1].norm_sqr()).collect()
}

/// Whether the model is a cage (flat bands everywhere).
pub fn is_caged(model: &Model) -> bool {
    match model {
        Model::Ladder(p) => {
            let s = model.max_strength().max(1.0);
            flat_band_conditions(p, DEFAULT_TOL * s).is_cage
        }
        Model::NChain(p) => nchain_prohibited(p, 1e-10),
    }
}

pub fn evolve(model: &Model, lat: &LatticeSpec, exc: &ExcitationSpec, times: &[f64]) -> Result<EvolutionTrace> {
    evolve_with(model, lat, exc, times, Propagator::Auto)
}

pub fn evolve_with(
    model: &Model,
    lat: &LatticeSpec,
    exc: &ExcitationSpec,
    times: &[f64],
    method: Propagator,
) -> Result<EvolutionTrace> {
    if times.first() != Some(&0.0) {
        return Err(Error::Argument("time grid must start at 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Argument("time grid must be finite and strictly increasing".into()));
    }
    let h = build_real_space(model, lat)?;
    let mut v = excitation_vector(model, lat, exc.site, exc.amplitudes)?;
    let nv = vec_norm(&v);
    for z in v.iter_mut() {
        *z /= nv;
    }
    let n_chains = model.n_chains();
    let n_sites = n_chains * lat.cells;

    let orbit = match method {
        Propagator::Expm => None,
        _ => nilpotent_orbit(&h, &v)?,
    };
    if method == Propagator::Polynomial && orbit.is_none() {
        return Err(Error::Precondition("excitation orbit is not nilpotent".into()));
    }
    let mut rows = Vec::with_capacity(times.len());
    let nilpotent_index = orbit.as_ref().map(|o| o.len());
    match orbit {
        Some(orbit) => {
            for &t in times {
                // Σ (−it)^d / d! H^d v
                let mut psi = vec![Complex64::new(0.0, 0.0); v.len()];
                let mut coeff = Complex64::new(1.0, 0.0);
                for (d, w) in orbit.iter().enumerate() {
                    if d > 0 {
                        coeff *= Complex64::new(0.0, -t) / d as f64;
                    }
                    for (p, x) in psi.iter_mut().zip(w) {
                        *p += coeff * x;
                    }
                }
                rows.push(intensities(&psi, n_sites));
            }
        }
        None => {
            let mut cache: HashMap<u64, CMatrix> = HashMap::new();
            let mut psi = v.clone();
            rows.push(intensities(&psi, n_sites));
            for w in times.windows(2) {
                let dt = w[1] - w[0];
                // uniform grids produce a handful of distinct float steps
                let key = dt.to_bits();
                let step = match cache.entry(key) {
                    Entry::Occupied(e) => e.into_mut(),
                    Entry::Vacant(e) => e.insert(expm(&h.scale(Complex64::new(0.0, -dt)))?),
                };
                psi = step.mul_vec(&psi)?;
                if psi.iter().any(|z| !z.is_finite()) {
                    return Err(Error::Range("state overflowed during evolution".into()));
                }
                rows.push(intensities(&psi, n_sites));
            }
        }
    }

    let trace = EvolutionTrace {
        times: times.to_vec(),
        intensities: rows,
        n_chains,
        lattice: *lat,
        source: exc.site,
        source_column: exc.site.cell,
        nilpotent_index,
    };
    if is_caged(model) {
        check_boundary(&trace)?;
    }
    Ok(trace)
}

/// Boundary intensity relative to `max(1, peak)` above this is contamination.
const BOUNDARY_TOL: f64 = 1e-8;

fn check_boundary(trace: &EvolutionTrace) -> Result<()> {
    for (t, row) in trace.times.iter().zip(&trace.intensities) {
        let peak = row.iter().cloned().fold(1.0, f64::max);
        for (s, v) in row.iter().enumerate() {
            let site = trace.site_of(s);
            if *v > BOUNDARY_TOL * peak && at_boundary(&trace.lattice, trace.source_column, site.cell) {
                return Err(Error::Inconclusive(format!(
                    "intensity {v:.3e} reached boundary cell {} at t = {t}; use a larger lattice",
                    site.cell
                )));
            }
        }
    }
    Ok(())
}

/// Every intensity farther than `radius` columns from the source stays `≤ tol`.
pub fn confinement_check(trace: &EvolutionTrace, radius: usize, tol: f64) -> bool {
    max_leak(trace, radius) <= tol
}

/// Largest intensity outside `radius` columns of the source.
pub fn max_leak(trace: &EvolutionTrace, radius: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for row in &trace.intensities {
        for (s, v) in row.iter().enumerate() {
            let site = trace.site_of(s);
            if trace.lattice.column_distance(site.cell, trace.source_column) > radius {
                worst = worst.max(*v);
            }
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Growth {
    Constant,
    Polynomial { degree: u32 },
    /// Half the dominant angular frequency of the intensity, i.e. the
    /// eigenfrequency of the amplitude.
    Oscillatory { freq: f64 },
    /// Exponential rate of the intensity.
    Exponential { rate: f64 },
}

/// Relative variation below this is constant.
const CONSTANT_TOL: f64 = 1e-6;
/// Minimum coefficient of determination for log-linear growth.
const EXP_R2: f64 = 0.999;
/// Share of detrended variance a single frequency must explain.
const OSC_SHARE: f64 = 0.99;
const MIN_PERIODS: f64 = 5.0;
/// Polynomial fits must be this close to an integer degree.
const DEGREE_SLACK: f64 = 0.2;

pub fn growth_character(trace: &EvolutionTrace, site: Site) -> Result<Growth> {
    site.check(trace.n_chains, &trace.lattice)?;
    let ts = &trace.times;
    let ys = trace.series(site);
    if ts.len() < 4 {
        return Err(Error::AmbiguousFit("need at least four time points".into()));
    }
    let peak = ys.iter().cloned().fold(0.0, f64::max);
    let low = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    if peak == 0.0 || (peak - low) / peak < CONSTANT_TOL {
        return Ok(Growth::Constant);
    }

    // trailing decade of time
    let t_max = *ts.last().expect("nonempty");
    let window: Vec<(f64, f64)> = ts
        .iter()
        .zip(&ys)
        .filter(|(t, y)| **t >= t_max / 10.0 && **t > 0.0 && **y > 0.0)
        .map(|(t, y)| (*t, *y))
        .collect();
    let mut notes = Vec::new();

    let mut loglog = None;
    if window.len() >= 3 {
        let lt: Vec<f64> = window.iter().map(|w| w.0).collect();
        let ly: Vec<f64> = window.iter().map(|w| w.1.ln()).collect();
        let llt: Vec<f64> = lt.iter().map(|t| t.ln()).collect();
        let (_, rate, rss_lin) = linear_fit(&lt, &ly)?;
        let (_, slope, rss_log) = linear_fit(&llt, &ly)?;
        let tss: f64 = {
            let m = ly.iter().sum::<f64>() / ly.len() as f64;
            ly.iter().map(|y| (y - m).powi(2)).sum()
        };
        let r2_lin = 1.0 - rss_lin / tss.max(f64::MIN_POSITIVE);
        let r2_log = 1.0 - rss_log / tss.max(f64::MIN_POSITIVE);
        notes.push(format!("log-linear R2 {r2_lin:.6}, log-log R2 {r2_log:.6} slope {slope:.4}"));
        if r2_lin >= EXP_R2 && rss_lin < rss_log && rate > 0.0 {
            return Ok(Growth::Exponential { rate });
        }
        loglog = Some((slope, r2_log));
    }

    if let Some((omega, share)) = dominant_frequency(ts, &ys) {
        notes.push(format!("dominant intensity frequency {omega:.6} explains {share:.6}"));
        let periods = omega * (ts[ts.len() - 1] - ts[0]) / (2.0 * std::f64::consts::PI);
        if share >= OSC_SHARE && periods >= MIN_PERIODS {
            return Ok(Growth::Oscillatory { freq: omega / 2.0 });
        }
    }

    if let Some((slope, r2)) = loglog {
        let degree = slope.round();
        if r2 >= EXP_R2 && degree >= 1.0 && (slope - degree).abs() <= DEGREE_SLACK {
            return Ok(Growth::Polynomial { degree: degree as u32 });
        }
    }
    Err(Error::AmbiguousFit(notes.join("; ")))
}

/// Best single-frequency fit `a + b t + c cos ωt + d sin ωt`; returns `ω`
/// and the share of the linearly detrended variance it explains.
fn dominant_frequency(ts: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = ts.len();
    let span = ts[n - 1] - ts[0];
    if span <= 0.0 {
        return None;
    }
    let (a, b, _) = linear_fit(ts, ys).ok()?;
    let resid: Vec<f64> = ts.iter().zip(ys).map(|(t, y)| y - a - b * t).collect();
    let var: f64 = resid.iter().map(|r| r * r).sum();
    if var == 0.0 {
        return None;
    }
    let dt = span / (n - 1) as f64;
    let nyquist = std::f64::consts::PI / dt;
    let w_min = std::f64::consts::PI / span;
    let explained = |w: f64| -> f64 { sinusoid_share(ts, ys, w, var) };
    let steps = 4000;
    let mut best = (w_min, explained(w_min));
    for i in 1..=steps {
        let w = w_min + (nyquist - w_min) * i as f64 / steps as f64;
        let e = explained(w);
        if e > best.1 {
            best = (w, e);
        }
    }
    // golden-section refinement around the grid maximum
    let h = (nyquist - w_min) / steps as f64;
    let (mut lo, mut hi) = ((best.0 - h).max(w_min), (best.0 + h).min(nyquist));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if explained(x1) > explained(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let w = 0.5 * (lo + hi);
    Some((w, explained(w)))
}

/// Share of `var` (detrended residual energy) removed by adding a sinusoid
/// of angular frequency `w` to the linear model.
fn sinusoid_share(ts: &[f64], ys: &[f64], w: f64, var: f64) -> f64 {
    // normal equations for [1, t, cos, sin]
    let mut ata = [[0.0f64; 4]; 4];
    let mut aty = [0.0f64; 4];
    for (t, y) in ts.iter().zip(ys) {
        let row = [1.0, *t, (w * t).cos(), (w * t).sin()];
        for i in 0..4 {
            aty[i] += row[i] * y;
            for j in 0..4 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let Some(coef) = solve4(ata, aty) else {
        return 0.0;
    };
    let rss: f64 = ts
        .iter()
        .zip(ys)
        .map(|(t, y)| {
            let fit = coef[0] + coef[1] * t + coef[2] * (w * t).cos() + coef[3] * (w * t).sin();
            (y - fit).powi(2)
        })
        .sum();
    1.0 - rss / var
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for k in 0..4 {
        let p = (k..4).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-300 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..4 {
            let f = a[i][k] / a[k][k];
            for j in k..4 {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = [0.0; 4];
    for i in (0..4).rev() {
        let s: f64 = (i + 1..4).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    fn trace(p: crate::model::LadderParams, t_max: f64) -> EvolutionTrace {
        let lat = LatticeSpec::periodic(32);
        let exc = ExcitationSpec::new(Site::new(1, 16));
        evolve(&p.into(), &lat, &exc, &uniform_times(t_max, 201)).unwrap()
    }

    #[test]
    fn initial_state_is_normalized() {
        let tr = trace(presets::ep4(), 1.0);
        let row = &tr.intensities[0];
        let src = tr.site_index(Site::new(1, 16));
        assert!((row[src] - 1.0).abs() < 1e-15);
        assert!(row.iter().enumerate().all(|(i, v)| i == src || *v == 0.0));
    }

    #[test]
    fn first_type_occupies_four_sites() {
        let tr = trace(presets::ep2_first(), 10.0);
        let mut occ = tr.occupied(1e-12);
        occ.sort();
        let expected = vec![Site::new(1, 15), Site::new(1, 16), Site::new(1, 17), Site::new(2, 16)];
        assert_eq!(occ, expected);
        assert_eq!(growth_character(&tr, Site::new(2, 16)).unwrap(), Growth::Polynomial { degree: 2 });
    }

    #[test]
    fn ep4_source_is_constant() {
        let tr = trace(presets::ep4(), 10.0);
        assert_eq!(growth_character(&tr, Site::new(1, 16)).unwrap(), Growth::Constant);
    }

    #[test]
    fn second_type_source_oscillates() {
        let tr = trace(presets::ep2_second(), 10.0);
        match growth_character(&tr, Site::new(1, 16)).unwrap() {
            Growth::Oscillatory { freq } => assert!((freq - 2.0 * 2f64.sqrt()).abs() < 1e-3, "{freq}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dp_grows_exponentially_and_stays_caged() {
        let tr = trace(presets::dp2(), 10.0);
        assert!(confinement_check(&tr, 1, 1e-10));
        match growth_character(&tr, Site::new(1, 16)).unwrap() {
            Growth::Exponential { rate } => assert!((rate - 2.0 * 3f64.sqrt()).abs() < 0.05, "{rate}"),
            other => panic!("{other:?}"),
        }
        assert!(tr.mirror_asymmetry() < 1e-12);
    }

    #[test]
    fn broken_cage_spreads() {
        let p = crate::model::LadderParams::new(2.0, 1.0, 1.0, 2.0, 0.0, std::f64::consts::PI / 3.0).unwrap();
        let tr = trace(p, 2.0);
        assert!(!confinement_check(&tr, 1, 1e-3));
    }

    #[test]
    fn polynomial_and_expm_agree() {
        let lat = LatticeSpec::periodic(16);
        let exc = ExcitationSpec::new(Site::new(1, 8));
        let times = uniform_times(10.0, 21);
        let m: Model = presets::ep4().into();
        let a = evolve_with(&m, &lat, &exc, &times, Propagator::Polynomial).unwrap();
        let b = evolve_with(&m, &lat, &exc, &times, Propagator::Expm).unwrap();
        assert_eq!(a.nilpotent_index, Some(4));
        for (ra, rb) in a.intensities.iter().zip(&b.intensities) {
            let peak = ra.iter().cloned().fold(1.0, f64::max);
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).abs() <= 1e-12 * peak, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn bad_time_grids() {
        let lat = LatticeSpec::periodic(8);
        let exc = ExcitationSpec::new(Site::new(1, 4));
        let m: Model = presets::ep4().into();
        assert!(evolve(&m, &lat, &exc, &[0.5, 1.0]).is_err());
        assert!(evolve(&m, &lat, &exc, &[0.0, 1.0, 1.0]).is_err());
    }
}
