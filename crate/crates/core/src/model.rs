//! Ladder and N-chain BdG models: parameters, Bloch and real-space
//! dynamical matrices, gauge transformations and the plaquette Wilson loop.
//!
//! Real-space basis: site `(chain, cell)` owns the particle/hole pair at flat
//! indices `2·(cell·N + chain − 1) + {0, 1}`. Chain 1 is the top chain
//! (chain `a` of the ladder), chain N the bottom one.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::numkit::CMatrix;

/// Phases below this are treated as zero by [`LadderParams::is_gauge_fixed`].
pub const GAUGE_TOL: f64 = 1e-12;

/// Maps an angle into `(−π, π]`.
pub fn canonical_angle(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Angle tolerance for "is a multiple of π" tests.
pub const ANGLE_TOL: f64 = 1e-9;

/// Whether `x` lies within `tol` radians of some `nπ`.
pub fn near_multiple_of_pi(x: f64, tol: f64) -> bool {
    let r = x.rem_euclid(PI);
    r.min(PI - r) <= tol
}

fn cis(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Two-chain model couplings. Phases are kept in `(−π, π]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLadder", into = "RawLadder")]
pub struct LadderParams {
    j: f64,
    t: f64,
    t1: f64,
    t2: f64,
    theta1: f64,
    theta2: f64,
    eta_a: f64,
    eta_b: f64,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLadder {
    j: f64,
    t: f64,
    t1: f64,
    t2: f64,
    theta1: f64,
    theta2: f64,
    #[serde(default)]
    eta_a: f64,
    #[serde(default)]
    eta_b: f64,
}

impl TryFrom<RawLadder> for LadderParams {
    type Error = Error;

    fn try_from(r: RawLadder) -> Result<Self> {
        LadderParams::with_gauge(r.j, r.t, r.t1, r.t2, r.theta1, r.theta2, r.eta_a, r.eta_b)
    }
}

impl From<LadderParams> for RawLadder {
    fn from(p: LadderParams) -> Self {
        RawLadder {
            j: p.j,
            t: p.t,
            t1: p.t1,
            t2: p.t2,
            theta1: p.theta1,
            theta2: p.theta2,
            eta_a: p.eta_a,
            eta_b: p.eta_b,
        }
    }
}

impl LadderParams {
    /// Gauge-fixed parameters (`ηa = ηb = 0`).
    pub fn new(j: f64, t: f64, t1: f64, t2: f64, theta1: f64, theta2: f64) -> Result<Self> {
        Self::with_gauge(j, t, t1, t2, theta1, theta2, 0.0, 0.0)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_gauge(
        j: f64,
        t: f64,
        t1: f64,
        t2: f64,
        theta1: f64,
        theta2: f64,
        eta_a: f64,
        eta_b: f64,
    ) -> Result<Self> {
        let all = [j, t, t1, t2, theta1, theta2, eta_a, eta_b];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("ladder parameters must be finite".into()));
        }
        if t1 < 0.0 || t2 < 0.0 {
            return Err(Error::Argument(format!(
                "rung strengths must be nonnegative (t1 = {t1}, t2 = {t2}); move signs into the phases"
            )));
        }
        Ok(Self {
            j,
            t,
            t1,
            t2,
            theta1: canonical_angle(theta1),
            theta2: canonical_angle(theta2),
            eta_a: canonical_angle(eta_a),
            eta_b: canonical_angle(eta_b),
        })
    }

    pub fn j(&self) -> f64 {
        self.j
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn t1(&self) -> f64 {
        self.t1
    }
    pub fn t2(&self) -> f64 {
        self.t2
    }
    pub fn theta1(&self) -> f64 {
        self.theta1
    }
    pub fn theta2(&self) -> f64 {
        self.theta2
    }
    pub fn eta_a(&self) -> f64 {
        self.eta_a
    }
    pub fn eta_b(&self) -> f64 {
        self.eta_b
    }

    /// Same parameters with the chain conjugated coupling replaced.
    pub fn with_j(&self, j: f64) -> Result<Self> {
        Self::with_gauge(j, self.t, self.t1, self.t2, self.theta1, self.theta2, self.eta_a, self.eta_b)
    }

    pub fn is_gauge_fixed(&self) -> bool {
        self.eta_a.abs() + self.eta_b.abs() <= GAUGE_TOL
    }

    fn require_gauge_fixed(&self, what: &str) -> Result<()> {
        if self.is_gauge_fixed() {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "{what} needs gauge-fixed parameters (eta_a = {}, eta_b = {}); call gauge_fix first",
                self.eta_a, self.eta_b
            )))
        }
    }

    /// `Φ1 = 2θ1 + ηb − ηa`, canonical.
    pub fn phi1(&self) -> f64 {
        canonical_angle(2.0 * self.theta1 + self.eta_b - self.eta_a)
    }

    /// `Φ2 = 2θ2 − ηa − ηb`, canonical.
    pub fn phi2(&self) -> f64 {
        canonical_angle(2.0 * self.theta2 - self.eta_a - self.eta_b)
    }

    /// Chain hop for chain `a` (`b` when `lower`).
    pub fn chain_hop(&self, lower: bool) -> CMatrix {
        let eta = if lower { self.eta_b } else { self.eta_a };
        CMatrix::from_rows(&[[re(self.j), self.t * cis(eta)], [-self.t * cis(-eta), re(-self.j)]])
    }

    /// Hop from the lower chain into the upper one.
    pub fn u_up(&self) -> CMatrix {
        rung_up(self.t1, self.t2, self.theta1, self.theta2)
    }

    /// Hop from the upper chain into the lower one.
    pub fn u_down(&self) -> CMatrix {
        rung_down(self.t1, self.t2, self.theta1, self.theta2)
    }
}

pub(crate) fn rung_up(t1: f64, t2: f64, theta1: f64, theta2: f64) -> CMatrix {
    CMatrix::from_rows(&[
        [t1 * cis(theta1), t2 * cis(theta2)],
        [-t2 * cis(-theta2), -t1 * cis(-theta1)],
    ])
}

pub(crate) fn rung_down(t1: f64, t2: f64, theta1: f64, theta2: f64) -> CMatrix {
    CMatrix::from_rows(&[
        [t1 * cis(-theta1), t2 * cis(theta2)],
        [-t2 * cis(-theta2), -t1 * cis(theta1)],
    ])
}

/// N coupled nilpotent chains; rung `m` joins chain `m` (upper) and `m+1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNChain", into = "RawNChain")]
pub struct NChainParams {
    chain_strengths: Vec<f64>,
    rung_t1: Vec<f64>,
    rung_t2: Vec<f64>,
    rung_theta1: Vec<f64>,
    rung_theta2: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNChain {
    chain_strengths: Vec<f64>,
    rung_t1: Vec<f64>,
    rung_t2: Vec<f64>,
    rung_theta1: Vec<f64>,
    rung_theta2: Vec<f64>,
}

impl TryFrom<RawNChain> for NChainParams {
    type Error = Error;

    fn try_from(r: RawNChain) -> Result<Self> {
        NChainParams::new(r.chain_strengths, r.rung_t1, r.rung_t2, r.rung_theta1, r.rung_theta2)
    }
}

impl From<NChainParams> for RawNChain {
    fn from(p: NChainParams) -> Self {
        RawNChain {
            chain_strengths: p.chain_strengths,
            rung_t1: p.rung_t1,
            rung_t2: p.rung_t2,
            rung_theta1: p.rung_theta1,
            rung_theta2: p.rung_theta2,
        }
    }
}

impl NChainParams {
    pub fn new(
        chain_strengths: Vec<f64>,
        rung_t1: Vec<f64>,
        rung_t2: Vec<f64>,
        rung_theta1: Vec<f64>,
        rung_theta2: Vec<f64>,
    ) -> Result<Self> {
        let n = chain_strengths.len();
        if n < 2 {
            return Err(Error::Argument(format!("need at least 2 chains, got {n}")));
        }
        for (name, v) in [
            ("rung_t1", &rung_t1),
            ("rung_t2", &rung_t2),
            ("rung_theta1", &rung_theta1),
            ("rung_theta2", &rung_theta2),
        ] {
            if v.len() != n - 1 {
                return Err(Error::Argument(format!("{name} has length {}, expected {}", v.len(), n - 1)));
            }
        }
        let finite = chain_strengths
            .iter()
            .chain(&rung_t1)
            .chain(&rung_t2)
            .chain(&rung_theta1)
            .chain(&rung_theta2)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Argument("N-chain parameters must be finite".into()));
        }
        if rung_t1.iter().chain(&rung_t2).any(|&v| v < 0.0) {
            return Err(Error::Argument("rung strengths must be nonnegative".into()));
        }
        Ok(Self {
            chain_strengths,
            rung_t1,
            rung_t2,
            rung_theta1: rung_theta1.into_iter().map(canonical_angle).collect(),
            rung_theta2: rung_theta2.into_iter().map(canonical_angle).collect(),
        })
    }

    pub fn n_chains(&self) -> usize {
        self.chain_strengths.len()
    }
    pub fn chain_strengths(&self) -> &[f64] {
        &self.chain_strengths
    }
    pub fn rung_t1(&self) -> &[f64] {
        &self.rung_t1
    }
    pub fn rung_t2(&self) -> &[f64] {
        &self.rung_t2
    }
    pub fn rung_theta1(&self) -> &[f64] {
        &self.rung_theta1
    }
    pub fn rung_theta2(&self) -> &[f64] {
        &self.rung_theta2
    }

    /// `t_m [[1, 1], [−1, −1]]` for chain `m` (1-based).
    pub fn chain_hop(&self, chain: usize) -> CMatrix {
        let s = self.chain_strengths[chain - 1];
        CMatrix::from_real_rows(&[[s, s], [-s, -s]])
    }

    /// Hop from chain `m+1` into chain `m` across rung `m` (1-based).
    pub fn u_up(&self, rung: usize) -> CMatrix {
        let r = rung - 1;
        rung_up(self.rung_t1[r], self.rung_t2[r], self.rung_theta1[r], self.rung_theta2[r])
    }

    /// Hop from chain `m` into chain `m+1` across rung `m` (1-based).
    pub fn u_down(&self, rung: usize) -> CMatrix {
        let r = rung - 1;
        rung_down(self.rung_t1[r], self.rung_t2[r], self.rung_theta1[r], self.rung_theta2[r])
    }

    pub fn max_strength(&self) -> f64 {
        self.chain_strengths
            .iter()
            .chain(&self.rung_t1)
            .chain(&self.rung_t2)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Either model, as read from a configuration file.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Ladder(LadderParams),
    NChain(NChainParams),
}

impl From<LadderParams> for Model {
    fn from(p: LadderParams) -> Self {
        Model::Ladder(p)
    }
}

impl From<NChainParams> for Model {
    fn from(p: NChainParams) -> Self {
        Model::NChain(p)
    }
}

impl Model {
    pub fn n_chains(&self) -> usize {
        match self {
            Model::Ladder(_) => 2,
            Model::NChain(p) => p.n_chains(),
        }
    }

    /// Parses `{"model": "ladder" | "nchain", ...}`; unknown keys are errors.
    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Config("model parameters must be a JSON object".into()))?;
        let mut rest = obj.clone();
        let kind = match rest.remove("model") {
            Some(Value::String(s)) => s,
            Some(other) => return Err(Error::Config(format!("\"model\" must be a string, got {other}"))),
            None => "ladder".to_string(),
        };
        let rest = Value::Object(rest);
        let parsed = match kind.as_str() {
            "ladder" => serde_json::from_value::<LadderParams>(rest).map(Model::Ladder),
            "nchain" => serde_json::from_value::<NChainParams>(rest).map(Model::NChain),
            other => return Err(Error::Config(format!("unknown model \"{other}\" (expected ladder or nchain)"))),
        };
        parsed.map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        let (kind, v) = match self {
            Model::Ladder(p) => ("ladder", serde_json::to_value(p)),
            Model::NChain(p) => ("nchain", serde_json::to_value(p)),
        };
        let mut v = v.expect("parameters serialize to JSON");
        if let Value::Object(m) = &mut v {
            m.insert("model".into(), Value::String(kind.into()));
        }
        v
    }

    pub fn max_strength(&self) -> f64 {
        match self {
            Model::Ladder(p) => [p.j, p.t, p.t1, p.t2].iter().fold(0.0f64, |m, v| m.max(v.abs())),
            Model::NChain(p) => p.max_strength(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub cells: usize,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn periodic(cells: usize) -> Self {
        Self {
            cells,
            boundary: Boundary::Periodic,
        }
    }

    pub fn open(cells: usize) -> Self {
        Self {
            cells,
            boundary: Boundary::Open,
        }
    }

    /// Column distance, wrapping around a periodic ring.
    pub fn column_distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b);
        match self.boundary {
            Boundary::Open => d,
            Boundary::Periodic => d.min(self.cells - d),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Particle = 0,
    Hole = 1,
}

/// A lattice site: chain (1-based, top to bottom) and cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub chain: usize,
    pub cell: usize,
}

impl Site {
    pub fn new(chain: usize, cell: usize) -> Self {
        Self { chain, cell }
    }

    /// Index of the particle component; the hole follows it.
    pub fn base_index(&self, n_chains: usize) -> usize {
        2 * (self.cell * n_chains + self.chain - 1)
    }

    pub fn check(&self, n_chains: usize, lat: &LatticeSpec) -> Result<()> {
        if self.chain == 0 || self.chain > n_chains || self.cell >= lat.cells {
            return Err(Error::Argument(format!(
                "site (chain {}, cell {}) outside {n_chains} chains x {} cells",
                self.chain, self.cell, lat.cells
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteIndex {
    pub chain: usize,
    pub cell: usize,
    pub component: Component,
}

impl SiteIndex {
    pub fn flat(&self, n_chains: usize) -> usize {
        Site::new(self.chain, self.cell).base_index(n_chains) + self.component as usize
    }

    pub fn from_flat(index: usize, n_chains: usize) -> Self {
        let component = if index.is_multiple_of(2) { Component::Particle } else { Component::Hole };
        let pair = index / 2;
        Self {
            chain: pair % n_chains + 1,
            cell: pair / n_chains,
            component,
        }
    }
}

/// Momentum-space dynamical matrix in the basis `(α_k, β_k, α†_{−k}, β†_{−k})`.
pub fn build_bloch(p: &LadderParams, k: f64) -> Result<CMatrix> {
    p.require_gauge_fixed("build_bloch")?;
    let c = k.cos();
    let hd = re(2.0 * p.j * c);
    let dd = re(2.0 * p.t * c);
    let h_ab = p.t1 * cis(p.theta1);
    let h_ba = p.t1 * cis(-p.theta1);
    let d_off = p.t2 * cis(p.theta2);
    let h = [[hd, h_ab], [h_ba, hd]];
    let d = [[dd, d_off], [d_off, dd]];
    Ok(CMatrix::from_fn(4, 4, |r, col| match (r < 2, col < 2) {
        (true, true) => h[r][col],
        (true, false) => d[r][col - 2],
        (false, true) => -d[r - 2][col].conj(),
        (false, false) => -h[r - 2][col - 2].conj(),
    }))
}

/// Real-space dynamical matrix. Ladder parameters may carry any gauge.
pub fn build_real_space(p: &Model, lat: &LatticeSpec) -> Result<CMatrix> {
    if lat.cells < 2 {
        return Err(Error::Size(format!("need at least 2 cells, got {}", lat.cells)));
    }
    let n = p.n_chains();
    let dim = 2 * n * lat.cells;
    let mut h = CMatrix::zeros(dim, dim);
    let chain_hops: Vec<CMatrix> = match p {
        Model::Ladder(lp) => vec![lp.chain_hop(false), lp.chain_hop(true)],
        Model::NChain(np) => (1..=n).map(|m| np.chain_hop(m)).collect(),
    };
    let rungs: Vec<(CMatrix, CMatrix)> = match p {
        Model::Ladder(lp) => vec![(lp.u_up(), lp.u_down())],
        Model::NChain(np) => (1..n).map(|r| (np.u_up(r), np.u_down(r))).collect(),
    };
    let idx = |chain: usize, cell: usize| Site::new(chain, cell).base_index(n);
    for cell in 0..lat.cells {
        let next = if cell + 1 < lat.cells {
            Some(cell + 1)
        } else if lat.boundary == Boundary::Periodic {
            Some(0)
        } else {
            None
        };
        for chain in 1..=n {
            if let Some(nx) = next {
                let u = &chain_hops[chain - 1];
                h.add_block(idx(chain, nx), idx(chain, cell), u);
                h.add_block(idx(chain, cell), idx(chain, nx), u);
            }
        }
        for (r, (up, down)) in rungs.iter().enumerate() {
            let upper = r + 1;
            h.add_block(idx(upper, cell), idx(upper + 1, cell), up);
            h.add_block(idx(upper + 1, cell), idx(upper, cell), down);
        }
    }
    Ok(h)
}

/// Rephasing `α → α e^{iφa}`, `β → β e^{iφb}`.
pub fn gauge_transform(p: &LadderParams, phi_a: f64, phi_b: f64) -> LadderParams {
    LadderParams {
        theta1: canonical_angle(p.theta1 + phi_b - phi_a),
        theta2: canonical_angle(p.theta2 - phi_b - phi_a),
        eta_a: canonical_angle(p.eta_a - 2.0 * phi_a),
        eta_b: canonical_angle(p.eta_b - 2.0 * phi_b),
        ..*p
    }
}

/// Gauge representative with `ηa = ηb = 0`.
pub fn gauge_fix(p: &LadderParams) -> LadderParams {
    if p.is_gauge_fixed() {
        return *p;
    }
    let mut q = gauge_transform(p, p.eta_a / 2.0, p.eta_b / 2.0);
    q.eta_a = 0.0;
    q.eta_b = 0.0;
    q
}

/// `Tr(U_l U_↑ U_r U_↓) / (j t t1 t2)` around the plaquette
/// `a → b → b' → a' → a`.
pub fn wilson_loop(p: &LadderParams) -> Result<Complex64> {
    let j_loop = p.j * p.t * p.t1 * p.t2;
    if j_loop == 0.0 {
        return Err(Error::Domain(format!(
            "Wilson loop needs nonzero j, t, t1, t2 (got {}, {}, {}, {})",
            p.j, p.t, p.t1, p.t2
        )));
    }
    let u_l = p.chain_hop(false);
    let u_r = p.chain_hop(true);
    let loop_m = &(&(&u_l * &p.u_up()) * &u_r) * &p.u_down();
    Ok(loop_m.trace() / j_loop)
}

/// Equal-strength N-chain construction whose flat band is a single EP of
/// order 2N at zero energy.
pub fn make_ep2n_params(n: usize, strength: f64, theta: f64) -> Result<NChainParams> {
    if n < 2 {
        return Err(Error::Argument(format!("need N >= 2 chains, got {n}")));
    }
    if !(strength > 0.0) || !strength.is_finite() {
        return Err(Error::Argument(format!("strength must be positive, got {strength}")));
    }
    if near_multiple_of_pi(theta, ANGLE_TOL) {
        return Err(Error::Precondition(format!(
            "theta = {theta} is a multiple of pi, which lowers the EP order"
        )));
    }
    NChainParams::new(
        vec![strength; n],
        vec![strength; n - 1],
        vec![strength; n - 1],
        vec![theta; n - 1],
        vec![-theta; n - 1],
    )
}

/// The four reference parameter sets with `j = t = 2`.
pub mod presets {
    use super::LadderParams;
    use std::f64::consts::PI;

    pub fn ep4() -> LadderParams {
        LadderParams::new(2.0, 2.0, 2.0, 2.0, PI / 3.0, -PI / 3.0).expect("valid preset")
    }

    pub fn ep2_second() -> LadderParams {
        LadderParams::new(2.0, 2.0, 2.0 * 3f64.sqrt(), 2.0, PI / 3.0, PI / 6.0).expect("valid preset")
    }

    pub fn ep2_first() -> LadderParams {
        LadderParams::new(2.0, 2.0, 2.0, 2.0, 0.0, 0.0).expect("valid preset")
    }

    pub fn dp2() -> LadderParams {
        LadderParams::new(2.0, 2.0, 1.0, 2.0, 0.0, PI / 3.0).expect("valid preset")
    }

    /// `(name, params)` in the order DP2, 1stEP2, 2ndEP2, EP4.
    pub fn all() -> [(&'static str, LadderParams); 4] {
        [
            ("DP2", dp2()),
            ("EP2_first", ep2_first()),
            ("EP2_second", ep2_second()),
            ("EP4", ep4()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{eigvals, multiset_distance};

    #[test]
    fn canonical_angles() {
        assert_eq!(canonical_angle(PI), PI);
        assert_eq!(canonical_angle(-PI), PI);
        assert!((canonical_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(canonical_angle(0.25), 0.25);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LadderParams::new(f64::NAN, 1.0, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(LadderParams::new(1.0, 1.0, -1.0, 1.0, 0.0, 0.0).is_err());
        assert!(NChainParams::new(vec![1.0], vec![], vec![], vec![], vec![]).is_err());
        assert!(NChainParams::new(vec![1.0; 3], vec![1.0], vec![1.0; 2], vec![0.0; 2], vec![0.0; 2]).is_err());
    }

    #[test]
    fn bloch_requires_gauge_fix() {
        let p = LadderParams::with_gauge(1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.3, 0.0).unwrap();
        assert!(matches!(build_bloch(&p, 0.0), Err(Error::Precondition(_))));
        assert!(build_bloch(&gauge_fix(&p), 0.0).is_ok());
    }

    #[test]
    fn bloch_at_half_pi_has_only_rung_terms() {
        let p = LadderParams::new(1.7, 0.9, 1.2, 0.4, 0.3, -1.1).unwrap();
        let h = build_bloch(&p, PI / 2.0).unwrap();
        for i in 0..4 {
            assert!(h[(i, i)].norm() < 1e-15);
        }
        assert!(h[(0, 2)].norm() < 1e-15 && h[(1, 3)].norm() < 1e-15);
    }

    #[test]
    fn bloch_matches_gamma_matrix_form() {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let s1 = CMatrix::from_rows(&[[z, o], [o, z]]);
        let s2 = CMatrix::from_rows(&[[z, -i], [i, z]]);
        let s3 = CMatrix::from_rows(&[[o, z], [z, -o]]);
        let id = CMatrix::identity(2);
        let kron = |a: &CMatrix, b: &CMatrix| CMatrix::from_fn(4, 4, |r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)]);
        let is2 = s2.scale(i);
        let g1 = kron(&is2, &s1);
        let g3 = kron(&is2, &s3);
        let g0 = kron(&s3, &id);
        let g5 = kron(&s1, &id);
        let p = LadderParams::new(1.3, 0.7, 1.1, 0.6, 0.9, -0.4).unwrap();
        for k in [0.0, 0.4, 2.0, PI] {
            let c = k.cos();
            let terms = [
                g0.scale(re(2.0 * p.j * c)),
                (&g1 * &g5).scale(re(p.t1 * p.theta1.cos())),
                (&g1 * &g3).scale(i * p.t1 * p.theta1.sin()),
                (&g0 * &g5).scale(re(2.0 * p.t * c)),
                g1.scale(re(p.t2 * p.theta2.cos())),
                (&g0 * &g1).scale(i * p.t2 * p.theta2.sin()),
            ];
            let mut sum = CMatrix::zeros(4, 4);
            for term in &terms {
                sum = &sum + term;
            }
            assert!(sum.max_abs_diff(&build_bloch(&p, k).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn ep4_bloch_is_nilpotent_spectrum() {
        let h = build_bloch(&presets::ep4(), 0.0).unwrap();
        let s = eigvals(&h).unwrap();
        assert!(s.values.iter().all(|z| z.norm() < 1e-10), "{:?}", s.values);
    }

    #[test]
    fn real_space_open_l2_block_count() {
        let p = Model::Ladder(LadderParams::new(1.0, 0.5, 0.7, 0.3, 0.2, 0.4).unwrap());
        let h = build_real_space(&p, &LatticeSpec::open(2)).unwrap();
        assert_eq!(h.rows(), 8);
        let mut nonzero = 0;
        for br in 0..4 {
            for bc in 0..4 {
                if br != bc && h.block(2 * br, 2 * bc, 2, 2).max_abs() > 0.0 {
                    nonzero += 1;
                }
            }
        }
        // two chain bonds and two rungs, each in both directions
        assert_eq!(nonzero, 8);
    }

    #[test]
    fn real_space_blocks_are_hop_matrices() {
        let lp = LadderParams::new(1.1, 0.8, 0.7, 0.3, 0.2, -0.9).unwrap();
        let lat = LatticeSpec::periodic(5);
        let h = build_real_space(&lp.into(), &lat).unwrap();
        for n in 0..5 {
            let a = |c: usize| Site::new(1, c).base_index(2);
            let b = |c: usize| Site::new(2, c).base_index(2);
            let nx = (n + 1) % 5;
            assert_eq!(h.block(a(nx), a(n), 2, 2), lp.chain_hop(false));
            assert_eq!(h.block(a(n), a(nx), 2, 2), lp.chain_hop(false));
            assert_eq!(h.block(a(n), b(n), 2, 2), lp.u_up());
            assert_eq!(h.block(b(n), a(n), 2, 2), lp.u_down());
        }
    }

    #[test]
    fn real_space_too_small() {
        let p = Model::Ladder(presets::dp2());
        assert!(matches!(build_real_space(&p, &LatticeSpec::periodic(1)), Err(Error::Size(_))));
    }

    #[test]
    fn site_index_bijection() {
        for n_chains in [2, 3, 5] {
            for idx in 0..2 * n_chains * 7 {
                assert_eq!(SiteIndex::from_flat(idx, n_chains).flat(n_chains), idx);
            }
        }
    }

    #[test]
    fn gauge_group_action() {
        let p = LadderParams::with_gauge(1.0, 0.5, 0.7, 0.3, 0.2, 0.4, -0.3, 1.1).unwrap();
        assert_eq!(gauge_transform(&p, 0.0, 0.0), p);
        let back = gauge_transform(&gauge_transform(&p, 0.8, -2.1), -0.8, 2.1);
        for (x, y) in [
            (back.theta1, p.theta1),
            (back.theta2, p.theta2),
            (back.eta_a, p.eta_a),
            (back.eta_b, p.eta_b),
        ] {
            assert!(canonical_angle(x - y).abs() < 1e-14);
        }
        let composed = gauge_transform(&gauge_transform(&p, 0.4, 0.9), 1.3, -0.2);
        let direct = gauge_transform(&p, 1.7, 0.7);
        assert!(canonical_angle(composed.theta1 - direct.theta1).abs() < 1e-14);
        assert!(canonical_angle(composed.eta_b - direct.eta_b).abs() < 1e-14);
    }

    #[test]
    fn gauge_fix_example_and_idempotence() {
        let p = LadderParams::with_gauge(1.0, 1.0, 1.0, 1.0, 0.0, 0.0, PI / 2.0, PI / 2.0).unwrap();
        let q = gauge_fix(&p);
        assert_eq!((q.eta_a, q.eta_b), (0.0, 0.0));
        assert!(q.theta1.abs() < 1e-15);
        assert!((q.theta2 + PI / 2.0).abs() < 1e-15);
        assert_eq!(gauge_fix(&q), q);
    }

    #[test]
    fn gauge_fix_preserves_real_space_spectrum() {
        let p = LadderParams::with_gauge(1.3, 0.6, 0.9, 0.5, 0.7, -0.2, 1.9, -0.8).unwrap();
        let lat = LatticeSpec::periodic(6);
        let a = eigvals(&build_real_space(&p.into(), &lat).unwrap()).unwrap();
        let b = eigvals(&build_real_space(&gauge_fix(&p).into(), &lat).unwrap()).unwrap();
        assert!(multiset_distance(&a.values, &b.values) < 1e-9);
    }

    #[test]
    fn wilson_loop_closed_form() {
        let p = LadderParams::with_gauge(1.3, 0.6, 0.9, 0.5, 0.7, -0.2, 1.9, -0.8).unwrap();
        let (j, t, t1, t2) = (p.j, p.t, p.t1, p.t2);
        let g1 = -p.theta1 - p.theta2 + p.eta_a + PI;
        let g2 = -p.theta1 + p.theta2 - p.eta_b + PI;
        let trace = 2.0 * j * j * (t1 * t1 + t2 * t2)
            + 2.0 * t * t * (t1 * t1 * p.phi1().cos() + t2 * t2 * p.phi2().cos())
            + 4.0 * j * t * t1 * t2 * (g1.cos() + g2.cos());
        let w = wilson_loop(&p).unwrap();
        assert!((w - trace / (j * t * t1 * t2)).norm() < 1e-12, "{w}");
        let zero = LadderParams::new(1.0, 1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        assert!(matches!(wilson_loop(&zero), Err(Error::Domain(_))));
    }

    #[test]
    fn ep2n_constructor() {
        let p = make_ep2n_params(3, 2.0, PI / 3.0).unwrap();
        assert_eq!(p.rung_t1().len(), 2);
        assert!(matches!(make_ep2n_params(3, 2.0, PI), Err(Error::Precondition(_))));
        assert!(matches!(make_ep2n_params(3, 2.0, 0.0), Err(Error::Precondition(_))));
        // N = 2 reproduces the EP4 ladder
        let two = make_ep2n_params(2, 2.0, PI / 3.0).unwrap();
        let lat = LatticeSpec::periodic(4);
        let a = build_real_space(&two.into(), &lat).unwrap();
        let b = build_real_space(&presets::ep4().into(), &lat).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn json_round_trip_and_strictness() {
        let m = Model::Ladder(presets::ep2_second());
        assert_eq!(Model::from_json(&m.to_json()).unwrap(), m);
        let n = Model::NChain(make_ep2n_params(3, 1.0, 0.5).unwrap());
        assert_eq!(Model::from_json(&n.to_json()).unwrap(), n);
        let typo = serde_json::json!({"model": "ladder", "j": 1, "t": 1, "t1": 1, "t2": 1,
            "theta1": 0, "theta2": 0, "thta1": 0});
        assert!(matches!(Model::from_json(&typo), Err(Error::Config(_))));
        let bad = serde_json::json!({"model": "triangle"});
        assert!(matches!(Model::from_json(&bad), Err(Error::Config(_))));
    }
}
