//! Hop-matrix algebra: path products, prohibited paths and the flat-band
//! (cage) conditions for the ladder and the N-chain lattice.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{gauge_fix, near_multiple_of_pi, LadderParams, NChainParams, ANGLE_TOL};
use crate::numkit::CMatrix;

/// The four 2×2 hop matrices of a gauge-fixed ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferSet {
    pub u_r: CMatrix,
    pub u_l: CMatrix,
    pub u_up: CMatrix,
    pub u_down: CMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Right,
    Left,
    /// Across rung `m` from chain `m+1` to chain `m`.
    Up(usize),
    /// Across rung `m` from chain `m` to chain `m+1`.
    Down(usize),
}

/// Moves in travel order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSpec {
    pub moves: Vec<Move>,
}

impl PathSpec {
    /// Checks the path is nonempty and that vertical moves chain together:
    /// after `Up(m)` the walker is on chain `m`, after `Down(m)` on `m+1`.
    pub fn validate(&self, n_rungs: usize) -> Result<()> {
        if self.moves.is_empty() {
            return Err(Error::Path("empty path".into()));
        }
        let mut chain: Option<usize> = None;
        for (i, mv) in self.moves.iter().enumerate() {
            let (rung, from, to) = match *mv {
                Move::Up(m) => (m, m + 1, m),
                Move::Down(m) => (m, m, m + 1),
                _ => continue,
            };
            if rung == 0 || rung > n_rungs {
                return Err(Error::Path(format!("move {i} uses rung {rung}, lattice has {n_rungs}")));
            }
            if let Some(c) = chain {
                if c != from {
                    return Err(Error::Path(format!(
                        "move {i} ({mv:?}) starts on chain {from} but the walker is on chain {c}"
                    )));
                }
            }
            chain = Some(to);
        }
        Ok(())
    }
}

/// Shorthand for ladder paths: `r`, `l`, `u`, `d`.
impl std::str::FromStr for PathSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let moves = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                'r' | 'R' => Ok(Move::Right),
                'l' | 'L' => Ok(Move::Left),
                'u' | 'U' => Ok(Move::Up(1)),
                'd' | 'D' => Ok(Move::Down(1)),
                other => Err(Error::Path(format!("unknown move '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PathSpec { moves })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FlatBandReport {
    pub chain_nilpotent: bool,
    pub rung_balanced: bool,
    pub is_cage: bool,
}

pub fn transfer_set(p: &LadderParams) -> Result<TransferSet> {
    if !p.is_gauge_fixed() {
        return Err(Error::Precondition(format!(
            "transfer_set needs gauge-fixed parameters (eta_a = {}, eta_b = {}); call gauge_fix first",
            p.eta_a(),
            p.eta_b()
        )));
    }
    let u0 = p.chain_hop(false);
    Ok(TransferSet {
        u_r: u0.clone(),
        u_l: u0,
        u_up: p.u_up(),
        u_down: p.u_down(),
    })
}

/// Ordered product of the hops along `path`; the first move is the
/// rightmost factor.
pub fn path_product(ts: &TransferSet, path: &PathSpec) -> Result<CMatrix> {
    path.validate(1)?;
    let mut acc = CMatrix::identity(2);
    for mv in &path.moves {
        let hop = match mv {
            Move::Right => &ts.u_r,
            Move::Left => &ts.u_l,
            Move::Up(_) => &ts.u_up,
            Move::Down(_) => &ts.u_down,
        };
        acc = hop * &acc;
    }
    Ok(acc)
}

/// `j = t` and `t1 cos θ1 = t2 cos θ2` (in the fixed gauge), each to `tol`.
pub fn flat_band_conditions(p: &LadderParams, tol: f64) -> FlatBandReport {
    let g = gauge_fix(p);
    let chain_nilpotent = (g.j() - g.t()).abs() <= tol;
    let rung_balanced = (g.t1() * g.theta1().cos() - g.t2() * g.theta2().cos()).abs() <= tol;
    FlatBandReport {
        chain_nilpotent,
        rung_balanced,
        is_cage: chain_nilpotent && rung_balanced,
    }
}

/// Hop matrix advancing one period along the zig-zag paths,
/// `U↑U₀U↓U₀ + U₀U↑U₀U↓`. Equals `4jt (t1 cos θ1 − t2 cos θ2)² I`.
pub fn cage_loop_matrix(p: &LadderParams) -> Result<CMatrix> {
    let scale = p.j().abs().max(p.t().abs()).max(1.0);
    if (p.j() - p.t()).abs() > 1e-12 * scale {
        return Err(Error::Precondition(format!(
            "cage loop analysis assumes j = t (got j = {}, t = {})",
            p.j(),
            p.t()
        )));
    }
    let ts = transfer_set(&gauge_fix(p))?;
    let u0 = &ts.u_r;
    let first = &(&(&ts.u_up * u0) * &ts.u_down) * u0;
    let second = &(&(u0 * &ts.u_up) * u0) * &ts.u_down;
    Ok(&first + &second)
}

/// Both rung-adjacent products `U↓U₀` and `U₀U↑` vanish on every rung (for
/// the chain hops on either side), and no rung phase is a multiple of π.
///
/// `tol` is relative to the squared largest coupling.
pub fn nchain_prohibited(p: &NChainParams, tol: f64) -> bool {
    let s = p.max_strength();
    if s == 0.0 {
        return false;
    }
    let threshold = tol * s * s;
    (1..p.n_chains()).all(|m| {
        if near_multiple_of_pi(p.rung_theta1()[m - 1], ANGLE_TOL) {
            return false;
        }
        let up = p.u_up(m);
        let down = p.u_down(m);
        [p.chain_hop(m), p.chain_hop(m + 1)].iter().all(|u0| {
            (&down * u0).max_abs() <= threshold && (u0 * &up).max_abs() <= threshold
        })
    })
}

/// `U↑U↓ − (t1² − t2²) I`, for checking the rung identity.
pub fn rung_identity_residual(ts: &TransferSet, t1: f64, t2: f64) -> f64 {
    let prod = &ts.u_up * &ts.u_down;
    prod.max_abs_diff(&CMatrix::identity(2).scale(Complex64::new(t1 * t1 - t2 * t2, 0.0)))
}
