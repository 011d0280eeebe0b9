//! Command-line front end. Every subcommand reads a JSON config, writes
//! CSV files atomically and reports JSON on standard output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::dynamics::{self, ExcitationSpec, Growth};
use crate::error::{Error, Result};
use crate::model::{gauge_fix, gauge_transform, wilson_loop, LadderParams, LatticeSpec, Model, Site};
use crate::numkit::{linear_fit, logspace};
use crate::spectra::{
    classify, classify_nchain, default_amplitudes, dispersion, local_range, perturbation_scaling, phase_diagram_scan,
    scan_grid, write_scan_csv, DegeneracyClass, DegeneracyKind, DEFAULT_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;
pub const EXIT_DEGENERATE: i32 = 5;

/// Default lattice when a config has no `"lattice"` entry.
pub const DEFAULT_CELLS: usize = 64;

#[derive(Debug, Parser)]
#[command(name = "abcage", version, about = "Flat-band cages and exceptional points in BdG ladders")]
pub struct Cli {
    /// Read every input angle in degrees (outputs stay in radians).
    #[arg(long, global = true)]
    pub degrees: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Band structure over a k grid, as CSV.
    Bands {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = -std::f64::consts::PI, allow_hyphen_values = true)]
        k_min: f64,
        #[arg(long, default_value_t = std::f64::consts::PI, allow_hyphen_values = true)]
        k_max: f64,
        #[arg(long, default_value_t = 101)]
        n_points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Degeneracy class, minimal polynomial and local range.
    Classify {
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Real-space evolution of a single-site excitation, as CSV.
    Evolve {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 1)]
        chain: usize,
        /// Defaults to the middle cell.
        #[arg(long)]
        cell: Option<usize>,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        /// Number of time points including t = 0.
        #[arg(long, default_value_t = 201)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exponent of the eigenvalue response to a chain-coupling perturbation.
    Scaling {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 1e-8)]
        delta_min: f64,
        #[arg(long, default_value_t = 1e-4)]
        delta_max: f64,
        #[arg(long, default_value_t = 9)]
        n_points: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        k: f64,
    },
    /// Classification over the (theta1, theta2) square, as CSV.
    PhaseDiagram {
        #[arg(long)]
        t1: f64,
        #[arg(long, default_value_t = 64)]
        grid_n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Wilson loop and its deviation under random gauge transforms.
    Wilson {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    #[arg(long = "config")]
    pub path: PathBuf,
}

/// Model plus lattice, parsed strictly.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub lattice: LatticeSpec,
}

const ANGLE_KEYS: [&str; 4] = ["theta1", "theta2", "eta_a", "eta_b"];
const ANGLE_LIST_KEYS: [&str; 2] = ["rung_theta1", "rung_theta2"];

impl RunConfig {
    pub fn from_json(v: &Value, degrees: bool) -> Result<Self> {
        let mut obj: Map<String, Value> = v
            .as_object()
            .cloned()
            .ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
        let lattice = match obj.remove("lattice") {
            Some(l) => serde_json::from_value(l).map_err(|e| Error::Config(format!("lattice: {e}")))?,
            None => LatticeSpec::periodic(DEFAULT_CELLS),
        };
        if degrees {
            for key in ANGLE_KEYS {
                if let Some(x) = obj.get_mut(key) {
                    *x = to_radians(x)?;
                }
            }
            for key in ANGLE_LIST_KEYS {
                if let Some(Value::Array(xs)) = obj.get_mut(key) {
                    for x in xs.iter_mut() {
                        *x = to_radians(x)?;
                    }
                }
            }
        }
        let model = Model::from_json(&Value::Object(obj))?;
        Ok(Self { model, lattice })
    }

    pub fn load(path: &Path, degrees: bool) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let v: Value = serde_json::from_str(&text)?;
        Self::from_json(&v, degrees)
    }

    fn ladder(&self) -> Result<LadderParams> {
        match &self.model {
            Model::Ladder(p) => Ok(*p),
            Model::NChain(_) => Err(Error::Config("this subcommand needs a ladder model".into())),
        }
    }
}

fn to_radians(x: &Value) -> Result<Value> {
    let d = x
        .as_f64()
        .ok_or_else(|| Error::Config(format!("angle must be a number, got {x}")))?;
    Ok(json!(d.to_radians()))
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        Error::Consistency { .. } => EXIT_INCONSISTENT,
        Error::Inconclusive(_) => EXIT_INCONCLUSIVE,
        Error::DegenerateResponse(_) => EXIT_DEGENERATE,
        _ => EXIT_CONFIG,
    }
}

/// Writes through a temporary file in the target directory, renamed into
/// place only after `fill` succeeds.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut fs::File) -> Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    fill(tmp.as_file_mut())?;
    tmp.as_file_mut().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn complex_json(z: Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}

fn class_json(c: &DegeneracyClass) -> Value {
    let mut out = json!({
        "class": c.kind.to_string(),
        "flat_energy": c.flat_energy.map(complex_json),
        "minimal_poly": c.minimal_poly.as_ref().map(|mp| json!({
            "roots": mp.roots.iter().map(|(r, _)| complex_json(*r)).collect::<Vec<_>>(),
            "multiplicities": mp.roots.iter().map(|(_, m)| *m).collect::<Vec<_>>(),
            "degree": mp.degree,
        })),
        "flat_band": c.flat_band,
    });
    if let DegeneracyKind::EP2N(n) = c.kind {
        out["n"] = json!(n);
    }
    out
}

fn growth_json(g: Result<Growth>) -> Result<Value> {
    match g {
        Ok(g) => Ok(serde_json::to_value(g)?),
        Err(Error::AmbiguousFit(detail)) => Ok(json!({"kind": "ambiguous", "detail": detail})),
        Err(e) => Err(e),
    }
}

fn print_json(out: &mut dyn Write, v: &Value) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn cmd_bands(cfg: &RunConfig, k_min: f64, k_max: f64, n_points: usize, out_path: &Path, out: &mut dyn Write) -> Result<()> {
    if n_points < 2 {
        return Err(Error::Argument(format!("n_points must be at least 2, got {n_points}")));
    }
    if !(k_min < k_max) || !k_min.is_finite() || !k_max.is_finite() {
        return Err(Error::Argument(format!("need finite k_min < k_max, got [{k_min}, {k_max}]")));
    }
    let p = gauge_fix(&cfg.ladder()?);
    let ks: Vec<f64> = (0..n_points)
        .map(|i| k_min + (k_max - k_min) * i as f64 / (n_points - 1) as f64)
        .collect();
    let grid = dispersion(&p, &ks)?;
    write_atomic(out_path, |f| grid.write_csv(f))?;
    print_json(
        out,
        &json!({"out": out_path.display().to_string(), "n_points": n_points, "max_band_spread": grid.max_band_spread()}),
    )
}

fn cmd_classify(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let source = Site::new(1, cfg.lattice.cells / 2);
    let result = match &cfg.model {
        Model::Ladder(p) => classify(p, DEFAULT_TOL),
        Model::NChain(p) => classify_nchain(p, &cfg.lattice, DEFAULT_TOL),
    };
    let class = match result {
        Ok(c) => c,
        Err(Error::Consistency { table, minimal_poly }) => {
            print_json(
                out,
                &json!({"class": null, "error": "inconsistent", "table": table, "minimal_poly": minimal_poly}),
            )?;
            return Err(Error::Consistency { table, minimal_poly });
        }
        Err(e) => return Err(e),
    };
    let mut report = class_json(&class);
    report["local_range"] = if class.kind == DegeneracyKind::NonFlat {
        Value::Null
    } else {
        json!(local_range(&cfg.model, &cfg.lattice, source, default_amplitudes(), DEFAULT_TOL)?)
    };
    print_json(out, &report)
}

#[allow(clippy::too_many_arguments)]
fn cmd_evolve(
    cfg: &RunConfig,
    chain: usize,
    cell: Option<usize>,
    t_max: f64,
    steps: usize,
    out_path: &Path,
    out: &mut dyn Write,
) -> Result<()> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::Argument(format!("t_max must be positive, got {t_max}")));
    }
    if steps < 2 {
        return Err(Error::Argument(format!("steps must be at least 2, got {steps}")));
    }
    let site = Site::new(chain, cell.unwrap_or(cfg.lattice.cells / 2));
    site.check(cfg.model.n_chains(), &cfg.lattice)?;
    let times = dynamics::uniform_times(t_max, steps);
    let trace = dynamics::evolve(&cfg.model, &cfg.lattice, &ExcitationSpec::new(site), &times)?;
    write_atomic(out_path, |f| trace.write_csv(f))?;
    let occupied: Vec<[usize; 2]> = trace.occupied(1e-10).iter().map(|s| [s.chain, s.cell]).collect();
    print_json(
        out,
        &json!({
            "out": out_path.display().to_string(),
            "confined": dynamics::confinement_check(&trace, 1, 1e-10),
            "max_leak": dynamics::max_leak(&trace, 1),
            "occupied_sites": occupied,
            "source_growth": growth_json(dynamics::growth_character(&trace, site))?,
            "nilpotent_index": trace.nilpotent_index,
        }),
    )
}

fn cmd_scaling(cfg: &RunConfig, delta_min: f64, delta_max: f64, n_points: usize, k: f64, out: &mut dyn Write) -> Result<()> {
    if !(delta_min > 0.0 && delta_min < delta_max && delta_max.is_finite()) {
        return Err(Error::Argument(format!("need 0 < delta_min < delta_max, got [{delta_min}, {delta_max}]")));
    }
    if n_points < 2 {
        return Err(Error::Argument(format!("n_points must be at least 2, got {n_points}")));
    }
    let deltas = logspace(delta_min, delta_max, n_points);
    let r = perturbation_scaling(&cfg.ladder()?, &deltas, k)?;
    // log-log prefactor, for comparing the two EP2 types
    let (xs, ys): (Vec<f64>, Vec<f64>) = r
        .deltas
        .iter()
        .zip(&r.responses)
        .filter(|(_, y)| **y > 0.0)
        .map(|(d, y)| (d.ln(), y.ln()))
        .unzip();
    let prefactor = linear_fit(&xs, &ys).map(|(a, _, _)| a.exp()).ok();
    print_json(
        out,
        &json!({"exponent": r.exponent, "prefactor": prefactor, "deltas": r.deltas, "responses": r.responses}),
    )
}

fn cmd_phase_diagram(t1: f64, grid_n: usize, out_path: &Path, out: &mut dyn Write) -> Result<()> {
    if grid_n < 8 {
        return Err(Error::Argument(format!("grid_n must be at least 8, got {grid_n}")));
    }
    let grid = scan_grid(grid_n);
    let points = phase_diagram_scan(t1, &grid, &grid)?;
    write_atomic(out_path, |f| write_scan_csv(&points, f))?;
    let mut counts = std::collections::BTreeMap::<String, usize>::new();
    for p in &points {
        *counts.entry(p.class.to_string()).or_default() += 1;
    }
    print_json(out, &json!({"out": out_path.display().to_string(), "points": points.len(), "counts": counts}))
}

fn cmd_wilson(cfg: &RunConfig, trials: usize, seed: u64, out: &mut dyn Write) -> Result<()> {
    if trials == 0 {
        return Err(Error::Argument("trials must be at least 1".into()));
    }
    let p = cfg.ladder()?;
    let w = wilson_loop(&p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = std::f64::consts::PI;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        // uniform on (−π, π]
        let phi_a = pi - 2.0 * pi * rng.gen::<f64>();
        let phi_b = pi - 2.0 * pi * rng.gen::<f64>();
        let q = gauge_transform(&p, phi_a, phi_b);
        worst = worst.max((wilson_loop(&q)? - w).norm());
    }
    print_json(
        out,
        &json!({"wilson_loop": complex_json(w), "max_gauge_deviation": worst, "trials": trials, "seed": seed}),
    )
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let deg = |x: f64| if cli.degrees { x.to_radians() } else { x };
    let load = |c: &ConfigArg| RunConfig::load(&c.path, cli.degrees);
    match &cli.command {
        Command::Bands {
            config,
            k_min,
            k_max,
            n_points,
            out: path,
        } => cmd_bands(&load(config)?, deg(*k_min), deg(*k_max), *n_points, path, out),
        Command::Classify { config } => cmd_classify(&load(config)?, out),
        Command::Evolve {
            config,
            chain,
            cell,
            t_max,
            steps,
            out: path,
        } => cmd_evolve(&load(config)?, *chain, *cell, *t_max, *steps, path, out),
        Command::Scaling {
            config,
            delta_min,
            delta_max,
            n_points,
            k,
        } => cmd_scaling(&load(config)?, *delta_min, *delta_max, *n_points, deg(*k), out),
        Command::PhaseDiagram { t1, grid_n, out: path } => cmd_phase_diagram(*t1, *grid_n, path, out),
        Command::Wilson { config, trials, seed } => cmd_wilson(&load(config)?, *trials, *seed, out),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = exit_code(&e);
            let _ = writeln!(err, "error: {e}");
            if code == EXIT_INCONCLUSIVE {
                let _ = writeln!(err, "hint: increase lattice.cells in the config");
            }
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_strictness() {
        let ok = json!({"j": 2, "t": 2, "t1": 1, "t2": 1, "theta1": 0, "theta2": 0, "lattice": {"cells": 8, "boundary": "open"}});
        let cfg = RunConfig::from_json(&ok, false).unwrap();
        assert_eq!(cfg.lattice, LatticeSpec::open(8));
        let typo = json!({"j": 2, "t": 2, "t1": 1, "t2": 1, "theta1": 0, "theta2": 0, "thetta": 1});
        assert!(matches!(RunConfig::from_json(&typo, false), Err(Error::Config(_))));
        let bad_lattice = json!({"j": 2, "t": 2, "t1": 1, "t2": 1, "theta1": 0, "theta2": 0, "lattice": {"cells": 8}});
        assert!(RunConfig::from_json(&bad_lattice, false).is_err());
    }

    #[test]
    fn degrees_convert_angles() {
        let v = json!({"j": 1, "t": 1, "t1": 1, "t2": 1, "theta1": 90, "theta2": -90});
        let cfg = RunConfig::from_json(&v, true).unwrap();
        let p = cfg.ladder().unwrap();
        assert!((p.theta1() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let n = json!({"model": "nchain", "chain_strengths": [1, 1], "rung_t1": [1], "rung_t2": [1],
                       "rung_theta1": [60], "rung_theta2": [-60]});
        match RunConfig::from_json(&n, true).unwrap().model {
            Model::NChain(q) => assert!((q.rung_theta1()[0] - std::f64::consts::FRAC_PI_3).abs() < 1e-15),
            _ => unreachable!(),
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), EXIT_IO);
        assert_eq!(exit_code(&Error::Inconclusive("x".into())), EXIT_INCONCLUSIVE);
        assert_eq!(exit_code(&Error::DegenerateResponse("x".into())), EXIT_DEGENERATE);
        let c = Error::Consistency {
            table: "a".into(),
            minimal_poly: "b".into(),
        };
        assert_eq!(exit_code(&c), EXIT_INCONSISTENT);
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["abcage", "bogus"], &mut o, &mut e), EXIT_CONFIG);
        assert_eq!(run(["abcage", "wilson"], &mut o, &mut e), EXIT_CONFIG);
    }

    #[test]
    fn atomic_write_leaves_no_partial_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let r = write_atomic(&path, |f| {
            f.write_all(b"partial")?;
            Err(Error::Internal("boom".into()))
        });
        assert!(r.is_err());
        assert!(!path.exists());
        write_atomic(&path, |f| Ok(f.write_all(b"ok")?)).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "ok");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
