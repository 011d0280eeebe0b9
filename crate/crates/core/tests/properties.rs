use std::f64::consts::PI;

use abcage::dynamics::{evolve, uniform_times, ExcitationSpec};
use abcage::model::{build_bloch, build_real_space, gauge_fix, LadderParams, LatticeSpec, Model, Site};
use abcage::numkit::krylov::krylov_matrix_rank;
use abcage::numkit::{
    eigvals, expm, krylov_dim, multiset_distance, numerical_rank, sigma_min_estimate, CMatrix,
};
use abcage::spectra::{classify, default_amplitudes, local_range_detail, table_verdict, DegeneracyKind, DEFAULT_TOL};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matrix(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| CMatrix::new(n, n, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap())
}

fn angle() -> impl Strategy<Value = f64> {
    -PI..PI
}

/// Random cage: `j = t`, `t2 cos θ2 = t1 cos θ1`.
fn caged_ladder() -> impl Strategy<Value = LadderParams> {
    (0.5f64..2.5, 0.2f64..2.5, angle(), angle()).prop_filter_map("balance needs cos θ2 away from 0", |(j, t1, th1, th2)| {
        if th2.cos().abs() < 0.05 {
            return None;
        }
        let raw = t1 * th1.cos() / th2.cos();
        let th2 = if raw < 0.0 { th2 + PI } else { th2 };
        LadderParams::new(j, j, t1, raw.abs(), th1, th2).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenvalues_are_roots(m in matrix(6)) {
        let e = eigvals(&m).unwrap();
        prop_assert!((e.sum() - m.trace()).norm() < 1e-10);
        for z in &e.values {
            prop_assert!(sigma_min_estimate(&m.shifted(*z)).unwrap() < 1e-9 * m.norm_fro().max(1.0));
        }
    }

    #[test]
    fn expm_inverse(m in matrix(5)) {
        let a = expm(&m).unwrap();
        let b = expm(&m.scale(Complex64::new(-1.0, 0.0))).unwrap();
        prop_assert!((&a * &b).max_abs_diff(&CMatrix::identity(5)) < 1e-11);
    }

    #[test]
    fn rank_is_unitarily_invariant(m in matrix(6), h in matrix(6), drop in 0usize..6) {
        // rank-deficient by zeroing columns, rotated by a unitary exp(i·Herm)
        let mut d = m.clone();
        for i in 0..6 {
            for j in 0..drop {
                d[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        let herm = &h + &h.adjoint();
        let u = expm(&herm.scale(Complex64::new(0.0, 0.5))).unwrap();
        let r = numerical_rank(&d, 1e-10);
        prop_assert_eq!(r, 6 - drop);
        prop_assert_eq!(numerical_rank(&(&u * &d), 1e-10), r);
        prop_assert_eq!(numerical_rank(&(&d * &u.adjoint()), 1e-10), r);
    }

    #[test]
    fn krylov_dim_matches_krylov_matrix_rank(p in caged_ladder()) {
        let lat = LatticeSpec::periodic(12);
        let m = Model::Ladder(p);
        let h = build_real_space(&m, &lat).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); h.rows()];
        v[2 * 6 * 2] = Complex64::new(1.0, 0.0);
        let dim = krylov_dim(&h, &v, DEFAULT_TOL).unwrap();
        prop_assert!(dim <= 4);
        prop_assert_eq!(krylov_matrix_rank(&h, &v, dim + 2, 1e-8).unwrap(), dim);
    }

    #[test]
    fn bloch_matches_real_space(j in 0.3f64..2.0, t in 0.3f64..2.0, t1 in 0.0f64..2.0, t2 in 0.0f64..2.0,
                                th1 in angle(), th2 in angle()) {
        let p = LadderParams::new(j, t, t1, t2, th1, th2).unwrap();
        let l = 8;
        let real = eigvals(&build_real_space(&Model::Ladder(p), &LatticeSpec::periodic(l)).unwrap()).unwrap();
        let bloch: Vec<Complex64> = (0..l)
            .flat_map(|m| eigvals(&build_bloch(&p, 2.0 * PI * m as f64 / l as f64).unwrap()).unwrap().values)
            .collect();
        // degenerate EP points scatter at the sqrt(eps) level
        prop_assert!(multiset_distance(&real.values, &bloch) < 1e-6);
    }

    #[test]
    fn gauge_fix_preserves_real_space_spectrum(p in caged_ladder(), ea in angle(), eb in angle()) {
        let q = LadderParams::with_gauge(p.j(), p.t(), p.t1(), p.t2(), p.theta1(), p.theta2(), ea, eb).unwrap();
        let lat = LatticeSpec::periodic(6);
        let a = eigvals(&build_real_space(&Model::Ladder(q), &lat).unwrap()).unwrap();
        let b = eigvals(&build_real_space(&Model::Ladder(gauge_fix(&q)), &lat).unwrap()).unwrap();
        prop_assert!(multiset_distance(&a.values, &b.values) < 1e-6);
    }
}

#[test]
fn random_flat_band_draws_classify_consistently() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut counts = std::collections::BTreeMap::<String, usize>::new();
    for _ in 0..500 {
        let j = rng.gen_range(0.5..2.5);
        let t1 = rng.gen_range(0.2..2.5);
        let th1 = PI - 2.0 * PI * rng.gen::<f64>();
        // mix generic points with the special lines of the phase diagram
        let th2 = match rng.gen_range(0..4) {
            0 => -th1,
            1 => th1,
            _ => PI - 2.0 * PI * rng.gen::<f64>(),
        };
        let th1 = if rng.gen_range(0..5) == 0 { 0.0 } else { th1 };
        if th2.cos().abs() < 1e-3 {
            continue;
        }
        let raw = t1 * th1.cos() / th2.cos();
        let th2 = if raw < 0.0 { th2 + PI } else { th2 };
        let p = LadderParams::new(j, j, t1, raw.abs(), th1, th2).unwrap();
        let cls = classify(&p, DEFAULT_TOL).unwrap_or_else(|e| panic!("{p:?}: {e}"));
        assert_ne!(cls.kind, DegeneracyKind::NonFlat, "{p:?}");
        if let Some(table) = table_verdict(&p, DEFAULT_TOL) {
            assert_eq!(table, cls.kind, "{p:?}");
        }
        *counts.entry(cls.kind.to_string()).or_default() += 1;
    }
    println!("{counts:?}");
    assert!(counts.len() >= 3, "draws should cover several classes: {counts:?}");
}

#[test]
fn evolution_stays_in_krylov_support() {
    let lat = LatticeSpec::periodic(24);
    let site = Site::new(1, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let j = rng.gen_range(0.5..2.0);
        let t1 = rng.gen_range(0.2..2.0);
        let th1 = rng.gen_range(-PI..PI);
        let th2 = rng.gen_range(-1.2..1.2);
        let raw = t1 * f64::cos(th1) / f64::cos(th2);
        let th2 = if raw < 0.0 { th2 + PI } else { th2 };
        let p = LadderParams::new(j, j, t1, raw.abs(), th1, th2).unwrap();
        let m = Model::Ladder(p);
        let support = local_range_detail(&m, &lat, site, default_amplitudes(), DEFAULT_TOL).unwrap().support;
        let tr = evolve(&m, &lat, &ExcitationSpec::new(site), &uniform_times(4.0, 41)).unwrap();
        for s in tr.occupied(1e-12) {
            assert!(support.contains(&s), "{s:?} outside Krylov support for {p:?}");
        }
    }
}
