use heatnev_core::functionals::{characteristic, counting_sup, ldl_check, nevanlinna_curve, proximity, CurveSpec};
use heatnev_core::geometry::KahlerModel;
use heatnev_core::mapdsl::parse;
use heatnev_core::oracle;
use heatnev_core::stochastic::{Estimate, PathConfig, PathEnsemble, LAMBDA_CLAMP};
use heatnev_core::target::{HermitianDivisor, LineBundleDegree, ProjectiveMap};
use num_complex::Complex64 as C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn flat(n: usize, t_max: f64, dt: f64, origin: C64, seed: u64) -> PathEnsemble {
    let cfg = PathConfig { t_max, dt_base: dt, boundary_margin: 0.5, n_paths: n, seed };
    PathEnsemble::new(KahlerModel::FlatSpace { m: 1 }, vec![origin], cfg).unwrap()
}

fn within(e: &Estimate, truth: f64, k: f64) -> bool {
    (e.mean - truth).abs() <= k * e.std_error
}

fn lambdas() -> Vec<f64> {
    (1..=55).map(|k| 2.0 * f64::from(k)).collect()
}

#[test]
fn brownian_increments_are_martingales() {
    let e = flat(4000, 4.0, 0.01, c(0.0, 0.0), 3);
    let grid = [1.0, 2.0, 4.0];
    let re = e.expectation_on_grid(|p| p[0].re, &grid, None).unwrap();
    let im = e.expectation_on_grid(|p| p[0].im, &grid, None).unwrap();
    let sq = e.expectation_on_grid(|p| p[0].norm_sqr(), &grid, None).unwrap();
    for g in 0..grid.len() {
        assert!(within(&re[g], 0.0, 4.0), "{:?}", re[g]);
        assert!(within(&im[g], 0.0, 4.0), "{:?}", im[g]);
        // ½Δ-Brownian motion on ℂ has E|X_t|² = 2t.
        assert!(within(&sq[g], 2.0 * grid[g], 4.0), "{:?}", sq[g]);
    }
}

#[test]
fn poincare_paths_stay_in_the_disk_and_are_accounted() {
    let cfg = PathConfig { t_max: 5.0, dt_base: 0.01, boundary_margin: 0.5, n_paths: 200, seed: 8 };
    let e = PathEnsemble::new(KahlerModel::poincare_disk(), vec![c(0.3, -0.2)], cfg).unwrap();
    let out = e.map_paths(|_, p| (0..p.len()).all(|k| p.point(k)[0].norm() < 1.0));
    assert_eq!(out.retained() + out.discarded, 200);
    assert!(out.results.iter().all(|&inside| inside));
    assert!(out.indices.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn halving_the_base_step_agrees_within_the_noise() {
    let f = ProjectiveMap::parse(&["1", "z"], 1).unwrap();
    let grid = [2.0, 5.0];
    let coarse = characteristic(&flat(3000, 5.0, 0.02, c(0.0, 0.0), 4), &f, LineBundleDegree(1), &grid).unwrap();
    let fine = characteristic(&flat(3000, 5.0, 0.01, c(0.0, 0.0), 4), &f, LineBundleDegree(1), &grid).unwrap();
    for (a, b) in coarse.iter().zip(&fine) {
        assert!((a.mean - b.mean).abs() < b.std_error, "{a:?} vs {b:?}");
        assert!((b.mean - oracle::flat_identity_characteristic(b.t)).abs() <= 4.0 * b.std_error, "{b:?}");
    }
}

#[test]
fn identity_functionals_match_closed_forms() {
    let e = flat(3000, 10.0, 0.01, c(0.0, 0.0), 6);
    let f = ProjectiveMap::parse(&["1", "z"], 1).unwrap();
    let grid = [1.0, 3.0, 10.0];
    let t = characteristic(&e, &f, LineBundleDegree(1), &grid).unwrap();
    for est in &t {
        assert!(within(est, oracle::flat_identity_characteristic(est.t), 4.0), "{est:?}");
    }
    let t2 = characteristic(&e, &f, LineBundleDegree(2), &grid).unwrap();
    assert!((t2[2].mean - 2.0 * t[2].mean).abs() < 1e-12);
    let inf = HermitianDivisor::point([c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let m = proximity(&e, &f, &inf, 10.0).unwrap();
    assert!(within(&m, oracle::identity_proximity_infinity(10.0), 4.0), "{m:?}");
    let two = HermitianDivisor::point([c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
    let m2 = proximity(&e, &f, &two, 10.0).unwrap();
    assert!(within(&m2, oracle::identity_proximity_point(2.0, 10.0), 4.0), "{m2:?}");
}

#[test]
fn exponential_characteristic_matches_quadrature() {
    let e = flat(3000, 10.0, 0.01, c(0.0, 0.0), 12);
    let f = ProjectiveMap::parse(&["1", "exp(z)"], 1).unwrap();
    let t = characteristic(&e, &f, LineBundleDegree(1), &[10.0]).unwrap();
    assert!(within(&t[0], 0.9654830321649075, 4.0), "{:?}", t[0]);
}

#[test]
fn counting_tracks_the_point_oracle() {
    let grid = [10.0, 20.0];
    let e = flat(4000, 20.0, 0.01, c(1.0, 0.0), 7);
    let f = ProjectiveMap::parse(&["1", "z^2"], 1).unwrap();
    let zero = HermitianDivisor::point([c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let n = counting_sup(&e, &f, &zero, &grid, &lambdas()).unwrap();
    for v in &n.values {
        let truth = oracle::square_counting_zero(v.t);
        // The plateau estimate converges from below.
        assert!(v.value <= truth + 3.0 * v.std_error, "{v:?} vs {truth}");
        assert!(v.value >= 0.85 * truth - 3.0 * v.std_error, "{v:?} vs {truth}");
    }
}

#[test]
fn small_ensembles_respect_monotonicity_and_signs() {
    let grid: Vec<f64> = (1..=8).map(|k| 5.0 * f64::from(k)).collect();
    let e = flat(400, 40.0, 0.01, c(0.3, 0.4), 21);
    let f = ProjectiveMap::parse(&["1", "exp(z)"], 1).unwrap();
    let ds = [
        HermitianDivisor::point([c(1.0, 0.0), c(1.0, 0.0)]).unwrap(),
        HermitianDivisor::point([c(1.0, 0.0), c(0.0, 0.0)]).unwrap(),
    ];
    let lam = lambdas();
    let curve = nevanlinna_curve(
        &e,
        CurveSpec { map: &f, divisors: &ds, t_grid: &grid, lambda_grid: &lam, clamp: LAMBDA_CLAMP },
    )
    .unwrap();
    assert_eq!(curve.n_retained + curve.n_discarded, 400);
    assert!(curve.t_char.windows(2).all(|w| w[1].mean >= w[0].mean));
    for d in &curve.divisors {
        assert!(d.m_prox.iter().all(|m| m.mean >= 0.0));
        assert!(d.n_sup.values.windows(2).all(|w| w[1].value >= w[0].value));
        for (full, reduced) in d.n_sup.values.iter().zip(&d.n_reduced.values) {
            assert!(reduced.value <= full.value);
        }
    }
    // e^z omits 0: no hits, no counting.
    assert!(curve.divisors[1].n_sup.values.iter().all(|v| v.value == 0.0 && v.n_infinite == 0));
    assert!(curve.divisors[0].n_sup.values.last().unwrap().value > 0.0);
}

#[test]
fn ldl_report_has_nonnegative_characteristics() {
    let grid: Vec<f64> = (1..=6).map(|k| 5.0 * f64::from(k)).collect();
    let e = flat(300, 30.0, 0.01, c(0.0, 0.5), 9);
    let psi = parse("z/(z-1)", 1).unwrap();
    let r = ldl_check(&e, &psi, &grid, 0.5, 10.0).unwrap();
    assert!(r.t_phi.iter().all(|x| x.mean >= 0.0));
    assert!(r.t_psi.iter().all(|x| x.mean >= 0.0));
    assert!(r.m_grad.iter().all(|x| x.mean >= 0.0));
    let fit = r.bound_margin.iter().find(|(t, _)| *t == 10.0).unwrap();
    assert_eq!(fit.1, 0.0);
}

#[test]
fn results_depend_only_on_the_seed() {
    let f = ProjectiveMap::parse(&["1", "z"], 1).unwrap();
    let run = |seed| characteristic(&flat(200, 5.0, 0.01, c(0.0, 0.0), seed), &f, LineBundleDegree(1), &[5.0]).unwrap();
    let a = run(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| run(1));
    assert_eq!(a, b);
    assert_ne!(a, run(2));
}
