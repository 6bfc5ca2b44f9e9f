#![allow(clippy::needless_range_loop)]

use heatnev_core::geometry::{ChartRegion, ConformalFactor, KahlerModel, SurfaceFactor};
use heatnev_core::mapdsl::{eval_jet, eval_value, parse, parse_field, Expr, JetOrder};
use heatnev_core::target::{fs_energy_density, section_norm, spherical_distance, HermitianDivisor, ProjectiveMap};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-3i32..=3, -3i32..=3).prop_map(|(a, b)| Expr::constant(c(f64::from(a) * 0.5, f64::from(b) * 0.25))),
        (0usize..2).prop_map(Expr::var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::neg),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, b)),
            (inner.clone(), -3i32..=4).prop_map(|(a, k)| Expr::pow(a, k)),
            inner.prop_map(Expr::exp),
        ]
    })
}

/// Battery used for derivative checks; variables z1, z2.
const BATTERY: [&str; 20] = [
    "z1",
    "z1^2 + 3*z2",
    "z1*z2 - 2i*z1",
    "(z1 - 1)^3",
    "1/(z1 + 2)",
    "z1/(z2 + 3)",
    "exp(z1)",
    "exp(-z1*z2/4)",
    "exp(z1)*z2^2",
    "(z1^2 + 1)/(z2^2 + 4)",
    "z1^-2 + z2",
    "exp(exp(z1/3))",
    "(1 + z1 + z1^2/2)^4",
    "z1*exp(2*z2) - z2*exp(z1)",
    "1/(1 + exp(z1))",
    "(z1 - 2i)^-3",
    "(3 + 0.5i)*z1^5 - z2^4",
    "exp(z1/(z2 + 3))",
    "(z1*z2 + 1)/(z1 - z2 + 4)",
    "exp(1i*z1) + exp(-1i*z2)",
];

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

fn point() -> impl Strategy<Value = [C64; 2]> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b, x, y)| [c(a, b), c(x, y)])
}

fn value(e: &Expr, p: &[C64]) -> C64 {
    eval_value(e, p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printed_expressions_reparse_identically(e in expr_strategy()) {
        let once = parse(&e.to_string(), 2).unwrap();
        let twice = parse(&once.to_string(), 2).unwrap();
        prop_assert_eq!(&once, &twice);
        let p = [c(0.37, -0.21), c(-0.63, 0.44)];
        if let (Ok(a), Ok(b)) = (eval_value(&e, &p), eval_value(&once, &p)) {
            if a.norm() < 1e12 && a.norm() > 1e-12 {
                prop_assert!((a - b).norm() <= 1e-9 * a.norm(), "{} vs {}", a, b);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jets_match_central_differences(k in 0usize..BATTERY.len(), p in point()) {
        let e = parse(BATTERY[k], 2).unwrap();
        let jet = eval_jet(&e, &p, JetOrder::Two).unwrap();
        let d2 = jet.d2.unwrap();
        let h = 1e-4;
        for i in 0..2 {
            let shift = |s: f64| {
                let mut q = p;
                q[i] += s;
                q
            };
            // Fourth-order stencils keep truncation far below the tolerance.
            let fd1 = (value(&e, &shift(-2.0 * h)) - 8.0 * value(&e, &shift(-h)) + 8.0 * value(&e, &shift(h))
                - value(&e, &shift(2.0 * h)))
                / (12.0 * h);
            prop_assert!(rel(jet.d1[i], fd1) <= 1e-6, "{} d/dz{}: {} vs {}", BATTERY[k], i + 1, jet.d1[i], fd1);
            let g = 1e-3;
            let at = |s: f64| eval_jet(&e, &{
                let mut q = p;
                q[i] += s;
                q
            }, JetOrder::One).unwrap().d1;
            for j in 0..2 {
                let fd2 = (at(-2.0 * g)[j] - 8.0 * at(-g)[j] + 8.0 * at(g)[j] - at(2.0 * g)[j]) / (12.0 * g);
                prop_assert!(rel(d2[i][j], fd2) <= 1e-6, "{} d2[{}][{}]: {} vs {}", BATTERY[k], i, j, d2[i][j], fd2);
            }
        }
    }

    #[test]
    fn evaluated_expressions_are_holomorphic(k in 0usize..BATTERY.len(), p in point()) {
        let e = parse(BATTERY[k], 2).unwrap();
        let h = 1e-4;
        for i in 0..2 {
            let at = |d: C64| {
                let mut q = p;
                q[i] += d;
                value(&e, &q)
            };
            let dx = (at(c(-2.0 * h, 0.0)) - 8.0 * at(c(-h, 0.0)) + 8.0 * at(c(h, 0.0)) - at(c(2.0 * h, 0.0))) / (12.0 * h);
            let dy = (at(c(0.0, -2.0 * h)) - 8.0 * at(c(0.0, -h)) + 8.0 * at(c(0.0, h)) - at(c(0.0, 2.0 * h))) / (12.0 * h);
            let dzb = 0.5 * (dx + C64::i() * dy);
            prop_assert!(dzb.norm() <= 1e-8 * (1.0 + dx.norm()), "{}: dbar = {}", BATTERY[k], dzb);
        }
    }

    #[test]
    fn metric_inverse_is_exact(r in 0.0f64..0.999, th in 0.0f64..6.3, x in -5.0f64..5.0, y in -5.0f64..5.0) {
        let models = [
            KahlerModel::poincare_disk(),
            KahlerModel::ProductOfSurfaces(vec![
                SurfaceFactor::Conformal(ConformalFactor::poincare_disk()),
                SurfaceFactor::Flat,
            ]),
        ];
        let z = C64::from_polar(r, th);
        for m in &models {
            let p: Vec<C64> = if m.dim() == 1 { vec![z] } else { vec![z, c(x, y)] };
            let s = m.metric_at(&p).unwrap();
            for i in 0..p.len() {
                prop_assert!((s.g_diag[i] * s.g_inv_diag[i] - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn curvature_is_quarter_laplacian_of_log_det(r in 0.0f64..0.8, th in 0.0f64..6.3, k in 0usize..3) {
        let phis = ["-log(1 - z*zb)", "log(1 + z*zb)", "0.3*z*zb + 0.1*(z^2 + zb^2)"];
        let region = if k == 0 { ChartRegion::Disk { center: c(0.0, 0.0), radius: 1.0 } } else { ChartRegion::Plane };
        let model = KahlerModel::ConformalSurface(ConformalFactor::new(parse_field(phis[k], 1).unwrap(), region).unwrap());
        let z = C64::from_polar(r, th);
        let logdet = |w: C64| model.metric_at(&[w]).unwrap().log_det_g;
        let h = 1e-3;
        let second = |d: C64| {
            (-logdet(z + 2.0 * d) + 16.0 * logdet(z + d) - 30.0 * logdet(z) + 16.0 * logdet(z - d) - logdet(z - 2.0 * d))
                / (12.0 * h * h)
        };
        // Δ = 4 g^{-1} ∂∂̄ = g^{-1}(∂xx + ∂yy) in one complex dimension.
        let g_inv = model.metric_at(&[z]).unwrap().g_inv_diag[0];
        let expected = -0.25 * g_inv * (second(c(h, 0.0)) + second(c(0.0, h)));
        let s = model.scalar_curvature(&[z]).unwrap();
        prop_assert!((s - expected).abs() <= 1e-5 * (1.0 + s.abs()), "{}: {} vs {}", phis[k], s, expected);
    }

    #[test]
    fn product_curvature_is_sum_of_factors(r in 0.0f64..0.99, th in 0.0f64..6.3, x in -0.9f64..0.9) {
        let other = ConformalFactor::new(parse_field("log(1 + z*zb)", 1).unwrap(), ChartRegion::Plane).unwrap();
        let product = KahlerModel::ProductOfSurfaces(vec![
            SurfaceFactor::Conformal(ConformalFactor::poincare_disk()),
            SurfaceFactor::Conformal(other.clone()),
            SurfaceFactor::Flat,
        ]);
        let p = [C64::from_polar(r, th), c(x, -x), c(x, 1.0)];
        let a = KahlerModel::poincare_disk().scalar_curvature(&p[..1]).unwrap();
        let b = KahlerModel::ConformalSurface(other).scalar_curvature(&p[1..2]).unwrap();
        prop_assert_eq!(product.scalar_curvature(&p).unwrap(), a + b);
    }

    #[test]
    fn fs_density_is_nonnegative_and_rescaling_invariant(p in point(), k in 0usize..4) {
        let maps: [&[&str]; 4] = [
            &["1", "z1", "z2"],
            &["z1^2 - 1", "z1*z2 + 2", "exp(z2)"],
            &["1", "exp(z1 + z2)", "z1 - z2"],
            &["z1", "z2", "1 + z1*z2"],
        ];
        let model = KahlerModel::FlatSpace { m: 2 };
        let f = ProjectiveMap::parse(maps[k], 2).unwrap();
        let scaled: Vec<String> = maps[k].iter().map(|s| format!("exp(z1 - 2*z2)*(3 - 1i)*({s})")).collect();
        let g = ProjectiveMap::parse(&scaled.iter().map(String::as_str).collect::<Vec<_>>(), 2).unwrap();
        let a = fs_energy_density(&model, &f, &p).unwrap();
        let b = fs_energy_density(&model, &g, &p).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300), "{} vs {}", a, b);
        let d = HermitianDivisor::hyperplane(&[c(1.0, 0.0), c(-2.0, 0.5), c(0.5, 0.0)]).unwrap();
        let sa = section_norm(&d, &f, &p).unwrap();
        let sb = section_norm(&d, &g, &p).unwrap();
        prop_assert!((sa - sb).abs() <= 1e-10 * sa.max(1e-300));
    }

    #[test]
    fn spherical_distance_is_a_metric(a in point(), b in point(), w in point()) {
        let pt = |q: [C64; 2]| [q[0] + 1.5, q[1]];
        let (x, y, z) = (pt(a), pt(b), pt(w));
        let dxy = spherical_distance(x, y);
        let dyz = spherical_distance(y, z);
        let dxz = spherical_distance(x, z);
        prop_assert!(dxz <= dxy + dyz + 1e-12);
        prop_assert!((dxy - spherical_distance(y, x)).abs() <= 1e-12);
        prop_assert!(spherical_distance(x, x).abs() <= 1e-7);
    }
}
