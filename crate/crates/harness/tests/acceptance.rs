//! One PASS/FAIL line per acceptance criterion, at full scale.

#![allow(clippy::needless_range_loop)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use heatnev::scenarios::BUILTIN;
use heatnev::{resolve, run, Check, RunOptions, RunRecord};
use heatnev_core::geometry::KahlerModel;
use heatnev_core::mapdsl::{eval_jet, eval_value, parse, JetOrder};
use heatnev_core::oracle;
use heatnev_core::target::{fs_energy_density, ProjectiveMap};
use num_complex::Complex64 as C64;

type Criterion = fn(&Path) -> Verdict;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let k = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

fn run_builtin(name: &str, out: &Path) -> RunRecord {
    let cfg = resolve(name, None).unwrap();
    run(&cfg, &RunOptions { out_dir: out.join(name), workers: None }).unwrap()
}

fn metric(rec: &RunRecord, check: Check, name: &str) -> f64 {
    rec.outcome(check).and_then(|o| o.metric(name)).unwrap_or(f64::NAN)
}

fn identity_characteristic(out: &Path) -> Verdict {
    let start = Instant::now();
    run_builtin("flat-identity", out);
    let secs = start.elapsed().as_secs_f64();
    let dir = out.join("flat-identity");
    let csv = dir.join("characteristic.csv");
    let (t, est, se) = (column(&csv, "t"), column(&csv, "estimate"), column(&csv, "std_error"));
    let n = column(&csv, "n_retained");
    let mut pass = secs <= 300.0 && t == [10.0, 30.0, 100.0] && n.iter().all(|&k| k == 1e5);
    let mut parts = Vec::new();
    for g in 0..t.len() {
        let truth = oracle::flat_identity_characteristic_quadrature(t[g]);
        let err = (est[g] - truth).abs();
        let tol = (0.02 * truth).max(3.0 * se[g]);
        pass &= err <= tol;
        parts.push(format!("t={} err {:.4} tol {:.4}", t[g], err, tol));
    }
    verdict(pass, format!("{}; runtime {secs:.0} s", parts.join(", ")))
}

fn fmt_identity(out: &Path) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (scenario, labels) in [("fmt-square", &["zero", "inf"][..]), ("fmt-square-one", &["one"][..])] {
        let rec = run_builtin(scenario, out);
        for label in labels {
            let std = metric(&rec, Check::Fmt, &format!("{label}.residual_std"));
            let tol = metric(&rec, Check::Fmt, &format!("{label}.tolerance"));
            pass &= std <= tol;
            parts.push(format!("{label}: std {std:.4} tol {tol:.4}"));
        }
    }
    verdict(pass, parts.join(", "))
}

fn ricci(out: &Path) -> Verdict {
    run_builtin("poincare-ricci", out);
    let csv = out.join("poincare-ricci").join("ricci.csv");
    let worst = column(&csv, "t")
        .iter()
        .zip(column(&csv, "estimate"))
        .map(|(t, v)| (v + 2.0 * t).abs() / (2.0 * t))
        .fold(0.0, f64::max);
    let flat = column(&out.join("flat-identity").join("ricci.csv"), "estimate");
    let zero = flat.iter().all(|&v| v == 0.0);
    verdict(worst <= 1e-3 && zero, format!("Poincaré relative error {worst:.2e}; flat exactly zero: {zero}"))
}

fn defect(out: &Path) -> Verdict {
    let rec = run_builtin("flat-exp-defect", out);
    let dir = out.join("flat-exp-defect");
    let zero_counts = ["zero", "inf"]
        .iter()
        .all(|l| column(&dir.join(format!("n_sup_{l}.csv")), "estimate").iter().all(|&v| v == 0.0));
    let delta = metric(&rec, Check::Defect, "delta_sum");
    let theta = metric(&rec, Check::Defect, "theta_sum");
    let bound = metric(&rec, Check::Defect, "bound");
    verdict(
        zero_counts && delta >= 1.9 && theta <= bound,
        format!("N identically 0: {zero_counts}; delta sum {delta:.3}; theta sum {theta:.3} <= {bound}"),
    )
}

fn ldl(out: &Path) -> Verdict {
    run_builtin("ldl-battery", out);
    let dir = out.join("ldl-battery");
    let mut pass = true;
    let mut parts = Vec::new();
    for (tag, name) in [("psi1", "z"), ("psi2", "e^z"), ("psi3", "z/(z-1)")] {
        let csv = dir.join(format!("ldl_{tag}_bound_margin.csv"));
        let kept: Vec<f64> = column(&csv, "t")
            .into_iter()
            .zip(column(&csv, "margin"))
            .filter(|(t, _)| (30.0..=100.0).contains(t))
            .map(|(_, m)| m)
            .collect();
        let coverage = kept.iter().filter(|&&m| m >= 0.0).count() as f64 / kept.len() as f64;
        pass &= coverage >= 0.9;
        parts.push(format!("{name}: coverage {coverage:.2}"));
    }
    let m_exp = column(&dir.join("ldl_psi2_m_grad.csv"), "estimate");
    let exact = m_exp.iter().all(|&v| v == 0.0);
    pass &= exact;
    parts.push(format!("e^z left side exactly 0: {exact}"));
    verdict(pass, parts.join(", "))
}

fn smt(out: &Path) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for scenario in ["smt-p1-three", "smt-p1-four", "smt-p2-lines"] {
        let rec = run_builtin(scenario, out);
        let tail = metric(&rec, Check::Smt, "tail_slope");
        let late = metric(&rec, Check::Smt, "late_slope");
        pass &= tail <= 1.2 && late <= 1.2;
        parts.push(format!("{scenario}: slope {tail:.3}, late {late:.3}"));
    }
    verdict(pass, parts.join(", "))
}

fn calculus(out: &Path) -> Verdict {
    let rec = run_builtin("calculus-lemma", out);
    let measure = metric(&rec, Check::Calc, "violation_measure");
    verdict(measure <= 5.0, format!("violation measure {measure}"))
}

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

fn sample_points() -> Vec<[C64; 2]> {
    (0..12)
        .map(|k| {
            let a = 0.7 * f64::from(k);
            [C64::from_polar(0.8, a), C64::new((1.3 * a).cos() * 0.6, -(0.9 * a).sin() * 0.7)]
        })
        .collect()
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

/// Fourth-order central difference of `f` along the real axis.
fn d4<F: Fn(C64) -> C64>(f: F, h: f64) -> C64 {
    (f(C64::new(-2.0 * h, 0.0)) - 8.0 * f(C64::new(-h, 0.0)) + 8.0 * f(C64::new(h, 0.0)) - f(C64::new(2.0 * h, 0.0)))
        / (12.0 * h)
}

fn second4<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h)
}

fn autodiff_worst() -> f64 {
    let mut worst: f64 = 0.0;
    for text in BATTERY {
        let e = parse(text, 2).unwrap();
        for p in sample_points() {
            let jet = eval_jet(&e, &p, JetOrder::Two).unwrap();
            let d2 = jet.d2.unwrap();
            for i in 0..2 {
                let shifted = |s: C64| {
                    let mut q = p;
                    q[i] += s;
                    q
                };
                let fd1 = d4(|s| eval_value(&e, &shifted(s)).unwrap(), 1e-4);
                worst = worst.max(rel(jet.d1[i], fd1));
                for j in 0..2 {
                    let fd2 = d4(|s| eval_jet(&e, &shifted(s), JetOrder::One).unwrap().d1[j], 1e-3);
                    worst = worst.max(rel(d2[i][j], fd2));
                }
            }
        }
    }
    worst
}

fn fs_density_worst() -> f64 {
    let cases: [(KahlerModel, &[&str], usize); 4] = [
        (KahlerModel::FlatSpace { m: 1 }, &["1", "z^2 - 1", "exp(z)"], 1),
        (KahlerModel::poincare_disk(), &["1", "z"], 1),
        (KahlerModel::FlatSpace { m: 2 }, &["1", "exp(z1)", "z2^2 + z1"], 2),
        (KahlerModel::FlatSpace { m: 2 }, &["z1 - z2", "1 + z1*z2", "exp(z1 - z2)"], 2),
    ];
    let mut worst: f64 = 0.0;
    for (model, comps, m) in &cases {
        let f = ProjectiveMap::parse(comps, *m).unwrap();
        for p in sample_points() {
            let p: Vec<C64> = p[..*m].iter().map(|z| z * 0.5).collect();
            let log_norm = |q: &[C64]| f.values(q).unwrap().iter().map(|w| w.norm_sqr()).sum::<f64>().ln();
            let g_inv = model.metric_at(&p).unwrap().g_inv_diag;
            let mut lap = 0.0;
            for i in 0..*m {
                for dir in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                    let along = |s: f64| {
                        let mut q = p.clone();
                        q[i] += dir * s;
                        log_norm(&q)
                    };
                    lap += g_inv[i] * second4(along, 1e-3);
                }
            }
            let expected = 0.5 * lap;
            let got = fs_energy_density(model, &f, &p).unwrap();
            worst = worst.max((got - expected).abs() / (1e-3 + expected.abs()));
        }
    }
    worst
}

fn cross_module(_: &Path) -> Verdict {
    let ad = autodiff_worst();
    let fs = fs_density_worst();
    let mass = oracle::phi_mass();
    let pass = ad <= 1e-6 && fs <= 1e-5 && (mass - 1.0).abs() <= 1e-3;
    verdict(pass, format!("autodiff {ad:.1e}, FS density {fs:.1e}, Φ mass {mass:.6}"))
}

fn determinism(out: &Path) -> Verdict {
    let mut mismatches = Vec::new();
    let mut files = 0;
    for (name, _) in BUILTIN {
        let cfg = resolve(name, None).unwrap().with_overrides(None, Some(40), None).unwrap();
        let dirs: Vec<PathBuf> = (0..3).map(|k| out.join("determinism").join(format!("{name}-{k}"))).collect();
        let recs: Vec<RunRecord> = [Some(1), Some(1), Some(4)]
            .iter()
            .zip(&dirs)
            .map(|(w, d)| run(&cfg, &RunOptions { out_dir: d.clone(), workers: *w }).unwrap())
            .collect();
        for f in &recs[0].files {
            if f.extension().is_some_and(|e| e != "csv") {
                continue;
            }
            files += 1;
            let base = fs::read(f).unwrap();
            for d in &dirs[1..] {
                if fs::read(d.join(f.file_name().unwrap())).ok().as_ref() != Some(&base) {
                    mismatches.push(format!("{name}/{}", f.file_name().unwrap().to_string_lossy()));
                }
            }
        }
    }
    verdict(
        mismatches.is_empty() && files > 0,
        format!("{files} CSVs over {} scenarios, workers 1/1/4; mismatches: {mismatches:?}", BUILTIN.len()),
    )
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let criteria: [(&str, Criterion); 9] = [
        ("flat identity characteristic vs quadrature", identity_characteristic),
        ("first main theorem residual for [1:z^2]", fmt_identity),
        ("Ricci characteristic", ricci),
        ("defect saturation for e^z", defect),
        ("logarithmic derivative bound", ldl),
        ("second main theorem margin slope", smt),
        ("calculus lemma exceptional measure", calculus),
        ("cross-module numerics", cross_module),
        ("determinism across runs and workers", determinism),
    ];
    let mut all = true;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check(out);
        all &= v.pass;
        println!(
            "criterion {} {}: {} ({}) [{:.0} s]",
            k + 1,
            if v.pass { "PASS" } else { "FAIL" },
            name,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
