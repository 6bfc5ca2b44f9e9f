//! Runs the checks of a scenario and writes their artifacts.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use heatnev_core::functionals::{
    calculus_lemma_check, characteristic, counting_fmt_residual, defect_report, ldl_check, nevanlinna_curve,
    rational_pullback_check, ricci_characteristic, sandwich_check, smt_check, CurveSpec, FunctionalError,
    NevanlinnaCurve, CHAR_RELATIVE, RICCI_RELATIVE, SE_MULTIPLIER,
};
use heatnev_core::mapdsl::eval_value;
use heatnev_core::oracle;
use heatnev_core::stochastic::{Estimate, PathEnsemble};
use heatnev_core::target::{HermitianDivisor, LineBundleDegree, SncStatus};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::config::{Check, ConfigError, ScenarioConfig};
use crate::output::{counting_rows, curve_csv, estimate_rows, line_plot, num, table_csv, CurveRow, Series};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
    #[error("cannot build a pool of {0} workers: {1}")]
    Pool(usize, String),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Passed, with a diagnostic worth reading.
    Flagged,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Flagged => "FLAGGED",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub check: Check,
    pub status: Status,
    /// Named margins and statistics, all of which also land in summary.csv.
    pub metrics: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl CheckOutcome {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario: String,
    pub config_hash: String,
    pub outcomes: Vec<CheckOutcome>,
    pub files: Vec<PathBuf>,
}

impl RunRecord {
    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.status != Status::Fail)
    }

    pub fn outcome(&self, check: Check) -> Option<&CheckOutcome> {
        self.outcomes.iter().find(|o| o.check == check)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

/// Runs every check of `cfg` inside a pool of the requested size.
pub fn run(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunRecord, HarnessError> {
    match opts.workers {
        None => run_inner(cfg, &opts.out_dir),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| HarnessError::Pool(n, e.to_string()))?;
            pool.install(|| run_inner(cfg, &opts.out_dir))
        }
    }
}

struct Runner<'a> {
    cfg: &'a ScenarioConfig,
    ens: PathEnsemble,
    out: &'a Path,
    files: Vec<PathBuf>,
    curve: Option<Result<NevanlinnaCurve, FunctionalError>>,
    divisor_files_written: bool,
}

fn run_inner(cfg: &ScenarioConfig, out: &Path) -> Result<RunRecord, HarnessError> {
    fs::create_dir_all(out)
        .map_err(|e| HarnessError::Io { path: out.display().to_string(), message: e.to_string() })?;
    let ens =
        PathEnsemble::new(cfg.model.clone(), cfg.origin.clone(), cfg.path.clone()).map_err(FunctionalError::from)?;
    let mut r = Runner { cfg, ens, out, files: Vec::new(), curve: None, divisor_files_written: false };
    let mut outcomes = Vec::new();
    for &check in &cfg.experiment.checks {
        let mut o = CheckOutcome { check, status: Status::Pass, metrics: Vec::new(), notes: Vec::new() };
        let res = match check {
            Check::Characteristic => r.characteristic(&mut o),
            Check::Ricci => r.ricci(&mut o),
            Check::Fmt => r.fmt(&mut o),
            Check::Defect => r.defect(&mut o),
            Check::Ldl => r.ldl(&mut o),
            Check::Smt => r.smt(&mut o),
            Check::Calc => r.calc(&mut o),
            Check::Pullback => r.pullback(&mut o),
            Check::Sandwich => r.sandwich(&mut o),
        };
        match res {
            Ok(()) => {}
            Err(HarnessError::Functional(e)) => {
                o.status = Status::Fail;
                o.notes.push(format!("error: {e}"));
            }
            Err(e) => return Err(e),
        }
        outcomes.push(o);
    }
    let record = RunRecord { scenario: cfg.name.clone(), config_hash: cfg.hash.clone(), outcomes, files: Vec::new() };
    r.write_summary(&record)?;
    Ok(RunRecord { files: r.files, ..record })
}

fn fail_unless(o: &mut CheckOutcome, ok: bool) {
    if !ok {
        o.status = Status::Fail;
    }
}

fn flag(o: &mut CheckOutcome, note: String) {
    if o.status == Status::Pass {
        o.status = Status::Flagged;
    }
    o.notes.push(note);
}

fn pairs(es: &[Estimate]) -> Vec<(f64, f64)> {
    es.iter().map(|e| (e.t, e.mean)).collect()
}

fn scaled(es: &[Estimate], d: f64) -> Vec<Estimate> {
    es.iter().map(|e| Estimate { mean: e.mean * d, std_error: e.std_error * d, ..*e }).collect()
}

impl Runner<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), HarnessError> {
        let path = self.out.join(name);
        fs::write(&path, contents)
            .map_err(|e| HarnessError::Io { path: path.display().to_string(), message: e.to_string() })?;
        self.files.push(path);
        Ok(())
    }

    fn write_curve(&mut self, name: &str, rows: &[CurveRow]) -> Result<(), HarnessError> {
        self.write(name, &curve_csv(rows))
    }

    fn divisors(&self) -> Vec<HermitianDivisor> {
        self.cfg.divisors.iter().map(|d| d.divisor.clone()).collect()
    }

    fn curve(&mut self) -> Result<NevanlinnaCurve, HarnessError> {
        if self.curve.is_none() {
            let divisors = self.divisors();
            let spec = CurveSpec {
                map: &self.cfg.map,
                divisors: &divisors,
                t_grid: &self.cfg.t_grid,
                lambda_grid: &self.cfg.lambda_grid,
                clamp: self.cfg.lambda_clamp,
            };
            self.curve = Some(nevanlinna_curve(&self.ens, spec));
        }
        Ok(self.curve.clone().expect("just computed")?)
    }

    /// Per-divisor proximity, counting and λ-curve artifacts, written once per run.
    fn write_divisor_curves(&mut self, curve: &NevanlinnaCurve) -> Result<(), HarnessError> {
        if self.divisor_files_written {
            return Ok(());
        }
        self.divisor_files_written = true;
        self.write_curve("curve_characteristic.csv", &estimate_rows(&curve.t_char))?;
        let labels: Vec<String> = self.cfg.divisors.iter().map(|d| d.label.clone()).collect();
        for (dc, label) in curve.divisors.iter().zip(&labels) {
            self.write_curve(&format!("m_prox_{label}.csv"), &estimate_rows(&dc.m_prox))?;
            self.write_curve(&format!("n_sup_{label}.csv"), &counting_rows(&dc.n_sup, curve.n_retained))?;
            self.write_curve(&format!("n_reduced_{label}.csv"), &counting_rows(&dc.n_reduced, curve.n_retained))?;
            self.write_curve(&format!("n_conditional_{label}.csv"), &estimate_rows(&dc.n_rb))?;
            let mut header = vec!["lambda".to_string()];
            header.extend(curve.t_grid.iter().map(|t| format!("t={}", num(*t))));
            let rows: Vec<Vec<String>> = curve
                .lambda_grid
                .iter()
                .enumerate()
                .map(|(k, &l)| {
                    let mut row = vec![num(l)];
                    row.extend(dc.n_sup.lambda_curves.iter().map(|c| num(c[k])));
                    row
                })
                .collect();
            let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
            self.write(&format!("lambda_curve_{label}.csv"), &table_csv(&header_refs, &rows))?;
            let last = dc.n_sup.lambda_curves.last().expect("non-empty grid");
            let w = dc.n_sup.window;
            let plateau: Vec<(f64, f64)> = (w.lo..=w.hi).map(|k| (curve.lambda_grid[k], last[k])).collect();
            let all: Vec<(f64, f64)> = curve.lambda_grid.iter().copied().zip(last.iter().copied()).collect();
            let svg = line_plot(
                &format!("lambda-curve for divisor {label} at t = {}", curve.t_grid.last().expect("non-empty")),
                "lambda",
                "lambda * P(sup > lambda)",
                &[Series { name: "curve", points: all }, Series { name: "plateau", points: plateau }],
                false,
            );
            self.write(&format!("lambda_curve_{label}.svg"), &svg)?;
        }
        Ok(())
    }

    fn characteristic(&mut self, o: &mut CheckOutcome) -> Result<(), HarnessError> {
        let cfg = self.cfg;
        let d = cfg.experiment.line_bundle_degree;
        let tc = characteristic(&self.ens, &cfg.map, LineBundleDegree(d), &cfg.t_grid)?;
        self.write_curve("characteristic.csv", &estimate_rows(&tc))?;
        let monotone = tc.windows(2).all(|w| w[1].mean >= w[0].mean);
        o.metrics.push(("nondecreasing".into(), f64::from(u8::from(monotone))));
        fail_unless(o, monotone);
        let mut series = vec![Series { name: "estimate", points: pairs(&tc) }];
        if let Some(name) = &cfg.experiment.oracle {
            let table = oracle::run_oracle(name, &cfg.t_grid).expect("validated oracle name");
            let mut rows = Vec::new();
            let mut worst = f64::NEG_INFINITY;
            let mut max_rel = 0.0f64;
            for (e, &(_, v)) in tc.iter().zip(&table.rows) {
                let tol = (CHAR_RELATIVE * v.abs()).max(SE_MULTIPLIER * e.std_error);
                let err = (e.mean - v).abs();
                worst = worst.max(err - tol);
                max_rel = max_rel.max(err / v.abs());
                rows.push(vec![num(e.t), num(e.mean), num(e.std_error), num(v), num(err), num(tol)]);
            }
            self.write(
                "characteristic_oracle.csv",
                &table_csv(&["t", "estimate", "std_error", "oracle", "abs_error", "tolerance"], &rows),
            )?;
            o.metrics.push(("max_relative_error".into(), max_rel));
            o.metrics.push(("worst_error_minus_tolerance".into(), worst));
            fail_unless(o, worst <= 0.0);
            series.push(Series { name: "oracle", points: table.rows.clone() });
        }
        let svg = line_plot("characteristic", "t", "T(t)", &series, true);
        self.write("characteristic.svg", &svg)
    }

    fn ricci(&mut self, o: &mut CheckOutcome) -> Result<(), HarnessError> {
        let cfg = self.cfg;
        let r = ricci_characteristic(&self.ens, &cfg.t_grid)?;
        self.write_curve("ricci.csv", &estimate_rows(&r))?;
        if cfg.model.is_flat() {
            let zero = r.iter().all(|e| e.mean == 0.0);
            o.metrics.push(("exactly_zero".into(), f64::from(u8::from(zero))));
            fail_unless(o, zero);
        } else if let Some(s) = cfg.experiment.ricci_scalar {
            let rel = r.iter().map(|e| ((e.mean - s * e.t) / (s * e.t)).abs()).fold(0.0, f64::max);
            o.metrics.push(("max_relative_error".into(), rel));
            o.metrics.push(("tolerance".into(), RICCI_RELATIVE));
            fail_unless(o, rel <= RICCI_RELATIVE);
        } else {
            flag(o, "no reference scalar curvature given; curve reported only".into());
        }
        let svg = line_plot(
            "Ricci characteristic",
            "t",
            "T(t, Ric)",
            &[Series { name: "estimate", points: pairs(&r) }],
            false,
        );
        self.write("ricci.svg", &svg)
    }

    fn fmt(&mut self, o: &mut CheckOutcome) -> Result<(), HarnessError> {
        let curve = self.curve()?;
        self.write_divisor_curves(&curve)?;
        let window = self.cfg.experiment.fmt_window;
        for (dc, nd) in curve.divisors.iter().zip(&self.cfg.divisors) {
            let label = &nd.label;
            let t_l = scaled(&curve.t_char, f64::from(dc.degree));
            let res = counting_fmt_residual(&t_l, &dc.m_prox, &dc.n_sup, window)?;
            let rows: Vec<Vec<String>> = res
                .t
                .iter()
                .zip(&res.residual)
                .zip(&res.calibrated)
                .map(|((t, r), c)| vec![num(*t), num(*r), num(*c)])
                .collect();
            self.write(
                &format!("fmt_residual_{label}.csv"),
                &table_csv(&["t", "residual", "calibrated_counting"], &rows),
            )?;
            o.metrics.push((format!("{label}.residual_std"), res.residual_std));
            o.metrics.push((format!("{label}.pooled_se"), res.pooled_se));
            o.metrics.push((format!("{label}.tolerance"), res.tolerance));
            fail_unless(o, res.passes());
            if dc.n_sup.window.no_plateau {
                flag(o, format!("divisor {label}: lambda-curve is monotone, no plateau"));
            }
            let g: Vec<usize> = (0..curve.t_grid.len()).collect();
            let svg = line_plot(
                &format!("first main theorem, divisor {label}"),
                "t",
                "value",
                &[
                    Series { name: "T", points: pairs(&t_l) },
                    Series { name: "m", points: pairs(&dc.m_prox) },
                    Series {
                        name: "N_sup",
                        points: g.iter().map(|&i| (curve.t_grid[i], dc.n_sup.value_at(i))).collect(),
                    },
                    Series { name: "T-m-N", points: res.t.iter().copied().zip(res.residual.iter().copied()).collect() },
                ],
                false,
            );
            self.write(&format!("fmt_{label}.svg"), &svg)?;
        }
        Ok(())
    }

    fn defect(&mut self, o: &mut CheckOutcome) -> Result<(), HarnessError> {
        let curve = self.curve()?;
        self.write_divisor_curves(&curve)?;
        let rep = defect_report(&curve, self.cfg.map.n(), self.cfg.tail_window)?;
        let rows: Vec<Vec<String>> = rep
            .defects
            .iter()
            .zip(&self.cfg.divisors)
            .map(|(d, nd)| {
                vec![
                    nd.label.clone(),
                    d.degree.to_string(),
                    num(d.delta),
                    num(d.theta),
                    num(d.delta_raw),
                    num(d.theta_raw),
                    d.within_bracket.to_string(),
                ]
            })
            .collect();
        self.write(
            "defect.csv",
            &table_csv(
                &["divisor", "degree", "delta", "theta", "delta_raw", "theta_raw", "theta_within_bracket"],
                &rows,
            ),
        )?;
        for (d, nd) in rep.defects.iter().zip(&self.cfg.divisors) {
            o.metrics.push((format!("{}.delta", nd.label), d.delta));
            o.metrics.push((format!("{}.theta", nd.label), d.theta));
        }
        o.metrics.push(("delta_sum".into(), rep.delta_sum));
        o.metrics.push(("theta_sum".into(), rep.theta_sum));
        o.metrics.push(("bound".into(), rep.bound));
        o.metrics.push(("clip_events".into(), rep.clip_events as f64));
        fail_unless(o, rep.bound_holds());
        if let Some(min) = self.cfg.experiment.min_defect_sum {
            o.metrics.push(("min_delta_sum".into(), min));
            fail_unless(o, rep.delta_sum >= min);
        }
        if rep.clip_events > 0 {
            flag(o, format!("{} defect estimates clipped to [0, 1]", rep.clip_events));
        }
        Ok(())
    }

    fn ldl(&mut self, o: &mut CheckOutcome) -> Result<(), HarnessError> {
        let cfg = self.cfg;
        for (i, (text, psi)) in cfg.experiment.psi.iter().enumerate() {
            let tag = format!("psi{}", i + 1);
            let rep = ldl_check(&self.ens, psi, &cfg.t_grid, cfg.delta, cfg.experiment.fit_time)?;
            self.write_curve(&format!("ldl_{tag}_m_grad.csv"), &estimate_rows(&rep.m_grad))?;
            self.write_curve(&format!("ldl_{tag}_t_psi.csv"), &estimate_rows(&rep.t_psi))?;
            self.write_curve(&format!("ldl_{tag}_t_phi.csv"), &estimate_rows(&rep.t_phi))?;
            let rows: Vec<Vec<String>> = rep.bound_margin.iter().map(|(t, m)| vec![num(*t), num(*m)]).collect();
            self.write(&format!("ldl_{tag}_bound_margin.csv"), &table_csv(&["t", "margin"], &rows))?;
            let rows: Vec<Vec<String>> =
                rep.lemma_margin.iter().map(|(t, m, se)| vec![num(*t), num(*m), num(*se)]).collect();
            self.write(&format!("ldl_{tag}_lemma_margin.csv"), &table_csv(&["t", "margin", "std_error"], &rows))?;
            let max_m = rep.m_grad.iter().map(|e| e.mean).fold(0.0, f64::max);
            let worst_lemma =
                rep.lemma_margin.iter().map(|(_, m, se)| m + SE_MULTIPLIER * se).fold(f64::INFINITY, f64::min);
            o.notes.push(format!("{tag} = {text}"));
            o.metrics.push((format!("{tag}.coverage"), rep.coverage));
            o.metrics.push((format!("{tag}.fit_constant"), rep.fit_constant));
            o.metrics.push((format!("{tag}.max_m_grad"), max_m));
            o.metrics.push((format!("{tag}.lemma_worst_margin_plus_3se"), worst_lemma));
            fail_unless(o, rep.passes());
            let svg = line_plot(
                &format!("logarithmic derivative, psi = {text}"),
                "t",
                "value",
                &[
                    Series { name: "m(grad psi / psi)", points: pairs(&rep.m_grad) },
                    Series {
                        name: "bound",
                        points: rep
                            .t_psi
                            .iter()
                            .filter(|e| e.t >= rep.fit_time)
                            .map(|e| (e.t, rep.coefficient * e.mean.ln() + rep.fit_constant))
                            .collect(),
                    },
                ],
                false,
            );
            self.write(&format!("ldl_{tag}.svg"), &svg)?;
        }
        Ok(())
    }

    fn smt(&mut self, o: &mut CheckOutcome) -> Result<(), HarnessError> {
        let cfg = self.cfg;
        let divisors = self.divisors();
        let rep = smt_check(&self.ens, &cfg.map, &divisors, &cfg.t_grid, &cfg.lambda_grid, cfg.tail_window)?;
        self.write_curve("smt_margin.csv", &estimate_rows(&rep.margin))?;
        self.write_curve("smt_characteristic.csv", &estimate_rows(&rep.curve.t_char))?;
        for (dc, nd) in rep.curve.divisors.iter().zip(&cfg.divisors) {
            self.write_curve(
                &format!("smt_n_reduced_{}.csv", nd.label),
                &counting_rows(&dc.n_reduced, rep.curve.n_retained),
            )?;
        }
        let rows: Vec<Vec<String>> =
            rep.margin.iter().zip(&rep.log_t_l).map(|(m, l)| vec![num(m.t), num(m.mean), num(*l)]).collect();
        self.write("smt_ratio.csv", &table_csv(&["t", "margin", "log_t_l"], &rows))?;
        o.metrics.push(("tail_slope".into(), rep.tail_slope));
        o.metrics.push(("late_slope".into(), rep.late_slope));
        o.metrics.push(("slope_max".into(), heatnev_core::functionals::SMT_SLOPE_MAX));
        fail_unless(o, rep.passes());
        match &rep.snc {
            SncStatus::Verified => {}
            SncStatus::Unverified(why) => flag(o, format!("normal crossings not verified: {why}")),
            SncStatus::Failed(why) => flag(o, format!("normal crossings failed: {why}")),
        }
        let svg = line_plot(
            "second main theorem margin",
            "log T_L",
            "S(t)",
            &[Series {
                name: "S",
                points: rep.log_t_l.iter().copied().zip(rep.margin.iter().map(|m| m.mean)).collect(),
            }],
            false,
        );
        self.write("smt_margin.svg", &svg)
    }

    fn calc(&mut self, o: &mut CheckOutcome) -> Result<(), HarnessError> {
        let cfg = self.cfg;
        let k = cfg.experiment.calculus_field.clone().expect("validated");
        let field = move |p: &[C64]| eval_value(&k, p).map_or(f64::NAN, |v| v.re);
        let rep = calculus_lemma_check(&self.ens, field, &cfg.t_grid, cfg.delta, cfg.experiment.calculus_window)?;
        self.write_curve("calc_lhs.csv", &estimate_rows(&rep.lhs))?;
        self.write_curve("calc_integral.csv", &estimate_rows(&rep.integral))?;
        let rows: Vec<Vec<String>> = rep
            .lhs
            .iter()
            .zip(&rep.integral)
            .zip(&rep.violated)
            .map(|((a, b), v)| vec![num(a.t), num(a.mean), num(b.mean.max(0.0).powf(1.0 + rep.delta)), v.to_string()])
            .collect();
        self.write("calc_violation.csv", &table_csv(&["t", "lhs", "rhs", "violated"], &rows))?;
        o.metrics.push(("violation_measure".into(), rep.measure));
        o.metrics.push(("measure_max".into(), heatnev_core::functionals::CALCULUS_MEASURE_MAX));
        fail_unless(o, rep.passes());
        Ok(())
    }

    fn pullback(&mut self, o: &mut CheckOutcome) -> Result<(), HarnessError> {
        let cfg = self.cfg;
        let phi = cfg.experiment.pullback.clone().expect("validated");
        let rep = rational_pullback_check(&self.ens, &cfg.map, &phi, &cfg.t_grid)?;
        self.write_curve("pullback_composite.csv", &estimate_rows(&rep.t_composite))?;
        self.write_curve("pullback_map.csv", &estimate_rows(&rep.t_map))?;
        let rows: Vec<Vec<String>> = rep.ratio.iter().map(|(t, r)| vec![num(*t), num(*r)]).collect();
        self.write("pullback_ratio.csv", &table_csv(&["t", "ratio"], &rows))?;
        let max_ratio = rep.max_ratio(cfg.tail_window);
        o.metrics.push(("tail_max_ratio".into(), max_ratio));
        fail_unless(o, max_ratio.is_finite());
        Ok(())
    }

    fn sandwich(&mut self, o: &mut CheckOutcome) -> Result<(), HarnessError> {
        let cfg = self.cfg;
        let rep = sandwich_check(&self.ens, &cfg.map, &cfg.t_grid, cfg.tail_window)?;
        self.write_curve("sandwich_t_hat.csv", &estimate_rows(&rep.t_hat))?;
        for (j, c) in rep.coordinate_chars.iter().enumerate() {
            self.write_curve(&format!("sandwich_zeta{}.csv", j + 1), &estimate_rows(c))?;
        }
        let rows: Vec<Vec<String>> = rep
            .lower_margin
            .iter()
            .zip(&rep.upper_margin)
            .map(|(l, u)| vec![num(l.0), num(l.1), num(u.1), num(l.2)])
            .collect();
        self.write("sandwich_margin.csv", &table_csv(&["t", "lower_margin", "upper_margin", "std_error"], &rows))?;
        let worst = rep
            .lower_margin
            .iter()
            .chain(&rep.upper_margin)
            .map(|(_, m, se)| m + SE_MULTIPLIER * se)
            .fold(f64::INFINITY, f64::min);
        o.metrics.push(("lower_constant".into(), rep.lower_constant));
        o.metrics.push(("upper_constant".into(), rep.upper_constant));
        o.metrics.push(("worst_margin_plus_3se".into(), worst));
        fail_unless(o, rep.passes());
        Ok(())
    }

    fn write_summary(&mut self, rec: &RunRecord) -> Result<(), HarnessError> {
        let mut rows = Vec::new();
        let mut text = format!("scenario {}\nconfig {}\n", rec.scenario, rec.config_hash);
        for o in &rec.outcomes {
            rows.push(vec![o.check.to_string(), "status".into(), o.status.to_string()]);
            text.push_str(&format!("\n[{}] {}\n", o.check, o.status));
            for (name, v) in &o.metrics {
                rows.push(vec![o.check.to_string(), name.clone(), num(*v)]);
                text.push_str(&format!("  {name} = {}\n", num(*v)));
            }
            for n in &o.notes {
                text.push_str(&format!("  note: {n}\n"));
            }
        }
        text.push_str(&format!("\noverall {}\n", if rec.all_pass() { "PASS" } else { "FAIL" }));
        self.write("summary.csv", &table_csv(&["check", "metric", "value"], &rows))?;
        self.write("summary.txt", &text)
    }
}
