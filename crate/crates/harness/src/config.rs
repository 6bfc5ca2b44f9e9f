//! Scenario files: TOML with `manifold`, `map`, `divisors`, `simulation` and `experiment` sections.

use std::fmt;
use std::path::Path;

use heatnev_core::geometry::{ChartRegion, ConformalFactor, KahlerModel, SurfaceFactor};
use heatnev_core::mapdsl::{parse, parse_field, Expr};
use heatnev_core::oracle;
use heatnev_core::stochastic::{PathConfig, LAMBDA_CLAMP, MAX_DIM};
use heatnev_core::target::{HermitianDivisor, ProjectiveMap};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{}", ValidationList(.0))]
    Invalid(Vec<String>),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

struct ValidationList<'a>(&'a [String]);

impl fmt::Display for ValidationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} validation error(s)", self.0.len())?;
        for e in self.0 {
            write!(f, "\n  - {e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Flat,
    Conformal,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Flat,
    Conformal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDisk {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFactor {
    pub kind: FactorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disk: Option<RawDisk>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawManifold {
    pub kind: ManifoldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disk: Option<RawDisk>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<RawFactor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMap {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub components: Vec<String>,
    pub origin: Vec<[f64; 2]>,
}

/// `[re, im]` for the affine point [1 : a], or `"inf"` for [0 : 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawPoint {
    Affine([f64; 2]),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMonomial {
    pub coeff: [f64; 2],
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDivisor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<RawPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperplane: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monomials: Option<Vec<RawMonomial>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl RawGrid {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            RawGrid::List(v) => Ok(v.clone()),
            RawGrid::Range { start, stop, step } => {
                if !(*step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
                    return Err(format!("range {start}..{stop} step {step} is not a finite increasing range"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                if n > 1_000_000 {
                    return Err("range has more than 10^6 points".into());
                }
                Ok((0..=n).map(|k| start + k as f64 * step).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSimulation {
    pub t_grid: RawGrid,
    pub dt_base: f64,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<RawGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_clamp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_margin: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawExperiment {
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_bundle_degree: Option<i64>,
    /// Oracle compared against the characteristic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
    /// Constant scalar curvature the Ricci characteristic is compared against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ricci_scalar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fmt_window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub psi: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calculus_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calculus_window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pullback: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_defect_sum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub manifold: RawManifold,
    pub map: RawMap,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub divisors: Vec<RawDivisor>,
    pub simulation: RawSimulation,
    #[serde(default)]
    pub experiment: RawExperiment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    Characteristic,
    Ricci,
    Fmt,
    Defect,
    Ldl,
    Smt,
    Calc,
    Pullback,
    Sandwich,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::Characteristic,
        Check::Ricci,
        Check::Fmt,
        Check::Defect,
        Check::Ldl,
        Check::Smt,
        Check::Calc,
        Check::Pullback,
        Check::Sandwich,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Characteristic => "characteristic",
            Check::Ricci => "ricci",
            Check::Fmt => "fmt",
            Check::Defect => "defect",
            Check::Ldl => "ldl",
            Check::Smt => "smt",
            Check::Calc => "calc",
            Check::Pullback => "pullback",
            Check::Sandwich => "sandwich",
        }
    }

    pub fn from_name(s: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == s.trim())
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedDivisor {
    pub label: String,
    pub divisor: HermitianDivisor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub checks: Vec<Check>,
    pub line_bundle_degree: i64,
    pub oracle: Option<String>,
    pub ricci_scalar: Option<f64>,
    pub fmt_window: (f64, f64),
    pub psi: Vec<(String, Expr)>,
    pub fit_time: f64,
    pub calculus_field: Option<Expr>,
    pub calculus_window: (f64, f64),
    pub pullback: Option<Expr>,
    pub min_defect_sum: Option<f64>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub description: String,
    pub model: KahlerModel,
    pub map: ProjectiveMap,
    pub origin: Vec<C64>,
    pub divisors: Vec<NamedDivisor>,
    pub t_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub lambda_clamp: f64,
    pub delta: f64,
    pub tail_window: (f64, f64),
    pub path: PathConfig,
    pub experiment: Experiment,
    /// SHA-256 of the canonical serialization.
    pub hash: String,
    raw: RawConfig,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        ConfigError::Parse { line, column, message: e.message().to_string() }
    })
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    ScenarioConfig::from_str(&text)
}

fn c(v: [f64; 2]) -> C64 {
    C64::new(v[0], v[1])
}

fn region(disk: &Option<RawDisk>, errors: &mut Vec<String>) -> ChartRegion {
    match disk {
        None => ChartRegion::Plane,
        Some(d) => {
            if !(d.radius > 0.0) || !d.radius.is_finite() {
                errors.push(format!("disk radius {} must be positive", d.radius));
            }
            ChartRegion::Disk { center: c(d.center), radius: d.radius }
        }
    }
}

fn conformal(
    phi: &Option<String>,
    disk: &Option<RawDisk>,
    what: &str,
    errors: &mut Vec<String>,
) -> Option<ConformalFactor> {
    let region = region(disk, errors);
    let Some(phi) = phi else {
        errors.push(format!("{what}: conformal factor needs `phi`"));
        return None;
    };
    match parse_field(phi, 1) {
        Ok(e) => match ConformalFactor::new(e, region) {
            Ok(f) => Some(f),
            Err(err) => {
                errors.push(format!("{what}: {err}"));
                None
            }
        },
        Err(err) => {
            errors.push(format!("{what}: phi `{phi}`: {err}"));
            None
        }
    }
}

fn build_model(raw: &RawManifold, errors: &mut Vec<String>) -> Option<KahlerModel> {
    let model = match raw.kind {
        ManifoldKind::Flat => {
            let m = raw.dim.unwrap_or(1);
            if m == 0 || m > MAX_DIM {
                errors.push(format!("manifold dim {m} outside 1..={}", MAX_DIM));
                return None;
            }
            KahlerModel::FlatSpace { m }
        }
        ManifoldKind::Conformal => {
            if raw.dim.is_some_and(|d| d != 1) {
                errors.push("conformal manifold has dim 1".into());
            }
            KahlerModel::ConformalSurface(conformal(&raw.phi, &raw.disk, "manifold", errors)?)
        }
        ManifoldKind::Product => {
            if raw.factors.is_empty() {
                errors.push("product manifold needs at least one factor".into());
                return None;
            }
            if raw.dim.is_some_and(|d| d != raw.factors.len()) {
                errors.push(format!("manifold dim does not match its {} factors", raw.factors.len()));
            }
            let mut factors = Vec::new();
            for (i, f) in raw.factors.iter().enumerate() {
                factors.push(match f.kind {
                    FactorKind::Flat => SurfaceFactor::Flat,
                    FactorKind::Conformal => {
                        SurfaceFactor::Conformal(conformal(&f.phi, &f.disk, &format!("factor {}", i + 1), errors)?)
                    }
                });
            }
            KahlerModel::ProductOfSurfaces(factors)
        }
    };
    if raw.kind != ManifoldKind::Product && !raw.factors.is_empty() {
        errors.push("`factors` is only valid for product manifolds".into());
    }
    Some(model)
}

fn build_divisor(raw: &RawDivisor, n: usize, errors: &mut Vec<String>, label: &str) -> Option<HermitianDivisor> {
    let given = [raw.point.is_some(), raw.hyperplane.is_some(), raw.monomials.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        errors.push(format!("divisor {label}: give exactly one of `point`, `hyperplane`, `monomials`"));
        return None;
    }
    let built = if let Some(p) = &raw.point {
        let a = match p {
            RawPoint::Affine(a) => [C64::new(1.0, 0.0), c(*a)],
            RawPoint::Named(s) if s == "inf" => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            RawPoint::Named(s) => {
                errors.push(format!("divisor {label}: point `{s}` is neither [re, im] nor \"inf\""));
                return None;
            }
        };
        HermitianDivisor::point(a)
    } else if let Some(h) = &raw.hyperplane {
        HermitianDivisor::hyperplane(&h.iter().map(|&v| c(v)).collect::<Vec<_>>())
    } else {
        let mons = raw.monomials.as_ref().expect("checked above");
        HermitianDivisor::new(n, mons.iter().map(|m| (c(m.coeff), m.exponents.clone())).collect())
    };
    match built {
        Ok(d) => {
            if d.n() != n {
                errors.push(format!("divisor {label} lives in P^{}, the map targets P^{n}", d.n()));
                return None;
            }
            if let Some(deg) = raw.degree {
                if deg != d.degree() {
                    errors
                        .push(format!("divisor {label}: declared degree {deg}, monomials have degree {}", d.degree()));
                }
            }
            Some(d)
        }
        Err(e) => {
            errors.push(format!("divisor {label}: {e}"));
            None
        }
    }
}

fn check_grid(name: &str, grid: &[f64], errors: &mut Vec<String>) {
    if grid.is_empty() {
        errors.push(format!("{name} is empty"));
    } else if grid.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        errors.push(format!("{name} must contain positive finite values"));
    } else if grid.windows(2).any(|w| w[1] <= w[0]) {
        errors.push(format!("{name} is not increasing"));
    }
}

fn check_window(name: &str, w: (f64, f64), grid: &[f64], errors: &mut Vec<String>) {
    if !(w.0 < w.1) {
        errors.push(format!("{name} [{}, {}] is empty", w.0, w.1));
    } else if !grid.iter().any(|&t| t >= w.0 && t <= w.1) {
        errors.push(format!("{name} [{}, {}] contains no grid time", w.0, w.1));
    }
}

impl ScenarioConfig {
    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(parse_raw(text)?)
    }

    /// Validates every section and reports all problems together.
    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let mut errors = Vec::new();
        if raw.name.trim().is_empty() {
            errors.push("name is empty".into());
        }
        let model = build_model(&raw.manifold, &mut errors);
        let m = model.as_ref().map_or(raw.map.origin.len(), KahlerModel::dim);

        let origin: Vec<C64> = raw.map.origin.iter().map(|&v| c(v)).collect();
        if origin.len() != m {
            errors.push(format!("origin has {} coordinates, the manifold has dimension {m}", origin.len()));
        }
        let map = {
            let mut comps = Vec::new();
            for (i, s) in raw.map.components.iter().enumerate() {
                match parse(s, m) {
                    Ok(e) => comps.push(e),
                    Err(e) => errors.push(format!("map component {} `{s}`: {e}", i)),
                }
            }
            if comps.len() == raw.map.components.len() {
                match ProjectiveMap::new(comps, m) {
                    Ok(f) => Some(f),
                    Err(e) => {
                        errors.push(format!("map: {e}"));
                        None
                    }
                }
            } else {
                None
            }
        };
        if let (Some(n), Some(f)) = (raw.map.n, &map) {
            if n != f.n() {
                errors.push(format!("map declares n = {n} but has {} components", f.n() + 1));
            }
        }
        let mut origin_ok = origin.len() == m;
        if let (Some(model), true) = (&model, origin_ok) {
            if !model.contains(&origin) {
                errors.push("origin lies outside the chart".into());
                origin_ok = false;
            } else if let Err(e) = model.metric_at(&origin) {
                errors.push(format!("metric at the origin: {e}"));
                origin_ok = false;
            }
        }
        let values = match (&map, origin_ok) {
            (Some(f), true) => match f.values(&origin) {
                Ok(v) => Some(v),
                Err(e) => {
                    errors.push(format!("map at the origin: {e}"));
                    None
                }
            },
            _ => None,
        };

        let mut divisors = Vec::new();
        if let Some(f) = &map {
            for (i, rd) in raw.divisors.iter().enumerate() {
                let label = rd.label.clone().unwrap_or_else(|| format!("D{}", i + 1));
                if divisors.iter().any(|d: &NamedDivisor| d.label == label) {
                    errors.push(format!("duplicate divisor label {label}"));
                }
                if label.is_empty() || !label.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_') {
                    errors.push(format!("divisor label `{label}` must be alphanumeric, '-' or '_'"));
                }
                if let Some(d) = build_divisor(rd, f.n(), &mut errors, &label) {
                    if let Some(v) = &values {
                        if d.eval(v).norm() == 0.0 || d.log_inverse_norm(v).is_infinite() {
                            errors.push(format!("origin on divisor {label}"));
                        }
                    }
                    divisors.push(NamedDivisor { label, divisor: d });
                }
            }
        }

        let sim = &raw.simulation;
        let t_grid = sim.t_grid.values().unwrap_or_else(|e| {
            errors.push(format!("t_grid: {e}"));
            Vec::new()
        });
        check_grid("t_grid", &t_grid, &mut errors);
        let lambda_grid = match &sim.lambda_grid {
            Some(g) => g.values().unwrap_or_else(|e| {
                errors.push(format!("lambda_grid: {e}"));
                Vec::new()
            }),
            None => (1..=55).map(|k| 2.0 * k as f64).collect(),
        };
        check_grid("lambda_grid", &lambda_grid, &mut errors);
        let lambda_clamp = sim.lambda_clamp.unwrap_or(LAMBDA_CLAMP);
        if lambda_grid.last().is_some_and(|&l| l >= lambda_clamp) {
            errors.push(format!("lambda_grid must stay below lambda_clamp = {lambda_clamp}"));
        }
        let delta = sim.delta.unwrap_or(0.5);
        if !(delta > 0.0) || !delta.is_finite() {
            errors.push(format!("delta = {delta} must be positive"));
        }
        let t_last = t_grid.last().copied().unwrap_or(1.0);
        let t_first = t_grid.first().copied().unwrap_or(1.0);
        let tail_window = sim.tail_window.map_or((0.5 * t_last, t_last), |w| (w[0], w[1]));
        check_window("tail_window", tail_window, &t_grid, &mut errors);
        let path = PathConfig {
            t_max: t_last,
            dt_base: sim.dt_base,
            boundary_margin: sim.boundary_margin.unwrap_or(0.5),
            n_paths: sim.n_paths,
            seed: sim.seed,
        };
        if let Err(e) = path.validate() {
            errors.push(e.to_string());
        }

        let ex = &raw.experiment;
        let mut checks = Vec::new();
        for s in &ex.checks {
            match Check::from_name(s) {
                Some(ch) if !checks.contains(&ch) => checks.push(ch),
                Some(_) => errors.push(format!("check `{s}` listed twice")),
                None => errors.push(format!("unknown check `{s}` (known: {})", Check::ALL.map(Check::name).join(", "))),
            }
        }
        checks.sort();
        let mut psi = Vec::new();
        for s in &ex.psi {
            match parse(s, m) {
                Ok(e) if e.is_constant() => errors.push(format!("psi `{s}` is constant")),
                Ok(e) => psi.push((s.clone(), e)),
                Err(e) => errors.push(format!("psi `{s}`: {e}")),
            }
        }
        let calculus_field = ex.calculus_field.as_ref().and_then(|s| match parse_field(s, m) {
            Ok(e) => Some(e),
            Err(e) => {
                errors.push(format!("calculus_field `{s}`: {e}"));
                None
            }
        });
        let n_target = map.as_ref().map_or(1, ProjectiveMap::n);
        let pullback = ex.pullback.as_ref().and_then(|s| match parse(s, n_target) {
            Ok(e) => Some(e),
            Err(e) => {
                errors.push(format!("pullback `{s}`: {e}"));
                None
            }
        });
        if let Some(o) = &ex.oracle {
            if oracle::run_oracle(o, &[1.0]).is_none() {
                errors.push(format!("unknown oracle `{o}`"));
            }
        }
        let fmt_window = ex.fmt_window.map_or((t_first, t_last), |w| (w[0], w[1]));
        let calculus_window = ex.calculus_window.map_or((t_first, t_last), |w| (w[0], w[1]));
        let fit_time = ex.fit_time.unwrap_or(t_first);
        let line_bundle_degree = ex.line_bundle_degree.unwrap_or(1);
        for ch in &checks {
            match ch {
                Check::Fmt | Check::Defect | Check::Smt if raw.divisors.is_empty() => {
                    errors.push(format!("check {ch} needs at least one divisor"))
                }
                Check::Fmt => check_window("fmt_window", fmt_window, &t_grid, &mut errors),
                Check::Ldl if ex.psi.is_empty() => errors.push("check ldl needs `psi`".into()),
                Check::Ldl if !t_grid.iter().any(|&t| t >= fit_time) => {
                    errors.push(format!("fit_time {fit_time} lies beyond the grid"))
                }
                Check::Calc if ex.calculus_field.is_none() => errors.push("check calc needs `calculus_field`".into()),
                Check::Calc => check_window("calculus_window", calculus_window, &t_grid, &mut errors),
                Check::Pullback if ex.pullback.is_none() => errors.push("check pullback needs `pullback`".into()),
                Check::Characteristic if line_bundle_degree < 1 => {
                    errors.push("line_bundle_degree must be positive".into())
                }
                _ => {}
            }
        }

        if !errors.is_empty() {
            return Err(ConfigError::Invalid(errors));
        }
        let hash = config_hash(&raw);
        Ok(ScenarioConfig {
            name: raw.name.clone(),
            description: raw.description.clone(),
            model: model.expect("no errors"),
            map: map.expect("no errors"),
            origin,
            divisors,
            t_grid,
            lambda_grid,
            lambda_clamp,
            delta,
            tail_window,
            path,
            experiment: Experiment {
                checks,
                line_bundle_degree,
                oracle: ex.oracle.clone(),
                ricci_scalar: ex.ricci_scalar,
                fmt_window,
                psi,
                fit_time,
                calculus_field,
                calculus_window,
                pullback,
                min_defect_sum: ex.min_defect_sum,
            },
            hash,
            raw,
        })
    }

    pub fn raw(&self) -> &RawConfig {
        &self.raw
    }

    /// Re-validates with a different seed, path count or check selection.
    pub fn with_overrides(
        &self,
        seed: Option<u64>,
        n_paths: Option<usize>,
        checks: Option<&[Check]>,
    ) -> Result<Self, ConfigError> {
        let mut raw = self.raw.clone();
        if let Some(c) = checks {
            raw.experiment.checks = c.iter().map(|c| c.name().to_string()).collect();
        }
        if let Some(s) = seed {
            raw.simulation.seed = s;
        }
        if let Some(n) = n_paths {
            raw.simulation.n_paths = n;
        }
        Self::from_raw(raw)
    }
}

/// Hash of the canonical re-serialization, so comments, spacing and key order do not matter.
pub fn config_hash(raw: &RawConfig) -> String {
    let canonical = toml::to_string(raw).expect("config serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}
