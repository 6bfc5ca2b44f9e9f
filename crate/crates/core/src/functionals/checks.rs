use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::curve::{nevanlinna_curve, CountingSeries, CurveSpec, NevanlinnaCurve};
use super::{
    check_grid, FunctionalError, CALCULUS_MEASURE_MAX, FMT_RELATIVE, LDL_COVERAGE, SE_MULTIPLIER, SMT_SLOPE_MAX,
};
use crate::geometry::KahlerModel;
use crate::mapdsl::{eval_generic, Dual1, Expr};
use crate::stochastic::{Estimate, PathEnsemble, LAMBDA_CLAMP, MAX_DIM};
use crate::target::{
    nondegeneracy_probe, snc_probe, with_slots, HermitianDivisor, LineBundleDegree, ProjectiveMap, SncStatus,
};

fn scale(est: &[Estimate], d: f64) -> Vec<Estimate> {
    est.iter().map(|e| Estimate { mean: e.mean * d, std_error: e.std_error * d.abs(), ..*e }).collect()
}

/// T̃_f(t, O(d)) = (d/2)·𝔼∫₀ᵗ e_{f*ω_FS}(X_s) ds.
pub fn characteristic(
    ens: &PathEnsemble,
    f: &ProjectiveMap,
    d: LineBundleDegree,
    t_grid: &[f64],
) -> Result<Vec<Estimate>, FunctionalError> {
    if d.0 < 0 {
        return Err(FunctionalError::InvalidGrid("line bundle degree must be nonnegative".into()));
    }
    let curve =
        nevanlinna_curve(ens, CurveSpec { map: f, divisors: &[], t_grid, lambda_grid: &[1.0], clamp: LAMBDA_CLAMP })?;
    Ok(scale(&curve.t_char, d.0 as f64))
}

/// m̃_f(t, D) = 𝔼[log 1/‖s_D∘f(X_t)‖].
pub fn proximity(
    ens: &PathEnsemble,
    f: &ProjectiveMap,
    d: &HermitianDivisor,
    t: f64,
) -> Result<Estimate, FunctionalError> {
    let divisors = [d.clone()];
    let curve = nevanlinna_curve(
        ens,
        CurveSpec { map: f, divisors: &divisors, t_grid: &[t], lambda_grid: &[1.0], clamp: LAMBDA_CLAMP },
    )?;
    Ok(curve.divisors[0].m_prox[0])
}

/// Ñ_f(t, D) ≈ λ·P̂(sup log 1/‖s_D∘f‖ > λ) read off a plateau.
pub fn counting_sup(
    ens: &PathEnsemble,
    f: &ProjectiveMap,
    d: &HermitianDivisor,
    t_grid: &[f64],
    lambda_grid: &[f64],
) -> Result<CountingSeries, FunctionalError> {
    let divisors = [d.clone()];
    let curve =
        nevanlinna_curve(ens, CurveSpec { map: f, divisors: &divisors, t_grid, lambda_grid, clamp: LAMBDA_CLAMP })?;
    Ok(curve.divisors.into_iter().next().expect("one divisor").n_sup)
}

/// Ñ as T̃ − m̃ + c, with c calibrated against the plateau estimate at the first grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct FmtResidual {
    pub t: Vec<f64>,
    pub calibrated: Vec<f64>,
    pub constant: f64,
    /// T̃ − m̃ − Ñ_sup.
    pub residual: Vec<f64>,
    pub residual_std: f64,
    pub pooled_se: f64,
    pub tolerance: f64,
}

impl FmtResidual {
    pub fn passes(&self) -> bool {
        self.residual_std <= self.tolerance
    }
}

/// FMT residual over grid times in `window`; `t_char` must already be T̃_f(t, L) for L = O(deg D).
pub fn counting_fmt_residual(
    t_char: &[Estimate],
    m_prox: &[Estimate],
    n_sup: &CountingSeries,
    window: (f64, f64),
) -> Result<FmtResidual, FunctionalError> {
    if t_char.len() != m_prox.len() || t_char.len() != n_sup.values.len() {
        return Err(FunctionalError::InvalidGrid("inputs are on different grids".into()));
    }
    let idx: Vec<usize> = (0..t_char.len()).filter(|&g| t_char[g].t >= window.0 && t_char[g].t <= window.1).collect();
    if idx.len() < 2 {
        return Err(FunctionalError::InvalidGrid("residual window needs two grid times".into()));
    }
    let residual: Vec<f64> = idx.iter().map(|&g| t_char[g].mean - m_prox[g].mean - n_sup.values[g].value).collect();
    let constant = n_sup.values[idx[0]].value - (t_char[idx[0]].mean - m_prox[idx[0]].mean);
    let calibrated = idx.iter().map(|&g| t_char[g].mean - m_prox[g].mean + constant).collect();
    let mean = residual.iter().sum::<f64>() / residual.len() as f64;
    let residual_std = (residual.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (residual.len() - 1) as f64).sqrt();
    let pooled_se = (idx
        .iter()
        .map(|&g| t_char[g].std_error.powi(2) + m_prox[g].std_error.powi(2) + n_sup.values[g].std_error.powi(2))
        .sum::<f64>()
        / idx.len() as f64)
        .sqrt();
    let t_last = t_char[*idx.last().expect("non-empty")].mean;
    Ok(FmtResidual {
        t: idx.iter().map(|&g| t_char[g].t).collect(),
        calibrated,
        constant,
        residual,
        residual_std,
        pooled_se,
        tolerance: (FMT_RELATIVE * t_last).max(SE_MULTIPLIER * pooled_se),
    })
}

/// T̃(t, 𝓡_M) = 𝔼∫₀ᵗ s_M(X_s) ds; exactly zero on flat models.
pub fn ricci_characteristic(ens: &PathEnsemble, t_grid: &[f64]) -> Result<Vec<Estimate>, FunctionalError> {
    check_grid("t_grid", t_grid)?;
    if ens.model().is_flat() {
        let n = ens.config().n_paths;
        return Ok(t_grid
            .iter()
            .map(|&t| Estimate { t, mean: 0.0, std_error: 0.0, n, n_clamped: 0, n_singular: 0 })
            .collect());
    }
    let model = ens.model();
    Ok(ens.time_integral_expectation(|p| model.scalar_curvature(p).unwrap_or(f64::NAN), t_grid)?)
}

/// |ψ|² and ‖∇ψ‖² = Σ g^{iī}|∂ᵢψ|² at `p`.
fn psi_terms(model: &KahlerModel, psi: &Expr, p: &[C64]) -> Option<(f64, f64)> {
    let m = p.len();
    let mut g_inv = [0.0; MAX_DIM];
    model.g_inv_at(p, &mut g_inv[..m]).ok()?;
    let (v, grad) = with_slots!(m, N => {
        let j = eval_generic::<Dual1<N>>(psi, p).ok()?;
        let g: f64 = (0..m).map(|i| g_inv[i] * j.d[i].norm_sqr()).sum();
        (j.v.norm_sqr(), g)
    });
    Some((v, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdlReport {
    pub t_grid: Vec<f64>,
    /// m̃(t, ‖∇ψ‖/|ψ|).
    pub m_grad: Vec<Estimate>,
    /// T̃(t, ψ), the characteristic of [ψ₀ : ψ₁].
    pub t_psi: Vec<Estimate>,
    /// T̃_ψ(t, Φ).
    pub t_phi: Vec<Estimate>,
    pub coefficient: f64,
    pub fit_time: f64,
    pub fit_constant: f64,
    /// Bound minus m̃ at grid times from the fit time on.
    pub bound_margin: Vec<(f64, f64)>,
    pub coverage: f64,
    pub lemma_constant: f64,
    /// (t, T̃(t,ψ) + C − T̃_ψ(t,Φ), its standard error).
    pub lemma_margin: Vec<(f64, f64, f64)>,
    /// m̃ / log T̃ where log T̃ > 0.
    pub ratio: Vec<(f64, f64)>,
}

impl LdlReport {
    pub fn bound_holds(&self) -> bool {
        self.coverage >= LDL_COVERAGE
    }

    pub fn lemma_holds(&self) -> bool {
        self.lemma_margin.iter().all(|(_, m, se)| *m >= -SE_MULTIPLIER * se)
    }

    pub fn passes(&self) -> bool {
        self.bound_holds() && self.lemma_holds()
    }
}

/// Logarithmic derivative check for a meromorphic ψ with exceptional parameter δ.
pub fn ldl_check(
    ens: &PathEnsemble,
    psi: &Expr,
    t_grid: &[f64],
    delta: f64,
    fit_time: f64,
) -> Result<LdlReport, FunctionalError> {
    check_grid("t_grid", t_grid)?;
    if psi.is_constant() {
        return Err(FunctionalError::ConstantMap);
    }
    let m = ens.model().dim();
    let model = ens.model();
    let map = ProjectiveMap::from_meromorphic(psi, m)?;
    let t_psi = characteristic(ens, &map, LineBundleDegree(1), t_grid)?;
    let t_phi = ens.time_integral_expectation(
        |p| match psi_terms(model, psi, p) {
            Some((a, g)) if a > 0.0 => {
                let l = 0.5 * a.ln();
                g / (a * (1.0 + l * l)) / (2.0 * PI)
            }
            _ => f64::NAN,
        },
        t_grid,
    )?;
    let m_grad = ens.expectation_on_grid(
        |p| match psi_terms(model, psi, p) {
            Some((a, g)) => 0.5 * (g / a).ln().max(0.0),
            None => f64::NAN,
        },
        t_grid,
        Some(LAMBDA_CLAMP),
    )?;
    let coefficient = 1.0 + (1.0 + delta) / 2.0;
    let g_fit = t_grid.iter().position(|&t| t >= fit_time).unwrap_or(t_grid.len() - 1);
    let fit_constant = m_grad[g_fit].mean - coefficient * t_psi[g_fit].mean.ln();
    let bound_margin: Vec<(f64, f64)> = (g_fit..t_grid.len())
        .map(|g| {
            let rise = coefficient * (t_psi[g].mean.ln() - t_psi[g_fit].mean.ln());
            (t_grid[g], rise - (m_grad[g].mean - m_grad[g_fit].mean))
        })
        .collect();
    let coverage = bound_margin.iter().filter(|(_, b)| *b >= 0.0).count() as f64 / bound_margin.len() as f64;
    let lemma_constant = t_phi[0].mean - t_psi[0].mean;
    let lemma_margin = (0..t_grid.len())
        .map(|g| {
            let se = (t_psi[g].std_error.powi(2) + t_phi[g].std_error.powi(2)).sqrt();
            (t_grid[g], t_psi[g].mean + lemma_constant - t_phi[g].mean, se)
        })
        .collect();
    let ratio = (0..t_grid.len())
        .filter(|&g| t_psi[g].mean > 1.0)
        .map(|g| (t_grid[g], m_grad[g].mean / t_psi[g].mean.ln()))
        .collect();
    Ok(LdlReport {
        t_grid: t_grid.to_vec(),
        m_grad,
        t_psi,
        t_phi,
        coefficient,
        fit_time: t_grid[g_fit],
        fit_constant,
        bound_margin,
        coverage,
        lemma_constant,
        lemma_margin,
        ratio,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalculusReport {
    /// 𝔼[k(X_t)].
    pub lhs: Vec<Estimate>,
    /// 𝔼∫₀ᵗ k(X_s) ds.
    pub integral: Vec<Estimate>,
    pub delta: f64,
    pub violated: Vec<bool>,
    /// Lebesgue measure of the violating set inside the window, by trapezoid over the indicator.
    pub measure: f64,
    pub window: (f64, f64),
}

impl CalculusReport {
    pub fn passes(&self) -> bool {
        self.measure <= CALCULUS_MEASURE_MAX
    }
}

/// Measures {t : 𝔼[k(X_t)] > (𝔼∫₀ᵗ k)^{1+δ}} on the grid inside `window`.
pub fn calculus_lemma_check<F>(
    ens: &PathEnsemble,
    k: F,
    t_grid: &[f64],
    delta: f64,
    window: (f64, f64),
) -> Result<CalculusReport, FunctionalError>
where
    F: Fn(&[C64]) -> f64 + Sync,
{
    check_grid("t_grid", t_grid)?;
    let lhs = ens.expectation_on_grid(&k, t_grid, None)?;
    let integral = ens.time_integral_expectation(&k, t_grid)?;
    let violated: Vec<bool> =
        lhs.iter().zip(&integral).map(|(a, b)| a.mean > b.mean.max(0.0).powf(1.0 + delta)).collect();
    let mut measure = 0.0;
    for g in 0..t_grid.len().saturating_sub(1) {
        let (t0, t1) = (t_grid[g].max(window.0), t_grid[g + 1].min(window.1));
        if t1 > t0 {
            let ind = 0.5 * (f64::from(u8::from(violated[g])) + f64::from(u8::from(violated[g + 1])));
            measure += ind * (t1 - t0);
        }
    }
    Ok(CalculusReport { lhs, integral, delta, violated, measure, window })
}

/// Least-squares slope of y against x.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn probe_points(ens: &PathEnsemble) -> Vec<Vec<C64>> {
    let o = ens.origin();
    let model = ens.model();
    (0..6)
        .map(|j| {
            o.iter()
                .enumerate()
                .map(|(i, &z)| {
                    let r = 0.3 * model.region(i).boundary_distance(z).min(1.0);
                    z + C64::from_polar(r * (j as f64 + 1.0) / 6.0, 1.1 * (j + i) as f64)
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmtReport {
    pub curve: NevanlinnaCurve,
    pub snc: SncStatus,
    pub total_degree: u32,
    pub n: usize,
    /// S(t) and its standard error.
    pub margin: Vec<Estimate>,
    /// log T̃_f(t, L).
    pub log_t_l: Vec<f64>,
    /// S(t)/log T̃_f(t, L) where the logarithm is positive.
    pub ratio: Vec<(f64, f64)>,
    pub tail: (f64, f64),
    pub tail_slope: f64,
    pub late_slope: f64,
}

impl SmtReport {
    pub fn passes(&self) -> bool {
        self.tail_slope <= SMT_SLOPE_MAX && self.late_slope <= SMT_SLOPE_MAX
    }
}

/// S(t) = T̃_f(t,L) + T̃_f(t,K) + T̃(t,𝓡) − N̄_f(t,D) for L = O(Σ d_j), K = O(−(n+1)).
pub fn smt_check(
    ens: &PathEnsemble,
    f: &ProjectiveMap,
    divisors: &[HermitianDivisor],
    t_grid: &[f64],
    lambda_grid: &[f64],
    tail: (f64, f64),
) -> Result<SmtReport, FunctionalError> {
    let snc = snc_probe(divisors);
    if let SncStatus::Failed(why) = &snc {
        return Err(FunctionalError::DegenerateScenario(why.clone()));
    }
    let probe = nondegeneracy_probe(f, ens.model(), &probe_points(ens))?;
    if probe.degenerate() {
        return Err(FunctionalError::DegenerateScenario(format!(
            "differential rank {} below target dimension {}",
            probe.max_rank, probe.n
        )));
    }
    let curve = nevanlinna_curve(ens, CurveSpec { map: f, divisors, t_grid, lambda_grid, clamp: LAMBDA_CLAMP })?;
    let n = f.n();
    let total_degree: u32 = divisors.iter().map(HermitianDivisor::degree).sum();
    let coef = f64::from(total_degree) - (n as f64 + 1.0);
    let margin: Vec<Estimate> = (0..t_grid.len())
        .map(|g| {
            let t = &curve.t_char[g];
            let r = &curve.t_ricci[g];
            let nbar: f64 = curve.divisors.iter().map(|d| d.n_reduced.values[g].value).sum();
            let var: f64 = (coef * t.std_error).powi(2)
                + r.std_error.powi(2)
                + curve.divisors.iter().map(|d| d.n_reduced.values[g].std_error.powi(2)).sum::<f64>();
            Estimate { mean: coef * t.mean + r.mean - nbar, std_error: var.sqrt(), ..*t }
        })
        .collect();
    let log_t_l: Vec<f64> = curve.t_char.iter().map(|t| (f64::from(total_degree) * t.mean).ln()).collect();
    let ratio =
        (0..t_grid.len()).filter(|&g| log_t_l[g] > 0.0).map(|g| (t_grid[g], margin[g].mean / log_t_l[g])).collect();
    let idx: Vec<usize> = (0..t_grid.len()).filter(|&g| t_grid[g] >= tail.0 && t_grid[g] <= tail.1).collect();
    if idx.len() < 4 {
        return Err(FunctionalError::InvalidGrid("SMT tail needs at least four grid times".into()));
    }
    let slope = |ix: &[usize]| {
        let x: Vec<f64> = ix.iter().map(|&g| log_t_l[g]).collect();
        let y: Vec<f64> = ix.iter().map(|&g| margin[g].mean).collect();
        ols_slope(&x, &y)
    };
    let tail_slope = slope(&idx);
    let late_slope = slope(&idx[idx.len() / 2..]);
    Ok(SmtReport { curve, snc, total_degree, n, margin, log_t_l, ratio, tail, tail_slope, late_slope })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivisorDefect {
    pub degree: u32,
    pub delta: f64,
    pub theta: f64,
    pub delta_raw: f64,
    pub theta_raw: f64,
    /// Θ̃ ≤ (n+1)/d.
    pub within_bracket: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub tail: (f64, f64),
    pub defects: Vec<DivisorDefect>,
    /// Σ d_j δ̃_j.
    pub delta_sum: f64,
    /// Σ d_j Θ̃_j.
    pub theta_sum: f64,
    /// n + 1.
    pub bound: f64,
    pub clip_events: usize,
}

impl DefectReport {
    pub fn bound_holds(&self) -> bool {
        self.theta_sum <= self.bound
    }
}

/// Tail-window defects δ̃ = 1 − max Ñ/T̃_L and Θ̃ = 1 − max N̄/T̃_L, clipped to [0, 1].
pub fn defect_report(curve: &NevanlinnaCurve, n: usize, tail: (f64, f64)) -> Result<DefectReport, FunctionalError> {
    let idx: Vec<usize> =
        (0..curve.t_grid.len()).filter(|&g| curve.t_grid[g] >= tail.0 && curve.t_grid[g] <= tail.1).collect();
    let flat = FunctionalError::FlatCharacteristic(tail.0, tail.1);
    if idx.is_empty() {
        return Err(flat);
    }
    let t = |g: usize| curve.t_char[g].mean;
    if idx.iter().any(|&g| t(g) <= 1.0) || idx.windows(2).any(|w| t(w[1]) <= t(w[0])) {
        return Err(flat);
    }
    let mut clip_events = 0;
    let mut clip = |x: f64| {
        if (0.0..=1.0).contains(&x) {
            x
        } else {
            clip_events += 1;
            x.clamp(0.0, 1.0)
        }
    };
    let bound = n as f64 + 1.0;
    let mut defects = Vec::with_capacity(curve.divisors.len());
    for dc in &curve.divisors {
        let d = f64::from(dc.degree);
        let max_ratio =
            |s: &CountingSeries| idx.iter().map(|&g| s.values[g].value / (d * t(g))).fold(f64::NEG_INFINITY, f64::max);
        let delta_raw = 1.0 - max_ratio(&dc.n_sup);
        let theta_raw = 1.0 - max_ratio(&dc.n_reduced);
        let (delta, theta) = (clip(delta_raw), clip(theta_raw));
        defects.push(DivisorDefect {
            degree: dc.degree,
            delta,
            theta,
            delta_raw,
            theta_raw,
            within_bracket: theta <= bound / d,
        });
    }
    Ok(DefectReport {
        tail,
        delta_sum: defects.iter().map(|d| f64::from(d.degree) * d.delta).sum(),
        theta_sum: defects.iter().map(|d| f64::from(d.degree) * d.theta).sum(),
        defects,
        bound,
        clip_events,
    })
}

/// ζⱼ∘f = Fⱼ/F₀ for j = 1..n.
fn affine_coordinates(f: &ProjectiveMap) -> Vec<Expr> {
    let c = f.components();
    c[1..].iter().map(|fj| Expr::div(fj.clone(), c[0].clone())).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackReport {
    pub composite: Expr,
    /// T̃(t, φ∘f).
    pub t_composite: Vec<Estimate>,
    /// T̃_f(t, O(1)).
    pub t_map: Vec<Estimate>,
    pub ratio: Vec<(f64, f64)>,
}

impl PullbackReport {
    pub fn max_ratio(&self, window: (f64, f64)) -> f64 {
        self.ratio
            .iter()
            .filter(|(t, _)| *t >= window.0 && *t <= window.1)
            .map(|(_, r)| *r)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Ratio T̃(t, φ∘f)/T̃_f(t, O(1)) for a rational φ in the affine coordinates ζ of ℙⁿ.
pub fn rational_pullback_check(
    ens: &PathEnsemble,
    f: &ProjectiveMap,
    phi: &Expr,
    t_grid: &[f64],
) -> Result<PullbackReport, FunctionalError> {
    if phi.arity() > f.n() || !phi.is_holomorphic() {
        return Err(FunctionalError::InvalidGrid(format!("φ must be rational in ζ1..ζ{}", f.n())));
    }
    let composite = phi.substitute(&affine_coordinates(f));
    if composite.is_constant() {
        return Err(FunctionalError::ConstantComposition);
    }
    let t_composite =
        characteristic(ens, &ProjectiveMap::from_meromorphic(&composite, f.m())?, LineBundleDegree(1), t_grid)?;
    let t_map = characteristic(ens, f, LineBundleDegree(1), t_grid)?;
    let ratio = t_composite.iter().zip(&t_map).map(|(a, b)| (a.t, a.mean / b.mean)).collect();
    Ok(PullbackReport { composite, t_composite, t_map, ratio })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    /// T̃(t, ζⱼ∘f) for each coordinate.
    pub coordinate_chars: Vec<Vec<Estimate>>,
    /// T̂_f(t, ω_FS).
    pub t_hat: Vec<Estimate>,
    /// Constants fitted on the first half of the tail.
    pub lower_constant: f64,
    pub upper_constant: f64,
    /// (t, margin, standard error) on the second half of the tail.
    pub lower_margin: Vec<(f64, f64, f64)>,
    pub upper_margin: Vec<(f64, f64, f64)>,
}

impl SandwichReport {
    pub fn passes(&self) -> bool {
        self.lower_margin.iter().chain(&self.upper_margin).all(|(_, m, se)| *m >= -SE_MULTIPLIER * se)
    }
}

/// max_j T̃(t, ζⱼ∘f) ≤ T̂_f + C₁ and T̂_f ≤ Σ_j T̃(t, ζⱼ∘f) + C₂, with the constants
/// fitted on the first half of `tail` and tested on the second half.
pub fn sandwich_check(
    ens: &PathEnsemble,
    f: &ProjectiveMap,
    t_grid: &[f64],
    tail: (f64, f64),
) -> Result<SandwichReport, FunctionalError> {
    let t_hat = characteristic(ens, f, LineBundleDegree(1), t_grid)?;
    let coordinate_chars = affine_coordinates(f)
        .iter()
        .map(|z| {
            let map = ProjectiveMap::from_meromorphic(z, f.m())?;
            characteristic(ens, &map, LineBundleDegree(1), t_grid)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let idx: Vec<usize> = (0..t_grid.len()).filter(|&g| t_grid[g] >= tail.0 && t_grid[g] <= tail.1).collect();
    if idx.len() < 2 {
        return Err(FunctionalError::InvalidGrid("sandwich tail needs two grid times".into()));
    }
    let lower_gap =
        |g: usize| coordinate_chars.iter().map(|c| c[g].mean).fold(f64::NEG_INFINITY, f64::max) - t_hat[g].mean;
    let upper_gap = |g: usize| t_hat[g].mean - coordinate_chars.iter().map(|c| c[g].mean).sum::<f64>();
    let se = |g: usize| {
        (t_hat[g].std_error.powi(2) + coordinate_chars.iter().map(|c| c[g].std_error.powi(2)).sum::<f64>()).sqrt()
    };
    let (fit, test) = idx.split_at(idx.len() / 2);
    let lower_constant = fit.iter().map(|&g| lower_gap(g)).fold(f64::NEG_INFINITY, f64::max);
    let upper_constant = fit.iter().map(|&g| upper_gap(g)).fold(f64::NEG_INFINITY, f64::max);
    let lower_margin = test.iter().map(|&g| (t_grid[g], lower_constant - lower_gap(g), se(g))).collect();
    let upper_margin = test.iter().map(|&g| (t_grid[g], upper_constant - upper_gap(g), se(g))).collect();
    Ok(SandwichReport { coordinate_chars, t_hat, lower_constant, upper_constant, lower_margin, upper_margin })
}
