use num_complex::Complex64 as C64;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use super::{check_grid, fold_rows, FunctionalError, MAX_MULTIPLICITY, PLATEAU_SLOPE, SCREEN_RADIUS};
use crate::stochastic::{
    cumulative_integrals, running_sup_on_grid, BrownianPath, Estimate, LogSingularStep, PathEnsemble, MAX_DIM,
};
use crate::target::{section_jet2, with_slots, HermitianDivisor, MapJets, ProjectiveMap};

/// What to estimate in one pass over an ensemble.
#[derive(Debug, Clone, Copy)]
pub struct CurveSpec<'a> {
    pub map: &'a ProjectiveMap,
    pub divisors: &'a [HermitianDivisor],
    pub t_grid: &'a [f64],
    pub lambda_grid: &'a [f64],
    /// Clamp level Λ for proximity samples.
    pub clamp: f64,
}

/// Plateau of a λ-curve as an inclusive index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlateauWindow {
    pub lo: usize,
    pub hi: usize,
    /// The curve is strictly monotone over the whole grid.
    pub no_plateau: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingEstimate {
    pub t: f64,
    pub value: f64,
    pub std_error: f64,
    /// Paths whose supremum is infinite (exact hits).
    pub n_infinite: usize,
}

/// λ·P̂(sup > λ) read off a common plateau window at every grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingSeries {
    pub values: Vec<CountingEstimate>,
    pub window: PlateauWindow,
    /// λ-curve at each grid time.
    pub lambda_curves: Vec<Vec<f64>>,
}

impl CountingSeries {
    pub fn value_at(&self, g: usize) -> f64 {
        self.values[g].value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivisorCurve {
    pub degree: u32,
    /// m̃_f(t, D).
    pub m_prox: Vec<Estimate>,
    /// Multiplicity-aware counting Ñ_f(t, D).
    pub n_sup: CountingSeries,
    /// Reduced counting N̄_f(t, D).
    pub n_reduced: CountingSeries,
    /// Conditional-expectation counterpart of `n_sup`, 𝔼 Σ ν·Q over steps.
    pub n_rb: Vec<Estimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NevanlinnaCurve {
    pub t_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    /// T̃_f(t, O(1)); multiply by d for O(d).
    pub t_char: Vec<Estimate>,
    /// T̃(t, 𝓡_M).
    pub t_ricci: Vec<Estimate>,
    pub divisors: Vec<DivisorCurve>,
    pub n_retained: usize,
    pub n_discarded: usize,
    /// Path points where the map could not be evaluated.
    pub n_singular_samples: usize,
    pub max_energy_density: f64,
    pub min_scalar_curvature: f64,
}

/// λ·P̂(S > λ) over the grid for samples `sorted` in increasing order.
pub fn lambda_curve(sorted: &[f64], lambda_grid: &[f64], n: usize) -> Vec<f64> {
    lambda_grid
        .iter()
        .map(|&lam| {
            let above = sorted.len() - sorted.partition_point(|&x| x <= lam);
            lam * above as f64 / n as f64
        })
        .collect()
}

/// Largest run of adjacent cells with relative slope at most [`PLATEAU_SLOPE`]; ties go to larger λ.
pub fn plateau_window(curve: &[f64]) -> PlateauWindow {
    let n = curve.len();
    let monotone = n > 1 && (curve.windows(2).all(|w| w[1] > w[0]) || curve.windows(2).all(|w| w[1] < w[0]));
    let flat = |i: usize| {
        let (a, b) = (curve[i], curve[i + 1]);
        let scale = 0.5 * (a.abs() + b.abs());
        let d = (b - a).abs();
        if scale == 0.0 {
            d == 0.0
        } else {
            d / scale <= PLATEAU_SLOPE
        }
    };
    let (mut best, mut best_len) = ((n.saturating_sub(1), n.saturating_sub(1)), 0);
    let mut start = None;
    for i in 0..n.saturating_sub(1) {
        if flat(i) {
            let s = *start.get_or_insert(i);
            let len = i + 1 - s;
            if len >= best_len {
                best_len = len;
                best = (s, i + 1);
            }
        } else {
            start = None;
        }
    }
    PlateauWindow { lo: best.0, hi: best.1, no_plateau: monotone }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn sorted_column(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.map(|x| if x.is_nan() { f64::NEG_INFINITY } else { x }).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Plateau estimates at every grid time from per-time sorted suprema, using `window`
/// or the plateau of the last λ-curve.
pub(crate) fn counting_series(
    columns: &[Vec<f64>],
    t_grid: &[f64],
    lambda_grid: &[f64],
    n: usize,
    window: Option<PlateauWindow>,
) -> CountingSeries {
    let curves: Vec<Vec<f64>> = columns.iter().map(|c| lambda_curve(c, lambda_grid, n)).collect();
    let window = window.unwrap_or_else(|| plateau_window(curves.last().expect("non-empty grid")));
    let mid = (window.lo + window.hi) / 2;
    let values = curves
        .iter()
        .zip(columns)
        .zip(t_grid)
        .map(|((c, col), &t)| {
            let mut w = c[window.lo..=window.hi].to_vec();
            let lam = lambda_grid[mid];
            let p = c[mid] / lam;
            CountingEstimate {
                t,
                value: median(&mut w),
                std_error: lam * (p * (1.0 - p) / n as f64).sqrt(),
                n_infinite: col.iter().filter(|x| **x == f64::INFINITY).count(),
            }
        })
        .collect();
    CountingSeries { values, window, lambda_curves: curves }
}

#[derive(Debug, Clone, Copy)]
struct NearZero<const N: usize> {
    w0: C64,
    nu: f64,
    n: [C64; N],
}

/// Local model of a zero of h = P∘F near `p`: Schröder offset, multiplicity and normal direction
/// in coordinates where the path is standard planar Brownian motion.
fn near_zero<const N: usize>(
    map: &ProjectiveMap,
    d: &HermitianDivisor,
    p: &[C64],
    sigma: &[f64],
) -> Option<NearZero<N>> {
    let m = p.len();
    let j = section_jet2::<N>(map, d, p).ok()?;
    let mut gy = [C64::new(0.0, 0.0); N];
    for i in 0..m {
        gy[i] = j.grad[i] * sigma[i];
    }
    let hp = gy[..m].iter().map(C64::norm_sqr).sum::<f64>().sqrt();
    if !(hp > 0.0 && hp.is_finite()) {
        return None;
    }
    let mut n = [C64::new(0.0, 0.0); N];
    for i in 0..m {
        n[i] = gy[i].conj() / hp;
    }
    let mut hpp = C64::new(0.0, 0.0);
    for i in 0..m {
        for k in 0..m {
            hpp += n[i] * n[k] * sigma[i] * sigma[k] * j.hess[i][k];
        }
    }
    let denom = C64::new(1.0, 0.0) - j.h * hpp / (hp * hp);
    if !(denom.norm() > 1e-12) || !denom.re.is_finite() {
        return None;
    }
    let w0 = -j.h / (hp * denom);
    let nu = denom.inv().re.clamp(1.0, MAX_MULTIPLICITY).round();
    w0.is_finite().then_some(NearZero { w0, nu, n })
}

struct PathRow {
    char_int: Vec<f64>,
    ricci_int: Vec<f64>,
    /// Per divisor, per grid time (divisor-major).
    u_at: Vec<f64>,
    sup_full: Vec<f64>,
    sup_red: Vec<f64>,
    rb: Vec<f64>,
    singular: usize,
    max_e: f64,
    min_ricci: f64,
}

struct Kernel<'a> {
    ens: &'a PathEnsemble,
    spec: CurveSpec<'a>,
    m: usize,
    flat: bool,
}

impl Kernel<'_> {
    fn metric(&self, p: &[C64], g_inv: &mut [f64], sigma: &mut [f64]) -> bool {
        if self.ens.model().g_inv_at(p, g_inv).is_err() {
            return false;
        }
        for (s, g) in sigma.iter_mut().zip(g_inv.iter()) {
            *s = g.sqrt();
        }
        true
    }

    fn run<const N: usize>(&self, k: usize, path: &BrownianPath) -> PathRow {
        let CurveSpec { map, divisors, t_grid, .. } = self.spec;
        let (m, q, len, ng) = (self.m, divisors.len(), path.len(), t_grid.len());
        let mut jets = MapJets::<N>::new();
        let mut g_inv = [1.0; MAX_DIM];
        let mut sigma = [1.0; MAX_DIM];
        let mut prev_sigma = [1.0; MAX_DIM];
        let mut e = vec![0.0; len];
        let mut ricci = vec![0.0; len];
        let mut u = vec![0.0; q * len];
        let mut red = vec![0.0; q * len];
        let nsteps = len.saturating_sub(1);
        let mut step_full = vec![0.0; q * nsteps];
        let mut step_red = vec![0.0; q * nsteps];
        let mut step_rb = vec![0.0; q * nsteps];
        let mut prev_near: Vec<Option<NearZero<N>>> = vec![None; q];
        let mut rngs: Vec<ChaCha8Rng> = (0..q).map(|d| self.ens.bridge_rng(k, d as u64)).collect();
        let mut singular = 0;
        let (mut max_e, mut min_ricci) = (0.0f64, f64::INFINITY);

        for j in 0..len {
            let p = path.point(j);
            let metric_ok = self.flat || self.metric(p, &mut g_inv[..m], &mut sigma[..m]);
            let ok = metric_ok && jets.eval(map, p).is_ok();
            if ok {
                e[j] = jets.fs_density(&g_inv[..m]);
                max_e = max_e.max(e[j]);
            } else {
                e[j] = f64::NAN;
                singular += 1;
            }
            if !self.flat {
                ricci[j] = self.ens.model().scalar_curvature(p).unwrap_or(f64::NAN);
                min_ricci = min_ricci.min(ricci[j]);
            }
            let tau_next = if j + 1 < len { path.times[j + 1] - path.times[j] } else { 0.0 };
            for (d, div) in divisors.iter().enumerate() {
                let (uj, near) = if ok {
                    let s = jets.section(div, m);
                    let gy: f64 = (0..m).map(|i| (s.grad[i] * sigma[i]).norm_sqr()).sum::<f64>().sqrt();
                    let screened = j + 1 < len && s.u.is_finite() && s.h.norm() < SCREEN_RADIUS * tau_next.sqrt() * gy;
                    (s.u, if screened { near_zero::<N>(map, div, p, &sigma[..m]) } else { None })
                } else {
                    (f64::NAN, None)
                };
                let idx = d * len + j;
                u[idx] = uj;
                red[idx] = uj / near.map_or(1.0, |z| z.nu);
                if j > 0 {
                    let s = d * nsteps + j - 1;
                    let (ua, ub) = (u[idx - 1], uj);
                    let (ra, rb) = (red[idx - 1], red[idx]);
                    step_full[s] = ua.max(ub);
                    step_red[s] = ra.max(rb);
                    if let Some(z) = prev_near[d] {
                        if ua.is_finite() && ub.is_finite() {
                            let (a, b) = (path.point(j - 1), p);
                            let mut end = C64::new(0.0, 0.0);
                            for i in 0..m {
                                end += (b[i] - a[i]) / prev_sigma[i] * z.n[i].conj();
                            }
                            let step = LogSingularStep {
                                u_start: ua,
                                u_end: ub,
                                zero: z.w0,
                                end,
                                multiplicity: z.nu,
                                tau: path.times[j] - path.times[j - 1],
                            };
                            let rng: &mut dyn RngCore = &mut rngs[d];
                            let (full, reduced) = step.sample(rng);
                            step_full[s] = full;
                            step_red[s] = step_red[s].max(reduced);
                            step_rb[s] = z.nu * step.weight();
                        }
                    }
                }
                prev_near[d] = near;
            }
            prev_sigma[..m].copy_from_slice(&sigma[..m]);
        }

        let mut char_int = vec![0.0; ng];
        cumulative_integrals(path, &e, t_grid, &mut char_int);
        char_int.iter_mut().for_each(|x| *x *= 0.5);
        let mut ricci_int = vec![0.0; ng];
        if !self.flat {
            cumulative_integrals(path, &ricci, t_grid, &mut ricci_int);
        }
        let mut sup_full = vec![0.0; q * ng];
        let mut sup_red = vec![0.0; q * ng];
        let mut rb = vec![0.0; q * ng];
        let mut u_at = vec![f64::NAN; q * ng];
        for d in 0..q {
            let (pts, steps) = (d * len..(d + 1) * len, d * nsteps..(d + 1) * nsteps);
            let out = d * ng..(d + 1) * ng;
            running_sup_on_grid(path, &u[pts.clone()], &step_full[steps.clone()], t_grid, &mut sup_full[out.clone()]);
            running_sup_on_grid(path, &red[pts], &step_red[steps.clone()], t_grid, &mut sup_red[out.clone()]);
            let rb_steps = &step_rb[steps];
            let mut acc = 0.0;
            let mut kstep = 0;
            for (g, &t) in t_grid.iter().enumerate() {
                while kstep < nsteps && path.times[kstep + 1] <= t {
                    acc += rb_steps[kstep];
                    kstep += 1;
                }
                rb[d * ng + g] = acc;
            }
        }
        let mut p = [C64::new(0.0, 0.0); MAX_DIM];
        for (g, &t) in t_grid.iter().enumerate() {
            path.point_at(t, &mut p[..m]);
            let ok = jets.eval(map, &p[..m]).is_ok();
            for (d, div) in divisors.iter().enumerate() {
                u_at[d * ng + g] = if ok { jets.section(div, m).u } else { f64::NAN };
            }
        }
        PathRow { char_int, ricci_int, u_at, sup_full, sup_red, rb, singular, max_e, min_ricci }
    }
}

pub(crate) fn validate_spec(ens: &PathEnsemble, spec: &CurveSpec<'_>) -> Result<(), FunctionalError> {
    let m = ens.model().dim();
    if spec.map.m() != m {
        return Err(FunctionalError::DimensionMismatch { map: spec.map.m(), model: m });
    }
    check_grid("t_grid", spec.t_grid)?;
    check_grid("lambda_grid", spec.lambda_grid)?;
    if spec.lambda_grid[spec.lambda_grid.len() - 1] >= spec.clamp {
        return Err(FunctionalError::InvalidGrid("lambda_grid must stay below the clamp level".into()));
    }
    if spec.lambda_grid[0] <= 0.0 {
        return Err(FunctionalError::InvalidGrid("lambda_grid must be positive".into()));
    }
    let origin = spec.map.values(ens.origin())?;
    for (i, d) in spec.divisors.iter().enumerate() {
        if d.n() != spec.map.n() {
            return Err(FunctionalError::DivisorTarget { index: i, expected: spec.map.n(), got: d.n() });
        }
        if d.log_inverse_norm(&origin).is_infinite() {
            return Err(FunctionalError::OriginOnDivisor(i));
        }
    }
    Ok(())
}

/// T̃, m̃, Ñ, N̄ and T̃(t, 𝓡) for one map and its divisors from a single pass over the paths.
pub fn nevanlinna_curve(ens: &PathEnsemble, spec: CurveSpec<'_>) -> Result<NevanlinnaCurve, FunctionalError> {
    validate_spec(ens, &spec)?;
    let m = ens.model().dim();
    let kernel = Kernel { ens, spec, m, flat: ens.model().is_flat() };
    let t_grid = spec.t_grid;
    if let Some(&t) = t_grid.iter().find(|&&t| !(0.0..=ens.config().t_max).contains(&t)) {
        return Err(crate::stochastic::StochasticError::TimeOutOfRange { t, t_max: ens.config().t_max }.into());
    }
    let runs = with_slots!(m, N => ens.map_paths(|k, path| kernel.run::<N>(k, path)));
    let rows = &runs.results;
    let n = rows.len();
    let (q, ng) = (spec.divisors.len(), t_grid.len());
    let t_char = fold_rows(rows, t_grid, None, |r, g| r.char_int[g])?;
    let t_ricci = fold_rows(rows, t_grid, None, |r, g| r.ricci_int[g])?;
    let mut divisors = Vec::with_capacity(q);
    for (d, div) in spec.divisors.iter().enumerate() {
        let m_prox = fold_rows(rows, t_grid, Some(spec.clamp), |r, g| r.u_at[d * ng + g])?;
        let n_rb = fold_rows(rows, t_grid, None, |r, g| r.rb[d * ng + g])?;
        let full: Vec<Vec<f64>> = (0..ng).map(|g| sorted_column(rows.iter().map(|r| r.sup_full[d * ng + g]))).collect();
        let reduced: Vec<Vec<f64>> =
            (0..ng).map(|g| sorted_column(rows.iter().map(|r| r.sup_red[d * ng + g]))).collect();
        let n_sup = counting_series(&full, t_grid, spec.lambda_grid, n, None);
        let n_reduced = counting_series(&reduced, t_grid, spec.lambda_grid, n, Some(n_sup.window));
        divisors.push(DivisorCurve { degree: div.degree(), m_prox, n_sup, n_reduced, n_rb });
    }
    Ok(NevanlinnaCurve {
        t_grid: t_grid.to_vec(),
        lambda_grid: spec.lambda_grid.to_vec(),
        t_char,
        t_ricci,
        divisors,
        n_retained: n,
        n_discarded: runs.discarded,
        n_singular_samples: rows.iter().map(|r| r.singular).sum(),
        max_energy_density: rows.iter().map(|r| r.max_e).fold(0.0, f64::max),
        min_scalar_curvature: if ens.model().is_flat() {
            0.0
        } else {
            rows.iter().map(|r| r.min_ricci).fold(f64::INFINITY, f64::min)
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_curve_counts_strict_exceedance() {
        let s = sorted_column([0.5, 3.0, 3.0, f64::INFINITY, f64::NAN].into_iter());
        let c = lambda_curve(&s, &[1.0, 3.0, 10.0], 5);
        assert_eq!(c, vec![3.0 / 5.0, 3.0 / 5.0, 10.0 / 5.0]);
    }

    #[test]
    fn plateau_prefers_longest_then_largest() {
        let w = plateau_window(&[1.0, 2.0, 2.05, 2.1, 5.0, 5.1, 5.2, 5.25]);
        assert_eq!((w.lo, w.hi), (4, 7));
        assert!(w.no_plateau);
        let z = plateau_window(&[0.0; 6]);
        assert_eq!((z.lo, z.hi, z.no_plateau), (0, 5, false));
        let mono = plateau_window(&[1.0, 2.0, 4.0, 8.0]);
        assert!(mono.no_plateau);
        assert_eq!((mono.lo, mono.hi), (3, 3));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
