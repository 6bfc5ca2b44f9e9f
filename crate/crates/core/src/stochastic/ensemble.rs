use num_complex::Complex64 as C64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::bridge::bridge_max_1d;
use super::path::{open_uniform, BrownianPath, Simulator, MAX_DIM};
use super::{check_origin, Accumulator, Estimate, PathConfig, StochasticError};
use crate::geometry::KahlerModel;

const BRIDGE_DOMAIN: u64 = 0xc2b2_ae3d_27d4_eb4f;

/// Paths of ½Δ-Brownian motion from one origin, generated on demand.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    model: KahlerModel,
    origin: Vec<C64>,
    config: PathConfig,
}

/// Per-path results in path-index order.
#[derive(Debug, Clone)]
pub struct PathOutcomes<R> {
    pub indices: Vec<usize>,
    pub results: Vec<R>,
    pub discarded: usize,
}

impl<R> PathOutcomes<R> {
    pub fn retained(&self) -> usize {
        self.results.len()
    }
}

/// Running-supremum samples at one time, one per retained path.
#[derive(Debug, Clone, PartialEq)]
pub struct SupSample {
    pub t: f64,
    pub values: Vec<f64>,
    pub n_infinite: usize,
    pub discarded: usize,
}

/// One step of a path as seen by a supremum model.
pub struct BridgeStep<'a> {
    pub a: &'a [C64],
    pub b: &'a [C64],
    pub fa: f64,
    pub fb: f64,
    pub tau: f64,
    /// Per-coordinate dispersion e^{−φ} at `a`.
    pub sigma: &'a [f64],
}

pub trait SupObservable: Sync {
    fn value(&self, p: &[C64]) -> f64;

    /// Sample of the supremum over the step; defaults to the larger endpoint value.
    fn bridge_sup(&self, step: &BridgeStep<'_>, _rng: &mut dyn RngCore) -> f64 {
        step.fa.max(step.fb)
    }
}

/// Observable sampled on the path points only.
pub struct GridSup<F>(pub F);

impl<F: Fn(&[C64]) -> f64 + Sync> SupObservable for GridSup<F> {
    fn value(&self, p: &[C64]) -> f64 {
        (self.0)(p)
    }
}

/// Smooth real observable with its ∂/∂zᵢ partials; steps use the bridge-maximum law.
pub struct SmoothSup<F, G> {
    pub f: F,
    pub dz: G,
}

impl<F, G> SupObservable for SmoothSup<F, G>
where
    F: Fn(&[C64]) -> f64 + Sync,
    G: Fn(&[C64], &mut [C64]) + Sync,
{
    fn value(&self, p: &[C64]) -> f64 {
        (self.f)(p)
    }

    fn bridge_sup(&self, step: &BridgeStep<'_>, rng: &mut dyn RngCore) -> f64 {
        let mut d = [C64::new(0.0, 0.0); MAX_DIM];
        let m = step.a.len();
        (self.dz)(step.a, &mut d[..m]);
        let v: f64 = (0..m).map(|i| 4.0 * step.sigma[i].powi(2) * d[i].norm_sqr()).sum();
        bridge_max_1d(step.fa, step.fb, v, step.tau, open_uniform(rng))
    }
}

/// Per-path cumulative trapezoid integrals of sampled `values` at each grid time.
///
/// Non-finite samples contribute zero; their count is returned.
pub fn cumulative_integrals(path: &BrownianPath, values: &[f64], t_grid: &[f64], out: &mut [f64]) -> usize {
    let clean = |v: f64| if v.is_finite() { v } else { 0.0 };
    let singular = values.iter().filter(|v| !v.is_finite()).count();
    let mut acc = 0.0;
    let mut g = 0;
    while g < t_grid.len() && t_grid[g] <= 0.0 {
        out[g] = 0.0;
        g += 1;
    }
    for k in 0..path.len() - 1 {
        let (t0, t1) = (path.times[k], path.times[k + 1]);
        let (v0, v1) = (clean(values[k]), clean(values[k + 1]));
        while g < t_grid.len() && t_grid[g] < t1 {
            let w = (t_grid[g] - t0) / (t1 - t0);
            let vt = v0 + (v1 - v0) * w;
            out[g] = acc + 0.5 * (v0 + vt) * (t_grid[g] - t0);
            g += 1;
        }
        acc += 0.5 * (v0 + v1) * (t1 - t0);
    }
    for o in out.iter_mut().skip(g) {
        *o = acc;
    }
    singular
}

/// Running supremum at each grid time of point values and per-step samples
/// (`step_sup[k]` covers the step from point k to k+1).
pub fn running_sup_on_grid(path: &BrownianPath, values: &[f64], step_sup: &[f64], t_grid: &[f64], out: &mut [f64]) {
    let mut sup = values[0];
    let mut g = 0;
    for k in 0..path.len() - 1 {
        while g < t_grid.len() && t_grid[g] < path.times[k + 1] {
            out[g] = sup;
            g += 1;
        }
        sup = sup.max(values[k + 1]).max(step_sup[k]);
    }
    for o in out.iter_mut().skip(g) {
        *o = sup;
    }
}

impl PathEnsemble {
    pub fn new(model: KahlerModel, origin: Vec<C64>, config: PathConfig) -> Result<Self, StochasticError> {
        config.validate()?;
        check_origin(&model, &origin)?;
        Ok(PathEnsemble { model, origin, config })
    }

    pub fn model(&self) -> &KahlerModel {
        &self.model
    }

    pub fn origin(&self) -> &[C64] {
        &self.origin
    }

    pub fn config(&self) -> &PathConfig {
        &self.config
    }

    pub fn path(&self, k: usize) -> Result<BrownianPath, StochasticError> {
        let mut path = BrownianPath::default();
        Simulator::new(&self.model, &self.origin, &self.config).simulate(k, &mut path)?;
        Ok(path)
    }

    /// Applies `f` to every path in parallel; results come back in path-index order.
    pub fn map_paths<R, F>(&self, f: F) -> PathOutcomes<R>
    where
        R: Send,
        F: Fn(usize, &BrownianPath) -> R + Sync,
    {
        let all: Vec<Option<R>> = (0..self.config.n_paths)
            .into_par_iter()
            .map_init(
                || (Simulator::new(&self.model, &self.origin, &self.config), BrownianPath::default()),
                |(sim, path), k| sim.simulate(k, path).ok().map(|()| f(k, path)),
            )
            .collect();
        let mut out = PathOutcomes { indices: Vec::new(), results: Vec::new(), discarded: 0 };
        for (k, r) in all.into_iter().enumerate() {
            match r {
                Some(r) => {
                    out.indices.push(k);
                    out.results.push(r);
                }
                None => out.discarded += 1,
            }
        }
        out
    }

    /// Independent uniform stream for sub-step sampling of observable `tag` on path `k`.
    pub fn bridge_rng(&self, k: usize, tag: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed.wrapping_add(BRIDGE_DOMAIN.wrapping_mul(tag + 1)));
        rng.set_stream(k as u64);
        rng
    }

    /// e^{−φᵢ} at `p`.
    pub fn sigma_at(&self, p: &[C64], out: &mut [f64]) -> Result<(), StochasticError> {
        self.model.phi_at(p, out)?;
        for s in out.iter_mut().take(p.len()) {
            *s = (-*s).exp();
        }
        Ok(())
    }

    fn check_times(&self, t_grid: &[f64]) -> Result<(), StochasticError> {
        for &t in t_grid {
            if !(0.0..=self.config.t_max).contains(&t) {
                return Err(StochasticError::TimeOutOfRange { t, t_max: self.config.t_max });
            }
        }
        Ok(())
    }

    pub fn expectation_at_time<F>(&self, f: F, t: f64, clamp: Option<f64>) -> Result<Estimate, StochasticError>
    where
        F: Fn(&[C64]) -> f64 + Sync,
    {
        Ok(self.expectation_on_grid(f, &[t], clamp)?[0])
    }

    /// 𝔼[f(X_t)] at each grid time, with paths interpolated linearly in time.
    pub fn expectation_on_grid<F>(
        &self,
        f: F,
        t_grid: &[f64],
        clamp: Option<f64>,
    ) -> Result<Vec<Estimate>, StochasticError>
    where
        F: Fn(&[C64]) -> f64 + Sync,
    {
        self.check_times(t_grid)?;
        let m = self.model.dim();
        let runs = self.map_paths(|_, path| {
            let mut p = vec![C64::new(0.0, 0.0); m];
            t_grid
                .iter()
                .map(|&t| {
                    path.point_at(t, &mut p);
                    f(&p)
                })
                .collect::<Vec<f64>>()
        });
        fold_columns(&runs, t_grid, clamp)
    }

    /// 𝔼[∫₀ᵗ f(X_s) ds] at each grid time by per-path trapezoid quadrature.
    pub fn time_integral_expectation<F>(&self, f: F, t_grid: &[f64]) -> Result<Vec<Estimate>, StochasticError>
    where
        F: Fn(&[C64]) -> f64 + Sync,
    {
        self.check_times(t_grid)?;
        let runs = self.map_paths(|_, path| {
            let values: Vec<f64> = (0..path.len()).map(|k| f(path.point(k))).collect();
            let mut out = vec![0.0; t_grid.len()];
            let singular = cumulative_integrals(path, &values, t_grid, &mut out);
            (out, singular)
        });
        let mut est = fold_columns_with(&runs.results, t_grid, None, |r| &r.0)?;
        let singular: usize = runs.results.iter().map(|r| r.1).sum();
        for e in &mut est {
            e.n_singular = singular;
        }
        Ok(est)
    }

    pub fn sup_statistic(&self, obs: &dyn SupObservable, t: f64) -> Result<SupSample, StochasticError> {
        Ok(self.sup_on_grid(obs, &[t])?.remove(0))
    }

    /// Running supremum of `obs` along each path at each grid time.
    pub fn sup_on_grid(&self, obs: &dyn SupObservable, t_grid: &[f64]) -> Result<Vec<SupSample>, StochasticError> {
        self.check_times(t_grid)?;
        let m = self.model.dim();
        let runs = self.map_paths(|k, path| {
            let mut rng = self.bridge_rng(k, 0);
            let values: Vec<f64> = (0..path.len()).map(|j| obs.value(path.point(j))).collect();
            let mut sigma = [0.0; MAX_DIM];
            let steps: Vec<f64> = (0..path.len() - 1)
                .map(|j| {
                    let a = path.point(j);
                    if self.sigma_at(a, &mut sigma[..m]).is_err() {
                        return values[j].max(values[j + 1]);
                    }
                    let step = BridgeStep {
                        a,
                        b: path.point(j + 1),
                        fa: values[j],
                        fb: values[j + 1],
                        tau: path.times[j + 1] - path.times[j],
                        sigma: &sigma[..m],
                    };
                    obs.bridge_sup(&step, &mut rng)
                })
                .collect();
            let mut out = vec![0.0; t_grid.len()];
            running_sup_on_grid(path, &values, &steps, t_grid, &mut out);
            out
        });
        Ok(t_grid
            .iter()
            .enumerate()
            .map(|(g, &t)| {
                let values: Vec<f64> = runs.results.iter().map(|r| r[g]).collect();
                SupSample {
                    t,
                    n_infinite: values.iter().filter(|v| **v == f64::INFINITY).count(),
                    values,
                    discarded: runs.discarded,
                }
            })
            .collect())
    }
}

fn fold_columns(
    runs: &PathOutcomes<Vec<f64>>,
    t_grid: &[f64],
    clamp: Option<f64>,
) -> Result<Vec<Estimate>, StochasticError> {
    fold_columns_with(&runs.results, t_grid, clamp, |r| r)
}

pub(crate) fn fold_columns_with<R>(
    rows: &[R],
    t_grid: &[f64],
    clamp: Option<f64>,
    col: impl Fn(&R) -> &Vec<f64>,
) -> Result<Vec<Estimate>, StochasticError> {
    if rows.is_empty() {
        return Err(StochasticError::AllDiscarded);
    }
    t_grid
        .iter()
        .enumerate()
        .map(|(g, &t)| {
            let mut acc = Accumulator::default();
            for r in rows {
                acc.push_clamped(col(r)[g], clamp);
            }
            if acc.count() == 0 {
                return Err(StochasticError::AllSingular { t });
            }
            Ok(acc.finish(t))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize, t_max: f64, seed: u64) -> PathEnsemble {
        let cfg = PathConfig { t_max, dt_base: 0.01, boundary_margin: 0.5, n_paths: n, seed };
        PathEnsemble::new(KahlerModel::FlatSpace { m: 1 }, vec![C64::new(0.0, 0.0)], cfg).unwrap()
    }

    #[test]
    fn constant_function() {
        let ens = flat(50, 1.0, 1);
        let e = ens.expectation_at_time(|_| 1.0, 0.5, None).unwrap();
        assert_eq!((e.mean, e.std_error, e.n), (1.0, 0.0, 50));
        let ints = ens.time_integral_expectation(|_| 1.0, &[0.25, 0.5, 1.0]).unwrap();
        for e in ints {
            assert!((e.mean - e.t).abs() < 1e-12);
            assert!(e.std_error < 1e-12);
        }
    }

    #[test]
    fn planar_second_moment() {
        let ens = flat(4000, 1.0, 2);
        let e = ens.expectation_at_time(|p| p[0].norm_sqr(), 1.0, None).unwrap();
        assert!((e.mean - 2.0).abs() < 3.0 * e.std_error, "{e:?}");
        let re = ens.expectation_on_grid(|p| p[0].re, &[0.2, 0.6, 1.0], None).unwrap();
        for e in re {
            assert!(e.mean.abs() < 3.0 * e.std_error, "{e:?}");
        }
        let int = ens.time_integral_expectation(|p| p[0].norm_sqr(), &[1.0]).unwrap()[0];
        assert!((int.mean - 1.0).abs() < 3.0 * int.std_error, "{int:?}");
    }

    #[test]
    fn time_out_of_range() {
        let ens = flat(4, 1.0, 3);
        assert!(matches!(ens.expectation_at_time(|_| 1.0, 1.5, None), Err(StochasticError::TimeOutOfRange { .. })));
    }

    #[test]
    fn all_singular_is_an_error() {
        let ens = flat(4, 1.0, 3);
        assert!(matches!(ens.expectation_at_time(|_| f64::NAN, 1.0, None), Err(StochasticError::AllSingular { .. })));
    }

    #[test]
    fn constant_sup() {
        let ens = flat(20, 1.0, 4);
        let s = ens.sup_statistic(&GridSup(|_: &[C64]| 3.5), 1.0).unwrap();
        assert!(s.values.iter().all(|v| *v == 3.5));
        assert_eq!(s.values.len(), 20);
    }

    #[test]
    fn smooth_sup_matches_fine_grid() {
        let modulus = SmoothSup {
            f: |p: &[C64]| p[0].norm(),
            dz: |p: &[C64], d: &mut [C64]| {
                let r = p[0].norm();
                d[0] = if r > 0.0 { p[0].conj() / (2.0 * r) } else { C64::new(0.0, 0.0) };
            },
        };
        let n = 3000;
        let coarse = flat(n, 1.0, 5).sup_statistic(&modulus, 1.0).unwrap();
        let cfg = PathConfig { t_max: 1.0, dt_base: 0.01 / 16.0, boundary_margin: 0.5, n_paths: n, seed: 5 };
        let fine_ens = PathEnsemble::new(KahlerModel::FlatSpace { m: 1 }, vec![C64::new(0.0, 0.0)], cfg).unwrap();
        let fine = fine_ens.sup_statistic(&GridSup(|p: &[C64]| p[0].norm()), 1.0).unwrap();
        let mut a = Accumulator::default();
        let mut b = Accumulator::default();
        coarse.values.iter().for_each(|&v| a.push(v));
        fine.values.iter().for_each(|&v| b.push(v));
        let (ea, eb) = (a.finish(1.0), b.finish(1.0));
        assert!((ea.mean - eb.mean).abs() < 3.0 * ea.std_error, "{ea:?} {eb:?}");
        let naive = flat(n, 1.0, 5).sup_statistic(&GridSup(|p: &[C64]| p[0].norm()), 1.0).unwrap();
        let mut c = Accumulator::default();
        naive.values.iter().for_each(|&v| c.push(v));
        assert!(c.finish(1.0).mean < eb.mean);
    }

    #[test]
    fn determinism_across_pools() {
        let ens = flat(64, 2.0, 9);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| ens.time_integral_expectation(|p| p[0].norm_sqr().sin(), &[0.5, 2.0]).unwrap())
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a, b);
    }

    #[test]
    fn trapezoid_partial_cells() {
        let path =
            BrownianPath { times: vec![0.0, 1.0, 2.0], points: vec![C64::new(0.0, 0.0); 3], flags: vec![0; 3], m: 1 };
        let mut out = [0.0; 4];
        let singular = cumulative_integrals(&path, &[0.0, 2.0, f64::INFINITY], &[0.0, 0.5, 1.0, 2.0], &mut out);
        assert_eq!(singular, 1);
        assert_eq!(out, [0.0, 0.25, 1.0, 2.0]);
    }
}
