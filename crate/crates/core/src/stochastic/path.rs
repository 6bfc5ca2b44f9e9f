use num_complex::Complex64 as C64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{PathConfig, StochasticError};
use crate::geometry::KahlerModel;

/// Step was produced by halving a base step.
pub const REFINED: u8 = 1;
/// Step was produced at the refinement floor.
pub const BOTTOMED: u8 = 2;

/// Deepest halving below the base step.
pub const MAX_REFINE: u32 = 10;
/// Consecutive floor-level steps after which a path is declared stuck.
pub const STUCK_LIMIT: u32 = 100;
/// Largest supported complex dimension.
pub const MAX_DIM: usize = 8;

const AUX_DOMAIN: u64 = 0x5bd1_e995_9e37_79b9;

/// One discretized sample path; `points` holds `m` coordinates per time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BrownianPath {
    pub times: Vec<f64>,
    pub points: Vec<C64>,
    pub flags: Vec<u8>,
    pub m: usize,
}

impl BrownianPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn origin(&self) -> &[C64] {
        self.point(0)
    }

    pub fn point(&self, k: usize) -> &[C64] {
        &self.points[k * self.m..(k + 1) * self.m]
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().expect("non-empty path")
    }

    /// Index `k` with `times[k] <= t < times[k+1]`, clamped to the last interval.
    pub fn segment(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s <= t);
        k.saturating_sub(1).min(self.len().saturating_sub(2))
    }

    /// Position at time `t`, linear in chart coordinates between samples.
    pub fn point_at(&self, t: f64, out: &mut [C64]) {
        let k = self.segment(t);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        if t <= t0 {
            out.copy_from_slice(self.point(k));
        } else if t >= t1 {
            out.copy_from_slice(self.point(k + 1));
        } else {
            let w = (t - t0) / (t1 - t0);
            for ((o, a), b) in out.iter_mut().zip(self.point(k)).zip(self.point(k + 1)) {
                *o = a + (b - a) * w;
            }
        }
    }

    fn clear(&mut self, m: usize) {
        self.times.clear();
        self.points.clear();
        self.flags.clear();
        self.m = m;
    }
}

/// Root-interval geometry of the dyadic increment tree.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Dyadic {
    pub levels: u32,
    pub dt_root: f64,
    pub leaves: usize,
}

impl Dyadic {
    pub fn new(dt_base: f64) -> Self {
        let mut levels = 0;
        while levels < 24 && dt_base * f64::from(1u32 << levels) < 1.0 - 1e-12 {
            levels += 1;
        }
        Dyadic { levels, dt_root: dt_base * f64::from(1u32 << levels), leaves: 1 << levels }
    }
}

fn normal_pair(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Reusable state for simulating paths of one ensemble.
pub(crate) struct Simulator<'a> {
    model: &'a KahlerModel,
    origin: &'a [C64],
    config: &'a PathConfig,
    dyadic: Dyadic,
    m: usize,
    flat: bool,
    main: ChaCha8Rng,
    aux: ChaCha8Rng,
    aux_leaf: Option<usize>,
    leaves: Vec<C64>,
    scratch: Vec<C64>,
    z: [C64; MAX_DIM],
    t: f64,
    bottomed_run: u32,
}

impl<'a> Simulator<'a> {
    pub fn new(model: &'a KahlerModel, origin: &'a [C64], config: &'a PathConfig) -> Self {
        let dyadic = Dyadic::new(config.dt_base);
        Simulator {
            model,
            origin,
            config,
            dyadic,
            m: model.dim(),
            flat: model.is_flat(),
            main: ChaCha8Rng::seed_from_u64(config.seed),
            aux: ChaCha8Rng::seed_from_u64(config.seed ^ AUX_DOMAIN),
            aux_leaf: None,
            leaves: Vec::new(),
            scratch: Vec::new(),
            z: [C64::new(0.0, 0.0); MAX_DIM],
            t: 0.0,
            bottomed_run: 0,
        }
    }

    /// Fills `path` with path `k`.
    pub fn simulate(&mut self, k: usize, path: &mut BrownianPath) -> Result<(), StochasticError> {
        let m = self.m;
        let dt = self.config.dt_base;
        let t_max = self.config.t_max;
        path.clear(m);
        self.main.set_stream(k as u64);
        self.aux.set_stream(k as u64);
        self.aux_leaf = None;
        self.bottomed_run = 0;
        self.z[..m].copy_from_slice(self.origin);
        self.t = 0.0;
        path.times.push(0.0);
        path.points.extend_from_slice(self.origin);
        path.flags.push(0);

        let n_leaves = ((t_max / dt) - 1e-9).ceil().max(1.0) as usize;
        let per_root = self.dyadic.leaves;
        let mut dw = [C64::new(0.0, 0.0); MAX_DIM];
        for leaf in 0..n_leaves {
            let j = leaf % per_root;
            if j == 0 {
                self.fill_root(leaf / per_root);
            }
            dw[..m].copy_from_slice(&self.leaves[j * m..(j + 1) * m]);
            let t_start = leaf as f64 * dt;
            let mut tau = dt;
            let t_end = if leaf + 1 == n_leaves {
                let rho = (t_max - t_start) / dt;
                if rho < 1.0 - 1e-12 {
                    let s = (rho * (1.0 - rho) * dt).sqrt();
                    self.position_aux(leaf);
                    for w in dw.iter_mut().take(m) {
                        *w = *w * rho + normal_pair(&mut self.aux) * s;
                    }
                    tau = t_max - t_start;
                }
                t_max
            } else {
                (leaf + 1) as f64 * dt
            };
            if self.flat {
                for i in 0..m {
                    self.z[i] += dw[i];
                }
                self.t = t_end;
                self.push(path, 0);
            } else {
                self.advance(path, leaf, tau, &dw, 0, k)?;
                let last = path.times.len() - 1;
                path.times[last] = t_end;
                self.t = t_end;
            }
        }
        Ok(())
    }

    /// Generates the leaf increments of root interval `r` by Brownian-bridge bisection.
    fn fill_root(&mut self, r: usize) {
        let m = self.m;
        self.main.set_word_pos((r as u128) << 32);
        self.leaves.clear();
        let s = self.dyadic.dt_root.sqrt();
        for _ in 0..m {
            let z = normal_pair(&mut self.main) * s;
            self.leaves.push(z);
        }
        let mut h = self.dyadic.dt_root;
        for _ in 0..self.dyadic.levels {
            let half = (h / 4.0).sqrt();
            self.scratch.clear();
            for node in self.leaves.chunks_exact(m) {
                let base = self.scratch.len();
                for &w in node {
                    let left = w * 0.5 + normal_pair(&mut self.main) * half;
                    self.scratch.push(left);
                }
                for (i, &w) in node.iter().enumerate() {
                    let left = self.scratch[base + i];
                    self.scratch.push(w - left);
                }
            }
            std::mem::swap(&mut self.leaves, &mut self.scratch);
            h /= 2.0;
        }
    }

    fn position_aux(&mut self, leaf: usize) {
        if self.aux_leaf != Some(leaf) {
            self.aux.set_word_pos((leaf as u128) << 24);
            self.aux_leaf = Some(leaf);
        }
    }

    fn push(&self, path: &mut BrownianPath, flag: u8) {
        path.times.push(self.t);
        path.points.extend_from_slice(&self.z[..self.m]);
        path.flags.push(flag);
    }

    fn advance(
        &mut self,
        path: &mut BrownianPath,
        leaf: usize,
        tau: f64,
        dw: &[C64; MAX_DIM],
        depth: u32,
        k: usize,
    ) -> Result<(), StochasticError> {
        let m = self.m;
        let margin = self.config.boundary_margin;
        let mut next = [C64::new(0.0, 0.0); MAX_DIM];
        let mut inside = true;
        let mut small = true;
        for i in 0..m {
            let z = self.z[i];
            let (sigma, region) = match self.model.factor(i) {
                None => (1.0, None),
                Some(f) => ((-f.phi_at(z)?).exp(), Some(f.region())),
            };
            let mv = dw[i] * sigma;
            next[i] = z + mv;
            if let Some(region) = region {
                inside &= region.contains(next[i]);
                small &= mv.norm() <= margin * region.boundary_distance(z);
            }
        }
        let flag = if depth > 0 { REFINED } else { 0 };
        if inside && small {
            self.z[..m].copy_from_slice(&next[..m]);
            self.t += tau;
            self.bottomed_run = 0;
            self.push(path, flag);
            return Ok(());
        }
        if depth < MAX_REFINE {
            self.position_aux(leaf);
            let half = (tau / 4.0).sqrt();
            let mut left = [C64::new(0.0, 0.0); MAX_DIM];
            let mut right = [C64::new(0.0, 0.0); MAX_DIM];
            for i in 0..m {
                left[i] = dw[i] * 0.5 + normal_pair(&mut self.aux) * half;
                right[i] = dw[i] - left[i];
            }
            self.advance(path, leaf, tau / 2.0, &left, depth + 1, k)?;
            return self.advance(path, leaf, tau / 2.0, &right, depth + 1, k);
        }
        if inside {
            self.z[..m].copy_from_slice(&next[..m]);
        }
        self.t += tau;
        self.push(path, REFINED | BOTTOMED);
        self.bottomed_run += 1;
        if self.bottomed_run >= STUCK_LIMIT {
            return Err(StochasticError::StuckPath { path: k });
        }
        Ok(())
    }
}

/// Simulates path `k` of the ensemble defined by `(model, origin, config)`.
pub fn simulate_path(
    model: &KahlerModel,
    origin: &[C64],
    config: &PathConfig,
    k: usize,
) -> Result<BrownianPath, StochasticError> {
    config.validate()?;
    super::check_origin(model, origin)?;
    let mut path = BrownianPath::default();
    Simulator::new(model, origin, config).simulate(k, &mut path)?;
    Ok(path)
}

/// Uniform draw in (0, 1].
pub(crate) fn open_uniform(rng: &mut dyn RngCore) -> f64 {
    1.0 - (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ChartRegion, ConformalFactor};
    use crate::mapdsl::parse_field;

    fn cfg(t_max: f64, dt: f64) -> PathConfig {
        PathConfig { t_max, dt_base: dt, boundary_margin: 0.5, n_paths: 2, seed: 7 }
    }

    #[test]
    fn dyadic_roots_agree_under_halving() {
        let a = Dyadic::new(0.01);
        let b = Dyadic::new(0.005);
        assert_eq!(a.dt_root, b.dt_root);
        assert_eq!(b.levels, a.levels + 1);
    }

    #[test]
    fn path_shape() {
        let model = KahlerModel::FlatSpace { m: 2 };
        let o = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let p = simulate_path(&model, &o, &cfg(1.005, 0.01), 3).unwrap();
        assert_eq!(p.times[0], 0.0);
        assert_eq!(p.origin(), &o);
        assert_eq!(p.t_max(), 1.005);
        assert_eq!(p.len(), 102);
        assert!(p.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn halving_keeps_common_points() {
        let model = KahlerModel::FlatSpace { m: 1 };
        let o = [C64::new(0.0, 0.0)];
        let a = simulate_path(&model, &o, &cfg(3.0, 0.01), 5).unwrap();
        let b = simulate_path(&model, &o, &cfg(3.0, 0.005), 5).unwrap();
        for k in 0..a.len() {
            assert_eq!(a.times[k], b.times[2 * k]);
            assert!((a.point(k)[0] - b.point(2 * k)[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_phi_matches_flat_bitwise() {
        let o = [C64::new(0.5, -0.5)];
        let flat = simulate_path(&KahlerModel::FlatSpace { m: 1 }, &o, &cfg(2.0, 0.01), 11).unwrap();
        let zero = ConformalFactor::new(parse_field("0*z", 1).unwrap(), ChartRegion::Plane).unwrap();
        let conf = simulate_path(&KahlerModel::ConformalSurface(zero), &o, &cfg(2.0, 0.01), 11).unwrap();
        assert_eq!(flat.points, conf.points);
        assert_eq!(flat.times, conf.times);
    }

    #[test]
    fn poincare_paths_stay_in_disk() {
        let model = KahlerModel::poincare_disk();
        let o = [C64::new(0.0, 0.0)];
        for k in 0..4 {
            let p = simulate_path(&model, &o, &cfg(10.0, 0.01), k).unwrap();
            assert!(p.points.iter().all(|z| z.norm() < 1.0));
            assert!(p.flags.iter().any(|f| f & REFINED != 0));
            assert!(p.times.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(p.t_max(), 10.0);
        }
    }

    #[test]
    fn regenerating_a_path_is_bitwise_identical() {
        let model = KahlerModel::poincare_disk();
        let o = [C64::new(0.1, 0.0)];
        let a = simulate_path(&model, &o, &cfg(5.0, 0.01), 9).unwrap();
        let b = simulate_path(&model, &o, &cfg(5.0, 0.01), 9).unwrap();
        assert_eq!(a, b);
        let c = simulate_path(&model, &o, &cfg(5.0, 0.01), 10).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn interpolation() {
        let p = BrownianPath {
            times: vec![0.0, 1.0, 2.0],
            points: vec![C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(2.0, 2.0)],
            flags: vec![0; 3],
            m: 1,
        };
        let mut out = [C64::new(0.0, 0.0)];
        p.point_at(0.5, &mut out);
        assert_eq!(out[0], C64::new(1.0, 0.0));
        p.point_at(2.0, &mut out);
        assert_eq!(out[0], C64::new(2.0, 2.0));
        p.point_at(1.0, &mut out);
        assert_eq!(out[0], C64::new(2.0, 0.0));
    }
}
