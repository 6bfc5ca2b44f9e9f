//! Path ensembles of the diffusion generated by ½Δ and the three estimator
//! primitives built on them: terminal expectation, time-integral expectation
//! and running supremum.

mod bridge;
mod ensemble;
mod path;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::geometry::{GeometryError, KahlerModel};

pub use bridge::{bessel_k0, bessel_k0_scaled, bridge_hitting_weight, bridge_max_1d, LogSingularStep};
pub use ensemble::{
    cumulative_integrals, running_sup_on_grid, BridgeStep, GridSup, PathEnsemble, PathOutcomes, SmoothSup,
    SupObservable, SupSample,
};
pub use path::{simulate_path, BrownianPath, BOTTOMED, MAX_DIM, MAX_REFINE, REFINED, STUCK_LIMIT};

/// Clamp level for logarithmic integrands, 50·ln 10.
pub const LAMBDA_CLAMP: f64 = 50.0 * std::f64::consts::LN_10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StochasticError {
    #[error("invalid path configuration: {0}")]
    InvalidConfig(String),
    #[error("origin {0:?} is outside the chart region")]
    OriginOutsideChart(Vec<C64>),
    #[error("path {path} got stuck at the refinement floor")]
    StuckPath { path: usize },
    #[error("every retained path is singular at t = {t}")]
    AllSingular { t: f64 },
    #[error("every path was discarded")]
    AllDiscarded,
    #[error("time {t} outside [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub t_max: f64,
    pub dt_base: f64,
    /// Fraction of the boundary distance a single move may cover before the step is halved.
    pub boundary_margin: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl PathConfig {
    pub fn validate(&self) -> Result<(), StochasticError> {
        let bad = |s: &str| Err(StochasticError::InvalidConfig(s.to_string()));
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be positive");
        }
        if !(self.dt_base > 0.0 && self.dt_base <= self.t_max) {
            return bad("dt_base must be in (0, t_max]");
        }
        if !(self.boundary_margin > 0.0 && self.boundary_margin < 1.0) {
            return bad("boundary_margin must be in (0, 1)");
        }
        if self.n_paths < 2 {
            return bad("n_paths must be at least 2");
        }
        Ok(())
    }
}

pub(crate) fn check_origin(model: &KahlerModel, origin: &[C64]) -> Result<(), StochasticError> {
    if origin.len() > MAX_DIM || !model.contains(origin) {
        return Err(StochasticError::OriginOutsideChart(origin.to_vec()));
    }
    Ok(())
}

/// Mean with its Monte Carlo standard error at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub t: f64,
    pub mean: f64,
    pub std_error: f64,
    /// Samples entering the mean.
    pub n: usize,
    /// Samples replaced by the clamp level.
    pub n_clamped: usize,
    /// Samples excluded or zeroed because the integrand was undefined.
    pub n_singular: usize,
}

/// Ordered Welford accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    n: usize,
    mean: f64,
    m2: f64,
    pub clamped: usize,
    pub singular: usize,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Adds a sample after applying the clamp policy.
    pub fn push_clamped(&mut self, x: f64, clamp: Option<f64>) {
        if x.is_nan() || x == f64::NEG_INFINITY {
            self.singular += 1;
            return;
        }
        match clamp {
            Some(c) if x > c => {
                self.clamped += 1;
                self.push(c);
            }
            _ if x.is_infinite() => self.singular += 1,
            _ => self.push(x),
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn finish(&self, t: f64) -> Estimate {
        let se = if self.n >= 2 { (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt() } else { 0.0 };
        Estimate {
            t,
            mean: if self.n > 0 { self.mean } else { f64::NAN },
            std_error: se,
            n: self.n,
            n_clamped: self.clamped,
            n_singular: self.singular,
        }
    }
}
