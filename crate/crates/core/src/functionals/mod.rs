//! Nevanlinna-type functionals assembled from path ensembles, and the
//! inequality checks built on them.

mod checks;
mod curve;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::stochastic::{Accumulator, Estimate, StochasticError};
use crate::target::TargetError;

pub use checks::{
    calculus_lemma_check, characteristic, counting_fmt_residual, counting_sup, defect_report, ldl_check, ols_slope,
    proximity, rational_pullback_check, ricci_characteristic, sandwich_check, smt_check, CalculusReport, DefectReport,
    DivisorDefect, FmtResidual, LdlReport, PullbackReport, SandwichReport, SmtReport,
};
pub use curve::{
    lambda_curve, nevanlinna_curve, plateau_window, CountingEstimate, CountingSeries, CurveSpec, DivisorCurve,
    NevanlinnaCurve, PlateauWindow,
};

/// Relative slope below which adjacent λ-curve cells belong to a plateau.
pub const PLATEAU_SLOPE: f64 = 0.1;
/// A step is examined for a nearby zero when |h|/|∇h| is below this many √τ.
pub const SCREEN_RADIUS: f64 = 8.0;
pub const MAX_MULTIPLICITY: f64 = 64.0;
/// Standard-error multiple used by every statistical comparison.
pub const SE_MULTIPLIER: f64 = 3.0;
/// FMT residual spread allowed relative to the final characteristic.
pub const FMT_RELATIVE: f64 = 0.05;
pub const LDL_COVERAGE: f64 = 0.9;
pub const SMT_SLOPE_MAX: f64 = 1.2;
pub const CALCULUS_MEASURE_MAX: f64 = 5.0;
pub const RICCI_RELATIVE: f64 = 1e-3;
pub const CHAR_RELATIVE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("origin lies on divisor {0}")]
    OriginOnDivisor(usize),
    #[error("map source dimension {map} does not match the manifold dimension {model}")]
    DimensionMismatch { map: usize, model: usize },
    #[error("divisor {index} lives in P^{got}, the map targets P^{expected}")]
    DivisorTarget { index: usize, expected: usize, got: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("map is constant")]
    ConstantMap,
    #[error("composition is constant")]
    ConstantComposition,
    #[error("degenerate scenario: {0}")]
    DegenerateScenario(String),
    #[error("characteristic is not increasing above 1 on the tail window [{0}, {1}]")]
    FlatCharacteristic(f64, f64),
}

pub(crate) fn check_grid(name: &str, grid: &[f64]) -> Result<(), FunctionalError> {
    if grid.is_empty() {
        return Err(FunctionalError::InvalidGrid(format!("{name} is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FunctionalError::InvalidGrid(format!("{name} must be finite and strictly increasing")));
    }
    Ok(())
}

/// Column-wise estimates over per-path rows, in row order.
pub(crate) fn fold_rows<R>(
    rows: &[R],
    t_grid: &[f64],
    clamp: Option<f64>,
    value: impl Fn(&R, usize) -> f64,
) -> Result<Vec<Estimate>, FunctionalError> {
    if rows.is_empty() {
        return Err(StochasticError::AllDiscarded.into());
    }
    t_grid
        .iter()
        .enumerate()
        .map(|(g, &t)| {
            let mut acc = Accumulator::default();
            for r in rows {
                acc.push_clamped(value(r, g), clamp);
            }
            if acc.count() == 0 {
                return Err(StochasticError::AllSingular { t }.into());
            }
            Ok(acc.finish(t))
        })
        .collect()
}
