//! Diagonal Kähler metrics given in one chart.
//!
//! Every model is a product of one-dimensional factors, each either flat or
//! conformal with metric g = e^{2φ}. The Laplacian convention is
//! Δu = 4 Σ g^{iī} ∂ᵢ∂̄ᵢ u, so the diffusion generated by ½Δ has per-coordinate
//! dispersion e^{−φ}.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::mapdsl::{eval_field_jet, eval_value, parse_field, EvalError, Expr, JetOrder};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point {0:?} lies outside the chart region")]
    OutOfChart(Vec<C64>),
    #[error("conformal factor is not a positive real metric at {0:?}")]
    NonPositiveMetric(Vec<C64>),
    #[error("expected a point with {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("conformal factor must use only z1 and zb1")]
    FactorArity,
    #[error("field evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

/// Chart region of a single coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartRegion {
    Plane,
    Disk { center: C64, radius: f64 },
}

impl ChartRegion {
    pub fn contains(&self, z: C64) -> bool {
        match *self {
            ChartRegion::Plane => z.re.is_finite() && z.im.is_finite(),
            ChartRegion::Disk { center, radius } => (z - center).norm() < radius,
        }
    }

    /// Euclidean distance to the boundary; infinite for the whole plane.
    pub fn boundary_distance(&self, z: C64) -> f64 {
        match *self {
            ChartRegion::Plane => f64::INFINITY,
            ChartRegion::Disk { center, radius } => radius - (z - center).norm(),
        }
    }
}

/// One-dimensional factor with metric e^{2φ(z)}|dz|².
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalFactor {
    phi: Expr,
    region: ChartRegion,
}

impl ConformalFactor {
    pub fn new(phi: Expr, region: ChartRegion) -> Result<Self, GeometryError> {
        if phi.arity() > 1 {
            return Err(GeometryError::FactorArity);
        }
        Ok(ConformalFactor { phi, region })
    }

    /// The Poincaré disk, g = (1 − |z|²)^{−2}.
    pub fn poincare_disk() -> Self {
        let phi = parse_field("-log(1 - z*zb)", 1).expect("builtin expression");
        ConformalFactor { phi, region: ChartRegion::Disk { center: C64::new(0.0, 0.0), radius: 1.0 } }
    }

    pub fn phi(&self) -> &Expr {
        &self.phi
    }

    pub fn region(&self) -> ChartRegion {
        self.region
    }

    /// φ(z), rejecting complex or non-finite values.
    pub fn phi_at(&self, z: C64) -> Result<f64, GeometryError> {
        if !self.region.contains(z) {
            return Err(GeometryError::OutOfChart(vec![z]));
        }
        let v = eval_value(&self.phi, &[z]).map_err(|_| GeometryError::NonPositiveMetric(vec![z]))?;
        if !v.re.is_finite() || v.im.abs() > 1e-9 * (1.0 + v.re.abs()) {
            return Err(GeometryError::NonPositiveMetric(vec![z]));
        }
        Ok(v.re)
    }

    /// (φ, ∂∂̄φ) at z.
    fn phi_with_levi(&self, z: C64) -> Result<(f64, f64), GeometryError> {
        let phi = self.phi_at(z)?;
        let jet = eval_field_jet(&self.phi, &[z], JetOrder::Two)?;
        let h = jet.d2.expect("second order requested")[0][1];
        Ok((phi, h.re))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceFactor {
    Flat,
    Conformal(ConformalFactor),
}

#[derive(Debug, Clone, PartialEq)]
pub enum KahlerModel {
    FlatSpace { m: usize },
    ConformalSurface(ConformalFactor),
    ProductOfSurfaces(Vec<SurfaceFactor>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub point: Vec<C64>,
    pub g_diag: Vec<f64>,
    pub g_inv_diag: Vec<f64>,
    pub log_det_g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSample {
    pub point: Vec<C64>,
    /// R_{iī} in chart coordinates.
    pub ricci_diag: Vec<f64>,
    /// Scalar curvature s = Σ g^{iī} R_{iī}.
    pub scalar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrigoryanRow {
    pub radius: f64,
    /// Largest metric length of the sampled radial segments.
    pub distance_proxy: f64,
    /// Smallest Ric(ξ,ξ̄)/‖ξ‖² over coordinate directions and sampled angles.
    pub ricci_lower_proxy: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrigoryanReport {
    pub c: f64,
    pub rows: Vec<GrigoryanRow>,
}

impl GrigoryanReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

impl KahlerModel {
    pub fn poincare_disk() -> Self {
        KahlerModel::ConformalSurface(ConformalFactor::poincare_disk())
    }

    /// Total complex dimension.
    pub fn dim(&self) -> usize {
        match self {
            KahlerModel::FlatSpace { m } => *m,
            KahlerModel::ConformalSurface(_) => 1,
            KahlerModel::ProductOfSurfaces(f) => f.len(),
        }
    }

    /// Conformal factor of coordinate `i`, `None` when that coordinate is flat.
    pub fn factor(&self, i: usize) -> Option<&ConformalFactor> {
        match self {
            KahlerModel::FlatSpace { .. } => None,
            KahlerModel::ConformalSurface(f) => Some(f),
            KahlerModel::ProductOfSurfaces(fs) => match &fs[i] {
                SurfaceFactor::Flat => None,
                SurfaceFactor::Conformal(f) => Some(f),
            },
        }
    }

    /// True when every coordinate is a flat factor.
    pub fn is_flat(&self) -> bool {
        (0..self.dim()).all(|i| self.factor(i).is_none())
    }

    pub fn region(&self, i: usize) -> ChartRegion {
        self.factor(i).map_or(ChartRegion::Plane, |f| f.region)
    }

    pub fn contains(&self, p: &[C64]) -> bool {
        p.len() == self.dim() && p.iter().enumerate().all(|(i, z)| self.region(i).contains(*z))
    }

    fn check(&self, p: &[C64]) -> Result<(), GeometryError> {
        if p.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch { expected: self.dim(), got: p.len() });
        }
        if !self.contains(p) {
            return Err(GeometryError::OutOfChart(p.to_vec()));
        }
        Ok(())
    }

    /// φᵢ(zᵢ) for every coordinate (0 on flat factors).
    pub fn phi_at(&self, p: &[C64], out: &mut [f64]) -> Result<(), GeometryError> {
        self.check(p)?;
        for (i, o) in out.iter_mut().enumerate().take(p.len()) {
            *o = match self.factor(i) {
                None => 0.0,
                Some(f) => f.phi_at(p[i])?,
            };
        }
        Ok(())
    }

    /// Inverse metric diagonal g^{iī} = e^{−2φᵢ}.
    pub fn g_inv_at(&self, p: &[C64], out: &mut [f64]) -> Result<(), GeometryError> {
        self.phi_at(p, out)?;
        for o in out.iter_mut().take(p.len()) {
            *o = (-2.0 * *o).exp();
        }
        Ok(())
    }

    pub fn metric_at(&self, p: &[C64]) -> Result<MetricSample, GeometryError> {
        let mut phi = vec![0.0; self.dim()];
        self.phi_at(p, &mut phi)?;
        Ok(MetricSample {
            point: p.to_vec(),
            g_diag: phi.iter().map(|f| (2.0 * f).exp()).collect(),
            g_inv_diag: phi.iter().map(|f| (-2.0 * f).exp()).collect(),
            log_det_g: phi.iter().map(|f| 2.0 * f).sum(),
        })
    }

    pub fn curvature_at(&self, p: &[C64]) -> Result<CurvatureSample, GeometryError> {
        self.check(p)?;
        let mut ricci = vec![0.0; p.len()];
        let mut scalar = 0.0;
        for (i, r) in ricci.iter_mut().enumerate() {
            if let Some(f) = self.factor(i) {
                let (phi, levi) = f.phi_with_levi(p[i])?;
                *r = -2.0 * levi;
                scalar += (-2.0 * phi).exp() * *r;
            }
        }
        Ok(CurvatureSample { point: p.to_vec(), ricci_diag: ricci, scalar })
    }

    /// Scalar curvature only.
    pub fn scalar_curvature(&self, p: &[C64]) -> Result<f64, GeometryError> {
        if self.is_flat() {
            self.check(p)?;
            return Ok(0.0);
        }
        Ok(self.curvature_at(p)?.scalar)
    }

    /// ‖∇ψ‖² = Σ g^{iī}|∂ᵢψ|².
    pub fn gradient_norm_sq(&self, partials: &[C64], p: &[C64]) -> Result<f64, GeometryError> {
        let mut g_inv = vec![0.0; self.dim()];
        self.g_inv_at(p, &mut g_inv)?;
        Ok(g_inv.iter().zip(partials).map(|(g, d)| g * d.norm_sqr()).sum())
    }

    /// Δu = 4 Σ g^{iī} ∂ᵢ∂̄ᵢu from the mixed partials ∂ᵢ∂̄ᵢu.
    pub fn laplacian_from_mixed(&self, mixed: &[f64], p: &[C64]) -> Result<f64, GeometryError> {
        let mut g_inv = vec![0.0; self.dim()];
        self.g_inv_at(p, &mut g_inv)?;
        Ok(4.0 * g_inv.iter().zip(mixed).map(|(g, u)| g * u).sum::<f64>())
    }

    /// Laplacian of a real field expression in `z` and `zb` variables.
    pub fn laplacian_at(&self, field: &Expr, p: &[C64]) -> Result<f64, GeometryError> {
        self.check(p)?;
        let m = p.len();
        let jet = eval_field_jet(field, p, JetOrder::Two)?;
        let h = jet.d2.expect("second order requested");
        let mixed: Vec<f64> = (0..m).map(|i| h[i][m + i].re).collect();
        self.laplacian_from_mixed(&mixed, p)
    }

    /// e_η = 2 Σ g^{iī} η_{iī} for diagonal (1,1) data.
    pub fn energy_density(&self, eta_diag: &[C64], p: &[C64]) -> Result<f64, GeometryError> {
        let mut g_inv = vec![0.0; self.dim()];
        self.g_inv_at(p, &mut g_inv)?;
        Ok(2.0 * g_inv.iter().zip(eta_diag).map(|(g, e)| g * e.re).sum::<f64>())
    }

    /// Samples R(x) ≥ −c·r(x)² − c on circles of the given chart radii.
    pub fn grigoryan_check(&self, radius_grid: &[f64], c: f64) -> Result<GrigoryanReport, GeometryError> {
        const ANGLES: usize = 8;
        let m = self.dim();
        let mut rows = Vec::with_capacity(radius_grid.len());
        for &radius in radius_grid {
            let mut pass = true;
            let mut dist_max: f64 = 0.0;
            let mut ric_min = f64::INFINITY;
            for k in 0..ANGLES {
                let z = C64::from_polar(radius, std::f64::consts::TAU * k as f64 / ANGLES as f64);
                let p = vec![z; m];
                self.check(&p)?;
                let curv = self.curvature_at(&p)?;
                let metric = self.metric_at(&p)?;
                let ric =
                    curv.ricci_diag.iter().zip(&metric.g_inv_diag).map(|(r, g)| r * g).fold(f64::INFINITY, f64::min);
                let dist = self.segment_length(&p)?;
                pass &= ric >= -c * dist * dist - c;
                dist_max = dist_max.max(dist);
                ric_min = ric_min.min(ric);
            }
            rows.push(GrigoryanRow { radius, distance_proxy: dist_max, ricci_lower_proxy: ric_min, pass });
        }
        Ok(GrigoryanReport { c, rows })
    }

    /// Metric length of the chart segment from the chart origin to `p` (Simpson rule).
    fn segment_length(&self, p: &[C64]) -> Result<f64, GeometryError> {
        const N: usize = 128;
        let mut phi = vec![0.0; p.len()];
        let mut speed = |s: f64| -> Result<f64, GeometryError> {
            let q: Vec<C64> = p.iter().map(|z| z * s).collect();
            self.phi_at(&q, &mut phi)?;
            Ok(phi.iter().zip(p).map(|(f, z)| (2.0 * f).exp() * z.norm_sqr()).sum::<f64>().sqrt())
        };
        let h = 1.0 / N as f64;
        let mut acc = speed(0.0)? + speed(1.0)?;
        for j in 1..N {
            acc += if j % 2 == 1 { 4.0 } else { 2.0 } * speed(j as f64 * h)?;
        }
        Ok(acc * h / 3.0)
    }
}
