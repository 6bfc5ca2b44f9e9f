//! Maps into ℙⁿ, Fubini–Study energy densities and Hermitian divisor sections.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::geometry::{GeometryError, KahlerModel};
use crate::mapdsl::{eval_generic, parse, Dual1, Dual2, EvalError, Expr, JetNum, ParseError};
use crate::stochastic::MAX_DIM;

/// Largest number of homogeneous components (n + 1).
pub const MAX_COMPONENTS: usize = 8;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TargetError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("map component has a pole at the sample point")]
    PoleSample,
    #[error("all homogeneous components vanish at the sample point")]
    BaseLocusSample,
    #[error("map components must be holomorphic")]
    NotHolomorphic,
    #[error("a map needs between 2 and 8 components, got {0}")]
    ComponentCount(usize),
    #[error("all map components are identically zero")]
    ZeroMap,
    #[error("component uses variable z{0} but the source has dimension {1}")]
    SourceDimension(usize, usize),
    #[error("divisor polynomial is zero")]
    ZeroPolynomial,
    #[error("divisor polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("monomial has {got} exponents, expected {expected}")]
    ExponentLength { expected: usize, got: usize },
    #[error("reference degree must be positive")]
    NonPositiveReference,
}

impl From<EvalError> for TargetError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::NotHolomorphic => TargetError::NotHolomorphic,
            _ => TargetError::PoleSample,
        }
    }
}

/// Holomorphic map f = [F₀ : … : F_n] from an m-dimensional chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveMap {
    components: Vec<Expr>,
    m: usize,
}

impl ProjectiveMap {
    pub fn new(components: Vec<Expr>, m: usize) -> Result<Self, TargetError> {
        if components.len() < 2 || components.len() > MAX_COMPONENTS {
            return Err(TargetError::ComponentCount(components.len()));
        }
        if m == 0 || m > MAX_DIM {
            return Err(TargetError::SourceDimension(m, m));
        }
        for c in &components {
            if !c.is_holomorphic() {
                return Err(TargetError::NotHolomorphic);
            }
            if c.arity() > m {
                return Err(TargetError::SourceDimension(c.arity(), m));
            }
        }
        if components.iter().all(|c| c.as_const() == Some(ZERO)) {
            return Err(TargetError::ZeroMap);
        }
        Ok(ProjectiveMap { components, m })
    }

    pub fn parse(components: &[&str], m: usize) -> Result<Self, TargetError> {
        let exprs = components.iter().map(|s| parse(s, m)).collect::<Result<Vec<_>, _>>()?;
        ProjectiveMap::new(exprs, m)
    }

    /// The map [1 : ψ], or [b : a] when ψ is written as a quotient a/b.
    pub fn from_meromorphic(psi: &Expr, m: usize) -> Result<Self, TargetError> {
        match psi {
            Expr::Div(a, b) => ProjectiveMap::new(vec![(**b).clone(), (**a).clone()], m),
            _ => ProjectiveMap::new(vec![Expr::real(1.0), psi.clone()], m),
        }
    }

    /// Target dimension n.
    pub fn n(&self) -> usize {
        self.components.len() - 1
    }

    /// Source dimension m.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn is_constant(&self) -> bool {
        self.components.iter().all(Expr::is_constant)
    }

    /// Homogeneous coordinates at `p`.
    pub fn values(&self, p: &[C64]) -> Result<Vec<C64>, TargetError> {
        self.components.iter().map(|c| eval_generic::<C64>(c, p).map_err(Into::into)).collect()
    }

    fn jets<T: JetNum>(&self, p: &[C64], out: &mut Vec<T>) -> Result<(), TargetError> {
        out.clear();
        for c in &self.components {
            out.push(eval_generic::<T>(c, p)?);
        }
        Ok(())
    }
}

/// Homogeneous polynomial section of O(d) with normalization constant C = Σ|coefficients|.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianDivisor {
    n: usize,
    degree: u32,
    monomials: Vec<(C64, Vec<u32>)>,
    norm_const: f64,
}

/// C = Σ|coefficients|, a bound for |P| on the unit sphere.
pub fn normalize_divisor(monomials: &[(C64, Vec<u32>)]) -> Result<f64, TargetError> {
    let c: f64 = monomials.iter().map(|(a, _)| a.norm()).sum();
    if c > 0.0 && c.is_finite() {
        Ok(c)
    } else {
        Err(TargetError::ZeroPolynomial)
    }
}

impl HermitianDivisor {
    pub fn new(n: usize, monomials: Vec<(C64, Vec<u32>)>) -> Result<Self, TargetError> {
        let monomials: Vec<_> = monomials.into_iter().filter(|(a, _)| *a != ZERO).collect();
        for (_, e) in &monomials {
            if e.len() != n + 1 {
                return Err(TargetError::ExponentLength { expected: n + 1, got: e.len() });
            }
        }
        let norm_const = normalize_divisor(&monomials)?;
        let degree: u32 = monomials[0].1.iter().sum();
        if degree == 0 || monomials.iter().any(|(_, e)| e.iter().sum::<u32>() != degree) {
            return Err(TargetError::NotHomogeneous);
        }
        Ok(HermitianDivisor { n, degree, monomials, norm_const })
    }

    /// The point [a₀ : a₁] of ℙ¹ as the zero set of a₁w₀ − a₀w₁.
    pub fn point(a: [C64; 2]) -> Result<Self, TargetError> {
        HermitianDivisor::new(1, vec![(a[1], vec![1, 0]), (-a[0], vec![0, 1])])
    }

    /// The hyperplane Σ cⱼwⱼ = 0.
    pub fn hyperplane(coeffs: &[C64]) -> Result<Self, TargetError> {
        let n = coeffs.len().saturating_sub(1);
        let monomials =
            coeffs.iter().enumerate().map(|(j, c)| (*c, (0..=n).map(|l| u32::from(l == j)).collect())).collect();
        HermitianDivisor::new(n, monomials)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    pub fn monomials(&self) -> &[(C64, Vec<u32>)] {
        &self.monomials
    }

    pub fn eval(&self, w: &[C64]) -> C64 {
        self.monomials.iter().map(|(a, e)| *a * monomial(w, e, None, None)).sum()
    }

    /// ∂P/∂wⱼ.
    pub fn grad(&self, w: &[C64], out: &mut [C64]) {
        for (j, o) in out.iter_mut().enumerate().take(w.len()) {
            *o = self
                .monomials
                .iter()
                .filter(|(_, e)| e[j] > 0)
                .map(|(a, e)| *a * f64::from(e[j]) * monomial(w, e, Some(j), None))
                .sum();
        }
    }

    /// ∂²P/∂wⱼ∂w_l, row-major with stride `w.len()`.
    pub fn hess(&self, w: &[C64], out: &mut [C64]) {
        let k = w.len();
        for j in 0..k {
            for l in 0..k {
                out[j * k + l] = self
                    .monomials
                    .iter()
                    .map(|(a, e)| {
                        let c = if j == l {
                            f64::from(e[j]) * (f64::from(e[j]) - 1.0)
                        } else {
                            f64::from(e[j]) * f64::from(e[l])
                        };
                        if c == 0.0 {
                            ZERO
                        } else {
                            *a * c * monomial(w, e, Some(j), Some(l))
                        }
                    })
                    .sum();
            }
        }
    }

    /// log 1/‖s_D(w)‖ = log C + (d/2) log‖w‖² − log|P(w)|, never negative.
    pub fn log_inverse_norm(&self, w: &[C64]) -> f64 {
        let norm2: f64 = w.iter().map(C64::norm_sqr).sum();
        let p = self.eval(w).norm();
        if p == 0.0 {
            return f64::INFINITY;
        }
        (self.norm_const.ln() + 0.5 * f64::from(self.degree) * norm2.ln() - p.ln()).max(0.0)
    }
}

/// Π wⱼ^{eⱼ} with the exponents at `skip1` and `skip2` lowered by one each.
fn monomial(w: &[C64], e: &[u32], skip1: Option<usize>, skip2: Option<usize>) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for (j, (&wj, &ej)) in w.iter().zip(e).enumerate() {
        let k = ej as i32 - i32::from(skip1 == Some(j)) - i32::from(skip2 == Some(j));
        if k > 0 {
            acc *= wj.powi(k);
        }
    }
    acc
}

/// Homogeneous jets of a map at one point, rescaled when the components are extreme in size.
#[derive(Debug, Clone, Default)]
pub struct MapJets<const N: usize> {
    pub comps: Vec<Dual1<N>>,
}

/// Value, gradient and log-distance of one divisor section along a map.
#[derive(Debug, Clone, Copy)]
pub struct SectionJet<const N: usize> {
    /// log 1/‖s_D∘f‖.
    pub u: f64,
    /// P∘F for the rescaled representative.
    pub h: C64,
    /// ∂(P∘F)/∂zᵢ for the rescaled representative.
    pub grad: [C64; N],
}

impl<const N: usize> MapJets<N> {
    pub fn new() -> Self {
        MapJets { comps: Vec::with_capacity(MAX_COMPONENTS) }
    }

    pub fn eval(&mut self, f: &ProjectiveMap, p: &[C64]) -> Result<(), TargetError> {
        f.jets::<Dual1<N>>(p, &mut self.comps)?;
        let mut s2: f64 = 0.0;
        for c in &self.comps {
            let a = c.v.norm_sqr();
            if a.is_nan() {
                return Err(TargetError::PoleSample);
            }
            s2 = s2.max(a);
        }
        // Rescaling is only needed when products of components could leave the f64 range.
        if (1e-40..=1e40).contains(&s2) {
            return Ok(());
        }
        let s = self.comps.iter().map(|c| c.v.norm()).fold(0.0, f64::max);
        if !(s > 1e-300) {
            return Err(TargetError::BaseLocusSample);
        }
        if !s.is_finite() {
            return Err(TargetError::PoleSample);
        }
        let r = 1.0 / s;
        for c in &mut self.comps {
            c.v *= r;
            for d in &mut c.d {
                *d *= r;
            }
        }
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.comps.iter().map(|c| c.v.norm_sqr()).sum()
    }

    /// e_{f*ω_FS} = 2 Σ g^{iī} Σ_{j<l} |∂ᵢFⱼ F_l − ∂ᵢF_l Fⱼ|² / ‖F‖⁴.
    pub fn fs_density(&self, g_inv: &[f64]) -> f64 {
        let norm2 = self.norm_sqr();
        let mut acc = 0.0;
        for (i, gi) in g_inv.iter().enumerate() {
            let mut lag = 0.0;
            for j in 0..self.comps.len() {
                for l in j + 1..self.comps.len() {
                    let (a, b) = (&self.comps[j], &self.comps[l]);
                    lag += (a.d[i] * b.v - b.d[i] * a.v).norm_sqr();
                }
            }
            acc += gi * lag;
        }
        2.0 * acc / (norm2 * norm2)
    }

    pub fn section(&self, d: &HermitianDivisor, m: usize) -> SectionJet<N> {
        let mut w = [ZERO; MAX_COMPONENTS];
        let k = self.comps.len();
        for (wj, c) in w.iter_mut().zip(&self.comps) {
            *wj = c.v;
        }
        let w = &w[..k];
        let mut pg = [ZERO; MAX_COMPONENTS];
        d.grad(w, &mut pg[..k]);
        let mut grad = [ZERO; N];
        for (i, g) in grad.iter_mut().enumerate().take(m) {
            *g = (0..k).map(|j| pg[j] * self.comps[j].d[i]).sum();
        }
        SectionJet { u: d.log_inverse_norm(w), h: d.eval(w), grad }
    }
}

/// Second-order data of P∘F at one point (rescaled representative).
#[derive(Debug, Clone, Copy)]
pub struct SectionJet2<const N: usize> {
    pub h: C64,
    pub grad: [C64; N],
    pub hess: [[C64; N]; N],
}

pub fn section_jet2<const N: usize>(
    f: &ProjectiveMap,
    d: &HermitianDivisor,
    p: &[C64],
) -> Result<SectionJet2<N>, TargetError> {
    let mut comps: Vec<Dual2<N>> = Vec::with_capacity(MAX_COMPONENTS);
    f.jets::<Dual2<N>>(p, &mut comps)?;
    let s = comps.iter().map(|c| c.v.norm()).fold(0.0, f64::max);
    if !(s > 1e-300 && s.is_finite()) {
        return Err(TargetError::BaseLocusSample);
    }
    let r = 1.0 / s;
    let k = comps.len();
    let mut w = [ZERO; MAX_COMPONENTS];
    for (wj, c) in w.iter_mut().zip(&comps) {
        *wj = c.v * r;
    }
    let mut pg = [ZERO; MAX_COMPONENTS];
    let mut ph = [ZERO; MAX_COMPONENTS * MAX_COMPONENTS];
    d.grad(&w[..k], &mut pg[..k]);
    d.hess(&w[..k], &mut ph[..k * k]);
    let m = f.m();
    let mut grad = [ZERO; N];
    let mut hess = [[ZERO; N]; N];
    for i in 0..m {
        grad[i] = (0..k).map(|j| pg[j] * comps[j].d[i] * r).sum();
        for l in 0..m {
            let mut acc = ZERO;
            for j in 0..k {
                acc += pg[j] * comps[j].h[i][l] * r;
                for q in 0..k {
                    acc += ph[j * k + q] * comps[j].d[i] * comps[q].d[l] * r * r;
                }
            }
            hess[i][l] = acc;
        }
    }
    Ok(SectionJet2 { h: d.eval(&w[..k]), grad, hess })
}

macro_rules! with_slots {
    ($m:expr, $n:ident => $body:expr) => {
        match $m {
            0 | 1 => {
                const $n: usize = 1;
                $body
            }
            2 => {
                const $n: usize = 2;
                $body
            }
            3 | 4 => {
                const $n: usize = 4;
                $body
            }
            _ => {
                const $n: usize = 8;
                $body
            }
        }
    };
}
pub(crate) use with_slots;

/// Pullback Fubini–Study energy density e_{f*ω_FS} at `p`.
pub fn fs_energy_density(model: &KahlerModel, f: &ProjectiveMap, p: &[C64]) -> Result<f64, TargetError> {
    let mut g_inv = vec![0.0; p.len()];
    model.g_inv_at(p, &mut g_inv)?;
    with_slots!(f.m(), N => {
        let mut j = MapJets::<N>::new();
        j.eval(f, p)?;
        Ok(j.fs_density(&g_inv))
    })
}

/// ‖s_D∘f(p)‖ in [0, 1].
pub fn section_norm(d: &HermitianDivisor, f: &ProjectiveMap, p: &[C64]) -> Result<f64, TargetError> {
    let w = f.values(p)?;
    if w.iter().all(|c| c.norm() == 0.0) {
        return Err(TargetError::BaseLocusSample);
    }
    Ok((-d.log_inverse_norm(&w)).exp())
}

/// Chordal distance |a₀b₁ − a₁b₀| / (‖a‖‖b‖).
pub fn spherical_distance(a: [C64; 2], b: [C64; 2]) -> f64 {
    let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    let nb = (b[0].norm_sqr() + b[1].norm_sqr()).sqrt();
    ((a[0] * b[1] - a[1] * b[0]).norm() / (na * nb)).min(1.0)
}

/// Degree of the canonical bundle of ℙⁿ, −(n+1).
pub fn canonical_degree(n: usize) -> i64 {
    -(n as i64 + 1)
}

/// Degree d of the line bundle O(d) on ℙⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineBundleDegree(pub i64);

/// Lower and upper brackets [L₂/L₁]; on ℙⁿ both equal d₂/d₁.
pub fn bracket_ratio(d2: LineBundleDegree, d1: LineBundleDegree) -> Result<(f64, f64), TargetError> {
    if d1.0 <= 0 {
        return Err(TargetError::NonPositiveReference);
    }
    let r = d2.0 as f64 / d1.0 as f64;
    Ok((r, r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NondegeneracyReport {
    pub n: usize,
    pub max_rank: usize,
    pub witness: Option<Vec<C64>>,
}

impl NondegeneracyReport {
    pub fn degenerate(&self) -> bool {
        self.max_rank < self.n
    }
}

/// Numerical rank of a row-major matrix by complete pivoting.
fn rank(mut a: Vec<C64>, rows: usize, cols: usize, rel_tol: f64) -> usize {
    let scale = a.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let tol = rel_tol * scale;
    let mut r = 0;
    let mut used_cols = vec![false; cols];
    let mut used_rows = vec![false; rows];
    loop {
        let mut best = (0.0, 0, 0);
        for i in (0..rows).filter(|i| !used_rows[*i]) {
            for j in (0..cols).filter(|j| !used_cols[*j]) {
                let v = a[i * cols + j].norm();
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        if best.0 <= tol {
            return r;
        }
        let (_, pi, pj) = best;
        used_rows[pi] = true;
        used_cols[pj] = true;
        r += 1;
        let piv = a[pi * cols + pj];
        for i in (0..rows).filter(|i| !used_rows[*i]) {
            let f = a[i * cols + pj] / piv;
            for j in 0..cols {
                let sub = f * a[pi * cols + j];
                a[i * cols + j] -= sub;
            }
        }
    }
}

/// Rank of df at sample points, from the rank of [F | ∂₁F | … | ∂_mF] minus one.
pub fn nondegeneracy_probe(
    f: &ProjectiveMap,
    model: &KahlerModel,
    points: &[Vec<C64>],
) -> Result<NondegeneracyReport, TargetError> {
    let k = f.n() + 1;
    let m = f.m();
    let mut best = NondegeneracyReport { n: f.n(), max_rank: 0, witness: None };
    for p in points {
        if !model.contains(p) {
            return Err(GeometryError::OutOfChart(p.clone()).into());
        }
        let rows: Result<Vec<Dual1<8>>, _> = f.components.iter().map(|c| eval_generic::<Dual1<8>>(c, p)).collect();
        let Ok(rows) = rows else { continue };
        let mut a = Vec::with_capacity(k * (m + 1));
        for r in &rows {
            a.push(r.v);
            a.extend_from_slice(&r.d[..m]);
        }
        let rk = rank(a, k, m + 1, 1e-9).saturating_sub(1);
        if rk > best.max_rank || best.witness.is_none() {
            best.max_rank = best.max_rank.max(rk);
            if rk == best.max_rank {
                best.witness = Some(p.clone());
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SncStatus {
    Verified,
    Failed(String),
    /// The configuration is outside what the probe can decide.
    Unverified(String),
}

/// Roots in ℙ¹ of a binary form, as homogeneous pairs.
pub fn binary_form_roots(d: &HermitianDivisor) -> Vec<[C64; 2]> {
    let deg = d.degree() as usize;
    let mut coeffs = vec![ZERO; deg + 1];
    for (a, e) in d.monomials() {
        coeffs[e[1] as usize] += *a;
    }
    let top = (0..=deg).rev().find(|&k| coeffs[k].norm() > 0.0).unwrap_or(0);
    let mut roots: Vec<[C64; 2]> = vec![[ZERO, C64::new(1.0, 0.0)]; deg - top];
    roots.extend(polynomial_roots(&coeffs[..=top]).into_iter().map(|x| [C64::new(1.0, 0.0), x]));
    roots
}

/// Roots of Σ cₖ xᵏ by Aberth–Ehrlich iteration.
fn polynomial_roots(c: &[C64]) -> Vec<C64> {
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let monic: Vec<C64> = c.iter().map(|x| x / lead).collect();
    let radius = 1.0 + monic[..deg].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut z: Vec<C64> =
        (0..deg).map(|k| C64::from_polar(radius * 0.5, 0.4 + std::f64::consts::TAU * k as f64 / deg as f64)).collect();
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for i in 0..deg {
            let (mut p, mut dp) = (C64::new(1.0, 0.0), ZERO);
            for k in (0..deg).rev() {
                dp = dp * z[i] + p;
                p = p * z[i] + monic[k];
            }
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let rep: C64 = (0..deg).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let w = ratio / (C64::new(1.0, 0.0) - ratio * rep);
            z[i] -= w;
            moved = moved.max(w.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Normal-crossing probe for Σ Dⱼ: exact for point sets in ℙ¹ and hyperplane arrangements.
pub fn snc_probe(divisors: &[HermitianDivisor]) -> SncStatus {
    let Some(first) = divisors.first() else {
        return SncStatus::Verified;
    };
    let n = first.n();
    if divisors.iter().any(|d| d.n() != n) {
        return SncStatus::Failed("divisors live in different projective spaces".into());
    }
    if n == 1 {
        let roots: Vec<[C64; 2]> = divisors.iter().flat_map(binary_form_roots).collect();
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                if spherical_distance(roots[i], roots[j]) < 1e-6 {
                    return SncStatus::Failed(format!("repeated point {:?}", roots[i]));
                }
            }
        }
        return SncStatus::Verified;
    }
    if divisors.iter().any(|d| d.degree() != 1) {
        return SncStatus::Unverified("only hyperplane arrangements are probed for n >= 2".into());
    }
    let normals: Vec<Vec<C64>> = divisors
        .iter()
        .map(|d| {
            let mut v = vec![ZERO; n + 1];
            for (a, e) in d.monomials() {
                let j = e.iter().position(|&x| x == 1).expect("linear monomial");
                v[j] += *a;
            }
            let s = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let k = normals.len().min(n + 1);
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let a: Vec<C64> = subset.iter().flat_map(|&i| normals[i].iter().copied()).collect();
        if rank(a, k, n + 1, 1e-9) < k {
            return SncStatus::Failed(format!("hyperplanes {subset:?} are not in general position"));
        }
        let mut i = k;
        loop {
            if i == 0 {
                return SncStatus::Verified;
            }
            i -= 1;
            if subset[i] < normals.len() - k + i {
                subset[i] += 1;
                for j in i + 1..k {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}
