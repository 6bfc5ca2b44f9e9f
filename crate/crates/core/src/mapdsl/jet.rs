//! Forward-mode evaluation with first and second complex partials.
//!
//! Holomorphic expressions carry one derivative slot per variable. Field
//! expressions treat `zᵢ` and `z̄ᵢ` as independent (Wirtinger calculus), so
//! slot `i` holds ∂/∂zᵢ and slot `m + i` holds ∂/∂z̄ᵢ.

use num_complex::Complex64 as C64;
use thiserror::Error;

use super::expr::{Expr, Var};
use super::POLE_THRESHOLD;

/// Largest number of derivative slots supported by the dynamic entry points.
pub const MAX_SLOTS: usize = 8;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("evaluation point is a pole")]
    PoleSample,
    #[error("expression is not holomorphic")]
    NotHolomorphic,
    #[error("{0} derivative slots requested, at most 8 supported")]
    TooManySlots(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOrder {
    One,
    Two,
}

/// Value with partial derivatives, as returned by the dynamic entry points.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: C64,
    pub d1: Vec<C64>,
    pub d2: Option<Vec<Vec<C64>>>,
}

/// Number type the evaluator is generic over.
pub trait JetNum: Copy {
    fn constant(c: C64) -> Self;
    fn variable(v: C64, slot: usize) -> Self;
    fn value(&self) -> C64;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn neg(self) -> Self;
    /// Applies a scalar function given its value and first two derivatives at `self.value()`.
    fn chain(self, f: C64, f1: C64, f2: C64) -> Self;
}

impl JetNum for C64 {
    fn constant(c: C64) -> Self {
        c
    }
    fn variable(v: C64, _: usize) -> Self {
        v
    }
    fn value(&self) -> C64 {
        *self
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn neg(self) -> Self {
        -self
    }
    fn chain(self, f: C64, _: C64, _: C64) -> Self {
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual1<const N: usize> {
    pub v: C64,
    pub d: [C64; N],
}

impl<const N: usize> JetNum for Dual1<N> {
    fn constant(c: C64) -> Self {
        Dual1 { v: c, d: [ZERO; N] }
    }
    fn variable(v: C64, slot: usize) -> Self {
        let mut d = [ZERO; N];
        d[slot] = ONE;
        Dual1 { v, d }
    }
    fn value(&self) -> C64 {
        self.v
    }
    fn add(self, o: Self) -> Self {
        Dual1 { v: self.v + o.v, d: std::array::from_fn(|i| self.d[i] + o.d[i]) }
    }
    fn sub(self, o: Self) -> Self {
        Dual1 { v: self.v - o.v, d: std::array::from_fn(|i| self.d[i] - o.d[i]) }
    }
    fn mul(self, o: Self) -> Self {
        Dual1 { v: self.v * o.v, d: std::array::from_fn(|i| self.d[i] * o.v + self.v * o.d[i]) }
    }
    fn neg(self) -> Self {
        Dual1 { v: -self.v, d: self.d.map(|x| -x) }
    }
    fn chain(self, f: C64, f1: C64, _: C64) -> Self {
        Dual1 { v: f, d: self.d.map(|x| f1 * x) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2<const N: usize> {
    pub v: C64,
    pub d: [C64; N],
    pub h: [[C64; N]; N],
}

impl<const N: usize> JetNum for Dual2<N> {
    fn constant(c: C64) -> Self {
        Dual2 { v: c, d: [ZERO; N], h: [[ZERO; N]; N] }
    }
    fn variable(v: C64, slot: usize) -> Self {
        let mut d = [ZERO; N];
        d[slot] = ONE;
        Dual2 { v, d, h: [[ZERO; N]; N] }
    }
    fn value(&self) -> C64 {
        self.v
    }
    fn add(self, o: Self) -> Self {
        Dual2 {
            v: self.v + o.v,
            d: std::array::from_fn(|i| self.d[i] + o.d[i]),
            h: std::array::from_fn(|i| std::array::from_fn(|j| self.h[i][j] + o.h[i][j])),
        }
    }
    fn sub(self, o: Self) -> Self {
        Dual2 {
            v: self.v - o.v,
            d: std::array::from_fn(|i| self.d[i] - o.d[i]),
            h: std::array::from_fn(|i| std::array::from_fn(|j| self.h[i][j] - o.h[i][j])),
        }
    }
    fn mul(self, o: Self) -> Self {
        Dual2 {
            v: self.v * o.v,
            d: std::array::from_fn(|i| self.d[i] * o.v + self.v * o.d[i]),
            h: std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    self.h[i][j] * o.v + self.v * o.h[i][j] + self.d[i] * o.d[j] + self.d[j] * o.d[i]
                })
            }),
        }
    }
    fn neg(self) -> Self {
        Dual2 { v: -self.v, d: self.d.map(|x| -x), h: self.h.map(|r| r.map(|x| -x)) }
    }
    fn chain(self, f: C64, f1: C64, f2: C64) -> Self {
        Dual2 {
            v: f,
            d: self.d.map(|x| f1 * x),
            h: std::array::from_fn(|i| std::array::from_fn(|j| f1 * self.h[i][j] + f2 * self.d[i] * self.d[j])),
        }
    }
}

/// Evaluates `e` at `p` in the number type `T`.
///
/// Conjugate variables take the value `conj(p[i])` and derivative slot `p.len() + i`.
pub fn eval_generic<T: JetNum>(e: &Expr, p: &[C64]) -> Result<T, EvalError> {
    Ok(match e {
        Expr::Const(c) => T::constant(*c),
        Expr::Var(Var::Holo(i)) => T::variable(p[*i], *i),
        Expr::Var(Var::Conj(i)) => T::variable(p[*i].conj(), p.len() + *i),
        Expr::Neg(a) => eval_generic::<T>(a, p)?.neg(),
        Expr::Add(a, b) => eval_generic::<T>(a, p)?.add(eval_generic(b, p)?),
        Expr::Sub(a, b) => eval_generic::<T>(a, p)?.sub(eval_generic(b, p)?),
        Expr::Mul(a, b) => eval_generic::<T>(a, p)?.mul(eval_generic(b, p)?),
        Expr::Div(a, b) => {
            let num = eval_generic::<T>(a, p)?;
            let den = eval_generic::<T>(b, p)?;
            let x = den.value();
            if x.norm() < POLE_THRESHOLD {
                return Err(EvalError::PoleSample);
            }
            let r = x.inv();
            num.mul(den.chain(r, -r * r, 2.0 * r * r * r))
        }
        Expr::Pow(a, k) => {
            let base = eval_generic::<T>(a, p)?;
            let x = base.value();
            match *k {
                0 => T::constant(ONE),
                1 => base,
                k if k < 0 && x.norm() < POLE_THRESHOLD => return Err(EvalError::PoleSample),
                k => {
                    let km2 = x.powi(k - 2);
                    let km1 = km2 * x;
                    let kf = k as f64;
                    base.chain(km1 * x, kf * km1, kf * (kf - 1.0) * km2)
                }
            }
        }
        Expr::Exp(a) => {
            let arg = eval_generic::<T>(a, p)?;
            let y = arg.value().exp();
            arg.chain(y, y, y)
        }
        Expr::Log(a) => {
            let arg = eval_generic::<T>(a, p)?;
            let x = arg.value();
            if x.norm() < POLE_THRESHOLD {
                return Err(EvalError::PoleSample);
            }
            let r = x.inv();
            arg.chain(x.ln(), r, -r * r)
        }
    })
}

/// Value-only evaluation; conjugate variables evaluate to `conj(p[i])`.
pub fn eval_value(e: &Expr, p: &[C64]) -> Result<C64, EvalError> {
    eval_generic::<C64>(e, p)
}

fn to_jet1<const N: usize>(d: Dual1<N>, n: usize) -> Jet {
    Jet { value: d.v, d1: d.d[..n].to_vec(), d2: None }
}

fn to_jet2<const N: usize>(d: Dual2<N>, n: usize) -> Jet {
    Jet { value: d.v, d1: d.d[..n].to_vec(), d2: Some((0..n).map(|i| d.h[i][..n].to_vec()).collect()) }
}

fn dispatch(e: &Expr, p: &[C64], slots: usize, order: JetOrder) -> Result<Jet, EvalError> {
    macro_rules! run {
        ($n:literal) => {
            match order {
                JetOrder::One => eval_generic::<Dual1<$n>>(e, p).map(|d| to_jet1(d, slots)),
                JetOrder::Two => eval_generic::<Dual2<$n>>(e, p).map(|d| to_jet2(d, slots)),
            }
        };
    }
    match slots {
        0 | 1 => run!(1),
        2 => run!(2),
        3 | 4 => run!(4),
        5..=8 => run!(8),
        s => Err(EvalError::TooManySlots(s)),
    }
}

/// Holomorphic jet: `d1[i] = ∂e/∂zᵢ`, `d2[i][j] = ∂²e/∂zᵢ∂zⱼ`.
pub fn eval_jet(e: &Expr, p: &[C64], order: JetOrder) -> Result<Jet, EvalError> {
    if !e.is_holomorphic() {
        return Err(EvalError::NotHolomorphic);
    }
    dispatch(e, p, p.len(), order)
}

/// Wirtinger jet of a field expression over `2m` slots (`z` partials, then `z̄` partials).
pub fn eval_field_jet(e: &Expr, p: &[C64], order: JetOrder) -> Result<Jet, EvalError> {
    dispatch(e, p, 2 * p.len(), order)
}
