use std::fmt;

use num_complex::Complex64 as C64;

/// Largest accepted magnitude of an integer exponent.
pub const MAX_EXPONENT: i32 = 64;

/// Chart variable: `Holo(i)` is z_{i+1}, `Conj(i)` is its conjugate (real-field mode only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    Holo(usize),
    Conj(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(C64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
    /// Principal logarithm; only produced by the real-field parser.
    Log(Box<Expr>),
}

fn finite(c: C64) -> bool {
    c.re.is_finite() && c.im.is_finite()
}

fn fold(c: C64, fallback: impl FnOnce() -> Expr) -> Expr {
    if finite(c) {
        Expr::Const(c)
    } else {
        fallback()
    }
}

impl Expr {
    pub fn constant(c: C64) -> Expr {
        Expr::Const(c)
    }

    pub fn real(x: f64) -> Expr {
        Expr::Const(C64::new(x, 0.0))
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(Var::Holo(i))
    }

    pub fn conj_var(i: usize) -> Expr {
        Expr::Var(Var::Conj(i))
    }

    pub fn as_const(&self) -> Option<C64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            a => Expr::Neg(Box::new(a)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => fold(x + y, || Expr::Add(Box::new(a), Box::new(b))),
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => fold(x - y, || Expr::Sub(Box::new(a), Box::new(b))),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => fold(x * y, || Expr::Mul(Box::new(a), Box::new(b))),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y.norm() >= super::POLE_THRESHOLD => {
                fold(x / y, || Expr::Div(Box::new(a), Box::new(b)))
            }
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, k: i32) -> Expr {
        match a.as_const() {
            Some(x) if k >= 0 || x.norm() >= super::POLE_THRESHOLD => fold(x.powi(k), || Expr::Pow(Box::new(a), k)),
            _ => Expr::Pow(Box::new(a), k),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        match a.as_const() {
            Some(x) => fold(x.exp(), || Expr::Exp(Box::new(a))),
            None => Expr::Exp(Box::new(a)),
        }
    }

    pub fn log(a: Expr) -> Expr {
        match a.as_const() {
            Some(x) if x.norm() >= super::POLE_THRESHOLD => fold(x.ln(), || Expr::Log(Box::new(a))),
            _ => Expr::Log(Box::new(a)),
        }
    }

    /// True when no conjugate variable and no logarithm occurs.
    pub fn is_holomorphic(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |e| {
            if matches!(e, Expr::Var(Var::Conj(_)) | Expr::Log(_)) {
                ok = false;
            }
        });
        ok
    }

    pub fn is_constant(&self) -> bool {
        let mut c = true;
        self.visit(&mut |e| {
            if matches!(e, Expr::Var(_)) {
                c = false;
            }
        });
        c
    }

    /// Number of chart variables referenced: one more than the largest index seen.
    pub fn arity(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |e| {
            if let Expr::Var(Var::Holo(i) | Var::Conj(i)) = e {
                n = n.max(i + 1);
            }
        });
        n
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) | Expr::Log(a) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Replaces each holomorphic variable z_{i+1} by `subs[i]`.
    ///
    /// Panics if a variable index has no substitute or a conjugate variable is present.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(Var::Holo(i)) => subs[*i].clone(),
            Expr::Var(Var::Conj(_)) => panic!("substitute: conjugate variable in holomorphic substitution"),
            Expr::Neg(a) => Expr::neg(a.substitute(subs)),
            Expr::Add(a, b) => Expr::add(a.substitute(subs), b.substitute(subs)),
            Expr::Sub(a, b) => Expr::sub(a.substitute(subs), b.substitute(subs)),
            Expr::Mul(a, b) => Expr::mul(a.substitute(subs), b.substitute(subs)),
            Expr::Div(a, b) => Expr::div(a.substitute(subs), b.substitute(subs)),
            Expr::Pow(a, k) => Expr::pow(a.substitute(subs), *k),
            Expr::Exp(a) => Expr::exp(a.substitute(subs)),
            Expr::Log(a) => Expr::log(a.substitute(subs)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(_) | Expr::Var(_) | Expr::Exp(_) | Expr::Log(_) => 5,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.precedence() < min;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Expr::Const(c) => write_const(f, *c)?,
            Expr::Var(Var::Holo(i)) => write!(f, "z{}", i + 1)?,
            Expr::Var(Var::Conj(i)) => write!(f, "zb{}", i + 1)?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write_prec(f, 3)?;
            }
            Expr::Add(a, b) => binary(f, a, " + ", b, 1, 2)?,
            Expr::Sub(a, b) => binary(f, a, " - ", b, 1, 2)?,
            Expr::Mul(a, b) => binary(f, a, "*", b, 2, 3)?,
            Expr::Div(a, b) => binary(f, a, "/", b, 2, 3)?,
            Expr::Pow(a, k) => {
                a.write_prec(f, 5)?;
                if *k < 0 {
                    write!(f, "^({k})")?;
                } else {
                    write!(f, "^{k}")?;
                }
            }
            Expr::Exp(a) => {
                f.write_str("exp(")?;
                a.write_prec(f, 0)?;
                f.write_str(")")?;
            }
            Expr::Log(a) => {
                f.write_str("log(")?;
                a.write_prec(f, 0)?;
                f.write_str(")")?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

fn binary(f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, la: u8, rb: u8) -> fmt::Result {
    a.write_prec(f, la)?;
    f.write_str(op)?;
    b.write_prec(f, rb)
}

fn write_const(f: &mut fmt::Formatter<'_>, c: C64) -> fmt::Result {
    let re = if c.re == 0.0 { 0.0 } else { c.re };
    if c.im == 0.0 {
        if re.is_sign_negative() {
            write!(f, "({re:?})")
        } else {
            write!(f, "{re:?}")
        }
    } else if re == 0.0 && c.im > 0.0 {
        write!(f, "{:?}i", c.im)
    } else if c.im < 0.0 {
        write!(f, "({re:?}-{:?}i)", -c.im)
    } else {
        write!(f, "({re:?}+{:?}i)", c.im)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}
