//! Expression language for chart functions.
//!
//! Grammar: `+ - * /`, unary minus, integer powers `^k` with |k| ≤ 64, `exp(…)`,
//! complex literals (`2.5`, `3i`, `i`) and variables `z1..zm` (`z` = `z1`).
//! Field expressions additionally accept `zb1..zbm` and `log(…)`.

mod expr;
mod jet;
mod parse;

pub use expr::{Expr, Var, MAX_EXPONENT};
pub use jet::{
    eval_field_jet, eval_generic, eval_jet, eval_value, Dual1, Dual2, EvalError, Jet, JetNum, JetOrder, MAX_SLOTS,
};
pub use parse::{parse, parse_field, ParseError};

/// Values of smaller modulus are treated as poles when dividing.
pub const POLE_THRESHOLD: f64 = 1e-300;
