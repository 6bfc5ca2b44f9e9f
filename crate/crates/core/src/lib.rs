//! Monte Carlo estimators for Nevanlinna-type functionals of holomorphic maps
//! from chart-modeled Kähler manifolds into projective space, driven by
//! Brownian motion generated by ½Δ.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod functionals;
pub mod geometry;
pub mod mapdsl;
pub mod oracle;
pub mod stochastic;
pub mod target;
