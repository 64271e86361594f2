//! Comonotone approximation of periodic functions by trigonometric polynomials.

// NaN-aware comparisons and index loops over parallel arrays are deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod counterexamples;
pub mod divided_diff;
pub mod experiments;
pub mod jet;
pub mod lp;
pub mod minimax;
pub mod models;
pub mod partition;
pub mod periodic_fn;
pub mod poly;
pub mod quadrature;
pub mod smoothness;
pub mod trig_poly;
