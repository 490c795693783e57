// `!(x < y)` rejects NaN along with out-of-range values; step loops index several aligned series.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calculus;
pub mod formulas;
pub mod harness;
pub mod localtime;
pub mod paths;
pub mod seed;
pub mod surfaces;
