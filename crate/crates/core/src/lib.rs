#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN
pub mod approx;
pub mod cli;
pub mod diagnostics;
pub mod dists;
pub mod error;
pub mod fuzznum;
pub mod gibbs;
pub mod model;
pub mod optim;
pub mod quad;
