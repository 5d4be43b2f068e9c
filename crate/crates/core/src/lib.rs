//! Bosonic Josephson junction in a 1D-reduced double well.

// NaN must fail these checks, hence `!(x > 0.0)`; index loops mirror the maths.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cache;
pub mod config;
pub mod error;
pub mod fit;
pub mod gpe;
pub mod grid;
pub mod linalg;
pub mod modes;
pub mod oracle;
pub mod output;
pub mod potential;
pub mod scenarios;
pub mod spectral;
pub mod stationary;
pub mod trap;
pub mod twomode;
pub mod units;
