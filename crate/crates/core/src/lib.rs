//! # volembed
//!
//! Random Gaussian linear embeddings of finite Euclidean point sets into
//! `R^d`, with tools to measure how much they distort the volumes of small
//! subsets and to certify, through exact chi-square tail probabilities, that
//! a good embedding exists.
//!
//! ## Layout
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`linalg`] | point sets, linear maps, log-space simplex volumes |
//! | [`randgen`] | seeded Gaussian matrices and chi-square samplers |
//! | [`gamma`] | log-gamma, incomplete gamma, chi-square CDF, analytic bounds |
//! | [`bounds`] | tail bounds, distortion formulas, union-bound certificates |
//! | [`distortion`] | measured volume/distance distortion and the embedding loop |
//! | [`stats`] | KS statistics and Monte Carlo checks of the distributional laws |
//! | [`cli`] | the `volembed` command-line front end |
//!
//! All logarithms are natural logarithms.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod distortion;
mod error;
pub mod gamma;
pub mod linalg;
pub mod randgen;
pub mod stats;
pub mod subsets;

pub use error::{Error, Result};
