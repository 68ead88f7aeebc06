//! Smoothed online convex optimization with switching costs.
//!
//! The building block is the discounted normal predictor with conservative
//! updating ([`predictor`]), whose confidence function lives in
//! [`confidence`]. A [`combiner::Combiner`] uses one such predictor to mix
//! two online learners so that the mixture pays little for switching, and
//! [`stack::SmoothedOgd`] chains combiners over online gradient descent
//! experts with geometrically spaced step sizes. [`env`](mod@env) and [`eval`]
//! provide seeded adversaries and interval-regret measurement, and
//! [`harness`] drives the whole pipeline from the command line.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combiner;
pub mod confidence;
pub mod csvio;
pub mod env;
pub mod error;
pub mod eval;
pub mod experts;
pub mod harness;
pub mod linalg;
pub mod predictor;
pub mod stack;

pub use error::{Error, Result};
