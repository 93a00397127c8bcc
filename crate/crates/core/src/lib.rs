//! Pullback attractors and random equilibria of the non-autonomous
//! stochastic FitzHugh-Nagumo system
//!
//! ```text
//! du~ + (lambda u~ - Delta u~ + alpha v~) dt = (f(x, u~) + g(t, x)) dt + eps u~ o dW
//! dv~ + (sigma v~ - beta u~) dt              = h(t, x) dt + eps v~ o dW
//! ```
//!
//! The multiplicative noise is removed pathwise with `z = exp(-eps W)`:
//! `(u, v) = z (u~, v~)` solves a random PDE that is integrated with an
//! IMEX scheme. On top of the solver sit the random cocycle and a set of
//! pullback experiments (absorption, `L^p` bounds, tail truncation, `L^p`
//! Cauchy property, continuity in `eps`, random equilibrium).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod attractor;
pub mod cocycle;
pub mod config;
pub mod energy;
pub mod error;
pub mod grid;
pub mod paths;
pub mod problem;
pub mod run;
pub mod solver;

pub use error::{Error, Result};
