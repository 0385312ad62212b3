//! One-shot (asymmetric) hypothesis testing for detection problems.
//!
//! The crate computes minimum type-II errors under a type-I budget for
//! classical distributions ([`hyptest::solve_classical`]), quantum states
//! ([`hyptest::solve_quantum`]) and finite sets of hypotheses
//! ([`hyptest::solve_composite`], a primal-dual interior-point SDP with dual
//! certificates). Around the solvers sit the channel algebra used to build
//! hypotheses, relative entropies and Stein-rate curves, sender-side design
//! optimizers, and end-to-end experiment tables.

pub mod channels;
pub mod design;
pub mod distributions;
pub mod divergences;
pub mod error;
pub mod hermitian;
pub mod hyptest;
pub mod limits;
pub mod numfmt;
pub mod workflows;

pub use error::{Error, Result};
