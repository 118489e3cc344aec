//! Exact analysis of stake-limited red-and-black (restricted bold play).
//!
//! A gambler with fortune `f` in [0, 1] repeatedly stakes
//! `s(f) = min{ℓ, f, 1-f}`, winning the stake with probability `w < 1/2`
//! and losing it otherwise, until absorption at 0 or 1. This crate
//! provides:
//!
//! - exact arithmetic over fortunes `p + q·ℓ` with dyadic-rational
//!   coefficients, including exact sign tests against rational and
//!   quadratic-surd stake caps ([`dyadic`], [`ell`], [`linear_form`]);
//! - the bold-play chain evolved exactly ([`chain`]);
//! - certified two-sided bounds on the success probability `Q(f)` via
//!   interval value iteration over the memoized reachable set
//!   ([`qsolver`]);
//! - reachability analysis of the set of fortunes from which bold play
//!   can hit exactly `1-ℓ`, and the constructed fortune whose one-step
//!   neighborhood straddles that set ([`reachability`]);
//! - machine-checkable certificates that a one-step deviation strictly
//!   beats bold play, with exact-rational margins ([`improvement`]);
//! - the two-gambler coupling and exhaustive verification of its
//!   supermartingale estimates ([`coupling`]).

pub mod chain;
pub mod coupling;
pub mod dyadic;
pub mod ell;
pub mod fenv;
pub mod improvement;
pub mod interval;
pub mod linear_form;
pub mod qsolver;
pub mod reachability;

pub use chain::{Absorption, ChainError, Fortune, GameParams, Outcome};
pub use dyadic::DyadicRational;
pub use ell::{EllSpec, EllSpecError};
pub use interval::{ExactInterval, ProbInterval};
pub use linear_form::{LinearForm, StateKey};
pub use qsolver::{Budget, QSolverError, QStats};
