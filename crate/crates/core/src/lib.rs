//! Exact decision procedures for divisibility and decomposability of finite
//! discrete probability distributions, matrix root search for stochastic,
//! nonnegative, doubly stochastic and CPTP targets, and generators/verifiers
//! for the subset-sum and 1-in-3-SAT gadget constructions that witness the
//! hardness of the decomposability-side problems.
//!
//! All probability mass functions, polynomials and matrices are held in exact
//! rational arithmetic; floating point enters only through characteristic
//! function evaluation, numerical eigendecomposition and polynomial root
//! isolation, and every numeric answer is re-verified against an exact or
//! tolerance-bounded contract before it is reported.

pub mod config;
pub mod cptp;
pub mod decompose;
pub mod dist;
pub mod divisibility;
pub mod factor;
pub mod interval;
pub mod json;
pub mod matrix;
pub mod nptools;
pub mod poly;
pub mod rational;
pub mod roots;
pub mod satembed;
pub mod sweeps;

pub use rational::Rational;
