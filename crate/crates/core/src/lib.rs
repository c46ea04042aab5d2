//! Finiteness of perpetual integrals `∫_0^∞ f(x + ξ_s) ds` for Lévy processes
//! drifting to +∞.
//!
//! The crate simulates the processes ([`levy`]), estimates their potential
//! measures ([`potential`]), evaluates path integrals and their laws
//! ([`perpetual`]), runs the analytic integral tests ([`criteria`]) and
//! rebuilds the two classical counterexamples to the Lebesgue-measure test
//! ([`counterexample`]).

// `!(x > 0.0)` style guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;
pub mod counterexample;
pub mod ecdf;
pub mod error;
pub mod function;
pub mod json;
pub mod levy;
pub mod par;
pub mod perpetual;
pub mod potential;
pub mod quadrature;
pub mod region;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use function::{FunctionSpec, Term, TestFunction};
pub use levy::{build_model, mean_of, LevyModel, ModelSpec, PassageRecord, PathSample};
pub use potential::PotentialMeasure;
pub use region::RegionSpec;
pub use rng::SeedTree;
