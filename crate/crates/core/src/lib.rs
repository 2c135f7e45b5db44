//! Finite-volume integrated density of states for one-particle,
//! noninteracting many-particle and interacting many-particle Schrödinger
//! operators.
//!
//! The pipeline discretizes `-Δ + V` on boxes ([`lattice`]), counts
//! eigenvalues below an energy by Sturm sequences or matrix inertia
//! ([`spectral`]), and assembles counting functions, their convolutions and
//! interacting/noninteracting comparisons ([`ids`]). Random backgrounds are
//! averaged in [`ensemble`].

// negated float comparisons in this crate are deliberate: NaN must fail them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod exec;
pub mod ids;
pub mod lattice;
pub mod sparse;
pub mod spectral;

pub use error::{IdsError, Result};
pub use exec::Execution;
