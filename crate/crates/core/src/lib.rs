// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exact dynamics of a qubit coupled to a bosonic bath in the rotating-wave
//! approximation.
//!
//! The crate is organised bottom-up:
//!
//! - [`bath`]: spectral densities, discretisation, occupations, memory kernel.
//! - [`exact`]: sector-blocked Hamiltonian, propagators and the thermally
//!   averaged map coefficients `α, ξ, γ, ζ, η`.
//! - [`dynmap`]: the map acting on qubit states, Kraus operators, populations.
//! - [`gkls`]: time-local generator extracted from the map and its integrator.
//! - [`thermo`]: equilibration diagnostics.
//! - [`friedrichs`]: vacuum-reservoir survival amplitude and resolvent analysis.
//! - [`scenario`], [`pipeline`], [`output`]: the declarative front end used by
//!   the `spinboson` binary and the C ABI.

// `!(x <= tol)` is used on purpose: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod dynmap;
pub mod error;
pub mod exact;
pub mod friedrichs;
pub mod gkls;
pub mod grid;
pub mod output;
pub mod pipeline;
pub mod quadrature;
pub mod scenario;
pub mod thermo;

pub use error::{Error, Result};
