//! Hamiltonian ensemble dynamics over a density `p` and action `S`.
//!
//! A single field theory, `H = ∫ p (h + V)` with
//! `h = Σ g_ii [A (∂_i S)² + B (∂_i ln p)²]`, covers classical ensemble
//! Hamilton-Jacobi dynamics (`B = 0`) and the Schrödinger equation
//! (`A = 1/2`, `B = ħ²/8`). The crate integrates Hamilton's equations for
//! (p, S), cross-checks them against an independent split-step Schrödinger
//! solver, and turns the structural properties of `h` into numerical checks.

pub mod axioms;
pub mod cli;
pub mod closure;
pub mod config;
pub mod derivative;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod fourier;
pub mod grid;
pub mod hamiltonian;
pub mod io;
pub mod scenarios;
pub mod state;

pub use error::{Error, Result};
