#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Exact ground states of a few one-dimensional bosons with a mollified
//! contact interaction, in harmonic and double-well traps.
//!
//! The pipeline is: a uniform grid and the one-particle eigenbasis of the trap
//! ([`grid1p`]), two-body matrix elements of the possibly inhomogeneous
//! interaction ([`interaction`]), the symmetric Fock space and the
//! matrix-free Hamiltonian ([`fock`]), a Lanczos ground-state solver with an
//! imaginary-time cross-check ([`solver`]), and reduced densities and natural
//! occupations ([`observables`]). [`config`] and [`run`] drive the `fewboson`
//! command-line tool.

pub mod config;
mod csv;
pub mod error;
pub mod fock;
pub mod grid1p;
pub mod interaction;
pub mod model;
pub mod observables;
pub mod run;
pub mod solver;
pub mod units;

pub use error::{Error, Result};
