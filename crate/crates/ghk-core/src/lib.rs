//! Numerical laboratory for Gowers-Host-Kra norms on discretized R^n.
//!
//! The crate computes U^k norms and 2^k-linear Gowers inner products of
//! complex functions sampled on uniform grids, evaluates the sharp constants
//! of the norm inequality and their Young-constant relations, synthesizes and
//! fits the Gaussian × polynomial-phase extremizer family, performs symmetric
//! decreasing rearrangement and distribution diagnostics, solves the
//! admissibility linear programs of the volume-profile geometry, and recovers
//! polynomial phases of degree <= k-1 from approximate difference structure.
//!
//! The `ghk` binary exposes the experiment harness; see the crate README for
//! the command set and file formats.

pub mod cli;
pub mod error;
pub mod extremizer;
pub mod geometry;
pub mod gowers;
pub mod grid;
pub mod io;
mod linalg;
pub mod optim;
pub mod phase;
pub mod rearrange;
pub mod rng;

pub use error::{GhkError, Result};
pub use grid::{GridFunction, GridSpec};
