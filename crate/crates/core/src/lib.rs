//! Bogoliubov fluctuation dynamics around the time-dependent Hartree mean field,
//! for bosons on a periodic one-dimensional lattice with `M` modes.
//!
//! The crate provides a truncated Fock space in occupation coordinates, the exact
//! `N`-body dynamics on a fixed particle-number sector, the Hartree flow, the
//! quadratic fluctuation dynamics, the excitation map `U_N(t)` and the tooling to
//! compare them.

pub mod bogoliubov;
pub mod coherent;
pub mod eigen;
pub mod error;
pub mod excitation;
pub mod experiment;
pub mod fock;
pub mod hartree;
pub mod krylov;
pub mod linalg;
pub mod model;
pub mod nbody;
pub mod rotation;
pub mod sparse;

pub use error::{Error, Result};

/// Complex amplitude type used throughout.
pub type C64 = num_complex::Complex64;
