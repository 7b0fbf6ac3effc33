//! Truncated bosonic Fock space in occupation coordinates.

pub mod basis;
pub mod ops;
pub mod symmetric;
pub mod vector;

pub use basis::{fock_dimension, FockBasis, OccupationSpace, SectorBasis, MAX_STATES, ORDERING_VERSION};
pub use ops::{
    annihilate_op, assemble, check_band, create_op, cubic_op, dgamma, diagonal_op, number_op, pair_creation_op,
    pairing_op, quartic_op, two_body_op, Monomial,
};
pub use symmetric::{
    annihilate_between, create_between, from_tensor, hartree_block, product_state, sym_tensor, to_tensor,
};
pub use vector::{FockVector, SectorVector};
