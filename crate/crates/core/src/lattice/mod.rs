//! Lattice geometry and assembly of single- and multi-particle lattice
//! Schrödinger operators with Dirichlet boundary conditions.

mod geometry;
mod hamiltonian;
mod multiparticle;

pub use geometry::{enumerate_sites, neighbors_in_box, LatticeBox, Site};
pub use hamiltonian::{
    assemble_lso, assemble_lso_values, shift_potential, Hamiltonian, Provenance,
};
pub use multiparticle::{
    assemble_multiparticle, occupation_coefficients, occupation_map, projection_set,
    symmetric_basis, symmetrize_subspace, Configuration, InteractionPotential,
    MultiParticleBox, Statistics,
};
