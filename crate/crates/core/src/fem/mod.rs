//! Sparse operators for nodal P1 fields and the SPD solver.

mod assembly;
mod cg;
mod sparse;

pub use assembly::{
    assemble_convection, assemble_divergence_load, assemble_load, assemble_load_into, assemble_outer_boundary_mass,
    assemble_weighted_mass, assemble_weighted_stiffness, fill_advection, fill_convection, fill_outer_boundary_mass,
    fill_stiffness_elementwise, fill_weighted_mass,
};
pub use cg::{solve_spd, solve_spd_with_guess, CgStats, DEFAULT_TOL};
pub use sparse::{Pattern, SparseMatrix};

/// One value per mesh node.
pub type ScalarField<T> = Vec<T>;

/// Two components per mesh node.
pub type VectorField<T> = Vec<[T; 2]>;
