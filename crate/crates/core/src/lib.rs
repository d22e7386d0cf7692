//! Finite-element simulator for macroscopic traffic on an urban porous medium.
//!
//! Streets are the fluid phase and building blocks the solid phase of a
//! porous city. Car density obeys a convection-diffusion-reaction equation
//! with a building-to-street source and a parking sink; traffic velocity
//! obeys a Darcy-Brinkman-Forchheimer momentum equation relaxed toward a
//! desired speed obtained from a linearized Eikonal potential. Space is
//! discretized with P1 triangles and time with a two-stage SSP scheme.
//!
//! Numerical modules are generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below name the double-precision instantiations used by the
//! command-line driver.

pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod eikonal;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod output;
pub mod run;
pub mod scalar;
pub mod scenario;
pub mod timeloop;

pub use error::{ConfigError, Error, MeshError, Result, ScenarioError, SolverError};
pub use scalar::Scalar;

pub type Mesh64 = mesh::Mesh<f64>;
pub type Mesh32 = mesh::Mesh<f32>;
pub type SparseMatrix64 = fem::SparseMatrix<f64>;
pub type Scenario64 = scenario::Scenario<f64>;
pub type PhysicalParams64 = dynamics::PhysicalParams<f64>;
pub type EikonalConfig64 = eikonal::EikonalConfig<f64>;
pub type SimulationState64 = timeloop::SimulationState<f64>;
pub type Simulation64<'a> = timeloop::Simulation<'a, f64>;
