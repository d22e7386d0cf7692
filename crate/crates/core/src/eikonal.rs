//! Routing potential and desired speed.
//!
//! The Eikonal equation `|grad phi| = 1/f(rho)` is regularized with a small
//! diffusion `eta` and linearized by `psi = exp(-phi/eta)`, which gives the
//! screened Poisson problem `eta^2 lap psi - psi/f^2 = G` with homogeneous
//! Neumann conditions. Its weak form is the SPD system
//! `(eta^2 K + M_{1/f^2}) psi = -b(G)`.

use std::sync::Arc;

use crate::error::SolverError;
use crate::fem::{
    assemble_load, fill_stiffness_elementwise, fill_weighted_mass, solve_spd_with_guess, Pattern, ScalarField,
    SparseMatrix, VectorField, DEFAULT_TOL,
};
use crate::mesh::Mesh;
use crate::scalar::{norm2, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct EikonalConfig<T> {
    /// Diffusive regularization length (km).
    pub eta: T,
    /// Lower clamp applied to psi before taking the logarithm.
    pub psi_floor: T,
    /// Transport cost never drops below this fraction of `U_max`.
    pub f_floor_fraction: T,
    /// Recovered gradients shorter than this give a zero desired speed.
    pub grad_tol: T,
    pub solver_tol: f64,
}

impl<T: Scalar> Default for EikonalConfig<T> {
    fn default() -> Self {
        EikonalConfig {
            eta: T::one(),
            psi_floor: T::of(1e-12),
            f_floor_fraction: T::of(1e-3),
            grad_tol: T::of(1e-10),
            solver_tol: DEFAULT_TOL,
        }
    }
}

impl<T: Scalar> EikonalConfig<T> {
    pub fn is_valid(&self) -> bool {
        let unit = |v: T| v > T::zero() && v < T::one();
        self.eta > T::zero() && unit(self.psi_floor) && unit(self.f_floor_fraction) && self.grad_tol >= T::zero()
    }
}

/// `f(rho) = max(U_max (1 - rho/rho_max), floor_fraction U_max)`.
pub fn transport_cost<T: Scalar>(rho: &[T], u_max: T, rho_max: T, floor_fraction: T) -> ScalarField<T> {
    rho.iter()
        .map(|&r| transport_cost_at(r, u_max, rho_max, floor_fraction))
        .collect()
}

#[inline]
pub fn transport_cost_at<T: Scalar>(rho: T, u_max: T, rho_max: T, floor_fraction: T) -> T {
    (u_max * (T::one() - rho / rho_max)).max(u_max * floor_fraction)
}

#[derive(Debug, Clone)]
pub struct PotentialSolution<T> {
    pub psi: ScalarField<T>,
    pub phi: ScalarField<T>,
    pub grad_phi: VectorField<T>,
    /// Nodes where psi was raised to the floor.
    pub clamped: usize,
}

/// Assembled screened-Poisson operator with a cached stiffness matrix and a
/// warm-start vector.
#[derive(Debug, Clone)]
pub struct EikonalSolver<T> {
    stiffness: SparseMatrix<T>,
    system: SparseMatrix<T>,
    reaction: SparseMatrix<T>,
    psi: Vec<T>,
    pub config: EikonalConfig<T>,
    pub last_iterations: usize,
}

impl<T: Scalar> EikonalSolver<T> {
    pub fn new(mesh: &Mesh<T>, pattern: &Arc<Pattern>, config: EikonalConfig<T>) -> Self {
        let mut stiffness = SparseMatrix::zeros(pattern, true);
        let eta2 = config.eta * config.eta;
        fill_stiffness_elementwise(mesh, &mut stiffness, &vec![eta2; mesh.num_triangles()]);
        EikonalSolver {
            system: stiffness.clone(),
            reaction: SparseMatrix::zeros(pattern, true),
            stiffness,
            psi: vec![T::zero(); mesh.num_nodes()],
            config,
            last_iterations: 0,
        }
    }

    /// Solves `(eta^2 K + M_c) psi = -b(G)` for a nodal reaction coefficient `c`.
    pub fn solve_with_reaction(&mut self, mesh: &Mesh<T>, reaction: &[T], forcing: &[T]) -> Result<&[T], SolverError> {
        fill_weighted_mass(mesh, &mut self.reaction, Some(reaction), None);
        self.system.values_mut().copy_from_slice(self.stiffness.values());
        self.system.add_scaled(T::one(), &self.reaction);
        let rhs: Vec<T> = assemble_load(mesh, forcing).into_iter().map(|v| -v).collect();
        let stats = solve_spd_with_guess(&self.system, &rhs, &mut self.psi, self.config.solver_tol)?;
        self.last_iterations = stats.iterations;
        let min = self.psi.iter().copied().fold(T::infinity(), T::min);
        if min < T::zero() {
            log::warn!("screened Poisson solution has negative values (min psi = {:e})", min.as_f64());
        }
        Ok(&self.psi)
    }

    /// Solves for psi with reaction `1/f(rho)^2`.
    pub fn solve(
        &mut self,
        mesh: &Mesh<T>,
        rho: &[T],
        forcing: &[T],
        u_max: T,
        rho_max: T,
    ) -> Result<&[T], SolverError> {
        let f = transport_cost(rho, u_max, rho_max, self.config.f_floor_fraction);
        let reaction: Vec<T> = f.iter().map(|v| T::one() / (*v * *v)).collect();
        self.solve_with_reaction(mesh, &reaction, forcing)
    }

    /// Solves and post-processes into potential and gradient.
    pub fn potential(
        &mut self,
        mesh: &Mesh<T>,
        rho: &[T],
        forcing: &[T],
        u_max: T,
        rho_max: T,
    ) -> Result<PotentialSolution<T>, SolverError> {
        self.solve(mesh, rho, forcing, u_max, rho_max)?;
        Ok(potential_and_gradient(mesh, &self.psi, &self.config))
    }
}

/// One-shot screened Poisson solve from a density field.
pub fn solve_screened_poisson<T: Scalar>(
    mesh: &Mesh<T>,
    rho: &[T],
    forcing: &[T],
    config: &EikonalConfig<T>,
    u_max: T,
    rho_max: T,
) -> Result<ScalarField<T>, SolverError> {
    let pattern = Pattern::from_mesh(mesh);
    let mut solver = EikonalSolver::new(mesh, &pattern, config.clone());
    Ok(solver.solve(mesh, rho, forcing, u_max, rho_max)?.to_vec())
}

/// `phi = -eta ln(max(psi, psi_floor))` and its recovered nodal gradient.
pub fn potential_and_gradient<T: Scalar>(mesh: &Mesh<T>, psi: &[T], config: &EikonalConfig<T>) -> PotentialSolution<T> {
    let mut clamped = 0;
    let psi: Vec<T> = psi
        .iter()
        .map(|&p| {
            if p < config.psi_floor {
                clamped += 1;
                config.psi_floor
            } else {
                p
            }
        })
        .collect();
    let phi: Vec<T> = psi.iter().map(|p| -config.eta * p.ln()).collect();
    let grad_phi = recover_gradient(mesh, &phi);
    PotentialSolution {
        psi,
        phi,
        grad_phi,
        clamped,
    }
}

/// Area-weighted average of the element gradients around each node.
pub fn recover_gradient<T: Scalar>(mesh: &Mesh<T>, field: &[T]) -> VectorField<T> {
    let tris = mesh.triangles();
    (0..mesh.num_nodes())
        .map(|i| {
            let mut acc = [T::zero(); 2];
            let mut area = T::zero();
            for &(k, _) in mesh.star(i) {
                let t = &tris[k];
                let mut g = [T::zero(); 2];
                for a in 0..3 {
                    g[0] += field[t.nodes[a]] * t.gradients[a][0];
                    g[1] += field[t.nodes[a]] * t.gradients[a][1];
                }
                acc[0] += t.area * g[0];
                acc[1] += t.area * g[1];
                area += t.area;
            }
            [acc[0] / area, acc[1] / area]
        })
        .collect()
}

/// `v = -f(rho) grad phi / |grad phi|`, zero where the gradient vanishes.
pub fn desired_speed<T: Scalar>(
    rho: &[T],
    potential: &PotentialSolution<T>,
    u_max: T,
    rho_max: T,
    config: &EikonalConfig<T>,
) -> VectorField<T> {
    rho.iter()
        .zip(&potential.grad_phi)
        .map(|(&r, &g)| {
            let len = norm2(g);
            if len >= config.grad_tol && len > T::zero() {
                let f = transport_cost_at(r, u_max, rho_max, config.f_floor_fraction);
                [-f * g[0] / len, -f * g[1] / len]
            } else {
                [T::zero(), T::zero()]
            }
        })
        .collect()
}
