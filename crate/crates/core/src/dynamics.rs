//! Semi-discrete right-hand sides of the density and momentum equations.
//!
//! Mass matrices that are inverted or act as reaction terms are row-sum
//! lumped. Transport operators (convection, diffusion, viscosity, outflow)
//! are consistent.

use std::sync::Arc;

use crate::error::{ConfigError, Error};
use crate::fem::{
    assemble_divergence_load, assemble_load_into, fill_advection, fill_convection, fill_outer_boundary_mass,
    fill_stiffness_elementwise, Pattern, SparseMatrix, VectorField,
};
use crate::mesh::Mesh;
use crate::scalar::{dot2, norm2, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams<T> {
    /// Pressure-correction coefficient c^2 (km^3/(veh h)).
    pub c2: T,
    /// Urban permeability K (km^2).
    pub permeability: T,
    /// Forchheimer coefficient F.
    pub forchheimer: T,
    /// Density diffusion nu (km^2/h).
    pub nu: T,
    /// Viscosity mu (km^2/h).
    pub mu: T,
    /// Relaxation time tau (h).
    pub tau: T,
    /// Element-mean densities are raised to this value before dividing.
    pub rho_floor: T,
}

impl<T: Scalar> Default for PhysicalParams<T> {
    fn default() -> Self {
        PhysicalParams {
            c2: T::of(1e-4),
            permeability: T::of(1e-4),
            forchheimer: T::of(0.1),
            nu: T::of(1.25),
            mu: T::of(3.6e-8),
            tau: T::of(0.009),
            rho_floor: T::one(),
        }
    }
}

impl<T: Scalar> PhysicalParams<T> {
    pub fn named(&self) -> [(&'static str, T); 7] {
        [
            ("physics.c2", self.c2),
            ("physics.permeability", self.permeability),
            ("physics.forchheimer", self.forchheimer),
            ("physics.nu", self.nu),
            ("physics.mu", self.mu),
            ("physics.tau", self.tau),
            ("physics.rho_floor", self.rho_floor),
        ]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (key, v) in self.named() {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(ConfigError::NonPositiveParameter {
                    key: key.to_string(),
                    value: v.as_f64(),
                });
            }
        }
        Ok(())
    }
}

/// Integrated source and sink rates of the density equation (veh/h).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BudgetRates<T> {
    pub injection: T,
    pub parking: T,
    pub outflux: T,
}

impl<T: Scalar> BudgetRates<T> {
    pub fn net(&self) -> T {
        self.injection - self.parking - self.outflux
    }

    pub fn mean(&self, other: &Self) -> Self {
        let h = T::of(0.5);
        BudgetRates {
            injection: h * (self.injection + other.injection),
            parking: h * (self.parking + other.parking),
            outflux: h * (self.outflux + other.outflux),
        }
    }
}

/// Cached operators for repeated right-hand-side evaluation on one mesh
/// with fixed porosity and absorption fields.
#[derive(Debug, Clone)]
pub struct RhsWorkspace<T> {
    pattern: Arc<Pattern>,
    params: PhysicalParams<T>,
    eps: Vec<T>,
    inv_eps_elem: Vec<T>,
    /// Lumped `int eps phi_j`.
    mass_eps: Vec<T>,
    /// Lumped `int phi_j`.
    mass: Vec<T>,
    /// Lumped `int eps kappa phi_j`.
    parking: Vec<T>,
    diffusion: SparseMatrix<T>,
    convection: SparseMatrix<T>,
    outflow: SparseMatrix<T>,
    advection: SparseMatrix<T>,
    viscous: SparseMatrix<T>,
    elem: Vec<T>,
    tmp: Vec<T>,
    tmp2: Vec<T>,
}

/// Row sums of the mass matrix weighted by a linear nodal field and an
/// element factor.
fn lumped_mass<T: Scalar>(mesh: &Mesh<T>, nodal: Option<&[T]>, element: Option<&[T]>) -> Vec<T> {
    let (sixth, twelfth) = (T::of(1.0 / 6.0), T::of(1.0 / 12.0));
    let third = T::one() / T::of(3.0);
    let tris = mesh.triangles();
    (0..mesh.num_nodes())
        .map(|j| {
            let mut s = T::zero();
            for &(k, a) in mesh.star(j) {
                let t = &tris[k];
                let w = match nodal {
                    Some(c) => (0..3)
                        .map(|v| c[t.nodes[v]] * if v == a { sixth } else { twelfth })
                        .sum::<T>(),
                    None => third,
                };
                s += element.map_or(T::one(), |e| e[k]) * t.area * w;
            }
            s
        })
        .collect()
}

fn check_finite<T: Scalar>(values: impl IntoIterator<Item = T>) -> Result<(), Error> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteInput)
    }
}

impl<T: Scalar> RhsWorkspace<T> {
    pub fn new(mesh: &Mesh<T>, eps: &[T], kappa: &[T], params: PhysicalParams<T>) -> Self {
        let pattern = Pattern::from_mesh(mesh);
        Self::with_pattern(mesh, &pattern, eps, kappa, params)
    }

    pub fn with_pattern(
        mesh: &Mesh<T>,
        pattern: &Arc<Pattern>,
        eps: &[T],
        kappa: &[T],
        params: PhysicalParams<T>,
    ) -> Self {
        let n = mesh.num_nodes();
        let third = T::one() / T::of(3.0);
        let inv_eps_elem: Vec<T> = mesh
            .triangles()
            .iter()
            .map(|t| t.nodes.iter().map(|&i| T::one() / eps[i]).sum::<T>() * third)
            .collect();
        let eps_kappa: Vec<T> = eps.iter().zip(kappa).map(|(e, k)| *e * *k).collect();
        let eps_mean: Vec<T> = mesh
            .triangles()
            .iter()
            .map(|t| t.nodes.iter().map(|&i| eps[i]).sum::<T>() * third * params.nu)
            .collect();
        let mut diffusion = SparseMatrix::zeros(pattern, true);
        fill_stiffness_elementwise(mesh, &mut diffusion, &eps_mean);
        RhsWorkspace {
            pattern: Arc::clone(pattern),
            eps: eps.to_vec(),
            mass_eps: lumped_mass(mesh, Some(eps), None),
            mass: lumped_mass(mesh, None, None),
            parking: lumped_mass(mesh, Some(&eps_kappa), None),
            diffusion,
            convection: SparseMatrix::zeros(pattern, false),
            outflow: SparseMatrix::zeros(pattern, true),
            advection: SparseMatrix::zeros(pattern, false),
            viscous: SparseMatrix::zeros(pattern, true),
            inv_eps_elem,
            params,
            elem: vec![T::zero(); mesh.num_triangles()],
            tmp: vec![T::zero(); n],
            tmp2: vec![T::zero(); n],
        }
    }

    pub fn params(&self) -> &PhysicalParams<T> {
        &self.params
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn porosity(&self) -> &[T] {
        &self.eps
    }

    /// Diagonal of the lumped porosity-weighted mass matrix.
    pub fn lumped_porosity_mass(&self) -> &[T] {
        &self.mass_eps
    }

    /// Diagonal of the lumped absorption matrix.
    pub fn lumped_parking(&self) -> &[T] {
        &self.parking
    }

    /// `d rho/dt = M_eps^-1 [(C(u) - B(u) - R - K_kappa) rho + b(source)]`,
    /// where `source` is the nodal field `(1 - eps) q`.
    pub fn density_rhs(
        &mut self,
        mesh: &Mesh<T>,
        rho: &[T],
        u: &[[T; 2]],
        source: &[T],
        out: &mut [T],
    ) -> Result<BudgetRates<T>, Error> {
        check_finite(rho.iter().chain(source).copied().chain(u.iter().flatten().copied()))?;
        fill_convection(mesh, &mut self.convection, u);
        fill_outer_boundary_mass(mesh, &mut self.outflow, u);

        assemble_load_into(mesh, source, out);
        let injection = out.iter().copied().sum::<T>();

        self.convection.matvec_into(rho, &mut self.tmp);
        for (o, c) in out.iter_mut().zip(&self.tmp) {
            *o += *c;
        }
        self.diffusion.matvec_into(rho, &mut self.tmp);
        for (o, c) in out.iter_mut().zip(&self.tmp) {
            *o -= *c;
        }
        self.outflow.matvec_into(rho, &mut self.tmp);
        let outflux = self.tmp.iter().copied().sum::<T>();
        let mut parking = T::zero();
        for j in 0..out.len() {
            let park = self.parking[j] * rho[j];
            parking += park;
            out[j] = (out[j] - self.tmp[j] - park) / self.mass_eps[j];
        }
        Ok(BudgetRates {
            injection,
            parking,
            outflux,
        })
    }

    /// Momentum right-hand side for both velocity components.
    pub fn momentum_rhs(
        &mut self,
        mesh: &Mesh<T>,
        rho: &[T],
        u: &[[T; 2]],
        v_des: &[[T; 2]],
        out: &mut [[T; 2]],
    ) -> Result<(), Error> {
        check_finite(rho.iter().copied().chain(u.iter().chain(v_des).flatten().copied()))?;
        let p = self.params.clone();
        let third = T::one() / T::of(3.0);
        let tris = mesh.triangles();
        let rho_bar: Vec<T> = tris
            .iter()
            .map(|t| (rho[t.nodes[0]] + rho[t.nodes[1]] + rho[t.nodes[2]]) * third)
            .collect();

        fill_advection(mesh, &mut self.advection, u, Some(&self.inv_eps_elem));
        for (e, r) in self.elem.iter_mut().zip(&rho_bar) {
            *e = p.mu / r.max(p.rho_floor);
        }
        fill_stiffness_elementwise(mesh, &mut self.viscous, &self.elem);

        // Darcy and Forchheimer drags share the eps weight, so they lump together.
        let sqrt_k = p.permeability.sqrt();
        for (k, t) in tris.iter().enumerate() {
            let uc = [
                (u[t.nodes[0]][0] + u[t.nodes[1]][0] + u[t.nodes[2]][0]) * third,
                (u[t.nodes[0]][1] + u[t.nodes[1]][1] + u[t.nodes[2]][1]) * third,
            ];
            self.elem[k] = p.mu / (rho_bar[k].max(p.rho_floor) * p.permeability) + p.forchheimer * norm2(uc) / sqrt_k;
        }
        let drag = lumped_mass(mesh, Some(&self.eps), Some(&self.elem));

        let pressure = assemble_divergence_load(mesh, u, &rho_bar);
        fill_outer_boundary_mass(mesh, &mut self.outflow, u);
        self.outflow.matvec_into(rho, &mut self.tmp2);

        let inv_tau = T::one() / p.tau;
        let mut comp = vec![T::zero(); u.len()];
        let mut relax = vec![T::zero(); u.len()];
        for c in 0..2 {
            for (x, v) in comp.iter_mut().zip(u) {
                *x = v[c];
            }
            for (x, v) in relax.iter_mut().zip(v_des) {
                *x = v[c] * inv_tau;
            }
            assemble_load_into(mesh, &relax, &mut self.tmp);
            let mut adv = vec![T::zero(); u.len()];
            self.advection.matvec_into(&comp, &mut adv);
            for j in 0..u.len() {
                self.tmp[j] -= adv[j];
            }
            self.viscous.matvec_into(&comp, &mut adv);
            for j in 0..u.len() {
                let reaction = (self.mass[j] * inv_tau + drag[j]) * comp[j];
                let rhs = self.tmp[j] - adv[j] - reaction + p.c2 * (self.tmp2[j] - pressure[j]);
                out[j][c] = rhs / self.mass[j];
            }
        }
        Ok(())
    }
}

/// Removes the wall-normal component of `u` at every wall node.
pub fn apply_slip_projection<T: Scalar>(u: &mut [[T; 2]], mesh: &Mesh<T>) {
    for (i, n) in mesh.wall_nodes() {
        let un = dot2(u[i], n);
        u[i][0] -= un * n[0];
        u[i][1] -= un * n[1];
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClampPolicy {
    #[default]
    Off,
    Floor,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClampReport<T> {
    pub density_nodes: usize,
    /// Vehicles added by raising negative densities to zero (lumped weight).
    pub mass_added: T,
    pub speed_nodes: usize,
}

impl<T: Scalar> ClampReport<T> {
    pub fn is_empty(&self) -> bool {
        self.density_nodes == 0 && self.speed_nodes == 0
    }
}

/// Floor policy: `rho >= 0` and `|u| <= 2 u_max`. `weights` are the lumped
/// porosity-mass diagonal used to report the added mass.
pub fn clamp_state<T: Scalar>(
    rho: &mut [T],
    u: &mut [[T; 2]],
    weights: &[T],
    u_max: T,
    policy: ClampPolicy,
) -> ClampReport<T> {
    let mut report = ClampReport::default();
    if policy == ClampPolicy::Off {
        return report;
    }
    for (r, w) in rho.iter_mut().zip(weights) {
        if *r < T::zero() {
            report.density_nodes += 1;
            report.mass_added -= *r * *w;
            *r = T::zero();
        }
    }
    let cap = T::of(2.0) * u_max;
    for v in u.iter_mut() {
        let s = norm2(*v);
        if s > cap {
            report.speed_nodes += 1;
            v[0] = v[0] * cap / s;
            v[1] = v[1] * cap / s;
        }
    }
    report
}

/// Zero velocity field of the right length.
pub fn zero_velocity<T: Scalar>(n: usize) -> VectorField<T> {
    vec![[T::zero(); 2]; n]
}
