//! Explicit time integration of the coupled density-momentum system.
//!
//! The default scheme is the optimal two-stage SSP Runge-Kutta method:
//! `y* = y + dt L(y)`, `y' = y/2 + y*/2 + dt/2 L(y*)`. The routing
//! potential is re-solved at every stage.

use std::fmt;
use std::str::FromStr;

use crate::diagnostics::{budget_row, BudgetRow};
use crate::dynamics::{
    apply_slip_projection, clamp_state, zero_velocity, BudgetRates, ClampPolicy, ClampReport, PhysicalParams,
    RhsWorkspace,
};
use crate::eikonal::{desired_speed, EikonalConfig, EikonalSolver, PotentialSolution};
use crate::error::{Error, Result};
use crate::fem::{Pattern, ScalarField, VectorField};
use crate::mesh::Mesh;
use crate::scalar::{norm2, Scalar};
use crate::scenario::{demand_at, Scenario};

/// A state that supports the linear combinations used by the integrators.
pub trait OdeState: Clone {
    type Scalar: Scalar;

    /// `self = a * self + b * x`.
    fn axpby(&mut self, a: Self::Scalar, x: &Self, b: Self::Scalar);
}

impl<T: Scalar> OdeState for Vec<T> {
    type Scalar = T;

    fn axpby(&mut self, a: T, x: &Self, b: T) {
        for (s, v) in self.iter_mut().zip(x) {
            *s = a * *s + b * *v;
        }
    }
}

/// Density and velocity at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState<T> {
    pub rho: ScalarField<T>,
    pub u: VectorField<T>,
}

impl<T: Scalar> OdeState for FieldState<T> {
    type Scalar = T;

    fn axpby(&mut self, a: T, x: &Self, b: T) {
        self.rho.axpby(a, &x.rho, b);
        for (s, v) in self.u.iter_mut().zip(&x.u) {
            s[0] = a * s[0] + b * v[0];
            s[1] = a * s[1] + b * v[1];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Ssp2,
    EulerForward,
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ssp2" => Ok(Scheme::Ssp2),
            "euler" => Ok(Scheme::EulerForward),
            _ => Err("'ssp2' or 'euler'".to_string()),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Ssp2 => "ssp2",
            Scheme::EulerForward => "euler",
        })
    }
}

/// One step of `scheme`. `rhs(stage, y)` evaluates the time derivative and
/// `post` is applied to every stage result (constraint projection).
pub fn integrate_step<S, E, F, P>(scheme: Scheme, y: &S, dt: S::Scalar, mut rhs: F, mut post: P) -> Result<S, E>
where
    S: OdeState,
    F: FnMut(usize, &S) -> Result<S, E>,
    P: FnMut(&mut S),
{
    let one = <S::Scalar as num_traits::One>::one();
    let k1 = rhs(0, y)?;
    let mut stage = y.clone();
    stage.axpby(one, &k1, dt);
    post(&mut stage);
    if scheme == Scheme::EulerForward {
        return Ok(stage);
    }
    let k2 = rhs(1, &stage)?;
    let half = S::Scalar::of(0.5);
    let mut next = y.clone();
    next.axpby(half, &stage, half);
    next.axpby(one, &k2, half * dt);
    post(&mut next);
    Ok(next)
}

/// SSP2 step without constraints.
pub fn ssp2_step<S, E, F>(y: &S, dt: S::Scalar, rhs: F) -> Result<S, E>
where
    S: OdeState,
    F: FnMut(usize, &S) -> Result<S, E>,
{
    integrate_step(Scheme::Ssp2, y, dt, rhs, |_| {})
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeConfig {
    /// Step length (h).
    pub dt: f64,
    /// Final time (h).
    pub t_end: f64,
    /// Snapshot every `stride` steps.
    pub stride: usize,
    pub scheme: Scheme,
    /// Re-solve the routing potential every `eikonal_every` steps.
    pub eikonal_every: usize,
    pub clamp: ClampPolicy,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            dt: 5e-4,
            t_end: 0.5,
            stride: 100,
            scheme: Scheme::Ssp2,
            eikonal_every: 1,
            clamp: ClampPolicy::Off,
        }
    }
}

impl TimeConfig {
    /// Number of steps and the final time actually reached. A final time
    /// that is not a multiple of `dt` is rounded up.
    pub fn steps(&self) -> (usize, f64) {
        let ratio = self.t_end / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
            (nearest as usize, self.t_end)
        } else {
            let n = ratio.ceil() as usize;
            let t = n as f64 * self.dt;
            log::warn!("final time {} is not a multiple of dt {}; running to {t}", self.t_end, self.dt);
            (n, t)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationState<T> {
    pub step: usize,
    pub t: f64,
    pub rho: ScalarField<T>,
    pub u: VectorField<T>,
    /// Potential of the current density.
    pub potential: PotentialSolution<T>,
    pub v_des: VectorField<T>,
    /// Cumulative vehicles injected, parked and lost through the city limit.
    pub injected: T,
    pub parked: T,
    pub outflux: T,
}

#[derive(Debug, Clone)]
pub struct StepReport<T> {
    pub row: BudgetRow<T>,
    pub clamp: ClampReport<T>,
    /// Minimum density of the new state before any clamping.
    pub rho_min_unclamped: T,
    /// `dt max|u| / h_min`.
    pub courant: T,
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary<T> {
    pub steps: usize,
    pub t_end: f64,
    pub rho_min_unclamped: T,
    pub rho_max: T,
    pub speed_max: T,
    pub max_abs_residual: T,
    pub courant_warnings: usize,
    pub clamped_nodes: usize,
}

/// A running simulation borrowing its mesh and scenario.
pub struct Simulation<'a, T> {
    mesh: &'a Mesh<T>,
    scenario: &'a Scenario<T>,
    time: TimeConfig,
    rhs: RhsWorkspace<T>,
    eikonal: EikonalSolver<T>,
    state: SimulationState<T>,
    h_min: T,
    courant_warnings: usize,
}

struct StageOutput<T> {
    rates: BudgetRates<T>,
    potential: Option<PotentialSolution<T>>,
}

impl<'a, T: Scalar> Simulation<'a, T> {
    pub fn new(
        mesh: &'a Mesh<T>,
        scenario: &'a Scenario<T>,
        params: PhysicalParams<T>,
        eikonal: EikonalConfig<T>,
        time: TimeConfig,
    ) -> Result<Self> {
        Self::with_initial(mesh, scenario, params, eikonal, time, scenario.rho0.clone())
    }

    /// Starts from `rho0` instead of the scenario's initial density; velocity starts at zero.
    pub fn with_initial(
        mesh: &'a Mesh<T>,
        scenario: &'a Scenario<T>,
        params: PhysicalParams<T>,
        eikonal: EikonalConfig<T>,
        time: TimeConfig,
        rho0: ScalarField<T>,
    ) -> Result<Self> {
        if rho0.len() != mesh.num_nodes() || rho0.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let pattern = Pattern::from_mesh(mesh);
        let rhs = RhsWorkspace::with_pattern(mesh, &pattern, &scenario.eps, &scenario.kappa, params);
        let mut eikonal = EikonalSolver::new(mesh, &pattern, eikonal);
        let potential = eikonal.potential(mesh, &rho0, &scenario.forcing, scenario.u_max, scenario.rho_max)?;
        let v_des = desired_speed(&rho0, &potential, scenario.u_max, scenario.rho_max, &eikonal.config);
        let n = mesh.num_nodes();
        Ok(Simulation {
            mesh,
            scenario,
            rhs,
            h_min: mesh.min_edge_length(),
            state: SimulationState {
                step: 0,
                t: 0.0,
                rho: rho0,
                u: zero_velocity(n),
                potential,
                v_des,
                injected: T::zero(),
                parked: T::zero(),
                outflux: T::zero(),
            },
            eikonal,
            time,
            courant_warnings: 0,
        })
    }

    pub fn state(&self) -> &SimulationState<T> {
        &self.state
    }

    pub fn time_config(&self) -> &TimeConfig {
        &self.time
    }

    pub fn workspace(&self) -> &RhsWorkspace<T> {
        &self.rhs
    }

    pub fn mesh(&self) -> &Mesh<T> {
        self.mesh
    }

    pub fn scenario(&self) -> &Scenario<T> {
        self.scenario
    }

    /// Advances one step.
    pub fn step(&mut self) -> Result<StepReport<T>> {
        let dt = self.time.dt;
        let t0 = self.state.t;
        let step = self.state.step;
        let every = self.time.eikonal_every.max(1);
        let resolve = step % every == 0;
        let mesh = self.mesh;
        let sc = self.scenario;
        let y0 = FieldState {
            rho: self.state.rho.clone(),
            u: self.state.u.clone(),
        };
        let mut outputs: Vec<StageOutput<T>> = Vec::with_capacity(2);
        let first = self.state.potential.clone();
        let rhs = &mut self.rhs;
        let eik = &mut self.eikonal;
        let result = integrate_step(
            self.time.scheme,
            &y0,
            T::of(dt),
            |stage, y: &FieldState<T>| -> Result<FieldState<T>> {
                let potential = if stage == 0 || !resolve {
                    None
                } else {
                    Some(eik.potential(mesh, &y.rho, &sc.forcing, sc.u_max, sc.rho_max)?)
                };
                let pot = potential.as_ref().unwrap_or(&first);
                let v_des = desired_speed(&y.rho, pot, sc.u_max, sc.rho_max, &eik.config);
                let source = demand_at(sc, &pot.phi, t0 + stage as f64 * dt);
                let mut drho = vec![T::zero(); y.rho.len()];
                let mut du = vec![[T::zero(); 2]; y.u.len()];
                let rates = rhs.density_rhs(mesh, &y.rho, &y.u, &source, &mut drho)?;
                rhs.momentum_rhs(mesh, &y.rho, &y.u, &v_des, &mut du)?;
                outputs.push(StageOutput { rates, potential });
                Ok(FieldState { rho: drho, u: du })
            },
            |y| apply_slip_projection(&mut y.u, mesh),
        );
        let t1 = (step + 1) as f64 * dt;
        let mut next = result.map_err(|e| match e {
            Error::NonFiniteInput => Error::NonFiniteState {
                step: step + 1,
                t: t1,
                detail: "right-hand side received a non-finite field".to_string(),
            },
            other => other,
        })?;
        if let Some(i) = next.rho.iter().position(|r| !r.is_finite()) {
            return Err(self.non_finite(step + 1, t1, format!("density at node {i}")));
        }
        if let Some(i) = next.u.iter().position(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(self.non_finite(step + 1, t1, format!("velocity at node {i}")));
        }

        let rates = match outputs.as_slice() {
            [a, b] => a.rates.mean(&b.rates),
            [a] => a.rates,
            _ => BudgetRates::default(),
        };
        let rho_min_unclamped = next.rho.iter().copied().fold(T::infinity(), T::min);
        let clamp = clamp_state(
            &mut next.rho,
            &mut next.u,
            self.rhs.lumped_porosity_mass(),
            sc.u_max,
            self.time.clamp,
        );
        let row = budget_row(
            step + 1,
            t1,
            &self.state.rho,
            &next.rho,
            &next.u,
            self.rhs.lumped_porosity_mass(),
            T::of(dt),
            &rates,
        );

        // The potential of the new density doubles as the next step's first stage.
        let potential = if (step + 1) % every == 0 {
            self.eikonal
                .potential(mesh, &next.rho, &sc.forcing, sc.u_max, sc.rho_max)?
        } else {
            outputs
                .into_iter()
                .filter_map(|o| o.potential)
                .last()
                .unwrap_or_else(|| self.state.potential.clone())
        };
        let v_des = desired_speed(&next.rho, &potential, sc.u_max, sc.rho_max, &self.eikonal.config);

        let courant = T::of(dt) * row.speed_max / self.h_min;
        if courant > T::of(0.5) {
            if self.courant_warnings == 0 {
                log::warn!(
                    "Courant number {:.3} exceeds 0.5 at t = {t1} h (dt max|u| / h_min)",
                    courant.as_f64()
                );
            }
            self.courant_warnings += 1;
        }

        let dtt = T::of(dt);
        let s = &mut self.state;
        s.step = step + 1;
        s.t = t1;
        s.rho = next.rho;
        s.u = next.u;
        s.potential = potential;
        s.v_des = v_des;
        s.injected += dtt * rates.injection;
        s.parked += dtt * rates.parking;
        s.outflux += dtt * rates.outflux;
        Ok(StepReport {
            row,
            clamp,
            rho_min_unclamped,
            courant,
        })
    }

    fn non_finite(&self, step: usize, t: f64, detail: String) -> Error {
        let s = &self.state;
        let rmax = s.rho.iter().copied().fold(T::neg_infinity(), T::max);
        let umax = s.u.iter().map(|v| norm2(*v)).fold(T::neg_infinity(), T::max);
        Error::NonFiniteState {
            step,
            t,
            detail: format!(
                "{detail} (previous state: max rho {:e}, max |u| {:e})",
                rmax.as_f64(),
                umax.as_f64()
            ),
        }
    }

    /// Runs every remaining step. `observer` sees the initial state with no
    /// report and then every new state with its report.
    pub fn run<F>(&mut self, mut observer: F) -> Result<RunSummary<T>>
    where
        F: FnMut(&SimulationState<T>, Option<&StepReport<T>>) -> Result<()>,
    {
        let (n, t_end) = self.time.steps();
        let mut summary = RunSummary {
            steps: 0,
            t_end,
            rho_min_unclamped: self.state.rho.iter().copied().fold(T::infinity(), T::min),
            rho_max: self.state.rho.iter().copied().fold(T::neg_infinity(), T::max),
            speed_max: T::zero(),
            max_abs_residual: T::zero(),
            courant_warnings: 0,
            clamped_nodes: 0,
        };
        if self.state.step == 0 {
            observer(&self.state, None)?;
        }
        while self.state.step < n {
            let report = self.step()?;
            summary.steps += 1;
            summary.rho_min_unclamped = summary.rho_min_unclamped.min(report.rho_min_unclamped);
            summary.rho_max = summary.rho_max.max(report.row.rho_max);
            summary.speed_max = summary.speed_max.max(report.row.speed_max);
            summary.max_abs_residual = summary.max_abs_residual.max(report.row.residual.abs());
            summary.clamped_nodes += report.clamp.density_nodes + report.clamp.speed_nodes;
            observer(&self.state, Some(&report))?;
        }
        summary.courant_warnings = self.courant_warnings;
        Ok(summary)
    }

    /// Steps until the state time reaches `t`, without an observer. Ignores `t_end`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        let target = (t / self.time.dt - 1e-9).ceil().max(0.0) as usize;
        while self.state.step < target {
            self.step()?;
        }
        Ok(())
    }
}
