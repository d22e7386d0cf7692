//! Concentric-city input fields: porosity, initial density, absorption,
//! attraction forcing and traffic demand.

use std::fmt;
use std::str::FromStr;

use crate::eikonal::{EikonalConfig, EikonalSolver};
use crate::error::ScenarioError;
use crate::fem::{Pattern, ScalarField};
use crate::mesh::Mesh;
use crate::scalar::Scalar;

/// Admissible porosity interval of the city presets.
pub const ADMISSIBLE_POROSITY: [f64; 2] = [0.38, 0.82];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Dense,
    Disperse,
    Custom,
}

impl Preset {
    /// Porosity at the city center, if fixed by the preset.
    pub fn eps_center(self) -> Option<f64> {
        match self {
            Preset::Dense => Some(0.38),
            Preset::Disperse => Some(0.62),
            Preset::Custom => None,
        }
    }
}

impl FromStr for Preset {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dense" => Ok(Preset::Dense),
            "disperse" => Ok(Preset::Disperse),
            "custom" => Ok(Preset::Custom),
            other => Err(ScenarioError::InvalidPreset(other.to_string())),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Dense => "dense",
            Preset::Disperse => "disperse",
            Preset::Custom => "custom",
        })
    }
}

/// Time modulation `g(t)` of the demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DemandProfile {
    /// Ramp 0 to 1 over the first hour, hold, ramp down to 0.2 during the third hour.
    RushValley,
    Constant(f64),
}

impl DemandProfile {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            DemandProfile::RushValley => demand_profile(t),
            DemandProfile::Constant(g) => g,
        }
    }
}

impl FromStr for DemandProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "rush-valley" {
            return Ok(DemandProfile::RushValley);
        }
        s.parse::<f64>()
            .ok()
            .filter(|g| (0.0..=1.0).contains(g))
            .map(DemandProfile::Constant)
            .ok_or_else(|| "'rush-valley' or a number in [0, 1]".to_string())
    }
}

impl fmt::Display for DemandProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DemandProfile::RushValley => f.write_str("rush-valley"),
            DemandProfile::Constant(g) => write!(f, "{g:?}"),
        }
    }
}

/// Piecewise-linear rush/valley profile.
pub fn demand_profile(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t < 1.0 {
        t
    } else if t <= 2.0 {
        1.0
    } else if t < 3.0 {
        1.0 - 0.8 * (t - 2.0)
    } else {
        0.2
    }
}

/// Scenario parameters. Widths are fractions of the domain radius, the
/// largest distance from the attraction point to a mesh node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub preset: Preset,
    /// Center porosity for the custom preset.
    pub eps_center: f64,
    pub eps_max: f64,
    pub eps_width: f64,
    pub rho_far: f64,
    pub rho_center: f64,
    pub rho_width: f64,
    pub kappa_max: f64,
    pub kappa_width: f64,
    /// Peak of `eps * kappa` per unit `kappa_max`.
    pub kappa_eps_ratio: f64,
    /// Peak of the demand ring (veh/km^2/h). Only active with a nonzero profile.
    pub q0: f64,
    pub q_ring: f64,
    pub q_width: f64,
    pub u_max: f64,
    pub rho_max: f64,
    /// Width of the attraction forcing (km).
    pub sigma_g: f64,
    pub center: Option<[f64; 2]>,
    pub profile: DemandProfile,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            preset: Preset::Dense,
            eps_center: 0.38,
            eps_max: 0.82,
            eps_width: 1.0 / 3.0,
            rho_far: 1000.0,
            rho_center: 50.0,
            rho_width: 1.0 / 3.0,
            kappa_max: 18.0,
            kappa_width: 0.25,
            kappa_eps_ratio: 7.0 / 18.0,
            q0: 5.0e4,
            q_ring: 0.6,
            q_width: 0.15,
            u_max: 50.0,
            rho_max: 2000.0,
            sigma_g: 0.5,
            center: None,
            profile: DemandProfile::Constant(0.0),
        }
    }
}

impl ScenarioConfig {
    pub fn eps_center_value(&self) -> f64 {
        self.preset.eps_center().unwrap_or(self.eps_center)
    }
}

#[derive(Debug, Clone)]
pub struct Scenario<T> {
    pub preset: Preset,
    pub eps: ScalarField<T>,
    pub kappa: ScalarField<T>,
    pub rho0: ScalarField<T>,
    pub q_max: ScalarField<T>,
    /// Calibrated attraction forcing, nonpositive.
    pub forcing: ScalarField<T>,
    pub center: [T; 2],
    pub radius: T,
    pub u_max: T,
    pub rho_max: T,
    pub kappa_max: T,
    pub eps_center: T,
    pub eps_max: T,
    pub profile: DemandProfile,
}

/// `v_far + (v_center - v_far) exp(-|x - c|^2 / (2 w^2))` at every node.
pub fn gaussian_bump<T: Scalar>(mesh: &Mesh<T>, center: [T; 2], v_center: T, v_far: T, width: T) -> ScalarField<T> {
    let two_w2 = T::of(2.0) * width * width;
    mesh.nodes()
        .iter()
        .map(|x| {
            let dx = x[0] - center[0];
            let dy = x[1] - center[1];
            v_far + (v_center - v_far) * (-(dx * dx + dy * dy) / two_w2).exp()
        })
        .collect()
}

/// Builds all scenario fields. The forcing amplitude is calibrated by one
/// solve against the initial density so that `max psi = 1`.
pub fn build_scenario<T: Scalar>(
    mesh: &Mesh<T>,
    cfg: &ScenarioConfig,
    eikonal: &EikonalConfig<T>,
) -> Result<Scenario<T>, ScenarioError> {
    let center = cfg.center.map_or_else(|| mesh.domain_centroid(), |c| [T::of(c[0]), T::of(c[1])]);
    let radius = mesh
        .nodes()
        .iter()
        .map(|x| ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt())
        .fold(T::zero(), T::max);
    let eps_c = cfg.eps_center_value();
    let eps = gaussian_bump(mesh, center, T::of(eps_c), T::of(cfg.eps_max), radius * T::of(cfg.eps_width));
    let (lo, hi) = match cfg.preset {
        Preset::Custom => (0.0, 1.0),
        _ => (ADMISSIBLE_POROSITY[0], ADMISSIBLE_POROSITY[1]),
    };
    for (node, e) in eps.iter().enumerate() {
        let v = e.as_f64();
        let bad = v < lo - 1e-12 || v > hi + 1e-12 || (cfg.preset == Preset::Custom && v <= 0.0);
        if bad {
            return Err(ScenarioError::PorosityOutOfRange { node, value: v, lo, hi });
        }
    }

    let rho0 = gaussian_bump(
        mesh,
        center,
        T::of(cfg.rho_center),
        T::of(cfg.rho_far),
        radius * T::of(cfg.rho_width),
    );

    let shape = gaussian_bump(mesh, center, T::one(), T::zero(), radius * T::of(cfg.kappa_width));
    let peak = eps.iter().zip(&shape).map(|(e, s)| *e * *s).fold(T::zero(), T::max);
    let scale = if peak > T::zero() {
        T::of(cfg.kappa_eps_ratio * cfg.kappa_max) / peak
    } else {
        T::zero()
    };
    let kappa: Vec<T> = shape.iter().map(|s| *s * scale).collect();

    let ring = radius * T::of(cfg.q_ring);
    let two_s2 = T::of(2.0) * (radius * T::of(cfg.q_width)).powi(2);
    let q_max: Vec<T> = mesh
        .nodes()
        .iter()
        .map(|x| {
            let r = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt();
            T::of(cfg.q0) * (-(r - ring).powi(2) / two_s2).exp()
        })
        .collect();

    let unit = gaussian_bump(mesh, center, -T::one(), T::zero(), T::of(cfg.sigma_g));
    let pattern = Pattern::from_mesh(mesh);
    let mut solver = EikonalSolver::new(mesh, &pattern, eikonal.clone());
    let psi = solver.solve(mesh, &rho0, &unit, T::of(cfg.u_max), T::of(cfg.rho_max))?;
    let max_psi = psi.iter().copied().fold(T::zero(), T::max);
    let amplitude = if max_psi > T::zero() { T::one() / max_psi } else { T::one() };
    let forcing = unit.iter().map(|g| *g * amplitude).collect();

    Ok(Scenario {
        preset: cfg.preset,
        eps,
        kappa,
        rho0,
        q_max,
        forcing,
        center,
        radius,
        u_max: T::of(cfg.u_max),
        rho_max: T::of(cfg.rho_max),
        kappa_max: T::of(cfg.kappa_max),
        eps_center: T::of(eps_c),
        eps_max: T::of(cfg.eps_max),
        profile: cfg.profile,
    })
}

/// Cost factor `clamp(1 - phi/phi_max, 0, 1)`.
pub fn travel_cost_factor<T: Scalar>(phi: &[T]) -> ScalarField<T> {
    let phi_max = phi.iter().copied().fold(T::neg_infinity(), T::max);
    phi.iter()
        .map(|p| {
            if phi_max > T::zero() {
                (T::one() - *p / phi_max).max(T::zero()).min(T::one())
            } else {
                T::one()
            }
        })
        .collect()
}

/// The building-block source `(1 - eps) q_max cost(phi) g(t)` at every node.
pub fn demand_at<T: Scalar>(scenario: &Scenario<T>, phi: &[T], t: f64) -> ScalarField<T> {
    let g = T::of(scenario.profile.at(t));
    if g == T::zero() || scenario.q_max.iter().all(|q| *q == T::zero()) {
        return vec![T::zero(); phi.len()];
    }
    travel_cost_factor(phi)
        .into_iter()
        .zip(&scenario.eps)
        .zip(&scenario.q_max)
        .map(|((c, e), q)| (T::one() - *e) * *q * c * g)
        .collect()
}
