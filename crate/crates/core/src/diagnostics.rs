//! Integral budgets and congestion metrics.

use crate::dynamics::BudgetRates;
use crate::mesh::Mesh;
use crate::scalar::{norm2, Scalar};

/// Default congestion threshold as a fraction of `rho_max`.
pub const CONGESTION_THRESHOLD: f64 = 0.75;

/// One diagnostics line per time step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BudgetRow<T> {
    pub step: usize,
    pub t: f64,
    /// Vehicles on the streets, `1^T M_eps rho`.
    pub streets_total: T,
    pub injection: T,
    pub parking: T,
    pub outflux: T,
    /// `d/dt streets_total - injection + parking + outflux`.
    pub residual: T,
    pub rho_min: T,
    pub rho_mean: T,
    pub rho_max: T,
    pub speed_min: T,
    pub speed_mean: T,
    pub speed_max: T,
}

impl<T: Scalar> BudgetRow<T> {
    pub const HEADER: &'static str = "step,t,streets_total,injection,parking,outflux,residual,rho_min,rho_mean,rho_max,speed_min,speed_mean,speed_max";

    pub fn values(&self) -> [T; 11] {
        [
            self.streets_total,
            self.injection,
            self.parking,
            self.outflux,
            self.residual,
            self.rho_min,
            self.rho_mean,
            self.rho_max,
            self.speed_min,
            self.speed_mean,
            self.speed_max,
        ]
    }
}

/// `sum_j w_j rho_j` with `w` the lumped porosity-mass diagonal.
pub fn streets_total<T: Scalar>(rho: &[T], weights: &[T]) -> T {
    rho.iter().zip(weights).map(|(r, w)| *r * *w).sum()
}

/// Subset of the domain used by regional metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region<T> {
    All,
    Disk { center: [T; 2], radius: T },
}

impl<T: Scalar> Region<T> {
    pub fn contains(&self, x: [T; 2]) -> bool {
        match *self {
            Region::All => true,
            Region::Disk { center, radius } => {
                let d = [x[0] - center[0], x[1] - center[1]];
                norm2(d) <= radius
            }
        }
    }
}

/// [`streets_total`] restricted to the nodes inside `region`.
pub fn streets_total_in<T: Scalar>(mesh: &Mesh<T>, rho: &[T], weights: &[T], region: &Region<T>) -> T {
    mesh.nodes()
        .iter()
        .zip(rho.iter().zip(weights))
        .filter(|(x, _)| region.contains(**x))
        .map(|(_, (r, w))| *r * *w)
        .sum()
}

/// Forward-difference budget residual over one step with stage-averaged rates.
pub fn mass_budget_residual<T: Scalar>(
    rho_old: &[T],
    rho_new: &[T],
    weights: &[T],
    dt: T,
    rates: &BudgetRates<T>,
) -> T {
    let change: T = rho_old
        .iter()
        .zip(rho_new)
        .zip(weights)
        .map(|((a, b), w)| (*b - *a) * *w)
        .sum();
    change / dt - rates.net()
}

/// Assembles a diagnostics row for the state reached after `step`.
#[allow(clippy::too_many_arguments)]
pub fn budget_row<T: Scalar>(
    step: usize,
    t: f64,
    rho_old: &[T],
    rho_new: &[T],
    u: &[[T; 2]],
    weights: &[T],
    dt: T,
    rates: &BudgetRates<T>,
) -> BudgetRow<T> {
    let (rho_min, rho_mean, rho_max) = min_mean_max(rho_new.iter().copied());
    let (speed_min, speed_mean, speed_max) = min_mean_max(u.iter().map(|v| norm2(*v)));
    BudgetRow {
        step,
        t,
        streets_total: streets_total(rho_new, weights),
        injection: rates.injection,
        parking: rates.parking,
        outflux: rates.outflux,
        residual: mass_budget_residual(rho_old, rho_new, weights, dt, rates),
        rho_min,
        rho_mean,
        rho_max,
        speed_min,
        speed_mean,
        speed_max,
    }
}

fn min_mean_max<T: Scalar>(values: impl Iterator<Item = T>) -> (T, T, T) {
    let (mut lo, mut hi, mut sum, mut n) = (T::infinity(), T::neg_infinity(), T::zero(), 0usize);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
        sum += v;
        n += 1;
    }
    if n == 0 {
        return (T::zero(), T::zero(), T::zero());
    }
    (lo, sum / T::from_count(n), hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CongestionMetrics<T> {
    /// Area of triangles whose mean density exceeds `threshold * rho_max` (km^2).
    pub congested_area: T,
    /// Area-weighted mean of the centroid speed over the region (km/h).
    pub mean_speed: T,
    pub region_area: T,
    pub threshold: T,
}

/// Congested area over the whole mesh and mean speed over `region`
/// (triangles are assigned by centroid).
pub fn congestion_metrics<T: Scalar>(
    mesh: &Mesh<T>,
    rho: &[T],
    u: &[[T; 2]],
    rho_max: T,
    threshold: T,
    region: &Region<T>,
) -> CongestionMetrics<T> {
    let third = T::one() / T::of(3.0);
    let limit = threshold * rho_max;
    let mut congested = T::zero();
    let mut speed = T::zero();
    let mut area = T::zero();
    for (k, t) in mesh.triangles().iter().enumerate() {
        let [a, b, c] = t.nodes;
        if (rho[a] + rho[b] + rho[c]) * third > limit {
            congested += t.area;
        }
        if region.contains(mesh.centroid(k)) {
            let uc = [(u[a][0] + u[b][0] + u[c][0]) * third, (u[a][1] + u[b][1] + u[c][1]) * third];
            speed += t.area * norm2(uc);
            area += t.area;
        }
    }
    CongestionMetrics {
        congested_area: congested,
        mean_speed: if area > T::zero() { speed / area } else { T::zero() },
        region_area: area,
        threshold,
    }
}
