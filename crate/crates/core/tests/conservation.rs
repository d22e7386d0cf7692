mod common;

use porous_traffic::config::Config;
use porous_traffic::mesh::{rectangle_with_hole, Mesh};
use porous_traffic::scenario::{build_scenario, DemandProfile, Scenario};
use porous_traffic::timeloop::Simulation;

/// Closed 4 x 4 km block with a walled hole, and a dense scenario on it.
fn closed_block(cfg: &Config) -> (Mesh<f64>, Scenario<f64>) {
    let mesh: Mesh<f64> = rectangle_with_hole(16, 16, [0.0, 4.0], [0.0, 4.0], [10, 12], [3, 6]).with_closed_boundary();
    let sc = build_scenario(&mesh, &cfg.scenario, &cfg.eikonal).unwrap();
    (mesh, sc)
}

fn config(extra: &str) -> Config {
    Config::parse_str(&format!("time.dt = 5e-4\ntime.t_end = 0.05\n{extra}")).unwrap()
}

fn total(sim: &Simulation<f64>) -> f64 {
    let w = sim.workspace().lumped_porosity_mass();
    sim.state().rho.iter().zip(w).map(|(r, w)| r * w).sum()
}

fn run<'a>(cfg: &Config, mesh: &'a Mesh<f64>, sc: &'a Scenario<f64>) -> (f64, Simulation<'a, f64>) {
    let mut sim = Simulation::new(mesh, sc, cfg.physics.clone(), cfg.eikonal.clone(), cfg.time.clone()).unwrap();
    let start = total(&sim);
    sim.run(|_, _| Ok(())).unwrap();
    (start, sim)
}

#[test]
fn closed_city_keeps_its_vehicles() {
    let cfg = config("scenario.kappa_max = 0");
    let (mesh, sc) = closed_block(&cfg);
    let (start, sim) = run(&cfg, &mesh, &sc);
    let end = total(&sim);
    assert!(((end - start) / start).abs() < 1e-8, "{start} -> {end}");
    assert_eq!(sim.state().outflux, 0.0);
    // the flow did move something
    assert!(sim.state().u.iter().any(|u| u[0].abs() + u[1].abs() > 1.0));
}

#[test]
fn uniform_parking_decays_exponentially() {
    let cfg = config("");
    let (mesh, mut sc) = closed_block(&cfg);
    let k = 2.0;
    sc.kappa = vec![k; mesh.num_nodes()];
    let (start, sim) = run(&cfg, &mesh, &sc);
    let expected = start * (-k * sim.state().t).exp();
    assert!(((total(&sim) - expected) / expected).abs() < 1e-6);
    assert!((sim.state().parked - (start - total(&sim))).abs() < 1e-8 * start);
}

#[test]
fn injected_vehicles_are_all_accounted_for() {
    let cfg = config("scenario.kappa_max = 0\nscenario.demand = 1");
    let (mesh, sc) = closed_block(&cfg);
    assert_eq!(sc.profile, DemandProfile::Constant(1.0));
    let (start, sim) = run(&cfg, &mesh, &sc);
    let gained = total(&sim) - start;
    assert!(sim.state().injected > 0.0);
    assert!((gained - sim.state().injected).abs() < 1e-8 * start);
}

#[test]
fn empty_streets_stay_empty_without_demand() {
    let cfg = config("");
    let (mesh, sc) = closed_block(&cfg);
    let zero = vec![0.0; mesh.num_nodes()];
    let mut sim = Simulation::with_initial(&mesh, &sc, cfg.physics.clone(), cfg.eikonal.clone(), cfg.time.clone(), zero)
        .unwrap();
    sim.run(|_, _| Ok(())).unwrap();
    assert!(sim.state().rho.iter().all(|r| *r == 0.0));
}

#[test]
fn open_boundary_budget_closes_every_step() {
    let cfg = config("");
    let mesh: Mesh<f64> = rectangle_with_hole(16, 16, [0.0, 4.0], [0.0, 4.0], [10, 12], [3, 6]);
    let sc = build_scenario(&mesh, &cfg.scenario, &cfg.eikonal).unwrap();
    let mut sim = Simulation::new(&mesh, &sc, cfg.physics.clone(), cfg.eikonal.clone(), cfg.time.clone()).unwrap();
    let start = total(&sim);
    let summary = sim.run(|_, _| Ok(())).unwrap();
    assert!(summary.max_abs_residual <= 1e-10 * start, "{}", summary.max_abs_residual);
    let s = sim.state();
    let lhs = total(&sim) - start;
    assert!((lhs - (s.injected - s.parked - s.outflux)).abs() < 1e-8 * start);
}
