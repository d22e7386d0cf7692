//! Configured end-to-end runs: load, build, integrate, write.

use std::path::{Path, PathBuf};

use crate::config::Config;
use crate::eikonal::desired_speed;
use crate::error::{Error, Result};
use crate::mesh::{load_msh, Mesh};
use crate::output::{write_scenario_csv, write_snapshot, DiagnosticsWriter, Snapshot};
use crate::scenario::{build_scenario, Scenario};
use crate::timeloop::{RunSummary, Simulation};

pub fn load_mesh(cfg: &Config) -> Result<Mesh<f64>> {
    let path = cfg
        .mesh_path
        .as_ref()
        .ok_or_else(|| crate::error::MeshError::Invalid("no mesh.path in configuration".into()))?;
    Ok(load_msh(path, &cfg.groups)?)
}

pub fn scenario_for(cfg: &Config, mesh: &Mesh<f64>) -> Result<Scenario<f64>> {
    Ok(build_scenario(mesh, &cfg.scenario, &cfg.eikonal)?)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary<f64>,
    pub snapshots: Vec<PathBuf>,
    pub diagnostics: PathBuf,
}

/// Integrates to `time.t_end`, writing a snapshot every `time.stride`
/// steps (plus the final state) and one diagnostics row per step.
pub fn run_simulation(cfg: &Config, mesh: &Mesh<f64>, scenario: &Scenario<f64>, dir: &Path) -> Result<RunOutput> {
    ensure_dir(dir)?;
    let mut sim = Simulation::new(
        mesh,
        scenario,
        cfg.physics.clone(),
        cfg.eikonal.clone(),
        cfg.time.clone(),
    )?;
    let (n, _) = cfg.time.steps();
    let stride = cfg.time.stride.max(1);
    let diagnostics = dir.join("diagnostics.csv");
    let mut diag = DiagnosticsWriter::create(&diagnostics)?;
    let mut snapshots = Vec::new();
    let summary = sim.run(|state, report| {
        if let Some(r) = report {
            diag.write_row(&r.row)?;
        }
        if state.step % stride == 0 || state.step == n {
            snapshots.extend(write_snapshot(dir, mesh, &Snapshot::of_state(state), cfg.format)?);
        }
        Ok(())
    })?;
    diag.finish()?;
    Ok(RunOutput {
        summary,
        snapshots,
        diagnostics,
    })
}

/// Potential and desired speed from the initial density, written as snapshot 0.
pub fn eikonal_only(cfg: &Config, mesh: &Mesh<f64>, scenario: &Scenario<f64>, dir: &Path) -> Result<(PathBuf, f64)> {
    ensure_dir(dir)?;
    let sim = Simulation::new(
        mesh,
        scenario,
        cfg.physics.clone(),
        cfg.eikonal.clone(),
        cfg.time.clone(),
    )?;
    let state = sim.state();
    let path = dir.join("eikonal.csv");
    crate::output::write_snapshot_csv(&path, mesh, &Snapshot::of_state(state))?;
    let vmax = state
        .v_des
        .iter()
        .map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt())
        .fold(0.0, f64::max);
    Ok((path, vmax))
}

/// Writes every scenario field plus the initial potential to `path`.
pub fn scenario_dump(cfg: &Config, mesh: &Mesh<f64>, scenario: &Scenario<f64>, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let mut solver = crate::eikonal::EikonalSolver::new(mesh, &crate::fem::Pattern::from_mesh(mesh), cfg.eikonal.clone());
    let pot = solver.potential(mesh, &scenario.rho0, &scenario.forcing, scenario.u_max, scenario.rho_max)?;
    let v = desired_speed(&scenario.rho0, &pot, scenario.u_max, scenario.rho_max, &cfg.eikonal);
    write_scenario_csv(path, mesh, scenario, &pot.phi, &v)
}
