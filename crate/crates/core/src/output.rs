//! Snapshot, scenario and diagnostics writers.
//!
//! Floats are written in Rust's shortest round-trip form, so re-parsing a
//! file recovers the in-memory values bit for bit.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::diagnostics::BudgetRow;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::{norm2, Scalar};
use crate::scenario::Scenario;

pub const SNAPSHOT_HEADER: &str = "id,x,y,rho,u1,u2,phi,vdes";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotFormat {
    #[default]
    Csv,
    Vtk,
    Both,
    None,
}

impl SnapshotFormat {
    fn csv(self) -> bool {
        matches!(self, SnapshotFormat::Csv | SnapshotFormat::Both)
    }

    fn vtk(self) -> bool {
        matches!(self, SnapshotFormat::Vtk | SnapshotFormat::Both)
    }
}

impl FromStr for SnapshotFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(SnapshotFormat::Csv),
            "vtk" => Ok(SnapshotFormat::Vtk),
            "both" => Ok(SnapshotFormat::Both),
            "none" => Ok(SnapshotFormat::None),
            _ => Err("csv, vtk, both or none".into()),
        }
    }
}

impl fmt::Display for SnapshotFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SnapshotFormat::Csv => "csv",
            SnapshotFormat::Vtk => "vtk",
            SnapshotFormat::Both => "both",
            SnapshotFormat::None => "none",
        })
    }
}

/// Borrowed nodal fields at one instant.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a, T> {
    pub step: usize,
    pub t: f64,
    pub rho: &'a [T],
    pub u: &'a [[T; 2]],
    pub phi: &'a [T],
    pub v_des: &'a [[T; 2]],
}

impl<'a, T: Scalar> Snapshot<'a, T> {
    pub fn of_state(state: &'a crate::timeloop::SimulationState<T>) -> Self {
        Snapshot {
            step: state.step,
            t: state.t,
            rho: &state.rho,
            u: &state.u,
            phi: &state.potential.phi,
            v_des: &state.v_des,
        }
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn snapshot_rows<T: Scalar>(w: &mut impl Write, mesh: &Mesh<T>, s: &Snapshot<'_, T>) -> std::io::Result<()> {
    for (i, x) in mesh.nodes().iter().enumerate() {
        write!(
            w,
            "{i},{},{},{},{},{},{},{}",
            fmt_float(x[0].as_f64()),
            fmt_float(x[1].as_f64()),
            fmt_float(s.rho[i].as_f64()),
            fmt_float(s.u[i][0].as_f64()),
            fmt_float(s.u[i][1].as_f64()),
            fmt_float(s.phi[i].as_f64()),
            fmt_float(norm2(s.v_des[i]).as_f64()),
        )?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_snapshot_csv<T: Scalar>(path: &Path, mesh: &Mesh<T>, s: &Snapshot<'_, T>) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{SNAPSHOT_HEADER}")
        .and_then(|_| snapshot_rows(&mut w, mesh, s))
        .and_then(|_| w.flush())
        .map_err(io_err(path))
}

pub fn write_snapshot_vtk<T: Scalar>(path: &Path, mesh: &Mesh<T>, s: &Snapshot<'_, T>) -> Result<()> {
    let mut w = create(path)?;
    let body = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        let n = mesh.num_nodes();
        let nt = mesh.num_triangles();
        writeln!(w, "# vtk DataFile Version 2.0")?;
        writeln!(w, "porous traffic step {} t {}", s.step, fmt_float(s.t))?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {n} double")?;
        for x in mesh.nodes() {
            writeln!(w, "{} {} 0", fmt_float(x[0].as_f64()), fmt_float(x[1].as_f64()))?;
        }
        writeln!(w, "CELLS {nt} {}", 4 * nt)?;
        for t in mesh.triangles() {
            writeln!(w, "3 {} {} {}", t.nodes[0], t.nodes[1], t.nodes[2])?;
        }
        writeln!(w, "CELL_TYPES {nt}")?;
        for _ in 0..nt {
            writeln!(w, "5")?;
        }
        writeln!(w, "POINT_DATA {n}")?;
        writeln!(w, "SCALARS rho double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for r in s.rho {
            writeln!(w, "{}", fmt_float(r.as_f64()))?;
        }
        writeln!(w, "VECTORS u double")?;
        for v in s.u {
            writeln!(w, "{} {} 0", fmt_float(v[0].as_f64()), fmt_float(v[1].as_f64()))?;
        }
        writeln!(w, "SCALARS phi double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for p in s.phi {
            writeln!(w, "{}", fmt_float(p.as_f64()))?;
        }
        w.flush()
    };
    body(&mut w).map_err(io_err(path))
}

pub fn snapshot_path(dir: &Path, step: usize, ext: &str) -> PathBuf {
    dir.join(format!("snap_{step:06}.{ext}"))
}

/// Writes `snap_{step:06}.csv` and/or `.vtk` into `dir`.
pub fn write_snapshot<T: Scalar>(
    dir: &Path,
    mesh: &Mesh<T>,
    s: &Snapshot<'_, T>,
    format: SnapshotFormat,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if format.csv() {
        let p = snapshot_path(dir, s.step, "csv");
        write_snapshot_csv(&p, mesh, s)?;
        written.push(p);
    }
    if format.vtk() {
        let p = snapshot_path(dir, s.step, "vtk");
        write_snapshot_vtk(&p, mesh, s)?;
        written.push(p);
    }
    Ok(written)
}

/// Snapshot-format CSV of the scenario inputs at t = 0, with the input
/// fields appended as extra columns.
pub fn write_scenario_csv<T: Scalar>(
    path: &Path,
    mesh: &Mesh<T>,
    scenario: &Scenario<T>,
    phi: &[T],
    v_des: &[[T; 2]],
) -> Result<()> {
    let mut w = create(path)?;
    let body = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "{SNAPSHOT_HEADER},eps,kappa,eps_kappa,q_max,demand_max,forcing")?;
        for (i, x) in mesh.nodes().iter().enumerate() {
            let (e, k, q) = (scenario.eps[i], scenario.kappa[i], scenario.q_max[i]);
            writeln!(
                w,
                "{i},{},{},{},0,0,{},{},{},{},{},{},{},{}",
                fmt_float(x[0].as_f64()),
                fmt_float(x[1].as_f64()),
                fmt_float(scenario.rho0[i].as_f64()),
                fmt_float(phi[i].as_f64()),
                fmt_float(norm2(v_des[i]).as_f64()),
                fmt_float(e.as_f64()),
                fmt_float(k.as_f64()),
                fmt_float((e * k).as_f64()),
                fmt_float(q.as_f64()),
                fmt_float(((T::one() - e) * q).as_f64()),
                fmt_float(scenario.forcing[i].as_f64()),
            )?;
        }
        w.flush()
    };
    body(&mut w).map_err(io_err(path))
}

/// Streams one [`BudgetRow`] per line.
pub struct DiagnosticsWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl DiagnosticsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = create(path)?;
        writeln!(out, "{}", BudgetRow::<f64>::HEADER).map_err(io_err(path))?;
        Ok(DiagnosticsWriter {
            path: path.to_path_buf(),
            out,
        })
    }

    pub fn write_row<T: Scalar>(&mut self, row: &BudgetRow<T>) -> Result<()> {
        let mut line = format!("{},{}", row.step, fmt_float(row.t));
        for v in row.values() {
            line.push(',');
            line.push_str(&fmt_float(v.as_f64()));
        }
        writeln!(self.out, "{line}").map_err(io_err(&self.path))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(io_err(&self.path))
    }
}
