use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_porous-traffic"));
    c.env_remove("TRAFFIC_THREADS");
    c
}

fn repo(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// MSH 2.2 text for an `n` x `n` grid over a 4 km square with outer edges.
fn square_msh(n: usize) -> String {
    let h = 4.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i + 1;
    let mut s = String::from("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$PhysicalNames\n2\n1 1 \"outer\"\n2 2 \"domain\"\n$EndPhysicalNames\n");
    writeln!(s, "$Nodes\n{}", (n + 1) * (n + 1)).unwrap();
    for j in 0..=n {
        for i in 0..=n {
            writeln!(s, "{} {} {} 0", id(i, j), i as f64 * h, j as f64 * h).unwrap();
        }
    }
    s.push_str("$EndNodes\n");
    let mut elems = Vec::new();
    for k in 0..n {
        elems.push(format!("1 2 1 1 {} {}", id(k, 0), id(k + 1, 0)));
        elems.push(format!("1 2 1 1 {} {}", id(n, k), id(n, k + 1)));
        elems.push(format!("1 2 1 1 {} {}", id(k + 1, n), id(k, n)));
        elems.push(format!("1 2 1 1 {} {}", id(0, k + 1), id(0, k)));
    }
    for j in 0..n {
        for i in 0..n {
            elems.push(format!("2 2 2 1 {} {} {}", id(i, j), id(i + 1, j), id(i + 1, j + 1)));
            elems.push(format!("2 2 2 1 {} {} {}", id(i, j), id(i + 1, j + 1), id(i, j + 1)));
        }
    }
    writeln!(s, "$Elements\n{}", elems.len()).unwrap();
    for (k, e) in elems.iter().enumerate() {
        writeln!(s, "{} {e}", k + 1).unwrap();
    }
    s.push_str("$EndElements\n");
    s
}

/// Writes a mesh and a short-run config into `dir`.
fn small_case(dir: &Path, extra: &str) -> PathBuf {
    std::fs::write(dir.join("square.msh"), square_msh(8)).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        format!("mesh.path = \"square.msh\"\ntime.dt = 5e-4\ntime.t_end = 0.5\ntime.stride = 100\n{extra}"),
    )
    .unwrap();
    cfg
}

#[test]
fn bad_arguments_exit_with_two() {
    assert_eq!(bin().output().unwrap().status.code(), Some(2));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["run", "--bogus"]).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().arg("run").output().unwrap().status.code(), Some(2));
}

#[test]
fn malformed_thread_count_is_a_usage_error() {
    let o = bin()
        .env("TRAFFIC_THREADS", "abc")
        .args(["validate-mesh", "--mesh"])
        .arg(repo("data/city.msh"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("TRAFFIC_THREADS"));
}

#[test]
fn module_errors_exit_with_one_line() {
    let o = bin().args(["validate-mesh", "--mesh", "/nonexistent/city.msh"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr(&o).trim_end().lines().count(), 1);

    let dir = tempfile::tempdir().unwrap();
    let cfg = small_case(dir.path(), "physics.taus = 0.1\n");
    let o = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(err.contains("physics.taus"), "{err}");
}

#[test]
fn shipped_city_mesh_validates() {
    let o = bin().args(["validate-mesh", "--mesh"]).arg(repo("data/city.msh")).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn run_writes_snapshots_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_case(dir.path(), "output.format = both\n");
    let out = dir.path().join("out");
    let o = bin()
        .env("TRAFFIC_THREADS", "1")
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for ext in ["csv", "vtk"] {
        let snaps: Vec<String> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| n.starts_with("snap_") && n.ends_with(ext))
            .collect();
        assert_eq!(snaps.len(), 11, "{snaps:?}");
        assert!(snaps.contains(&format!("snap_001000.{ext}")));
    }
    let snap = std::fs::read_to_string(out.join("snap_000500.csv")).unwrap();
    assert_eq!(snap.lines().next(), Some("id,x,y,rho,u1,u2,phi,vdes"));
    assert_eq!(snap.lines().count(), 1 + 81);
    let vtk = std::fs::read_to_string(out.join("snap_000000.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version"));
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 1 + 1000);
}

#[test]
fn auxiliary_subcommands_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_case(dir.path(), "");
    let dump = dir.path().join("scenario.csv");
    let o = bin().args(["scenario-dump", "--config"]).arg(&cfg).arg("--output").arg(&dump).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&dump).unwrap().lines().count(), 1 + 81);

    let o = bin()
        .args(["eikonal-only", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("eikonal.csv").exists());

    let o = bin().arg("defaults").output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("time.dt = "));
}
