//! Flat `section.key = value` run configuration.
//!
//! Blank lines and text after `#` are ignored. String values may be wrapped
//! in double quotes. Relative paths are resolved against the directory of
//! the configuration file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dynamics::{ClampPolicy, PhysicalParams};
use crate::eikonal::EikonalConfig;
use crate::error::ConfigError;
use crate::mesh::BoundaryGroups;
use crate::output::SnapshotFormat;
use crate::scenario::{DemandProfile, Preset, ScenarioConfig};
use crate::timeloop::{Scheme, TimeConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub mesh_path: Option<PathBuf>,
    pub groups: BoundaryGroups,
    pub scenario: ScenarioConfig,
    pub physics: PhysicalParams<f64>,
    pub eikonal: EikonalConfig<f64>,
    pub time: TimeConfig,
    pub output_dir: PathBuf,
    pub format: SnapshotFormat,
    pub threads: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            mesh_path: None,
            groups: BoundaryGroups::default(),
            scenario: ScenarioConfig::default(),
            physics: PhysicalParams::default(),
            eikonal: EikonalConfig::default(),
            time: TimeConfig::default(),
            output_dir: PathBuf::from("output"),
            format: SnapshotFormat::Csv,
            threads: None,
        }
    }
}

/// Every accepted key, in the order written by [`Config::to_text`].
pub const KEYS: &[&str] = &[
    "mesh.path",
    "mesh.outer_group",
    "mesh.wall_group",
    "scenario.preset",
    "scenario.eps_center",
    "scenario.eps_max",
    "scenario.eps_width",
    "scenario.rho_far",
    "scenario.rho_center",
    "scenario.rho_width",
    "scenario.kappa_max",
    "scenario.kappa_width",
    "scenario.kappa_eps_ratio",
    "scenario.q0",
    "scenario.q_ring",
    "scenario.q_width",
    "scenario.u_max",
    "scenario.rho_max",
    "scenario.center",
    "scenario.demand",
    "physics.c2",
    "physics.permeability",
    "physics.forchheimer",
    "physics.nu",
    "physics.mu",
    "physics.tau",
    "physics.rho_floor",
    "eikonal.eta",
    "eikonal.sigma_g",
    "eikonal.psi_floor",
    "eikonal.f_floor_fraction",
    "eikonal.grad_tol",
    "eikonal.solver_tol",
    "eikonal.every",
    "time.dt",
    "time.t_end",
    "time.stride",
    "time.scheme",
    "output.dir",
    "output.format",
    "run.clamp",
    "run.threads",
];

fn unquote(v: &str) -> &str {
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v)
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Entry<'_> {
    fn mismatch(&self, expected: &'static str) -> ConfigError {
        ConfigError::TypeMismatch {
            line: self.line,
            key: self.key.to_string(),
            expected,
            value: self.value.to_string(),
        }
    }

    fn float(&self) -> Result<f64, ConfigError> {
        self.value
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.mismatch("a number"))
    }

    fn positive(&self) -> Result<f64, ConfigError> {
        let v = self.float()?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(ConfigError::NonPositiveParameter {
                key: self.key.to_string(),
                value: v,
            })
        }
    }

    fn nonnegative(&self) -> Result<f64, ConfigError> {
        let v = self.float()?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(ConfigError::NonPositiveParameter {
                key: self.key.to_string(),
                value: v,
            })
        }
    }

    fn point(&self) -> Result<[f64; 2], ConfigError> {
        let parts: Vec<f64> = self
            .value
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| self.mismatch("two comma-separated numbers"))?;
        match parts[..] {
            [x, y] if x.is_finite() && y.is_finite() => Ok([x, y]),
            _ => Err(self.mismatch("two comma-separated numbers")),
        }
    }

    fn count(&self) -> Result<usize, ConfigError> {
        let v = self.value.parse::<i64>().map_err(|_| self.mismatch("an integer"))?;
        if v >= 1 {
            Ok(v as usize)
        } else {
            Err(ConfigError::NonPositiveParameter {
                key: self.key.to_string(),
                value: v as f64,
            })
        }
    }

    fn parsed<V: FromStr>(&self, expected: &'static str) -> Result<V, ConfigError> {
        self.value.parse::<V>().map_err(|_| self.mismatch(expected))
    }
}

impl Config {
    /// Parses configuration text; relative paths are kept as written.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let key = key.trim();
            if !key.contains('.') || key.split('.').any(str::is_empty) {
                return Err(ConfigError::Syntax { line });
            }
            let e = Entry {
                line,
                key,
                value: unquote(value.trim()),
            };
            let s = &mut cfg.scenario;
            let p = &mut cfg.physics;
            let k = &mut cfg.eikonal;
            match key {
                "mesh.path" => cfg.mesh_path = Some(PathBuf::from(e.value)),
                "mesh.outer_group" => cfg.groups.outer = e.value.to_string(),
                "mesh.wall_group" => cfg.groups.wall = e.value.to_string(),
                "scenario.preset" => s.preset = e.parsed::<Preset>("dense, disperse or custom")?,
                "scenario.eps_center" => s.eps_center = e.positive()?,
                "scenario.eps_max" => s.eps_max = e.positive()?,
                "scenario.eps_width" => s.eps_width = e.positive()?,
                "scenario.rho_far" => s.rho_far = e.nonnegative()?,
                "scenario.rho_center" => s.rho_center = e.nonnegative()?,
                "scenario.rho_width" => s.rho_width = e.positive()?,
                "scenario.kappa_max" => s.kappa_max = e.nonnegative()?,
                "scenario.kappa_width" => s.kappa_width = e.positive()?,
                "scenario.kappa_eps_ratio" => s.kappa_eps_ratio = e.positive()?,
                "scenario.q0" => s.q0 = e.nonnegative()?,
                "scenario.q_ring" => s.q_ring = e.nonnegative()?,
                "scenario.q_width" => s.q_width = e.positive()?,
                "scenario.u_max" => s.u_max = e.positive()?,
                "scenario.rho_max" => s.rho_max = e.positive()?,
                "scenario.center" => s.center = Some(e.point()?),
                "scenario.demand" => s.profile = e.parsed::<DemandProfile>("'rush-valley' or a number in [0, 1]")?,
                "physics.c2" => p.c2 = e.positive()?,
                "physics.permeability" => p.permeability = e.positive()?,
                "physics.forchheimer" => p.forchheimer = e.positive()?,
                "physics.nu" => p.nu = e.positive()?,
                "physics.mu" => p.mu = e.positive()?,
                "physics.tau" => p.tau = e.positive()?,
                "physics.rho_floor" => p.rho_floor = e.positive()?,
                "eikonal.eta" => k.eta = e.positive()?,
                "eikonal.sigma_g" => s.sigma_g = e.positive()?,
                "eikonal.psi_floor" => k.psi_floor = e.positive()?,
                "eikonal.f_floor_fraction" => k.f_floor_fraction = e.positive()?,
                "eikonal.grad_tol" => k.grad_tol = e.nonnegative()?,
                "eikonal.solver_tol" => k.solver_tol = e.positive()?,
                "eikonal.every" => cfg.time.eikonal_every = e.count()?,
                "time.dt" => cfg.time.dt = e.positive()?,
                "time.t_end" => cfg.time.t_end = e.positive()?,
                "time.stride" => cfg.time.stride = e.count()?,
                "time.scheme" => cfg.time.scheme = e.parsed::<Scheme>("ssp2 or euler")?,
                "output.dir" => cfg.output_dir = PathBuf::from(e.value),
                "output.format" => cfg.format = e.parsed::<SnapshotFormat>("csv, vtk, both or none")?,
                "run.clamp" => {
                    cfg.time.clamp = match e.value {
                        "off" => ClampPolicy::Off,
                        "floor" => ClampPolicy::Floor,
                        _ => return Err(e.mismatch("off or floor")),
                    }
                }
                "run.threads" => cfg.threads = Some(e.count()?),
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        cfg.check_ranges()?;
        Ok(cfg)
    }

    fn check_ranges(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, value: f64| ConfigError::NonPositiveParameter {
            key: key.to_string(),
            value,
        };
        let k = &self.eikonal;
        if k.psi_floor >= 1.0 {
            return Err(bad("eikonal.psi_floor", k.psi_floor));
        }
        if k.f_floor_fraction >= 1.0 {
            return Err(bad("eikonal.f_floor_fraction", k.f_floor_fraction));
        }
        if self.time.dt > self.time.t_end {
            return Err(bad("time.t_end", self.time.t_end));
        }
        Ok(())
    }

    /// Reads a file; relative mesh and output paths become relative to its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(p) = &cfg.mesh_path {
            if p.is_relative() {
                cfg.mesh_path = Some(base.join(p));
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    /// Serializes every setting; [`Config::parse_str`] inverts it exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = &self.scenario;
        let p = &self.physics;
        let k = &self.eikonal;
        let mut put = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        let num = |v: f64| format!("{v:?}");
        if let Some(m) = &self.mesh_path {
            put("mesh.path", format!("\"{}\"", m.display()));
        }
        put("mesh.outer_group", format!("\"{}\"", self.groups.outer));
        put("mesh.wall_group", format!("\"{}\"", self.groups.wall));
        put("scenario.preset", s.preset.to_string());
        put("scenario.eps_center", num(s.eps_center));
        put("scenario.eps_max", num(s.eps_max));
        put("scenario.eps_width", num(s.eps_width));
        put("scenario.rho_far", num(s.rho_far));
        put("scenario.rho_center", num(s.rho_center));
        put("scenario.rho_width", num(s.rho_width));
        put("scenario.kappa_max", num(s.kappa_max));
        put("scenario.kappa_width", num(s.kappa_width));
        put("scenario.kappa_eps_ratio", num(s.kappa_eps_ratio));
        put("scenario.q0", num(s.q0));
        put("scenario.q_ring", num(s.q_ring));
        put("scenario.q_width", num(s.q_width));
        put("scenario.u_max", num(s.u_max));
        put("scenario.rho_max", num(s.rho_max));
        if let Some([x, y]) = s.center {
            put("scenario.center", format!("{}, {}", num(x), num(y)));
        }
        put("scenario.demand", s.profile.to_string());
        put("physics.c2", num(p.c2));
        put("physics.permeability", num(p.permeability));
        put("physics.forchheimer", num(p.forchheimer));
        put("physics.nu", num(p.nu));
        put("physics.mu", num(p.mu));
        put("physics.tau", num(p.tau));
        put("physics.rho_floor", num(p.rho_floor));
        put("eikonal.eta", num(k.eta));
        put("eikonal.sigma_g", num(s.sigma_g));
        put("eikonal.psi_floor", num(k.psi_floor));
        put("eikonal.f_floor_fraction", num(k.f_floor_fraction));
        put("eikonal.grad_tol", num(k.grad_tol));
        put("eikonal.solver_tol", num(k.solver_tol));
        put("eikonal.every", self.time.eikonal_every.to_string());
        put("time.dt", num(self.time.dt));
        put("time.t_end", num(self.time.t_end));
        put("time.stride", self.time.stride.to_string());
        put("time.scheme", self.time.scheme.to_string());
        put("output.dir", format!("\"{}\"", self.output_dir.display()));
        put("output.format", self.format.to_string());
        put(
            "run.clamp",
            match self.time.clamp {
                ClampPolicy::Off => "off",
                ClampPolicy::Floor => "floor",
            }
            .to_string(),
        );
        if let Some(t) = self.threads {
            put("run.threads", t.to_string());
        }
        out
    }
}

pub fn parse_config(path: &Path) -> Result<Config, ConfigError> {
    Config::load(path)
}
