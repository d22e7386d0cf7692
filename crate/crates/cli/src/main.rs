//! Command-line driver for the porous-media traffic simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use porous_traffic::config::Config;
use porous_traffic::mesh::{load_msh, validate_mesh, BoundaryGroups};
use porous_traffic::run;

#[derive(Parser)]
#[command(name = "porous-traffic", version, about = "Macroscopic traffic on an urban porous medium")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write snapshots plus diagnostics.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output.dir from the configuration.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Overrides mesh.path from the configuration.
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Load a mesh and print its geometry report.
    ValidateMesh {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value = "outer")]
        outer_group: String,
        #[arg(long, default_value = "wall*")]
        wall_group: String,
    },
    /// Solve the routing potential once from the initial density.
    EikonalOnly {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Write all scenario fields to a CSV file.
    ScenarioDump {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Print the default configuration.
    Defaults,
}

enum Failure {
    Usage(String),
    Module(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Module(e.to_string())
    }
}

fn configure_threads(cfg: Option<&Config>) -> Result<(), Failure> {
    let from_env = match std::env::var("TRAFFIC_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Some(n),
            _ => return Err(Failure::Usage(format!("TRAFFIC_THREADS must be a positive integer, got '{v}'"))),
        },
        Err(_) => None,
    };
    if let Some(n) = from_env.or(cfg.and_then(|c| c.threads)) {
        // A second initialization only happens in-process and keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        log::info!("using {n} worker threads");
    }
    Ok(())
}

fn load_config(path: &PathBuf, mesh: Option<PathBuf>) -> Result<Config, Failure> {
    let mut cfg = Config::load(path)?;
    if mesh.is_some() {
        cfg.mesh_path = mesh;
    }
    Ok(cfg)
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config, output, mesh } => {
            let cfg = load_config(&config, mesh)?;
            configure_threads(Some(&cfg))?;
            let m = run::load_mesh(&cfg)?;
            let sc = run::scenario_for(&cfg, &m)?;
            let dir = output.unwrap_or_else(|| cfg.output_dir.clone());
            let out = run::run_simulation(&cfg, &m, &sc, &dir)?;
            let s = &out.summary;
            println!("steps            {}", s.steps);
            println!("final time       {} h", s.t_end);
            println!("snapshots        {}", out.snapshots.len());
            println!("diagnostics      {}", out.diagnostics.display());
            println!("max density      {:.6} veh/km^2", s.rho_max);
            println!("min density      {:.6e} veh/km^2 (before clamping)", s.rho_min_unclamped);
            println!("max speed        {:.6} km/h", s.speed_max);
            println!("max |residual|   {:.3e} veh/h", s.max_abs_residual);
            if s.courant_warnings > 0 {
                println!("courant warnings {}", s.courant_warnings);
            }
        }
        Command::ValidateMesh {
            mesh,
            outer_group,
            wall_group,
        } => {
            configure_threads(None)?;
            let groups = BoundaryGroups {
                outer: outer_group,
                wall: wall_group,
            };
            let m = load_msh::<f64>(&mesh, &groups)?;
            let report = validate_mesh(&m);
            print!("{report}");
            if !report.passed() {
                return Err(Failure::Module(format!("mesh check failed: {}", report.failures.join("; "))));
            }
        }
        Command::EikonalOnly { config, output, mesh } => {
            let cfg = load_config(&config, mesh)?;
            configure_threads(Some(&cfg))?;
            let m = run::load_mesh(&cfg)?;
            let sc = run::scenario_for(&cfg, &m)?;
            let dir = output.unwrap_or_else(|| cfg.output_dir.clone());
            let (path, vmax) = run::eikonal_only(&cfg, &m, &sc, &dir)?;
            println!("potential        {}", path.display());
            println!("max |v_des|      {vmax:.12} km/h");
        }
        Command::ScenarioDump { config, output, mesh } => {
            let cfg = load_config(&config, mesh)?;
            configure_threads(Some(&cfg))?;
            let m = run::load_mesh(&cfg)?;
            let sc = run::scenario_for(&cfg, &m)?;
            let path = output.unwrap_or_else(|| cfg.output_dir.join("scenario.csv"));
            run::scenario_dump(&cfg, &m, &sc, &path)?;
            println!("scenario         {}", path.display());
        }
        Command::Defaults => print!("{}", Config::default().to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Module(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
