//! `surface17`: runs the simulator's experiments and writes CSV outputs plus
//! a `manifest.json` into the output directory.
//!
//! Exit codes: 0 success, 1 other failure, 2 bad configuration, 3 the
//! equilibrium solver did not converge.

mod config;
mod experiments;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::Config;
use output::OutputDir;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Parser)]
#[command(name = "surface17", version, about = "Surface-17 error correction on a trapped-ion chain")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// SM, SA, MM, MA, MT or a layout text file.
    #[arg(long, global = true)]
    layout: Option<String>,
    /// lookup or matching.
    #[arg(long, global = true)]
    protocol: Option<String>,
    #[arg(long, global = true)]
    p_xx: Option<f64>,
    #[arg(long, global = true)]
    p_sq: Option<f64>,
    #[arg(long, global = true)]
    r_heat: Option<f64>,
    #[arg(long, global = true)]
    p_dep: Option<f64>,
    #[arg(long, global = true)]
    r_d: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the lookup and matching decoding tables.
    DecodeTables,
    /// Check that no single fault causes a logical failure.
    SingleFaultAudit,
    /// Monte Carlo sweep under circuit-level depolarizing noise.
    DepolarizingThreshold {
        /// cnot or ms.
        #[arg(long)]
        circuit: Option<String>,
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Importance-sampled p_xx sweep with one auxiliary error source.
    SingleSourceSweep {
        /// r_heat, p_dep or r_d.
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        value: Option<f64>,
        /// Also solve for the source value at the critical point.
        #[arg(long)]
        critical: bool,
    },
    /// Per-subset weights and failure rates at the configured noise.
    SubsetTable,
    /// Simulated annealing over chain orderings.
    LayoutAnneal {
        /// separated or mixed.
        #[arg(long)]
        mode: Option<String>,
        /// max-dist, avg-dist or total-time.
        #[arg(long)]
        objective: Option<String>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Ion equilibrium positions and the anharmonicity scan.
    Equilibrium {
        #[arg(long)]
        gamma4: Option<f64>,
    },
    /// Round timing of a layout.
    Schedule,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::DecodeTables => "decode-tables",
            Command::SingleFaultAudit => "single-fault-audit",
            Command::DepolarizingThreshold { .. } => "depolarizing-threshold",
            Command::SingleSourceSweep { .. } => "single-source-sweep",
            Command::SubsetTable => "subset-table",
            Command::LayoutAnneal { .. } => "layout-anneal",
            Command::Equilibrium { .. } => "equilibrium",
            Command::Schedule => "schedule",
        }
    }
}

fn resolve(cli: &Cli) -> Result<Config, ConfigError> {
    let mut cfg = match &cli.global.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let g = &cli.global;
    if let Some(v) = &g.out_dir {
        cfg.out_dir = v.clone();
    }
    if g.seed.is_some() {
        cfg.seed = g.seed;
    }
    if let Some(v) = g.workers {
        cfg.workers = v;
    }
    if let Some(v) = &g.layout {
        cfg.layout = v.clone();
    }
    if let Some(v) = &g.protocol {
        cfg.protocol = v.clone();
    }
    let n = &mut cfg.noise;
    n.p_xx = g.p_xx.unwrap_or(n.p_xx);
    n.r_heat = g.r_heat.unwrap_or(n.r_heat);
    n.p_dep = g.p_dep.unwrap_or(n.p_dep);
    n.r_d = g.r_d.unwrap_or(n.r_d);
    if g.p_sq.is_some() {
        n.p_sq = g.p_sq;
    }
    match &cli.command {
        Command::DepolarizingThreshold { circuit, shots } => {
            if let Some(c) = circuit {
                cfg.sweep.circuit = c.clone();
            }
            cfg.sweep.shots = shots.unwrap_or(cfg.sweep.shots);
        }
        Command::SingleSourceSweep { source, value, critical } => {
            if let Some(s) = source {
                cfg.sweep.source = s.clone();
            }
            if value.is_some() {
                cfg.sweep.value = *value;
            }
            cfg.sweep.critical |= critical;
        }
        Command::LayoutAnneal { mode, objective, restarts } => {
            if let Some(m) = mode {
                cfg.anneal.mode = m.clone();
            }
            if let Some(o) = objective {
                cfg.anneal.objective = o.clone();
            }
            cfg.anneal.restarts = restarts.unwrap_or(cfg.anneal.restarts);
        }
        Command::Equilibrium { gamma4 } => cfg.trap.gamma4 = gamma4.unwrap_or(cfg.trap.gamma4),
        _ => {}
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = resolve(cli)?;
    rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global()?;
    let started = Instant::now();
    let mut out = OutputDir::create(&cfg.out_dir)?;
    let results = match cli.command {
        Command::DecodeTables => experiments::decode_tables(&cfg, &mut out),
        Command::SingleFaultAudit => experiments::single_fault_audit(&cfg, &mut out),
        Command::DepolarizingThreshold { .. } => experiments::depolarizing_threshold(&cfg, &mut out),
        Command::SingleSourceSweep { .. } => experiments::single_source_sweep(&cfg, &mut out),
        Command::SubsetTable => experiments::subset_table(&cfg, &mut out),
        Command::LayoutAnneal { .. } => experiments::layout_anneal(&cfg, &mut out),
        Command::Equilibrium { .. } => experiments::equilibrium(&cfg, &mut out),
        Command::Schedule => experiments::schedule(&cfg, &mut out),
    }?;
    let manifest = json!({
        "command": cli.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": surface17_ion::VERSION,
        "seed": cfg.seed,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "config": cfg,
        "outputs": out.files(),
        "results": results,
    });
    let path = out.path().join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!("{}", serde_json::to_string_pretty(&manifest["results"])?);
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<surface17_ion::Error>() {
        Some(surface17_ion::Error::NonConvergence { .. }) => 3,
        Some(
            surface17_ion::Error::InvalidNoise(_)
            | surface17_ion::Error::InvalidTrap(_)
            | surface17_ion::Error::InvalidLayout(_)
            | surface17_ion::Error::Parse { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
