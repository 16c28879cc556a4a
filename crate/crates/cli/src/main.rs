//! `ponfog`: reports for the PON fog interconnect toolkit.
//!
//! Subcommands build the topology document, print or verify wavelength
//! routing maps, itemize power, sweep savings over server counts, and replay
//! workloads through the control-plane simulator. All output goes to stdout
//! unless `--out` redirects it; exit code 0 means success, 1 a failed
//! validation or verification, 2 a usage or config problem.

mod config;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use config::RunConfig;
use ponfog::rwa::{self, RoutingMap};
use ponfog::sim::{self, SimConfig};
use ponfog::topology::{build_fog_topology, FogTopology};
use ponfog::{power, PowerParams};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ponfog", version, about = "PON fog interconnect design and simulation")]
struct Cli {
    /// JSON config file; omitted sections fall back to the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write primary output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for synthetic workload generation (overrides the config value).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the PON fog topology, validate it, and print its document.
    Topo {
        #[arg(long, value_enum, default_value_t = TopoFormat::Json)]
        format: TopoFormat,
    },
    /// Print the minimal wavelength routing map (or verify an external one).
    Rwa {
        /// Verify a routing-map CSV instead of solving.
        #[arg(long)]
        verify: Option<PathBuf>,
    },
    /// Itemized power for both architectures plus the savings fraction.
    Power,
    /// Savings sweep over a comma-separated list of server counts.
    Sweep {
        /// Server counts, e.g. 96,192,384,768,1536. An empty list yields a
        /// header-only CSV.
        #[arg(long)]
        servers: String,
        /// Also write a gnuplot-ready data file here.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Replay a workload CSV through the control-plane simulator.
    Sim {
        #[arg(long)]
        workload: PathBuf,
        /// Print only the summary statistics, not the event trace.
        #[arg(long)]
        stats_only: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TopoFormat {
    Json,
    Dot,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.sim.seed = seed;
    }
    match cli.command {
        Command::Topo { format } => cmd_topo(&cfg, format, cli.out.as_deref()),
        Command::Rwa { verify } => cmd_rwa(&cfg, verify.as_deref(), cli.out.as_deref()),
        Command::Power => cmd_power(&cfg, cli.out.as_deref()),
        Command::Sweep { servers, gnuplot } => {
            cmd_sweep(&cfg, &servers, gnuplot.as_deref(), cli.out.as_deref())
        }
        Command::Sim {
            workload,
            stats_only,
        } => cmd_sim(&cfg, &workload, stats_only, cli.out.as_deref()),
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn build_topology(cfg: &RunConfig) -> Result<FogTopology> {
    build_fog_topology(&cfg.topology, &cfg.olt).map_err(|e| anyhow!("building topology: {e}"))
}

fn cmd_topo(cfg: &RunConfig, format: TopoFormat, out: Option<&Path>) -> Result<ExitCode> {
    let topo = build_topology(cfg)?;
    let doc = match format {
        TopoFormat::Json => {
            let mut doc = topo.to_json();
            doc.push('\n');
            doc
        }
        TopoFormat::Dot => topo.to_dot(),
    };
    emit(out, &doc)?;
    let diags = topo.validate();
    for d in &diags {
        eprintln!("diagnostic: {d}");
    }
    Ok(if diags.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_rwa(cfg: &RunConfig, verify: Option<&Path>, out: Option<&Path>) -> Result<ExitCode> {
    if let Some(path) = verify {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading routing map {}", path.display()))?;
        let map = RoutingMap::from_csv(&text)
            .with_context(|| format!("parsing routing map {}", path.display()))?;
        let report = rwa::verify(&map);
        if report.valid() {
            emit(out, &format!("valid ({} wavelengths)\n", map.n_wavelengths()))?;
            return Ok(ExitCode::SUCCESS);
        }
        let mut listing = String::new();
        for v in &report.violations {
            listing.push_str(&v.describe(report.n_endpoints));
            listing.push('\n');
        }
        emit(out, &listing)?;
        return Ok(ExitCode::from(1));
    }

    let topo = build_topology(cfg)?;
    let map = rwa::solve(topo.n_groups() + 1).map_err(|e| anyhow!("solving: {e}"))?;
    emit(out, &map.to_csv())?;
    eprintln!("{} wavelengths", map.n_wavelengths());
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct PowerDoc {
    pon_fog: ponfog::PowerBreakdown,
    spine_leaf: ponfog::PowerBreakdown,
    savings: f64,
}

fn cmd_power(cfg: &RunConfig, out: Option<&Path>) -> Result<ExitCode> {
    let p: &PowerParams = &cfg.power;
    let n = cfg.topology.total_servers();
    let pon_fog = power::pon_fog_power(&cfg.topology, &cfg.olt, p)?;
    let spine_leaf = power::spine_leaf_power(n, &cfg.spine_leaf, p)?;
    let savings = power::savings(n, &cfg.topology, &cfg.olt, &cfg.spine_leaf, p)?;
    let doc = PowerDoc {
        pon_fog,
        spine_leaf,
        savings: (savings * 1e4).round() / 1e4,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    emit(out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(
    cfg: &RunConfig,
    servers: &str,
    gnuplot: Option<&Path>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let mut counts = servers
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| anyhow!("server count '{s}' is not a positive integer"))
        })
        .collect::<Result<Vec<usize>>>()?;
    counts.sort_unstable();
    counts.dedup();
    let series = power::sweep(&counts, &cfg.topology, &cfg.olt, &cfg.spine_leaf, &cfg.power)?;
    emit(out, &series.to_csv())?;
    if let Some(path) = gnuplot {
        std::fs::write(path, series.to_gnuplot())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn load_routing_map(cfg: &RunConfig, topo: &FogTopology) -> Result<RoutingMap> {
    match &cfg.sim.routing_map {
        Some(path) => {
            let path = cfg.resolve(path);
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading routing map {}", path.display()))?;
            RoutingMap::from_csv(&text)
                .with_context(|| format!("parsing routing map {}", path.display()))
        }
        None => rwa::solve(topo.n_groups() + 1).map_err(|e| anyhow!("solving: {e}")),
    }
}

fn cmd_sim(
    cfg: &RunConfig,
    workload: &Path,
    stats_only: bool,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let topo = build_topology(cfg)?;
    let map = load_routing_map(cfg, &topo)?;
    let text = std::fs::read_to_string(workload)
        .with_context(|| format!("reading workload {}", workload.display()))?;
    let requests = sim::parse_workload(&text, &topo)
        .with_context(|| format!("parsing workload {}", workload.display()))?;

    let sim_cfg = SimConfig {
        topo,
        map,
        params: cfg.sim.params(),
    };
    let trace = sim::run(&sim_cfg, &requests).map_err(|e| anyhow!("simulating: {e}"))?;
    let stats = sim::stats(&trace).map_err(|e| anyhow!("summarizing: {e}"))?;

    let mut doc = String::new();
    if !stats_only {
        doc.push_str(&trace.to_jsonl());
    }
    doc.push_str(&format!(
        "{{\"kind\":\"stats\",\"stats\":{}}}\n",
        stats.to_json()
    ));
    emit(out, &doc)?;
    Ok(ExitCode::SUCCESS)
}
