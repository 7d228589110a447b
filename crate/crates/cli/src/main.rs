//! Command-line front end: closed-form sweeps, Monte Carlo simulation,
//! route discovery and the verification report.
//!
//! Exit codes: 0 success, 1 invariant or configuration failure, 2 no route.

mod common;
mod simulate;
mod sweep;
mod verify;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use telemesh_core::network::{self, Topology};

#[derive(Parser, Debug)]
#[command(
    name = "telemesh",
    version,
    about = "Multihop quantum teleportation over mesh networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate the closed-form success probability or fidelity as CSV
    Sweep(sweep::SweepArgs),
    /// Monte Carlo multihop teleportation over a topology
    Simulate(simulate::SimulateArgs),
    /// Discover the route between two nodes
    Route(RouteArgs),
    /// Run the invariant suite and write the discrepancy report
    Verify(verify::VerifyArgs),
}

#[derive(clap::Args, Debug)]
struct RouteArgs {
    /// Topology file
    #[arg(long)]
    topology: PathBuf,
    /// Source node id
    #[arg(long)]
    src: String,
    /// Destination node id
    #[arg(long)]
    dst: String,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not failures
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Sweep(args) => sweep::run(args).map(|_| 0),
        Command::Simulate(args) => simulate::run(args),
        Command::Route(args) => run_route(args),
        Command::Verify(args) => verify::run(args),
    }
}

fn run_route(args: &RouteArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.topology)
        .with_context(|| format!("reading {}", args.topology.display()))?;
    let topology = Topology::parse(&text).map_err(|e| anyhow::anyhow!("{e}"))?;
    match network::discover_route(&topology, &args.src, &args.dst) {
        Ok(route) => {
            println!("{}", route.hops.join(" -> "));
            println!("hops: {}", route.hop_count());
            Ok(0)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Ok(2)
        }
    }
}
